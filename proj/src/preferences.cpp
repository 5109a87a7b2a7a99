#include "vslkit/preferences.hpp"

#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "vslkit/rng.hpp"
#include "vslkit/solver.hpp"

namespace vslkit {

void PreferenceDataset::validate() const {
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.left >= pool.size() || r.right >= pool.size())
            throw std::invalid_argument("record " + std::to_string(i) + " references a missing trajectory");
        if (r.left == r.right) throw std::invalid_argument("record " + std::to_string(i) + " compares a trajectory with itself");
        if (!(r.y >= 0.0 && r.y <= 1.0)) throw std::invalid_argument("record " + std::to_string(i) + " has y outside [0,1]");
    }
}

double quantified_comparison(double a_left, double a_right) {
    if (std::isnan(a_left) || std::isnan(a_right)) throw std::invalid_argument("quantified_comparison: NaN alignment");
    const double d = a_left - a_right;
    if (d >= 0.0) return 1.0 / (1.0 + std::exp(-d));
    const double e = std::exp(d);
    return e / (1.0 + e);
}

double comparison_from_ratings(int rate_left, int rate_right, int scale_max) {
    if (scale_max < 1) throw std::invalid_argument("comparison_from_ratings: empty rating scale");
    if (rate_left < 1 || rate_left > scale_max || rate_right < 1 || rate_right > scale_max)
        throw std::out_of_range("comparison_from_ratings: rating outside {1.." + std::to_string(scale_max) + "}");
    return quantified_comparison(rate_left, rate_right);
}

namespace {

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

}  // namespace

ConnectivityReport check_chain_connectivity(const PreferenceDataset& dataset) {
    UnionFind uf(dataset.pool.size());
    std::vector<char> used(dataset.pool.size(), 0);
    for (const auto& r : dataset.records) {
        if (r.left >= used.size() || r.right >= used.size())
            throw std::invalid_argument("check_chain_connectivity: record references a missing trajectory");
        used[r.left] = used[r.right] = 1;
        uf.unite(r.left, r.right);
    }
    std::set<std::size_t> roots;
    for (std::size_t i = 0; i < used.size(); ++i)
        if (used[i]) roots.insert(uf.find(i));
    return {roots.size() == 1, roots.size()};
}

PreferenceDataset generate_dataset(std::shared_ptr<const Mvdp> mvdp, std::size_t value_index, std::size_t pool_size,
                                   std::size_t n_comparisons, double greedy_p, std::uint64_t seed) {
    if (!mvdp) throw std::invalid_argument("generate_dataset: null process");
    if (value_index >= mvdp->n_values()) throw std::out_of_range("generate_dataset: value index out of range");
    if (pool_size < 2) throw std::invalid_argument("generate_dataset: pool_size must be >= 2");
    if (n_comparisons < pool_size - 1)
        throw std::invalid_argument("generate_dataset: need at least pool_size - 1 comparisons to connect the pool");

    const std::size_t horizon = mvdp->horizon();
    const auto base = soft_value_iteration(*mvdp, mvdp->reward_table(value_index), horizon);
    const auto sampler = p_greedy_policy(base, greedy_p);

    PreferenceDataset ds;
    ds.mvdp = mvdp;
    ds.value_index = value_index;
    ds.pool.reserve(pool_size);
    std::set<std::vector<Trajectory::Step>> seen;
    const std::uint64_t pool_seed = derive_seed(seed, stream_id("preferences.pool"));
    for (std::uint64_t round = 0; ds.pool.size() < pool_size; ++round) {
        if (round >= 20) throw std::runtime_error("generate_dataset: cannot sample enough distinct trajectories");
        auto batch = sample_trajectories(*mvdp, sampler, pool_size - ds.pool.size(), horizon,
                                         derive_seed(pool_seed, round));
        for (auto& t : batch)
            if (seen.insert(t.steps()).second) ds.pool.push_back(std::move(t));
    }

    std::vector<double> align(pool_size);
    for (std::size_t i = 0; i < pool_size; ++i) align[i] = trajectory_alignment(*mvdp, value_index, ds.pool[i]);

    ds.records.reserve(n_comparisons);
    for (std::size_t i = 0; i + 1 < pool_size; ++i)
        ds.records.push_back({i, i + 1, quantified_comparison(align[i], align[i + 1])});
    Rng rng(derive_seed(seed, stream_id("preferences.pairs")));
    while (ds.records.size() < n_comparisons) {
        auto i = static_cast<std::size_t>(rng.below(pool_size));
        auto j = static_cast<std::size_t>(rng.below(pool_size - 1));
        if (j >= i) ++j;
        ds.records.push_back({i, j, quantified_comparison(align[i], align[j])});
    }
    return ds;
}

void write_records(std::ostream& out, const std::vector<PreferenceRecord>& records) {
    for (const auto& r : records) {
        nlohmann::json j{{"left", r.left}, {"right", r.right}, {"y", r.y}};
        out << j.dump() << '\n';
    }
}

std::vector<PreferenceRecord> read_records(std::istream& in) {
    std::vector<PreferenceRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            out.push_back({j.at("left").get<std::size_t>(), j.at("right").get<std::size_t>(), j.at("y").get<double>()});
        } catch (const std::exception& e) {
            throw std::invalid_argument("read_records: line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace vslkit
