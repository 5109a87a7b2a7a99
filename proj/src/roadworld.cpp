#include "vslkit/roadworld.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "vslkit/rng.hpp"

namespace vslkit::roadworld {

namespace {

constexpr std::array<std::string_view, kNumRoadTypes> kTypeNames{
    "Residential", "Primary", "Unclassified", "Tertiary", "LivingStreet", "Secondary"};

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

// Outgoing edge indices per node id, each list ordered by edge id.
std::unordered_map<std::int64_t, std::vector<std::size_t>> outgoing(const RoadGraph& g) {
    std::unordered_map<std::int64_t, std::vector<std::size_t>> out;
    for (auto n : g.nodes) out[n];
    for (std::size_t i = 0; i < g.edges.size(); ++i) out[g.edges[i].from].push_back(i);
    for (auto& [n, list] : out)
        std::sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) { return g.edges[a].id < g.edges[b].id; });
    return out;
}

// Strongly connected component label per node index (Kosaraju, iterative).
std::vector<int> scc_labels(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& arcs) {
    std::vector<std::vector<std::size_t>> fwd(n), rev(n);
    for (auto [u, v] : arcs) {
        fwd[u].push_back(v);
        rev[v].push_back(u);
    }
    std::vector<std::size_t> order;
    std::vector<char> seen(n, 0);
    for (std::size_t root = 0; root < n; ++root) {
        if (seen[root]) continue;
        std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
        seen[root] = 1;
        while (!stack.empty()) {
            auto& [u, i] = stack.back();
            if (i < fwd[u].size()) {
                auto v = fwd[u][i++];
                if (!seen[v]) {
                    seen[v] = 1;
                    stack.emplace_back(v, 0);
                }
            } else {
                order.push_back(u);
                stack.pop_back();
            }
        }
    }
    std::vector<int> label(n, -1);
    int next = 0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (label[*it] >= 0) continue;
        std::vector<std::size_t> stack{*it};
        label[*it] = next;
        while (!stack.empty()) {
            auto u = stack.back();
            stack.pop_back();
            for (auto v : rev[u])
                if (label[v] < 0) {
                    label[v] = next;
                    stack.push_back(v);
                }
        }
        ++next;
    }
    return label;
}

}  // namespace

std::string_view road_type_name(RoadType t) { return kTypeNames[static_cast<std::size_t>(t)]; }

RoadType parse_road_type(std::string_view name) {
    for (std::size_t i = 0; i < kTypeNames.size(); ++i)
        if (kTypeNames[i] == name) return static_cast<RoadType>(i);
    throw std::invalid_argument("unknown road type '" + std::string(name) + "'");
}

RoadCostTable RoadCostTable::defaults() {
    RoadCostTable t;
    t.weights[static_cast<std::size_t>(RoadType::Residential)] = {20.0, 1.0, 66.67};
    t.weights[static_cast<std::size_t>(RoadType::Primary)] = {12.0, 30.0, 14.29};
    t.weights[static_cast<std::size_t>(RoadType::Unclassified)] = {20.0, 1.0, 25.0};
    t.weights[static_cast<std::size_t>(RoadType::Tertiary)] = {7.0, 8.0, 50.0};
    t.weights[static_cast<std::size_t>(RoadType::LivingStreet)] = {25.0, 1.0, 66.67};
    t.weights[static_cast<std::size_t>(RoadType::Secondary)] = {9.0, 15.0, 50.0};
    return t;
}

void validate_graph(const RoadGraph& g) {
    std::set<std::int64_t> nodes;
    for (auto n : g.nodes)
        if (!nodes.insert(n).second) throw std::invalid_argument("duplicate node id " + std::to_string(n));
    std::set<std::int64_t> ids;
    for (const auto& e : g.edges) {
        if (!ids.insert(e.id).second) throw std::invalid_argument("duplicate edge id " + std::to_string(e.id));
        if (!nodes.count(e.from) || !nodes.count(e.to))
            throw std::invalid_argument("edge " + std::to_string(e.id) + " references a missing node");
        if (!(e.length_m > 0.0) || !std::isfinite(e.length_m))
            throw std::invalid_argument("edge " + std::to_string(e.id) + " has non-positive length");
    }
}

Costs edge_raw_costs(const RoadGraph& graph, const RoadCostTable& table, std::size_t edge_index) {
    const Edge& e = graph.edges.at(edge_index);
    const auto t = static_cast<std::size_t>(e.type);
    if (t >= kNumRoadTypes) throw std::invalid_argument("edge_raw_costs: unknown road type");
    const Costs& w = table.weights[t];
    return {w.fuel * e.length_m, w.comfort * e.length_m, w.time * e.length_m};
}

std::vector<Costs> normalize_costs(const RoadGraph& graph, const RoadCostTable& table, std::size_t horizon) {
    if (graph.edges.empty()) throw std::invalid_argument("normalize_costs: empty graph");
    if (horizon == 0) throw std::invalid_argument("normalize_costs: horizon must be >= 1");
    std::vector<Costs> raw(graph.edges.size());
    Costs mx;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        raw[i] = edge_raw_costs(graph, table, i);
        mx.fuel = std::max(mx.fuel, raw[i].fuel);
        mx.comfort = std::max(mx.comfort, raw[i].comfort);
        mx.time = std::max(mx.time, raw[i].time);
    }
    if (!(mx.fuel > 0.0 && mx.comfort > 0.0 && mx.time > 0.0))
        throw std::invalid_argument("normalize_costs: zero maximum cost");
    const auto h = static_cast<double>(horizon);
    for (auto& c : raw) {
        c.fuel /= h * mx.fuel;
        c.comfort /= h * mx.comfort;
        c.time /= h * mx.time;
    }
    return raw;
}

StateId state_of_edge(const RoadGraph& graph, std::int64_t edge_id) {
    for (std::size_t i = 0; i < graph.edges.size(); ++i)
        if (graph.edges[i].id == edge_id) return static_cast<StateId>(i);
    throw std::out_of_range("unknown edge id " + std::to_string(edge_id));
}

Mvdp build_mvdp(const RoadGraph& graph, const RoadCostTable& table, std::int64_t destination_edge_id,
                std::size_t horizon) {
    validate_graph(graph);
    const StateId dest = state_of_edge(graph, destination_edge_id);
    const auto norm = normalize_costs(graph, table, horizon);
    const auto out = outgoing(graph);
    const std::size_t ns = graph.edges.size();

    MvdpSpec spec;
    spec.n_states = ns;
    spec.action_counts.resize(ns);
    for (std::size_t e = 0; e < ns; ++e) {
        if (static_cast<StateId>(e) == dest) {
            spec.action_counts[e] = 1;
            continue;
        }
        const auto& succ = out.at(graph.edges[e].to);
        if (succ.empty())
            throw std::invalid_argument("edge " + std::to_string(graph.edges[e].id) + " leads to dead-end node " +
                                        std::to_string(graph.edges[e].to));
        spec.action_counts[e] = succ.size();
    }
    spec.n_actions = *std::max_element(spec.action_counts.begin(), spec.action_counts.end());
    spec.values = ValueSet({"su", "co", "ef"});
    spec.rewards.assign(3, RewardTable(ns * spec.n_actions, 0.0));
    spec.feature_dim = 3;
    spec.features.assign(ns * spec.n_actions * 3, 0.0);
    spec.horizon = horizon;
    spec.terminal.assign(ns, false);
    spec.terminal[static_cast<std::size_t>(dest)] = true;

    for (std::size_t e = 0; e < ns; ++e) {
        if (static_cast<StateId>(e) == dest) {
            spec.transitions.push_back({dest, 0, dest, 1.0});
            continue;
        }
        const auto& succ = out.at(graph.edges[e].to);
        for (std::size_t k = 0; k < succ.size(); ++k) {
            const std::size_t next = succ[k];
            spec.transitions.push_back({static_cast<StateId>(e), static_cast<ActionId>(k), static_cast<StateId>(next), 1.0});
            const std::size_t c = e * spec.n_actions + k;
            const double f[3] = {-norm[next].fuel, -norm[next].comfort, -norm[next].time};
            for (std::size_t v = 0; v < 3; ++v) {
                spec.features[c * 3 + v] = f[v];
                spec.rewards[v][c] = f[v];
            }
        }
    }
    return Mvdp::build(std::move(spec));
}

RoadGraph load_graph(std::istream& in) {
    RoadGraph g;
    std::set<std::int64_t> node_ids, edge_ids;
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw std::invalid_argument("graph line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string kind;
        if (!(ss >> kind)) continue;
        if (kind == "NODE") {
            std::int64_t id;
            if (!(ss >> id)) fail("expected NODE <id>");
            if (!node_ids.insert(id).second) fail("duplicate node id " + std::to_string(id));
            g.nodes.push_back(id);
        } else if (kind == "EDGE") {
            Edge e;
            std::string type;
            if (!(ss >> e.id >> e.from >> e.to >> type >> e.length_m))
                fail("expected EDGE <id> <from> <to> <type> <length_m>");
            try {
                e.type = parse_road_type(type);
            } catch (const std::invalid_argument& ex) {
                fail(ex.what());
            }
            if (!edge_ids.insert(e.id).second) fail("duplicate edge id " + std::to_string(e.id));
            if (!node_ids.count(e.from) || !node_ids.count(e.to)) fail("edge references an undeclared node");
            if (!(e.length_m > 0.0)) fail("edge length must be positive");
            g.edges.push_back(e);
        } else {
            fail("unknown record '" + kind + "'");
        }
        std::string extra;
        if (ss >> extra) fail("trailing tokens");
    }
    return g;
}

RoadGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open graph file " + path.string());
    return load_graph(in);
}

void save_graph(std::ostream& out, const RoadGraph& g) {
    for (auto n : g.nodes) out << "NODE " << n << '\n';
    for (const auto& e : g.edges)
        out << "EDGE " << e.id << ' ' << e.from << ' ' << e.to << ' ' << road_type_name(e.type) << ' '
            << format_double(e.length_m) << '\n';
}

RoadGraph generate_synthetic_network(std::size_t n_nodes, std::uint64_t seed) {
    if (n_nodes < 2) throw std::invalid_argument("generate_synthetic_network: need at least 2 nodes");
    Rng rng(derive_seed(seed, stream_id("roadworld.generator")));
    const auto rows = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(double(n_nodes)))));
    const std::size_t cols = (n_nodes + rows - 1) / rows;
    auto exists = [&](std::size_t r, std::size_t c) { return c < cols && r * cols + c < n_nodes; };
    auto idx = [&](std::size_t r, std::size_t c) { return r * cols + c; };

    auto arterial_type = [&]() { return rng.uniform() < 0.5 ? RoadType::Primary : RoadType::Secondary; };
    auto local_type = [&]() {
        double u = rng.uniform();
        if (u < 0.40) return RoadType::Residential;
        if (u < 0.65) return RoadType::Tertiary;
        if (u < 0.85) return RoadType::Unclassified;
        return RoadType::LivingStreet;
    };

    std::vector<RoadType> row_type(rows + 1), col_type(cols);
    for (std::size_t r = 0; r <= rows; ++r) row_type[r] = arterial_type();
    for (std::size_t c = 0; c < cols; ++c) col_type[c] = arterial_type();

    RoadGraph g;
    for (std::size_t i = 0; i < n_nodes; ++i) g.nodes.push_back(static_cast<std::int64_t>(i));
    std::set<std::pair<std::size_t, std::size_t>> present;
    std::vector<std::pair<std::size_t, std::size_t>> arcs;
    auto add = [&](std::size_t u, std::size_t v, RoadType t, double len) {
        if (!present.insert({u, v}).second) return false;
        g.edges.push_back({static_cast<std::int64_t>(g.edges.size()), static_cast<std::int64_t>(u),
                           static_cast<std::int64_t>(v), t, len});
        arcs.emplace_back(u, v);
        return true;
    };

    for (std::size_t r = 0; r < rows + 1; ++r)
        for (std::size_t c = 0; c + 1 < cols; ++c) {
            if (!exists(r, c) || !exists(r, c + 1)) continue;
            auto t = r % 4 == 0 ? row_type[r] : local_type();
            double len = rng.uniform(50.0, 500.0);
            if (r % 2 == 0) add(idx(r, c), idx(r, c + 1), t, len);
            else add(idx(r, c + 1), idx(r, c), t, len);
        }
    for (std::size_t c = 0; c < cols; ++c)
        for (std::size_t r = 0; r < rows + 1; ++r) {
            if (!exists(r, c) || !exists(r + 1, c)) continue;
            auto t = c % 4 == 0 ? col_type[c] : local_type();
            double len = rng.uniform(50.0, 500.0);
            if (c % 2 == 0) add(idx(r, c), idx(r + 1, c), t, len);
            else add(idx(r + 1, c), idx(r, c), t, len);
        }

    // Open reverse lanes until every node reaches every other node.
    for (;;) {
        auto label = scc_labels(n_nodes, arcs);
        if (std::all_of(label.begin(), label.end(), [&](int l) { return l == label[0]; })) break;
        bool added = false;
        for (std::size_t i = 0; i < g.edges.size() && !added; ++i) {
            auto u = static_cast<std::size_t>(g.edges[i].from), v = static_cast<std::size_t>(g.edges[i].to);
            if (label[u] != label[v]) added = add(v, u, g.edges[i].type, g.edges[i].length_m);
        }
        if (!added) throw std::logic_error("generate_synthetic_network: cannot connect grid");
    }

    const std::size_t target = 2 * n_nodes;
    for (std::size_t attempt = 0; g.edges.size() < target && attempt < 100 * n_nodes; ++attempt) {
        if (rows < 2 || cols < 2) break;
        auto r = static_cast<std::size_t>(rng.below(rows));
        auto c = static_cast<std::size_t>(rng.below(cols - 1));
        bool anti = rng.uniform() < 0.5;
        std::size_t u, v;
        if (!anti) {
            if (!exists(r, c) || !exists(r + 1, c + 1)) continue;
            u = idx(r, c);
            v = idx(r + 1, c + 1);
        } else {
            if (!exists(r, c + 1) || !exists(r + 1, c)) continue;
            u = idx(r, c + 1);
            v = idx(r + 1, c);
        }
        if (rng.uniform() < 0.5) std::swap(u, v);
        auto t = local_type();
        double len = rng.uniform(50.0, 500.0);
        add(u, v, t, len);
    }
    return g;
}

void dump_features_csv(std::ostream& out, const RoadGraph& graph, const RoadCostTable& table, std::size_t horizon) {
    auto norm = normalize_costs(graph, table, horizon);
    out << "edge_id,fuel,comfort,time,fuel_norm,comfort_norm,time_norm\n";
    for (std::size_t i = 0; i < graph.edges.size(); ++i) {
        auto raw = edge_raw_costs(graph, table, i);
        out << graph.edges[i].id << ',' << format_double(raw.fuel) << ',' << format_double(raw.comfort) << ','
            << format_double(raw.time) << ',' << format_double(norm[i].fuel) << ',' << format_double(norm[i].comfort)
            << ',' << format_double(norm[i].time) << '\n';
    }
}

}  // namespace vslkit::roadworld
