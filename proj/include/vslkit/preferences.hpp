#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "vslkit/mvdp.hpp"

namespace vslkit {

/// (left, right, y): y quantifies how much more `left` promotes the value than `right`.
struct PreferenceRecord {
    std::size_t left = 0;
    std::size_t right = 0;
    double y = 0.5;
};

/// Quantified comparisons over a pool of distinct trajectories for one value.
struct PreferenceDataset {
    std::shared_ptr<const Mvdp> mvdp;
    std::vector<Trajectory> pool;
    std::vector<PreferenceRecord> records;
    std::size_t value_index = 0;

    /// Throws std::invalid_argument when a record is out of range, self-referential or has y outside [0,1].
    void validate() const;
};

/// Bradley-Terry quantification exp(a)/(exp(a)+exp(b)), evaluated as a
/// sigmoid of the difference.  Throws std::invalid_argument on NaN.
double quantified_comparison(double a_left, double a_right);

/// y from ratings on the scale {1..scale_max}.  Throws std::out_of_range off-scale.
double comparison_from_ratings(int rate_left, int rate_right, int scale_max);

struct ConnectivityReport {
    bool connected = false;
    std::size_t components = 0;
};

/// Union-find over the pool members referenced by records.
ConnectivityReport check_chain_connectivity(const PreferenceDataset& dataset);

/// Pool: `pool_size` distinct rollouts of the p-greedy version of the soft
/// policy that is optimal for `value_index`.  Records: a spanning chain
/// (pool[0]-pool[1]-...) followed by uniformly drawn pairs of distinct pool
/// members, up to `n_comparisons`.  y uses the ground-truth alignments.
PreferenceDataset generate_dataset(std::shared_ptr<const Mvdp> mvdp, std::size_t value_index, std::size_t pool_size,
                                   std::size_t n_comparisons, double greedy_p, std::uint64_t seed);

/// JSON lines {"left": i, "right": j, "y": y}.
void write_records(std::ostream& out, const std::vector<PreferenceRecord>& records);
std::vector<PreferenceRecord> read_records(std::istream& in);

}  // namespace vslkit
