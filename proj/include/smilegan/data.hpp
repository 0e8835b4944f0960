#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smilegan/matrix.hpp"
#include "smilegan/rng.hpp"

namespace smilegan {

enum class Group { CN, PT };

// Participants x features table with group labels and optional age/sex
// covariates. Covariate vectors are either empty or full length.
struct RoiTable {
    std::vector<std::string> ids;
    std::vector<Group> groups;
    Vector age;  // years
    Vector sex;  // 0/1
    std::vector<std::string> feature_names;
    Matrix values;  // n x d

    std::size_t n_rows() const { return ids.size(); }
    std::size_t n_features() const { return feature_names.size(); }
    bool has_covariates() const { return !age.empty(); }

    std::vector<std::size_t> rows_of(Group g) const;
    Matrix values_of(Group g) const;
    Matrix values_at(const std::vector<std::size_t>& rows) const;
    RoiTable subset(const std::vector<std::size_t>& rows) const;

    void validate() const;
};

// One atrophy pattern: the ROI columns it touches and the per-participant
// reduction rate, fixed (lo == hi) or drawn uniformly from [lo, hi].
struct PatternSpec {
    std::string name;
    std::vector<std::size_t> rois;
    double rate_lo = 0.0;
    double rate_hi = 0.0;
    std::optional<std::size_t> count;  // participants in this pattern; near-even split when absent
};

struct ConfounderSpec {
    std::vector<std::size_t> rois;
    double rate = 0.0;
    std::size_t cn_count = 0;
    std::size_t pt_count = 0;
};

struct AtrophySpec {
    std::vector<PatternSpec> patterns;
    std::optional<ConfounderSpec> confounder;
};

struct SyntheticConfig {
    std::size_t cn_count = 600;
    std::size_t pt_count = 600;
    std::size_t n_features = 145;
    double baseline_mean = 1.0;
    double baseline_sd = 0.1;
    AtrophySpec spec;
};

// Simulation ground truth: one row per PT participant plus the pattern ROI
// sets. CN confounder membership is kept for analysis but not serialized.
struct GroundTruth {
    std::vector<std::string> pt_ids;
    std::vector<int> pt_labels;  // in [0, #patterns)
    std::vector<std::vector<std::size_t>> pattern_rois;
    std::vector<std::uint8_t> pt_confounder;
    std::vector<std::uint8_t> cn_confounder;
    bool confounder_overlaps_patterns = false;
};

struct SyntheticResult {
    RoiTable table;
    GroundTruth truth;
};

// Baseline values i.i.d. Normal(baseline_mean, baseline_sd), random CN/PT
// split, pattern ROIs of each PT participant reduced by its drawn rate, and
// optional confounder reduction on random CN and PT subsets.
SyntheticResult generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

// Apply the pattern reductions of `spec` to the PT rows of an existing table.
// PT rows are shuffled and partitioned into the configured pattern counts.
SyntheticResult inject_atrophy(const RoiTable& base, const AtrophySpec& spec, std::uint64_t seed);

// Per-ROI affine transform fitted on CN rows; replays exactly on new data.
struct PreprocessStats {
    bool residualized = false;
    std::vector<std::string> feature_names;
    Vector beta_age;   // zero-length when not residualized
    Vector beta_sex;
    Vector cn_mean;    // CN mean after residualization
    Vector cn_sd;      // CN sd (n-1 divisor) after residualization
};

enum class Residualize { automatic, on, off };

struct PreprocessResult {
    RoiTable table;
    PreprocessStats stats;
};

// Fit age/sex effects on CN rows, remove them from all rows (keeping the
// intercept), then rescale each ROI so CN mean is 1 and CN sd is 0.1.
PreprocessResult preprocess(const RoiTable& table, Residualize mode = Residualize::automatic);

// Apply previously fitted statistics to a (possibly new) table.
RoiTable apply_preprocess(const PreprocessStats& stats, const RoiTable& table);

// CSV schema: header `id,group[,age,sex],<roi_1>,...,<roi_d>`; values are
// written with 17 significant digits so round-trips are exact.
RoiTable read_roi_csv(const std::string& path);
void write_roi_csv(const RoiTable& table, const std::string& path);

// GroundTruth CSV: `id,pattern,confounder_flag`, one row per PT participant.
GroundTruth read_truth_csv(const std::string& path);
void write_truth_csv(const GroundTruth& truth, const std::string& path);

// Fitted preprocessing statistics as JSON, for replay on new data.
void write_preprocess_stats(const PreprocessStats& stats, const std::string& path);
PreprocessStats read_preprocess_stats(const std::string& path);

namespace presets {

// 1200 participants, 600 CN / 600 PT, three overlapping 30-ROI patterns at a
// fixed 20% reduction, plus a 40% confounder on 200 CN and 200 PT rows.
SyntheticConfig synthetic_benchmark();

// 526 participants, 200 CN / 326 PT baseline with no atrophy; pair with
// variable_rate_patterns() and inject_atrophy for robustness experiments.
SyntheticConfig holdout_base();

// Two 30-ROI patterns plus their union, rates drawn per participant.
AtrophySpec variable_rate_patterns(double rate_lo, double rate_hi);

}  // namespace presets

}  // namespace smilegan
