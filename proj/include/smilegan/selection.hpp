#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smilegan/matrix.hpp"
#include "smilegan/model.hpp"

namespace smilegan {

// Hard cluster assignment over a fixed participant ordering.
struct Partition {
    std::vector<int> labels;  // in [0, k)
    std::size_t k = 0;

    static Partition from_labels(std::vector<int> labels);
};

// Hubert-Arabie adjusted Rand index via the contingency table. Degenerate
// pairs whose chance-agreement denominator vanishes score 1.
double ari(const Partition& a, const Partition& b);

struct MatchResult {
    double accuracy = 0.0;
    std::vector<int> permutation;  // permutation[pred_label] = matched truth label
};

// Best label-agreement fraction over all permutations of the predicted
// labels; exhaustive search, k <= 8.
MatchResult match_accuracy(const Partition& pred, const Partition& truth);

struct ChooseMResult {
    std::size_t chosen_m = 0;
    std::vector<std::size_t> candidate_ms;
    Vector mean_ari;  // aligned with candidate_ms
    Vector std_ari;
};

// Repeated-holdout stability selection: for each candidate m train
// `repetitions` models on random (1 - holdout_fraction) subsets, label the
// full PT set with each, and score the mean pairwise ARI. Ties go to the
// smaller m. `jobs` bounds the number of concurrently trained models.
ChooseMResult choose_m(const Matrix& cn_rows, const Matrix& pt_rows,
                       const std::vector<std::size_t>& candidate_ms, std::size_t repetitions,
                       double holdout_fraction, const TrainingConfig& config, std::uint64_t seed,
                       std::size_t jobs = 1);

struct ConsensusResult {
    std::size_t template_index = 0;
    std::vector<std::vector<int>> permutations;  // per model, as in MatchResult
    Matrix probabilities;                        // participants x m, averaged
};

// Reorder every model's pattern dimensions to best agree with the template
// (the model with the highest mean pairwise ARI against the rest), then
// average the per-model probabilities.
ConsensusResult consensus(const std::vector<SmileGanModel>& models, const Matrix& pt_rows);

// Selection report JSON:
// {candidate_ms, per_m_mean_ari, per_m_ari_std, chosen_m}
void write_selection_report(const ChooseMResult& result, const std::string& path);

// Assignment CSV: id,p_0..p_{m-1},dominant
void write_assignments_csv(const std::vector<std::string>& ids, const Matrix& probabilities,
                           const std::string& path);

}  // namespace smilegan
