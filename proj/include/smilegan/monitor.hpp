#pragma once

#include <optional>
#include <string>
#include <vector>

#include "smilegan/numerics.hpp"
#include "smilegan/rng.hpp"

namespace smilegan {

struct SmileGanModel;

// Per-epoch training metrics and the stop decision.
struct MonitorRecord {
    std::size_t epoch = 0;
    std::vector<std::optional<double>> wd_per_cluster;  // absent when the cluster is too small
    std::optional<double> wd_aggregate;
    std::size_t alteration_quantity = 0;
    double cluster_loss = 0.0;
    bool stop = false;
};

struct StopConfig {
    std::size_t warmup_epochs = 200;
    std::size_t wd_patience = 100;
    double wd_min_delta = 1e-4;
    // resolved to 1% of the PT count when unset
    std::optional<std::size_t> aq_threshold;
    double cluster_loss_threshold = 0.1;
};

struct MonitorConfig {
    CovarianceKind kind = CovarianceKind::diagonal;
    std::size_t min_cluster_size = 5;
};

// Squared 2-Wasserstein distance between Gaussian moment estimates:
//   |m1 - m2|^2 + trace(C1 + C2 - 2 (C1^1/2 C2 C1^1/2)^1/2)
// The diagonal kind uses the commuting closed form. Round-off negatives are
// clamped to zero.
double wd_gaussian(const GaussianMoments& a, const GaussianMoments& b);

// History of dominant-pattern labels over the trailing epochs; the window
// spans the current labels plus up to four prior epochs.
using LabelHistory = std::vector<std::vector<int>>;

std::size_t alteration_quantity(const LabelHistory& history, const std::vector<int>& current);

// One monitoring pass over a model snapshot: per-cluster WD between mapped-CN
// moments and assigned-PT moments, the aggregate mean over populated
// clusters, AQ against the supplied history, and the cluster loss on freshly
// sampled subtype vectors. `labels_out`, when given, receives the current
// dominant-pattern labels for window maintenance.
MonitorRecord epoch_monitor(const SmileGanModel& model, const Matrix& cn_rows,
                            const Matrix& pt_rows, const LabelHistory& history,
                            const MonitorConfig& config, Rng& rng,
                            std::vector<int>* labels_out = nullptr);

// True once all three clauses hold past warmup: the aggregate WD has not
// improved by wd_min_delta for wd_patience epochs, AQ is at or below its
// threshold, and the cluster loss is at or below its threshold.
bool should_stop(const std::vector<MonitorRecord>& records, const StopConfig& config);

// Monitor log CSV: epoch,wd_aggregate,wd_c0..wd_c{M-1},aq,cluster_loss,stop
void write_monitor_csv(const std::vector<MonitorRecord>& records, std::size_t m,
                       const std::string& path);

}  // namespace smilegan
