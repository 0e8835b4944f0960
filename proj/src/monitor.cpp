#include "smilegan/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "smilegan/format.hpp"
#include "smilegan/model.hpp"

namespace smilegan {

namespace {

double trace(const Matrix& a) {
    double t = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
    return t;
}

double wd_full_formula(const GaussianMoments& a, const GaussianMoments& b, double ridge) {
    Matrix c1 = a.cov;
    Matrix c2 = b.cov;
    if (ridge > 0.0) {
        for (std::size_t i = 0; i < c1.rows(); ++i) c1(i, i) += ridge;
        for (std::size_t i = 0; i < c2.rows(); ++i) c2(i, i) += ridge;
    }
    const Matrix root1 = sym_sqrt(c1);
    Matrix inner = matmul(matmul(root1, c2), root1);
    for (std::size_t i = 0; i < inner.rows(); ++i)
        for (std::size_t j = i + 1; j < inner.cols(); ++j) {
            const double s = 0.5 * (inner(i, j) + inner(j, i));
            inner(i, j) = s;
            inner(j, i) = s;
        }
    const Matrix cross = sym_sqrt(inner);

    double mean_sq = 0.0;
    for (std::size_t i = 0; i < a.mean.size(); ++i) {
        const double d = a.mean[i] - b.mean[i];
        mean_sq += d * d;
    }
    return mean_sq + trace(a.cov) + trace(b.cov) - 2.0 * trace(cross);
}

}  // namespace

double wd_gaussian(const GaussianMoments& a, const GaussianMoments& b) {
    if (a.kind != b.kind)
        throw Error(ErrorCode::KindMismatch, "moment kinds differ");
    if (a.dim() != b.dim())
        throw Error(ErrorCode::DimensionMismatch, "moment dimensions differ");

    double w;
    if (a.kind == CovarianceKind::diagonal) {
        w = 0.0;
        for (std::size_t i = 0; i < a.dim(); ++i) {
            const double dm = a.mean[i] - b.mean[i];
            const double ds = std::sqrt(std::max(a.cov_diag[i], 0.0)) -
                              std::sqrt(std::max(b.cov_diag[i], 0.0));
            w += dm * dm + ds * ds;
        }
    } else {
        try {
            w = wd_full_formula(a, b, 0.0);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NotPSD) throw;
            // round-off pushed an eigenvalue below tolerance; retry ridged
            w = wd_full_formula(a, b, 1e-8);
        }
    }
    return std::max(w, 0.0);
}

std::size_t alteration_quantity(const LabelHistory& history, const std::vector<int>& current) {
    std::size_t aq = 0;
    for (std::size_t p = 0; p < current.size(); ++p) {
        for (const auto& past : history) {
            if (past[p] != current[p]) {
                ++aq;
                break;
            }
        }
    }
    return aq;
}

MonitorRecord epoch_monitor(const SmileGanModel& model, const Matrix& cn_rows,
                            const Matrix& pt_rows, const LabelHistory& history,
                            const MonitorConfig& config, Rng& rng,
                            std::vector<int>* labels_out) {
    const std::size_t m = model.arch.m;
    MonitorRecord record;
    record.epoch = model.epoch;
    record.wd_per_cluster.assign(m, std::nullopt);

    const Matrix pt_probs = forward_g(model, pt_rows);
    const std::vector<int> labels = dominant_labels(pt_probs);

    const std::size_t min_size = std::max<std::size_t>(config.min_cluster_size, 2);
    double wd_sum = 0.0;
    std::size_t wd_count = 0;
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<std::size_t> members;
        for (std::size_t p = 0; p < labels.size(); ++p)
            if (labels[p] == static_cast<int>(i)) members.push_back(p);
        if (members.size() < min_size) continue;

        Matrix zi(cn_rows.rows(), m);
        for (std::size_t r = 0; r < cn_rows.rows(); ++r) zi(r, i) = 1.0;
        const Matrix mapped = forward_f(model, cn_rows, zi).y_prime;

        Matrix cluster(members.size(), pt_rows.cols());
        for (std::size_t r = 0; r < members.size(); ++r) {
            auto src = pt_rows.row(members[r]);
            std::copy(src.begin(), src.end(), cluster.row(r).begin());
        }

        const GaussianMoments m1 = sample_moments(mapped, config.kind);
        const GaussianMoments m2 = sample_moments(cluster, config.kind);
        const double w = wd_gaussian(m1, m2);
        record.wd_per_cluster[i] = w;
        wd_sum += w;
        ++wd_count;
    }
    if (wd_count > 0) record.wd_aggregate = wd_sum / static_cast<double>(wd_count);

    record.alteration_quantity = alteration_quantity(history, labels);

    const Matrix z_fresh = sample_subtype_batch(cn_rows.rows(), m, rng);
    const Matrix y_prime = forward_f(model, cn_rows, z_fresh).y_prime;
    record.cluster_loss = cross_entropy_batch(z_fresh, forward_g(model, y_prime));

    if (labels_out) *labels_out = labels;
    return record;
}

bool should_stop(const std::vector<MonitorRecord>& records, const StopConfig& config) {
    if (records.empty()) return false;
    const MonitorRecord& last = records.back();
    if (last.epoch <= config.warmup_epochs) return false;

    double best = std::numeric_limits<double>::infinity();
    std::size_t last_improvement = records.front().epoch;
    for (const auto& r : records) {
        if (r.wd_aggregate && *r.wd_aggregate < best - config.wd_min_delta) {
            best = *r.wd_aggregate;
            last_improvement = r.epoch;
        }
    }
    if (last.epoch - last_improvement < config.wd_patience) return false;

    const std::size_t aq_limit = config.aq_threshold.value_or(0);
    return last.alteration_quantity <= aq_limit &&
           last.cluster_loss <= config.cluster_loss_threshold;
}

void write_monitor_csv(const std::vector<MonitorRecord>& records, std::size_t m,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << "epoch,wd_aggregate";
    for (std::size_t i = 0; i < m; ++i) out << ",wd_c" << i;
    out << ",aq,cluster_loss,stop\n";
    for (const auto& r : records) {
        out << r.epoch << ',';
        if (r.wd_aggregate) out << format_double_shortest(*r.wd_aggregate);
        for (std::size_t i = 0; i < m; ++i) {
            out << ',';
            if (i < r.wd_per_cluster.size() && r.wd_per_cluster[i])
                out << format_double_shortest(*r.wd_per_cluster[i]);
        }
        out << ',' << r.alteration_quantity << ',' << format_double_shortest(r.cluster_loss) << ','
            << (r.stop ? 1 : 0) << '\n';
    }
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace smilegan
