#include "smilegan/selection.hpp"

#include "smilegan/format.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <thread>

#include <json.hpp>

namespace smilegan {

namespace {

double comb2(double n) { return n * (n - 1.0) / 2.0; }

void run_jobs(std::size_t n_jobs, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n_jobs));
    if (workers == 1) {
        for (std::size_t i = 0; i < n_jobs; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n_jobs) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

Partition Partition::from_labels(std::vector<int> labels) {
    Partition p;
    int max_label = -1;
    for (int l : labels) {
        if (l < 0) throw Error(ErrorCode::LengthMismatch, "labels must be non-negative");
        max_label = std::max(max_label, l);
    }
    p.labels = std::move(labels);
    p.k = static_cast<std::size_t>(max_label + 1);
    return p;
}

double ari(const Partition& a, const Partition& b) {
    const std::size_t n = a.labels.size();
    if (n != b.labels.size() || n < 2)
        throw Error(ErrorCode::LengthMismatch, "partitions must share a length of at least 2");

    const std::size_t ka = a.k, kb = b.k;
    std::vector<double> table(ka * kb, 0.0);
    std::vector<double> row(ka, 0.0), col(kb, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        table[a.labels[i] * kb + b.labels[i]] += 1.0;
        row[a.labels[i]] += 1.0;
        col[b.labels[i]] += 1.0;
    }

    double sum_cells = 0.0;
    for (double c : table) sum_cells += comb2(c);
    double sum_rows = 0.0;
    for (double c : row) sum_rows += comb2(c);
    double sum_cols = 0.0;
    for (double c : col) sum_cols += comb2(c);

    const double expected = sum_rows * sum_cols / comb2(static_cast<double>(n));
    const double maximum = 0.5 * (sum_rows + sum_cols);
    if (maximum == expected) return 1.0;  // both partitions degenerate
    return (sum_cells - expected) / (maximum - expected);
}

MatchResult match_accuracy(const Partition& pred, const Partition& truth) {
    const std::size_t n = pred.labels.size();
    if (n != truth.labels.size() || n == 0)
        throw Error(ErrorCode::LengthMismatch, "partitions must share a non-zero length");
    const std::size_t k = std::max(pred.k, truth.k);
    if (k > 8) throw Error(ErrorCode::TooManyClusters, "exhaustive matching is limited to k <= 8");

    // agreement counts: hits[p][t] = how often pred label p co-occurs with truth label t
    std::vector<std::size_t> hits(k * k, 0);
    for (std::size_t i = 0; i < n; ++i)
        hits[pred.labels[i] * k + truth.labels[i]] += 1;

    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best_perm = perm;
    std::size_t best_hits = 0;
    do {
        std::size_t h = 0;
        for (std::size_t p = 0; p < k; ++p) h += hits[p * k + perm[p]];
        if (h > best_hits) {
            best_hits = h;
            best_perm = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    return {static_cast<double>(best_hits) / static_cast<double>(n), best_perm};
}

ChooseMResult choose_m(const Matrix& cn_rows, const Matrix& pt_rows,
                       const std::vector<std::size_t>& candidate_ms, std::size_t repetitions,
                       double holdout_fraction, const TrainingConfig& config, std::uint64_t seed,
                       std::size_t jobs) {
    if (candidate_ms.empty())
        throw Error(ErrorCode::InsufficientData, "no candidate subtype counts given");
    if (repetitions < 2)
        throw Error(ErrorCode::InsufficientData, "stability selection needs at least 2 repetitions");
    if (holdout_fraction <= 0.0 || holdout_fraction >= 1.0)
        throw Error(ErrorCode::InsufficientData, "holdout fraction must lie in (0, 1)");
    const std::size_t keep_cn =
        cn_rows.rows() - static_cast<std::size_t>(holdout_fraction * cn_rows.rows());
    const std::size_t keep_pt =
        pt_rows.rows() - static_cast<std::size_t>(holdout_fraction * pt_rows.rows());
    if (keep_cn == 0 || keep_pt == 0)
        throw Error(ErrorCode::InsufficientData, "holdout leaves an empty training set");

    // all (m, repetition) runs are independent; labels land in a fixed slot
    struct Job {
        std::size_t m_index;
        std::size_t rep;
    };
    std::vector<Job> job_list;
    for (std::size_t mi = 0; mi < candidate_ms.size(); ++mi)
        for (std::size_t rep = 0; rep < repetitions; ++rep) job_list.push_back({mi, rep});

    std::vector<std::vector<std::vector<int>>> labels(candidate_ms.size());
    for (auto& per_m : labels) per_m.resize(repetitions);

    run_jobs(job_list.size(), jobs, [&](std::size_t jid) {
        const Job job = job_list[jid];
        const std::size_t m = candidate_ms[job.m_index];
        const std::uint64_t run_seed =
            Rng::derive(seed, 1000 + job.m_index * repetitions + job.rep);

        Rng subset_rng(Rng::derive(run_seed, 7));
        auto subset = [&](std::size_t n, std::size_t keep) {
            std::vector<std::size_t> idx(n);
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            subset_rng.shuffle(idx);
            idx.resize(keep);
            std::sort(idx.begin(), idx.end());
            return idx;
        };
        Matrix cn_sub(keep_cn, cn_rows.cols());
        const auto cn_keep = subset(cn_rows.rows(), keep_cn);
        for (std::size_t i = 0; i < keep_cn; ++i) {
            auto src = cn_rows.row(cn_keep[i]);
            std::copy(src.begin(), src.end(), cn_sub.row(i).begin());
        }
        Matrix pt_sub(keep_pt, pt_rows.cols());
        const auto pt_keep = subset(pt_rows.rows(), keep_pt);
        for (std::size_t i = 0; i < keep_pt; ++i) {
            auto src = pt_rows.row(pt_keep[i]);
            std::copy(src.begin(), src.end(), pt_sub.row(i).begin());
        }

        TrainingConfig run_config = config;
        run_config.m = m;
        TrainResult result = train(cn_sub, pt_sub, run_config, run_seed);
        // score agreement on the full PT set, held-out rows included
        labels[job.m_index][job.rep] = dominant_labels(assign(result.model, pt_rows));
    });

    ChooseMResult out;
    out.candidate_ms = candidate_ms;
    out.mean_ari.resize(candidate_ms.size());
    out.std_ari.resize(candidate_ms.size());
    for (std::size_t mi = 0; mi < candidate_ms.size(); ++mi) {
        Vector pair_aris;
        for (std::size_t i = 0; i < repetitions; ++i)
            for (std::size_t j = i + 1; j < repetitions; ++j)
                pair_aris.push_back(ari(Partition::from_labels(labels[mi][i]),
                                        Partition::from_labels(labels[mi][j])));
        double mean = std::accumulate(pair_aris.begin(), pair_aris.end(), 0.0) /
                      static_cast<double>(pair_aris.size());
        double var = 0.0;
        for (double v : pair_aris) var += (v - mean) * (v - mean);
        var /= static_cast<double>(pair_aris.size());
        out.mean_ari[mi] = mean;
        out.std_ari[mi] = std::sqrt(var);
    }

    std::size_t best = 0;
    for (std::size_t mi = 1; mi < candidate_ms.size(); ++mi) {
        const bool better = out.mean_ari[mi] > out.mean_ari[best] ||
                            (out.mean_ari[mi] == out.mean_ari[best] &&
                             candidate_ms[mi] < candidate_ms[best]);
        if (better) best = mi;
    }
    out.chosen_m = candidate_ms[best];
    return out;
}

ConsensusResult consensus(const std::vector<SmileGanModel>& models, const Matrix& pt_rows) {
    if (models.empty())
        throw Error(ErrorCode::InsufficientData, "consensus needs at least one model");
    const ArchitectureSpec& arch = models.front().arch;
    for (const auto& m : models)
        if (!(m.arch == arch))
            throw Error(ErrorCode::ArchMismatch, "models disagree in architecture");

    const std::size_t n_models = models.size();
    std::vector<Matrix> probs(n_models);
    std::vector<Partition> parts(n_models);
    for (std::size_t k = 0; k < n_models; ++k) {
        probs[k] = assign(models[k], pt_rows);
        parts[k] = Partition::from_labels(dominant_labels(probs[k]));
    }

    std::size_t tmpl = 0;
    if (n_models > 1) {
        double best_mean = -2.0;
        for (std::size_t k = 0; k < n_models; ++k) {
            double sum = 0.0;
            for (std::size_t j = 0; j < n_models; ++j)
                if (j != k) sum += ari(parts[k], parts[j]);
            const double mean = sum / static_cast<double>(n_models - 1);
            if (mean > best_mean) {
                best_mean = mean;
                tmpl = k;
            }
        }
    }

    ConsensusResult out;
    out.template_index = tmpl;
    out.probabilities = Matrix(pt_rows.rows(), arch.m);
    std::vector<int> identity(arch.m);
    std::iota(identity.begin(), identity.end(), 0);

    for (std::size_t k = 0; k < n_models; ++k) {
        std::vector<int> perm = identity;
        if (k != tmpl) {
            // force a full m-way permutation even if some labels are unused
            Partition pred = parts[k];
            Partition truth = parts[tmpl];
            pred.k = truth.k = arch.m;
            perm = match_accuracy(pred, truth).permutation;
        }
        out.permutations.push_back(perm);
        for (std::size_t i = 0; i < pt_rows.rows(); ++i)
            for (std::size_t c = 0; c < arch.m; ++c)
                out.probabilities(i, perm[c]) += probs[k](i, c);
    }
    const double inv = 1.0 / static_cast<double>(n_models);
    for (std::size_t i = 0; i < out.probabilities.size(); ++i)
        out.probabilities.data()[i] *= inv;
    return out;
}

void write_selection_report(const ChooseMResult& result, const std::string& path) {
    nlohmann::json j;
    j["candidate_ms"] = result.candidate_ms;
    j["per_m_mean_ari"] = result.mean_ari;
    j["per_m_ari_std"] = result.std_ari;
    j["chosen_m"] = result.chosen_m;
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << j.dump(1) << '\n';
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

void write_assignments_csv(const std::vector<std::string>& ids, const Matrix& probabilities,
                           const std::string& path) {
    if (ids.size() != probabilities.rows())
        throw Error(ErrorCode::ShapeMismatch, "ids and probability rows differ");
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << "id";
    for (std::size_t c = 0; c < probabilities.cols(); ++c) out << ",p_" << c;
    out << ",dominant\n";
    const std::vector<int> labels = dominant_labels(probabilities);
    for (std::size_t i = 0; i < probabilities.rows(); ++i) {
        out << ids[i];
        for (std::size_t c = 0; c < probabilities.cols(); ++c)
            out << ',' << format_double_shortest(probabilities(i, c));
        out << ',' << labels[i] << '\n';
    }
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace smilegan
