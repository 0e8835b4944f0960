// Command-line front end: simulation, atrophy injection, preprocessing,
// training (single run or rerun-consensus pipelines), subtype-count
// selection, consensus over saved models, inference and monitor export.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <numeric>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "smilegan/data.hpp"
#include "smilegan/model.hpp"
#include "smilegan/monitor.hpp"
#include "smilegan/selection.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace smilegan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

std::uint64_t default_seed() {
    if (const char* env = std::getenv("SMILEGAN_SEED"))
        return std::strtoull(env, nullptr, 10);
    return 0;
}

std::size_t default_jobs() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << j.dump(1) << '\n';
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::FormatVersionMismatch,
                    "malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

// Options shared by every training-backed subcommand.
struct TrainOptions {
    TrainingConfig config;
    std::string cov_kind = "diagonal";
    std::uint64_t seed = default_seed();
    std::string config_path;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file; explicit flags override it");
        cmd->add_option("--seed", seed, "RNG seed (SMILEGAN_SEED or 0 when omitted)");
        cmd->add_option("--m", config.m, "number of subtypes M");
        cmd->add_option("--mu", config.mu, "change-loss weight");
        cmd->add_option("--lambda", config.lambda, "cluster-loss weight");
        cmd->add_option("--clip-c", config.clip_c, "weight-clipping half width for f and g");
        cmd->add_option("--lr-d", config.lr_d, "discriminator learning rate");
        cmd->add_option("--lr-fg", config.lr_fg, "mapping/clustering learning rate");
        cmd->add_option("--beta1", config.beta1, "ADAM beta1");
        cmd->add_option("--beta2", config.beta2, "ADAM beta2");
        cmd->add_option("--batch-size", config.batch_size, "batch size");
        cmd->add_option("--max-epoch", config.max_epoch, "epoch cap");
        cmd->add_option("--grad-clip", config.grad_clip_norm, "global gradient-norm cap");
        cmd->add_option("--mu-warmup", config.mu_warmup_epochs,
                        "epochs with the change term disabled");
        cmd->add_option("--change-per-feature", config.change_loss_per_feature,
                        "scale the change term by 1/feature_dim");
        cmd->add_option("--warmup", config.stop.warmup_epochs, "epochs before stopping is considered");
        cmd->add_option("--wd-patience", config.stop.wd_patience, "epochs without WD improvement");
        cmd->add_option("--wd-min-delta", config.stop.wd_min_delta, "WD improvement threshold");
        cmd->add_option("--aq-threshold", aq_threshold_flag,
                        "AQ stop threshold (default: 1% of PT count)");
        cmd->add_option("--cluster-loss-threshold", config.stop.cluster_loss_threshold,
                        "cluster-loss stop threshold");
        cmd->add_option("--min-cluster-size", config.monitor.min_cluster_size,
                        "smallest cluster entering the WD aggregate");
        cmd->add_option("--cov-kind", cov_kind, "covariance kind for monitoring")
            ->check(CLI::IsMember({"diagonal", "full"}));
        owner = cmd;
    }

    // file values fill in anything the command line left untouched
    void apply_config_file() {
        if (config_path.empty()) return;
        const json j = load_json(config_path);
        auto fill = [&](const char* flag, const char* key, auto& value) {
            const CLI::Option* opt = owner->get_option(flag);
            if (opt->count() == 0 && j.contains(key))
                value = j.at(key).get<std::decay_t<decltype(value)>>();
        };
        fill("--seed", "seed", seed);
        fill("--m", "m", config.m);
        fill("--mu", "mu", config.mu);
        fill("--lambda", "lambda", config.lambda);
        fill("--clip-c", "clip_c", config.clip_c);
        fill("--lr-d", "lr_d", config.lr_d);
        fill("--lr-fg", "lr_fg", config.lr_fg);
        fill("--beta1", "beta1", config.beta1);
        fill("--beta2", "beta2", config.beta2);
        fill("--batch-size", "batch_size", config.batch_size);
        fill("--max-epoch", "max_epoch", config.max_epoch);
        fill("--grad-clip", "grad_clip_norm", config.grad_clip_norm);
        fill("--mu-warmup", "mu_warmup_epochs", config.mu_warmup_epochs);
        fill("--change-per-feature", "change_loss_per_feature", config.change_loss_per_feature);
        fill("--warmup", "warmup_epochs", config.stop.warmup_epochs);
        fill("--wd-patience", "wd_patience", config.stop.wd_patience);
        fill("--wd-min-delta", "wd_min_delta", config.stop.wd_min_delta);
        fill("--aq-threshold", "aq_threshold", aq_threshold_flag);
        fill("--cluster-loss-threshold", "cluster_loss_threshold",
             config.stop.cluster_loss_threshold);
        fill("--min-cluster-size", "min_cluster_size", config.monitor.min_cluster_size);
        fill("--cov-kind", "cov_kind", cov_kind);
    }

    TrainingConfig resolve() {
        apply_config_file();
        config.monitor.kind =
            cov_kind == "full" ? CovarianceKind::full : CovarianceKind::diagonal;
        if (aq_threshold_flag >= 0)
            config.stop.aq_threshold = static_cast<std::size_t>(aq_threshold_flag);
        return config;
    }

    json resolved_json() const {
        json j;
        j["seed"] = seed;
        j["m"] = config.m;
        j["mu"] = config.mu;
        j["lambda"] = config.lambda;
        j["clip_c"] = config.clip_c;
        j["lr_d"] = config.lr_d;
        j["lr_fg"] = config.lr_fg;
        j["beta1"] = config.beta1;
        j["beta2"] = config.beta2;
        j["batch_size"] = config.batch_size;
        j["max_epoch"] = config.max_epoch;
        j["grad_clip_norm"] = config.grad_clip_norm;
        j["mu_warmup_epochs"] = config.mu_warmup_epochs;
        j["change_loss_per_feature"] = config.change_loss_per_feature;
        j["warmup_epochs"] = config.stop.warmup_epochs;
        j["wd_patience"] = config.stop.wd_patience;
        j["wd_min_delta"] = config.stop.wd_min_delta;
        j["aq_threshold"] =
            config.stop.aq_threshold ? json(*config.stop.aq_threshold) : json(nullptr);
        j["cluster_loss_threshold"] = config.stop.cluster_loss_threshold;
        j["min_cluster_size"] = config.monitor.min_cluster_size;
        j["cov_kind"] = cov_kind;
        return j;
    }

    CLI::App* owner = nullptr;
    long long aq_threshold_flag = -1;
};

AtrophySpec spec_from_json(const json& j) {
    AtrophySpec spec;
    for (const auto& p : j.at("patterns")) {
        PatternSpec ps;
        ps.name = p.value("name", "pattern");
        ps.rois = p.at("rois").get<std::vector<std::size_t>>();
        const json& rate = p.at("rate");
        if (rate.is_array()) {
            ps.rate_lo = rate.at(0).get<double>();
            ps.rate_hi = rate.at(1).get<double>();
        } else {
            ps.rate_lo = ps.rate_hi = rate.get<double>();
        }
        if (p.contains("count")) ps.count = p.at("count").get<std::size_t>();
        spec.patterns.push_back(std::move(ps));
    }
    if (j.contains("confounder")) {
        const json& c = j.at("confounder");
        ConfounderSpec cs;
        cs.rois = c.at("rois").get<std::vector<std::size_t>>();
        cs.rate = c.at("rate").get<double>();
        cs.cn_count = c.at("cn_count").get<std::size_t>();
        cs.pt_count = c.at("pt_count").get<std::size_t>();
        spec.confounder = cs;
    }
    return spec;
}

struct SplitTable {
    Matrix cn;
    Matrix pt;
    std::vector<std::string> pt_ids;
    std::vector<std::string> all_ids;
};

SplitTable split_groups(const RoiTable& table) {
    SplitTable s;
    s.cn = table.values_of(Group::CN);
    s.pt = table.values_of(Group::PT);
    for (std::size_t r : table.rows_of(Group::PT)) s.pt_ids.push_back(table.ids[r]);
    s.all_ids = table.ids;
    if (s.cn.rows() == 0 || s.pt.rows() == 0)
        throw Error(ErrorCode::EmptyDataset, "table needs both CN and PT rows");
    return s;
}

void run_parallel(std::size_t n_jobs, std::size_t workers,
                  const std::function<void(std::size_t)>& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n_jobs));
    if (workers == 1) {
        for (std::size_t i = 0; i < n_jobs; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mtx;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n_jobs) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mtx);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

int cmd_simulate(const std::string& preset, std::uint64_t seed, const std::string& out_dir) {
    SyntheticConfig cfg;
    if (preset == "paper-supp131")
        cfg = presets::synthetic_benchmark();
    else if (preset == "holdout-base")
        cfg = presets::holdout_base();
    else
        throw Error(ErrorCode::SpecInvalid, "unknown preset " + preset);

    fs::create_directories(out_dir);
    SyntheticResult r = generate_synthetic(cfg, seed);
    write_roi_csv(r.table, (fs::path(out_dir) / "roi.csv").string());
    write_truth_csv(r.truth, (fs::path(out_dir) / "truth.csv").string());

    json resolved{{"command", "simulate"}, {"preset", preset}, {"seed", seed}};
    write_json(resolved, fs::path(out_dir) / "resolved-config.json");
    std::cout << "wrote " << r.table.n_rows() << " rows to " << out_dir << "/roi.csv\n";
    return kExitOk;
}

int cmd_inject(const std::string& data_path, const std::string& spec_path,
               const std::string& preset, std::uint64_t seed, const std::string& out_dir) {
    AtrophySpec spec;
    if (!spec_path.empty())
        spec = spec_from_json(load_json(spec_path));
    else if (preset == "supp132-fixed-30")
        spec = presets::variable_rate_patterns(0.3, 0.3);
    else if (preset == "supp132-range-10-30")
        spec = presets::variable_rate_patterns(0.1, 0.3);
    else if (preset == "supp132-range-10-20")
        spec = presets::variable_rate_patterns(0.1, 0.2);
    else
        throw Error(ErrorCode::SpecInvalid, "give --spec or a known --preset");

    RoiTable base = read_roi_csv(data_path);
    // presets carry the 109/109/108 split of the 326-row arm; adapt to the table
    if (spec_path.empty()) {
        const std::size_t n_pt = base.rows_of(Group::PT).size();
        if (n_pt != 326)
            for (auto& p : spec.patterns) p.count.reset();
    }
    SyntheticResult r = inject_atrophy(base, spec, seed);
    if (r.truth.confounder_overlaps_patterns)
        std::cerr << "note: confounder ROIs overlap pattern ROIs\n";

    fs::create_directories(out_dir);
    write_roi_csv(r.table, (fs::path(out_dir) / "roi.csv").string());
    write_truth_csv(r.truth, (fs::path(out_dir) / "truth.csv").string());
    json resolved{{"command", "inject"},
                  {"data", data_path},
                  {"spec", spec_path},
                  {"preset", preset},
                  {"seed", seed}};
    write_json(resolved, fs::path(out_dir) / "resolved-config.json");
    return kExitOk;
}

int cmd_preprocess(const std::string& data_path, const std::string& apply_path,
                   const std::string& residualize, const std::string& out_dir) {
    RoiTable table = read_roi_csv(data_path);
    fs::create_directories(out_dir);

    if (!apply_path.empty()) {
        PreprocessStats stats = read_preprocess_stats(apply_path);
        RoiTable out = apply_preprocess(stats, table);
        write_roi_csv(out, (fs::path(out_dir) / "preprocessed.csv").string());
    } else {
        Residualize mode = Residualize::automatic;
        if (residualize == "on") mode = Residualize::on;
        if (residualize == "off") mode = Residualize::off;
        PreprocessResult result = preprocess(table, mode);
        write_roi_csv(result.table, (fs::path(out_dir) / "preprocessed.csv").string());
        write_preprocess_stats(result.stats,
                               (fs::path(out_dir) / "preprocess-stats.json").string());
    }
    json resolved{{"command", "preprocess"},
                  {"data", data_path},
                  {"apply", apply_path},
                  {"residualize", residualize}};
    write_json(resolved, fs::path(out_dir) / "resolved-config.json");
    return kExitOk;
}

void write_single_run(const fs::path& dir, const SmileGanModel& model,
                      const std::vector<MonitorRecord>& records, const SplitTable& split) {
    fs::create_directories(dir);
    save_model(model, (dir / "model.json").string());
    write_monitor_csv(records, model.arch.m, (dir / "monitor.csv").string());
    write_assignments_csv(split.pt_ids, assign(model, split.pt), (dir / "assignments.csv").string());
}

int cmd_train(TrainOptions& opts, const std::string& data_path, std::size_t reruns,
              std::size_t jobs, const std::string& out_dir) {
    const TrainingConfig config = opts.resolve();
    RoiTable table = read_roi_csv(data_path);
    SplitTable split = split_groups(table);
    fs::create_directories(out_dir);

    json resolved = opts.resolved_json();
    resolved["command"] = "train";
    resolved["cn_pt"] = data_path;
    resolved["reruns"] = reruns;
    write_json(resolved, fs::path(out_dir) / "resolved-config.json");

    if (reruns <= 1) {
        TrainResult result;
        try {
            result = train(split.cn, split.pt, config, opts.seed);
        } catch (const NonFiniteLossError& e) {
            // keep the last finite state on disk before reporting the failure
            write_single_run(out_dir, e.last_finite_model(), e.records(), split);
            throw;
        }
        write_single_run(out_dir, result.model, result.records, split);
        std::cout << "trained to epoch " << result.model.epoch << " ("
                  << (result.records.empty() || !result.records.back().stop ? "epoch cap"
                                                                            : "stop criteria")
                  << ")\n";
        return kExitOk;
    }

    std::vector<SmileGanModel> models(reruns);
    run_parallel(reruns, jobs, [&](std::size_t k) {
        const std::uint64_t run_seed = Rng::derive(opts.seed, 2000 + k);
        TrainResult result = train(split.cn, split.pt, config, run_seed);
        char name[32];
        std::snprintf(name, sizeof(name), "run_%03zu", k);
        write_single_run(fs::path(out_dir) / name, result.model, result.records, split);
        models[k] = std::move(result.model);
    });

    ConsensusResult cons = consensus(models, split.pt);
    write_assignments_csv(split.pt_ids, cons.probabilities,
                          (fs::path(out_dir) / "consensus_assignments.csv").string());
    json meta{{"template_index", cons.template_index}, {"reruns", reruns}};
    write_json(meta, fs::path(out_dir) / "consensus-meta.json");
    std::cout << "trained " << reruns << " models; consensus template is run "
              << cons.template_index << "\n";
    return kExitOk;
}

int cmd_select_m(TrainOptions& opts, const std::string& data_path,
                 std::vector<std::size_t> candidates, std::size_t repetitions, double holdout,
                 std::size_t jobs, const std::string& out_dir) {
    const TrainingConfig config = opts.resolve();
    RoiTable table = read_roi_csv(data_path);
    SplitTable split = split_groups(table);
    fs::create_directories(out_dir);

    ChooseMResult result =
        choose_m(split.cn, split.pt, candidates, repetitions, holdout, config, opts.seed, jobs);
    write_selection_report(result, (fs::path(out_dir) / "selection.json").string());

    json resolved = opts.resolved_json();
    resolved["command"] = "select-m";
    resolved["cn_pt"] = data_path;
    resolved["candidates"] = candidates;
    resolved["repetitions"] = repetitions;
    resolved["holdout"] = holdout;
    write_json(resolved, fs::path(out_dir) / "resolved-config.json");

    std::cout << "chosen m = " << result.chosen_m << "\n";
    return kExitOk;
}

int cmd_consensus(const std::vector<std::string>& model_paths, const std::string& data_path,
                  const std::string& out_dir) {
    std::vector<SmileGanModel> models;
    for (const auto& p : model_paths) models.push_back(load_model(p));
    RoiTable table = read_roi_csv(data_path);
    SplitTable split = split_groups(table);

    ConsensusResult cons = consensus(models, split.pt);
    fs::create_directories(out_dir);
    write_assignments_csv(split.pt_ids, cons.probabilities,
                          (fs::path(out_dir) / "consensus_assignments.csv").string());
    json resolved{{"command", "consensus"},
                  {"models", model_paths},
                  {"data", data_path},
                  {"template_index", cons.template_index}};
    write_json(resolved, fs::path(out_dir) / "resolved-config.json");
    return kExitOk;
}

int cmd_infer(const std::string& model_path, const std::string& data_path,
              const std::string& rows, const std::string& out_file) {
    SmileGanModel model = load_model(model_path);
    RoiTable table = read_roi_csv(data_path);

    std::vector<std::size_t> selected;
    if (rows == "all") {
        selected.resize(table.n_rows());
        std::iota(selected.begin(), selected.end(), std::size_t{0});
    } else {
        selected = table.rows_of(Group::PT);
    }
    if (table.n_features() != model.arch.feature_dim)
        throw Error(ErrorCode::ShapeMismatch, "table features do not match the model");

    std::vector<std::string> ids;
    for (std::size_t r : selected) ids.push_back(table.ids[r]);
    write_assignments_csv(ids, assign(model, table.values_at(selected)), out_file);

    json resolved{{"command", "infer"},
                  {"model", model_path},
                  {"data", data_path},
                  {"rows", rows},
                  {"out", out_file}};
    const fs::path parent = fs::path(out_file).has_parent_path()
                                ? fs::path(out_file).parent_path()
                                : fs::path(".");
    write_json(resolved, parent / "resolved-config.json");
    return kExitOk;
}

int cmd_monitor_export(const std::string& model_path, const std::string& data_path,
                       std::uint64_t seed, const std::string& cov_kind,
                       const std::string& out_file) {
    SmileGanModel model = load_model(model_path);
    RoiTable table = read_roi_csv(data_path);
    SplitTable split = split_groups(table);

    MonitorConfig mcfg = model.config.monitor;
    mcfg.kind = cov_kind == "full" ? CovarianceKind::full : CovarianceKind::diagonal;
    Rng rng(Rng::derive(seed, 2));
    MonitorRecord record = epoch_monitor(model, split.cn, split.pt, {}, mcfg, rng);
    write_monitor_csv({record}, model.arch.m, out_file);

    json resolved{{"command", "monitor-export"},
                  {"model", model_path},
                  {"data", data_path},
                  {"seed", seed},
                  {"cov_kind", cov_kind},
                  {"out", out_file}};
    const fs::path parent = fs::path(out_file).has_parent_path()
                                ? fs::path(out_file).parent_path()
                                : fs::path(".");
    write_json(resolved, parent / "resolved-config.json");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semi-supervised GAN clustering of patient cohorts against a reference group"};
    app.require_subcommand(1);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "generate a synthetic benchmark table");
    std::string sim_preset = "paper-supp131";
    std::uint64_t sim_seed = default_seed();
    std::string sim_out;
    simulate->add_option("--preset", sim_preset, "paper-supp131 | holdout-base");
    simulate->add_option("--seed", sim_seed, "RNG seed");
    simulate->add_option("--out", sim_out, "output directory")->required();

    // inject
    auto* inject = app.add_subcommand("inject", "apply synthetic atrophy to PT rows of a table");
    std::string inj_data, inj_spec, inj_preset, inj_out;
    std::uint64_t inj_seed = default_seed();
    inject->add_option("--data", inj_data, "base ROI CSV")->required();
    inject->add_option("--spec", inj_spec, "atrophy spec JSON");
    inject->add_option("--preset", inj_preset,
                       "supp132-fixed-30 | supp132-range-10-30 | supp132-range-10-20");
    inject->add_option("--seed", inj_seed, "RNG seed");
    inject->add_option("--out", inj_out, "output directory")->required();

    // preprocess
    auto* preprocess_cmd = app.add_subcommand("preprocess", "residualize and normalize a table");
    std::string pre_data, pre_apply, pre_out, pre_residualize = "auto";
    preprocess_cmd->add_option("--data", pre_data, "ROI CSV")->required();
    preprocess_cmd->add_option("--apply", pre_apply, "replay previously fitted stats JSON");
    preprocess_cmd->add_option("--residualize", pre_residualize, "auto | on | off")
        ->check(CLI::IsMember({"auto", "on", "off"}));
    preprocess_cmd->add_option("--out", pre_out, "output directory")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "train one model or a rerun-consensus set");
    TrainOptions train_opts;
    std::string train_data, train_out;
    std::size_t train_reruns = 1;
    std::size_t train_jobs = default_jobs();
    train_cmd->add_option("--cn-pt", train_data, "ROI CSV with CN and PT rows")->required();
    train_cmd->add_option("--out", train_out, "output directory")->required();
    train_cmd->add_option("--reruns", train_reruns,
                          "independent reruns; above 1 a consensus is emitted (30 in the full pipeline)");
    train_cmd->add_option("--jobs", train_jobs, "parallel training workers");
    train_opts.attach(train_cmd);

    // select-m
    auto* select_cmd = app.add_subcommand("select-m", "choose M by repeated-holdout stability");
    TrainOptions select_opts;
    std::string select_data, select_out;
    std::vector<std::size_t> select_candidates = {3, 4, 5};
    std::size_t select_reps = 20;
    double select_holdout = 0.10;
    std::size_t select_jobs = default_jobs();
    select_cmd->add_option("--cn-pt", select_data, "ROI CSV with CN and PT rows")->required();
    select_cmd->add_option("--candidates", select_candidates, "candidate M values");
    select_cmd->add_option("--repetitions", select_reps, "holdout repetitions per candidate");
    select_cmd->add_option("--holdout", select_holdout, "held-out fraction");
    select_cmd->add_option("--jobs", select_jobs, "parallel training workers");
    select_cmd->add_option("--out", select_out, "output directory")->required();
    select_opts.attach(select_cmd);

    // consensus
    auto* consensus_cmd = app.add_subcommand("consensus", "consensus over saved models");
    std::vector<std::string> cons_models;
    std::string cons_data, cons_out;
    consensus_cmd->add_option("--models", cons_models, "model checkpoint paths")
        ->required()
        ->expected(-1);
    consensus_cmd->add_option("--data", cons_data, "ROI CSV")->required();
    consensus_cmd->add_option("--out", cons_out, "output directory")->required();

    // infer
    auto* infer_cmd = app.add_subcommand("infer", "pattern probabilities under a saved model");
    std::string infer_model, infer_data, infer_out, infer_rows = "pt";
    infer_cmd->add_option("--model", infer_model, "model checkpoint")->required();
    infer_cmd->add_option("--data", infer_data, "ROI CSV")->required();
    infer_cmd->add_option("--rows", infer_rows, "pt | all")->check(CLI::IsMember({"pt", "all"}));
    infer_cmd->add_option("--out", infer_out, "output CSV file")->required();

    // monitor-export
    auto* monitor_cmd =
        app.add_subcommand("monitor-export", "one monitoring record for a saved model");
    std::string mon_model, mon_data, mon_out, mon_kind = "diagonal";
    std::uint64_t mon_seed = default_seed();
    monitor_cmd->add_option("--model", mon_model, "model checkpoint")->required();
    monitor_cmd->add_option("--data", mon_data, "ROI CSV")->required();
    monitor_cmd->add_option("--seed", mon_seed, "RNG seed for the cluster-loss draw");
    monitor_cmd->add_option("--cov-kind", mon_kind, "diagonal | full")
        ->check(CLI::IsMember({"diagonal", "full"}));
    monitor_cmd->add_option("--out", mon_out, "output CSV file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*simulate) return cmd_simulate(sim_preset, sim_seed, sim_out);
        if (*inject) return cmd_inject(inj_data, inj_spec, inj_preset, inj_seed, inj_out);
        if (*preprocess_cmd) return cmd_preprocess(pre_data, pre_apply, pre_residualize, pre_out);
        if (*train_cmd) return cmd_train(train_opts, train_data, train_reruns, train_jobs, train_out);
        if (*select_cmd)
            return cmd_select_m(select_opts, select_data, select_candidates, select_reps,
                                select_holdout, select_jobs, select_out);
        if (*consensus_cmd) return cmd_consensus(cons_models, cons_data, cons_out);
        if (*infer_cmd) return cmd_infer(infer_model, infer_data, infer_rows, infer_out);
        if (*monitor_cmd)
            return cmd_monitor_export(mon_model, mon_data, mon_seed, mon_kind, mon_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::NonFiniteLoss ? kExitNumerical : kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
