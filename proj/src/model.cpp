#include "smilegan/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace smilegan {

namespace {

using nlohmann::json;

std::vector<LinearLayer> make_layer(std::size_t in, std::size_t out, bool bias, Activation act) {
    LinearLayer l;
    l.weight = Matrix(out, in);
    if (bias) l.bias.assign(out, 0.0);
    l.activation = act;
    return {std::move(l)};
}

void append(std::vector<LinearLayer>& dst, std::vector<LinearLayer> src) {
    for (auto& l : src) dst.push_back(std::move(l));
}

ParamSet make_f(const ArchitectureSpec& a) {
    std::vector<LinearLayer> layers;
    // encoder
    append(layers, make_layer(a.feature_dim, a.half_dim, false, Activation::leaky_relu));
    append(layers, make_layer(a.half_dim, a.latent_dim, false, Activation::leaky_relu));
    // z-decoder
    append(layers, make_layer(a.m, a.latent_dim, true, Activation::sigmoid));
    // phase 2
    append(layers, make_layer(a.latent_dim, a.half_dim, false, Activation::leaky_relu));
    append(layers, make_layer(a.half_dim, a.feature_dim, false, Activation::leaky_relu));
    append(layers, make_layer(a.feature_dim, a.feature_dim, false, Activation::none));
    return ParamSet::create(std::move(layers));
}

ParamSet make_d(const ArchitectureSpec& a) {
    std::vector<LinearLayer> layers;
    append(layers, make_layer(a.feature_dim, a.half_dim, true, Activation::leaky_relu));
    append(layers, make_layer(a.half_dim, a.latent_dim, true, Activation::leaky_relu));
    append(layers, make_layer(a.latent_dim, 2, true, Activation::softmax));
    return ParamSet::create(std::move(layers));
}

ParamSet make_g(const ArchitectureSpec& a) {
    std::vector<LinearLayer> layers;
    append(layers, make_layer(a.feature_dim, a.feature_dim, true, Activation::leaky_relu));
    append(layers, make_layer(a.feature_dim, a.half_dim, true, Activation::leaky_relu));
    append(layers, make_layer(a.half_dim, a.latent_dim, true, Activation::leaky_relu));
    append(layers, make_layer(a.latent_dim, a.m, true, Activation::softmax));
    return ParamSet::create(std::move(layers));
}

// Retained forward pass of the composite mapping network.
struct FForward {
    Workspace encoder;
    Workspace zdecoder;
    Workspace phase2;
    Matrix y_prime;
};

std::span<const LinearLayer> f_sub(const SmileGanModel& m, std::size_t offset, std::size_t count) {
    return {m.params_f.layers.data() + offset, count};
}

FForward forward_f_retained(const SmileGanModel& model, const Matrix& x, const Matrix& z) {
    if (x.cols() != model.arch.feature_dim)
        throw Error(ErrorCode::ShapeMismatch, "x width does not match feature_dim");
    if (z.cols() != model.arch.m)
        throw Error(ErrorCode::ShapeMismatch, "z width does not match subtype count");
    if (x.rows() != z.rows())
        throw Error(ErrorCode::ShapeMismatch, "x and z batch sizes differ");

    FForward f;
    f.encoder = forward(f_sub(model, kFEncoderOffset, kFEncoderLayers), x);
    f.zdecoder = forward(f_sub(model, kFZDecoderOffset, kFZDecoderLayers), z);

    const Matrix& enc = f.encoder.output();
    const Matrix& dec = f.zdecoder.output();
    Matrix joint(enc.rows(), enc.cols());
    for (std::size_t i = 0; i < joint.size(); ++i)
        joint.data()[i] = enc.data()[i] * dec.data()[i];

    f.phase2 = forward(f_sub(model, kFPhase2Offset, kFPhase2Layers), joint);

    const Matrix& delta = f.phase2.output();
    f.y_prime = x;
    for (std::size_t i = 0; i < f.y_prime.size(); ++i) f.y_prime.data()[i] += delta.data()[i];
    return f;
}

// Backpropagate d(loss)/d(y') into params_f.grad. The residual add passes the
// gradient straight to phase2; the elementwise product routes it into both
// encoder branches.
void backward_f(SmileGanModel& model, const FForward& f, const Matrix& d_yprime) {
    Matrix d_joint = backward(model.params_f, kFPhase2Offset, kFPhase2Layers, f.phase2,
                              d_yprime, true);

    const Matrix& enc = f.encoder.output();
    const Matrix& dec = f.zdecoder.output();
    Matrix d_enc(d_joint.rows(), d_joint.cols());
    Matrix d_dec(d_joint.rows(), d_joint.cols());
    for (std::size_t i = 0; i < d_joint.size(); ++i) {
        d_enc.data()[i] = d_joint.data()[i] * dec.data()[i];
        d_dec.data()[i] = d_joint.data()[i] * enc.data()[i];
    }
    backward(model.params_f, kFEncoderOffset, kFEncoderLayers, f.encoder, d_enc, true);
    backward(model.params_f, kFZDecoderOffset, kFZDecoderLayers, f.zdecoder, d_dec, true);
}

Matrix one_hot_column(std::size_t rows, std::size_t cols, std::size_t hot) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) m(i, hot) = 1.0;
    return m;
}

// Deterministic traversal of a dataset in shuffled order, reshuffling on wrap.
class IndexStream {
public:
    IndexStream(std::size_t n, Rng& rng) : rng_(rng), idx_(n) {
        std::iota(idx_.begin(), idx_.end(), std::size_t{0});
        rng_.shuffle(idx_);
    }

    void fill(std::vector<std::size_t>& out, std::size_t count) {
        out.clear();
        while (out.size() < count) {
            if (pos_ == idx_.size()) {
                rng_.shuffle(idx_);
                pos_ = 0;
            }
            out.push_back(idx_[pos_++]);
        }
    }

private:
    Rng& rng_;
    std::vector<std::size_t> idx_;
    std::size_t pos_ = 0;
};

Matrix gather_rows(const Matrix& src, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), src.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto r = src.row(rows[i]);
        std::copy(r.begin(), r.end(), out.row(i).begin());
    }
    return out;
}

}  // namespace

ArchitectureSpec ArchitectureSpec::create(std::size_t feature_dim, std::size_t m) {
    if (m < 2) throw Error(ErrorCode::ShapeMismatch, "subtype count must be at least 2");
    if (feature_dim < 4) throw Error(ErrorCode::ShapeMismatch, "feature_dim must be at least 4");
    ArchitectureSpec a;
    a.feature_dim = feature_dim;
    a.m = m;
    a.half_dim = feature_dim / 2;
    a.latent_dim = feature_dim / 4;
    return a;
}

SmileGanModel SmileGanModel::initialize(const ArchitectureSpec& arch, const TrainingConfig& config,
                                        std::uint64_t seed) {
    SmileGanModel model;
    model.arch = arch;
    model.config = config;
    model.mu = config.mu;
    model.lambda = config.lambda;
    model.clip_c = config.clip_c;
    model.rng_seed = seed;
    model.epoch = 0;
    model.params_f = make_f(arch);
    model.params_d = make_d(arch);
    model.params_g = make_g(arch);
    Rng rng(Rng::derive(seed, 0));
    init_parameters(model.params_f, rng);
    init_parameters(model.params_d, rng);
    init_parameters(model.params_g, rng);
    return model;
}

Vector sample_subtype(std::size_t m, Rng& rng) {
    if (m < 2) throw Error(ErrorCode::ShapeMismatch, "subtype count must be at least 2");
    Vector z(m, 0.0);
    z[rng.uniform_int(m)] = 1.0;
    return z;
}

Matrix sample_subtype_batch(std::size_t n, std::size_t m, Rng& rng) {
    if (m < 2) throw Error(ErrorCode::ShapeMismatch, "subtype count must be at least 2");
    Matrix z(n, m);
    for (std::size_t i = 0; i < n; ++i) z(i, rng.uniform_int(m)) = 1.0;
    return z;
}

MappingResult forward_f(const SmileGanModel& model, const Matrix& x, const Matrix& z) {
    FForward f = forward_f_retained(model, x, z);
    MappingResult r;
    r.delta = f.phase2.output();
    r.y_prime = std::move(f.y_prime);
    return r;
}

Matrix forward_d(const SmileGanModel& model, const Matrix& y) {
    return forward(model.params_d.layers, y).output();
}

Matrix forward_g(const SmileGanModel& model, const Matrix& y) {
    return forward(model.params_g.layers, y).output();
}

Matrix assign(const SmileGanModel& model, const Matrix& pt_rows) {
    return forward_g(model, pt_rows);
}

std::vector<int> dominant_labels(const Matrix& probabilities) {
    std::vector<int> labels(probabilities.rows());
    for (std::size_t i = 0; i < probabilities.rows(); ++i) {
        auto row = probabilities.row(i);
        labels[i] = static_cast<int>(
            std::max_element(row.begin(), row.end()) - row.begin());
    }
    return labels;
}

double change_weight(const TrainingConfig& config, std::size_t feature_dim, std::size_t epoch) {
    if (epoch <= config.mu_warmup_epochs) return 0.0;
    return config.change_loss_per_feature ? config.mu / static_cast<double>(feature_dim)
                                          : config.mu;
}

BatchLosses algorithm_losses(const SmileGanModel& model, const Matrix& x_batch,
                             const Matrix& y_batch, const Matrix& z_batch, double change_weight) {
    const std::size_t n = x_batch.rows();
    const Matrix e_real = one_hot_column(n, 2, 1);
    const Matrix e_fake = one_hot_column(n, 2, 0);

    const Matrix y_prime = forward_f(model, x_batch, z_batch).y_prime;
    BatchLosses out;
    out.loss_d = cross_entropy_batch(e_real, forward_d(model, y_batch)) +
                 cross_entropy_batch(e_fake, forward_d(model, y_prime));
    out.loss_f = cross_entropy_batch(e_real, forward_d(model, y_prime)) +
                 model.lambda * cross_entropy_batch(z_batch, forward_g(model, y_prime)) +
                 change_weight * l1_change_batch(y_prime, x_batch);
    out.loss_g = cross_entropy_batch(z_batch, forward_g(model, y_prime));
    return out;
}

double accumulate_d_gradients(SmileGanModel& model, const Matrix& x_batch, const Matrix& y_batch,
                              const Matrix& z_batch) {
    const std::size_t n = x_batch.rows();
    const Matrix e_real = one_hot_column(n, 2, 1);
    const Matrix e_fake = one_hot_column(n, 2, 0);

    const Matrix y_prime = forward_f(model, x_batch, z_batch).y_prime;
    Workspace d_real = forward(model.params_d.layers, y_batch);
    Workspace d_fake = forward(model.params_d.layers, y_prime);
    const double loss = cross_entropy_batch(e_real, d_real.output()) +
                        cross_entropy_batch(e_fake, d_fake.output());
    backward_from_logits(model.params_d, d_real,
                         softmax_cross_entropy_logit_grad(e_real, d_real.output()), true);
    backward_from_logits(model.params_d, d_fake,
                         softmax_cross_entropy_logit_grad(e_fake, d_fake.output()), true);
    return loss;
}

double accumulate_f_gradients(SmileGanModel& model, const Matrix& x_batch, const Matrix& z_batch,
                              double change_weight) {
    const std::size_t n = x_batch.rows();
    const Matrix e_real = one_hot_column(n, 2, 1);

    FForward f_ws = forward_f_retained(model, x_batch, z_batch);
    Workspace d_adv = forward(model.params_d.layers, f_ws.y_prime);
    Workspace g_adv = forward(model.params_g.layers, f_ws.y_prime);
    const double loss = cross_entropy_batch(e_real, d_adv.output()) +
                        model.lambda * cross_entropy_batch(z_batch, g_adv.output()) +
                        change_weight * l1_change_batch(f_ws.y_prime, x_batch);

    // d(loss)/d(y') via the frozen discriminator and clustering network, plus
    // the change-loss subgradient; then route into f's parameters
    Matrix d_yprime = backward_from_logits(
        model.params_d, d_adv, softmax_cross_entropy_logit_grad(e_real, d_adv.output()), false);
    Matrix g_seed = softmax_cross_entropy_logit_grad(z_batch, g_adv.output());
    for (std::size_t i = 0; i < g_seed.size(); ++i) g_seed.data()[i] *= model.lambda;
    Matrix d_from_g = backward_from_logits(model.params_g, g_adv, g_seed, false);
    Matrix l1_grad = l1_change_batch_grad(f_ws.y_prime, x_batch);
    for (std::size_t i = 0; i < d_yprime.size(); ++i)
        d_yprime.data()[i] += d_from_g.data()[i] + change_weight * l1_grad.data()[i];

    backward_f(model, f_ws, d_yprime);
    return loss;
}

double accumulate_g_gradients(SmileGanModel& model, const Matrix& x_batch, const Matrix& z_batch) {
    const Matrix y_prime = forward_f(model, x_batch, z_batch).y_prime;
    Workspace g_ws = forward(model.params_g.layers, y_prime);
    const double loss = cross_entropy_batch(z_batch, g_ws.output());
    backward_from_logits(model.params_g, g_ws,
                         softmax_cross_entropy_logit_grad(z_batch, g_ws.output()), true);
    return loss;
}

TrainResult train(const Matrix& cn_rows, const Matrix& pt_rows, const TrainingConfig& config,
                  std::uint64_t seed, const EpochCallback& callback,
                  const IterationCallback& iteration_callback) {
    if (cn_rows.rows() == 0 || pt_rows.rows() == 0)
        throw Error(ErrorCode::EmptyDataset, "CN and PT sets must both be non-empty");
    if (cn_rows.cols() != pt_rows.cols())
        throw Error(ErrorCode::ShapeMismatch, "CN and PT feature widths differ");
    if (config.batch_size == 0)
        throw Error(ErrorCode::ShapeMismatch, "batch size must be positive");
    if (config.mu < 0.0 || config.lambda < 0.0 || config.clip_c <= 0.0)
        throw Error(ErrorCode::ShapeMismatch, "require mu >= 0, lambda >= 0, clip_c > 0");

    const ArchitectureSpec arch = ArchitectureSpec::create(cn_rows.cols(), config.m);
    SmileGanModel model = SmileGanModel::initialize(arch, config, seed);

    StopConfig stop = config.stop;
    if (!stop.aq_threshold)
        stop.aq_threshold = static_cast<std::size_t>(0.01 * static_cast<double>(pt_rows.rows()));

    const OptimizerConfig opt_d{config.lr_d, config.beta1, config.beta2, config.epsilon};
    const OptimizerConfig opt_fg{config.lr_fg, config.beta1, config.beta2, config.epsilon};

    Rng rng_train(Rng::derive(seed, 1));
    Rng rng_monitor(Rng::derive(seed, 2));
    IndexStream cn_stream(cn_rows.rows(), rng_train);
    IndexStream pt_stream(pt_rows.rows(), rng_train);

    const std::size_t batch = config.batch_size;
    const std::size_t iterations =
        (std::max(cn_rows.rows(), pt_rows.rows()) + batch - 1) / batch;

    TrainResult result;
    LabelHistory history;
    std::vector<std::size_t> cn_idx, pt_idx;

    // epoch-start snapshots so a non-finite loss can hand back a usable model
    SmileGanModel last_finite = model;

    for (std::size_t epoch = 1; epoch <= config.max_epoch; ++epoch) {
        for (std::size_t it = 0; it < iterations; ++it) {
            cn_stream.fill(cn_idx, batch);
            pt_stream.fill(pt_idx, batch);
            const Matrix xb = gather_rows(cn_rows, cn_idx);
            const Matrix yb = gather_rows(pt_rows, pt_idx);
            const Matrix zb = sample_subtype_batch(batch, arch.m, rng_train);

            const double loss_d = accumulate_d_gradients(model, xb, yb, zb);
            clip_gradients(model.params_d, config.grad_clip_norm);
            adam_step(model.params_d, opt_d);

            const double loss_f =
                accumulate_f_gradients(model, xb, zb, change_weight(config, arch.feature_dim, epoch));
            clip_gradients(model.params_f, config.grad_clip_norm);
            adam_step(model.params_f, opt_fg);

            const double loss_g = accumulate_g_gradients(model, xb, zb);
            clip_gradients(model.params_g, config.grad_clip_norm);
            adam_step(model.params_g, opt_fg);

            clip_weights(model.params_f, model.clip_c);
            clip_weights(model.params_g, model.clip_c);

            if (iteration_callback) iteration_callback(model, epoch, it);

            if (!std::isfinite(loss_d) || !std::isfinite(loss_f) || !std::isfinite(loss_g)) {
                std::ostringstream msg;
                msg << "non-finite loss at epoch " << epoch << " iteration " << it
                    << " (loss_d=" << loss_d << ", loss_f=" << loss_f << ", loss_g=" << loss_g
                    << ")";
                throw NonFiniteLossError(msg.str(), std::move(last_finite),
                                         std::move(result.records));
            }
        }

        model.epoch = epoch;
        std::vector<int> labels;
        MonitorRecord record = epoch_monitor(model, cn_rows, pt_rows, history, config.monitor,
                                             rng_monitor, &labels);
        record.stop = false;
        result.records.push_back(record);
        result.records.back().stop = should_stop(result.records, stop);

        history.push_back(std::move(labels));
        if (history.size() > 4) history.erase(history.begin());

        if (callback) callback(model, result.records.back(), history.back());

        last_finite = model;
        if (result.records.back().stop) break;
    }

    result.model = std::move(model);
    return result;
}

NonFiniteLossError::NonFiniteLossError(const std::string& message, SmileGanModel last_finite,
                                       std::vector<MonitorRecord> records)
    : Error(ErrorCode::NonFiniteLoss, message),
      last_finite_(std::move(last_finite)),
      records_(std::move(records)) {}

namespace {

constexpr int kFormatVersion = 1;

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string to_hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

json layers_to_json(const ParamSet& p) {
    json arr = json::array();
    for (const auto& l : p.layers) {
        json jl;
        json w = json::array();
        for (std::size_t i = 0; i < l.weight.rows(); ++i) {
            json row = json::array();
            for (std::size_t j = 0; j < l.weight.cols(); ++j) row.push_back(l.weight(i, j));
            w.push_back(std::move(row));
        }
        jl["w"] = std::move(w);
        if (l.has_bias()) jl["b"] = l.bias;
        arr.push_back(std::move(jl));
    }
    return arr;
}

void layers_from_json(const json& arr, ParamSet& p) {
    if (!arr.is_array() || arr.size() != p.layers.size())
        throw Error(ErrorCode::FormatVersionMismatch, "layer count does not match architecture");
    for (std::size_t li = 0; li < p.layers.size(); ++li) {
        LinearLayer& l = p.layers[li];
        const json& jl = arr[li];
        const json& w = jl.at("w");
        if (w.size() != l.weight.rows())
            throw Error(ErrorCode::FormatVersionMismatch, "weight shape mismatch");
        for (std::size_t i = 0; i < l.weight.rows(); ++i) {
            const json& row = w[i];
            if (row.size() != l.weight.cols())
                throw Error(ErrorCode::FormatVersionMismatch, "weight shape mismatch");
            for (std::size_t j = 0; j < l.weight.cols(); ++j)
                l.weight(i, j) = row[j].get<double>();
        }
        if (l.has_bias()) {
            const json& b = jl.at("b");
            if (b.size() != l.bias.size())
                throw Error(ErrorCode::FormatVersionMismatch, "bias shape mismatch");
            for (std::size_t i = 0; i < l.bias.size(); ++i) l.bias[i] = b[i].get<double>();
        }
    }
}

json config_to_json(const TrainingConfig& c) {
    return json{{"m", c.m},
                {"batch_size", c.batch_size},
                {"max_epoch", c.max_epoch},
                {"lr_d", c.lr_d},
                {"lr_fg", c.lr_fg},
                {"beta1", c.beta1},
                {"beta2", c.beta2},
                {"epsilon", c.epsilon},
                {"mu", c.mu},
                {"lambda", c.lambda},
                {"clip_c", c.clip_c},
                {"grad_clip_norm", c.grad_clip_norm},
                {"change_loss_per_feature", c.change_loss_per_feature},
                {"mu_warmup_epochs", c.mu_warmup_epochs},
                {"cov_kind", c.monitor.kind == CovarianceKind::full ? "full" : "diagonal"},
                {"min_cluster_size", c.monitor.min_cluster_size},
                {"warmup_epochs", c.stop.warmup_epochs},
                {"wd_patience", c.stop.wd_patience},
                {"wd_min_delta", c.stop.wd_min_delta},
                {"aq_threshold", c.stop.aq_threshold ? json(*c.stop.aq_threshold) : json(nullptr)},
                {"cluster_loss_threshold", c.stop.cluster_loss_threshold}};
}

TrainingConfig config_from_json(const json& j) {
    TrainingConfig c;
    c.m = j.at("m").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.max_epoch = j.at("max_epoch").get<std::size_t>();
    c.lr_d = j.at("lr_d").get<double>();
    c.lr_fg = j.at("lr_fg").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.mu = j.at("mu").get<double>();
    c.lambda = j.at("lambda").get<double>();
    c.clip_c = j.at("clip_c").get<double>();
    c.grad_clip_norm = j.at("grad_clip_norm").get<double>();
    c.change_loss_per_feature = j.at("change_loss_per_feature").get<bool>();
    c.mu_warmup_epochs = j.at("mu_warmup_epochs").get<std::size_t>();
    c.monitor.kind = j.at("cov_kind").get<std::string>() == "full" ? CovarianceKind::full
                                                                   : CovarianceKind::diagonal;
    c.monitor.min_cluster_size = j.at("min_cluster_size").get<std::size_t>();
    c.stop.warmup_epochs = j.at("warmup_epochs").get<std::size_t>();
    c.stop.wd_patience = j.at("wd_patience").get<std::size_t>();
    c.stop.wd_min_delta = j.at("wd_min_delta").get<double>();
    if (!j.at("aq_threshold").is_null())
        c.stop.aq_threshold = j.at("aq_threshold").get<std::size_t>();
    c.stop.cluster_loss_threshold = j.at("cluster_loss_threshold").get<double>();
    return c;
}

}  // namespace

void save_model(const SmileGanModel& model, const std::string& path) {
    json payload;
    payload["arch"] = {{"feature_dim", model.arch.feature_dim},
                       {"m", model.arch.m},
                       {"half_dim", model.arch.half_dim},
                       {"latent_dim", model.arch.latent_dim}};
    payload["mu"] = model.mu;
    payload["lambda"] = model.lambda;
    payload["clip_c"] = model.clip_c;
    payload["seed"] = model.rng_seed;
    payload["epoch"] = model.epoch;
    payload["config"] = config_to_json(model.config);
    payload["params"] = {{"f", layers_to_json(model.params_f)},
                         {"d", layers_to_json(model.params_d)},
                         {"g", layers_to_json(model.params_g)}};

    json doc;
    doc["format_version"] = kFormatVersion;
    doc["checksum"] = to_hex(fnv1a64(payload.dump()));
    doc["payload"] = std::move(payload);

    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << doc.dump(1) << '\n';
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

SmileGanModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::FormatVersionMismatch,
                    "unreadable checkpoint " + path + ": " + e.what());
    }

    try {
        if (!doc.contains("format_version") ||
            doc.at("format_version").get<int>() != kFormatVersion)
            throw Error(ErrorCode::FormatVersionMismatch, "unsupported checkpoint version");
        const json& payload = doc.at("payload");
        if (to_hex(fnv1a64(payload.dump())) != doc.at("checksum").get<std::string>())
            throw Error(ErrorCode::ChecksumMismatch, "checkpoint checksum does not match");

        ArchitectureSpec arch = ArchitectureSpec::create(
            payload.at("arch").at("feature_dim").get<std::size_t>(),
            payload.at("arch").at("m").get<std::size_t>());
        TrainingConfig config = config_from_json(payload.at("config"));
        SmileGanModel model;
        model.arch = arch;
        model.config = config;
        model.params_f = make_f(arch);
        model.params_d = make_d(arch);
        model.params_g = make_g(arch);
        model.mu = payload.at("mu").get<double>();
        model.lambda = payload.at("lambda").get<double>();
        model.clip_c = payload.at("clip_c").get<double>();
        model.rng_seed = payload.at("seed").get<std::uint64_t>();
        model.epoch = payload.at("epoch").get<std::size_t>();
        layers_from_json(payload.at("params").at("f"), model.params_f);
        layers_from_json(payload.at("params").at("d"), model.params_d);
        layers_from_json(payload.at("params").at("g"), model.params_g);
        return model;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::FormatVersionMismatch,
                    std::string("malformed checkpoint: ") + e.what());
    }
}

}  // namespace smilegan
