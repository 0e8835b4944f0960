#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "smilegan/layers.hpp"
#include "smilegan/matrix.hpp"
#include "smilegan/monitor.hpp"
#include "smilegan/rng.hpp"

namespace smilegan {

// Layer widths of the three networks. For feature_dim 145 these reproduce
// the reference shapes: f-encoder 145-72-36, z-decoder M-36,
// f-phase2 36-72-145-145, D 145-72-36-2, g 145-145-72-36-M.
struct ArchitectureSpec {
    std::size_t feature_dim = 145;
    std::size_t m = 4;
    std::size_t half_dim = 72;    // feature_dim / 2
    std::size_t latent_dim = 36;  // feature_dim / 4

    static ArchitectureSpec create(std::size_t feature_dim, std::size_t m);

    friend bool operator==(const ArchitectureSpec&, const ArchitectureSpec&) = default;
};

struct TrainingConfig {
    std::size_t m = 4;
    std::size_t batch_size = 64;
    std::size_t max_epoch = 3000;
    double lr_d = 0.0004;
    double lr_fg = 0.002;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double mu = 5.0;
    double lambda = 9.0;
    double clip_c = 0.5;
    double grad_clip_norm = 1.0;
    // The change term enters the mapping objective as
    //   weight = mu / feature_dim   (or mu when change_loss_per_feature is off)
    // and stays at zero for the first mu_warmup_epochs. Without the warm-up
    // the L1 pressure pins the change at zero before the clustering network
    // can latch onto the subtype channel, and training settles into a
    // z-ignoring equilibrium.
    bool change_loss_per_feature = true;
    std::size_t mu_warmup_epochs = 200;
    MonitorConfig monitor;
    StopConfig stop;
};

// Effective weight of the change term at a given epoch (1-based).
double change_weight(const TrainingConfig& config, std::size_t feature_dim, std::size_t epoch);

// The mapping function f, discriminator D and clustering function g with the
// hyperparameters that shaped them. Inside params_f the layers are ordered
// encoder (2), z-decoder (1), phase2 (3).
struct SmileGanModel {
    ArchitectureSpec arch;
    ParamSet params_f;
    ParamSet params_d;
    ParamSet params_g;
    double mu = 5.0;
    double lambda = 9.0;
    double clip_c = 0.5;
    std::uint64_t rng_seed = 0;
    std::size_t epoch = 0;
    TrainingConfig config;

    static SmileGanModel initialize(const ArchitectureSpec& arch, const TrainingConfig& config,
                                    std::uint64_t seed);
};

// f's layer offsets inside params_f
inline constexpr std::size_t kFEncoderOffset = 0;
inline constexpr std::size_t kFEncoderLayers = 2;
inline constexpr std::size_t kFZDecoderOffset = 2;
inline constexpr std::size_t kFZDecoderLayers = 1;
inline constexpr std::size_t kFPhase2Offset = 3;
inline constexpr std::size_t kFPhase2Layers = 3;

// One-hot subtype vector with the hot position uniform over [0, m).
Vector sample_subtype(std::size_t m, Rng& rng);
Matrix sample_subtype_batch(std::size_t n, std::size_t m, Rng& rng);

struct MappingResult {
    Matrix y_prime;  // x + delta
    Matrix delta;
};

// y' = x + phase2(encode(x) ⊙ sigmoid_decode(z))
MappingResult forward_f(const SmileGanModel& model, const Matrix& x, const Matrix& z);

// Softmax outputs of D (2 columns: synthesized, real) and g (m columns).
Matrix forward_d(const SmileGanModel& model, const Matrix& y);
Matrix forward_g(const SmileGanModel& model, const Matrix& y);

// Pattern probabilities of each row under this model (= forward_g).
Matrix assign(const SmileGanModel& model, const Matrix& pt_rows);

// argmax per row, lowest index on ties
std::vector<int> dominant_labels(const Matrix& probabilities);

// The three per-batch scalar losses of one training iteration, evaluated on
// a frozen model: the discriminator objective, the mapping objective with
// its change and cluster terms, and the clustering objective.
// `change_weight` is the effective weight of the change term (see above).
struct BatchLosses {
    double loss_d = 0.0;
    double loss_f = 0.0;
    double loss_g = 0.0;
};
BatchLosses algorithm_losses(const SmileGanModel& model, const Matrix& x_batch,
                             const Matrix& y_batch, const Matrix& z_batch, double change_weight);

// The three update steps of one training iteration, split so each can be
// checked against finite differences. Each accumulates gradients into its
// network's buffers and returns the batch loss; no optimizer step is taken.
double accumulate_d_gradients(SmileGanModel& model, const Matrix& x_batch, const Matrix& y_batch,
                              const Matrix& z_batch);
double accumulate_f_gradients(SmileGanModel& model, const Matrix& x_batch, const Matrix& z_batch,
                              double change_weight);
double accumulate_g_gradients(SmileGanModel& model, const Matrix& x_batch, const Matrix& z_batch);

struct TrainResult {
    SmileGanModel model;
    std::vector<MonitorRecord> records;
};

// Called after each epoch's monitoring pass.
using EpochCallback =
    std::function<void(const SmileGanModel&, const MonitorRecord&, const std::vector<int>& pt_labels)>;

// Called at the end of every training iteration; instrumentation hook.
using IterationCallback =
    std::function<void(const SmileGanModel&, std::size_t epoch, std::size_t iteration)>;

// Adversarial training: per batch the discriminator, mapping and clustering
// networks are updated in turn (each with gradient clipping and its own ADAM
// state), then f's and g's parameters are clamped into [-clip_c, clip_c].
// Monitoring runs once per epoch and decides the stop. Deterministic for a
// fixed seed, config and data order.
TrainResult train(const Matrix& cn_rows, const Matrix& pt_rows, const TrainingConfig& config,
                  std::uint64_t seed, const EpochCallback& callback = {},
                  const IterationCallback& iteration_callback = {});

// Raised when a training loss turns non-finite; carries the last model state
// that was observed finite along with the records collected so far.
class NonFiniteLossError : public Error {
public:
    NonFiniteLossError(const std::string& message, SmileGanModel last_finite,
                       std::vector<MonitorRecord> records);

    const SmileGanModel& last_finite_model() const { return last_finite_; }
    const std::vector<MonitorRecord>& records() const { return records_; }

private:
    SmileGanModel last_finite_;
    std::vector<MonitorRecord> records_;
};

// Versioned JSON checkpoint with an integrity checksum; round-trips are
// byte-identical.
void save_model(const SmileGanModel& model, const std::string& path);
SmileGanModel load_model(const std::string& path);

}  // namespace smilegan
