#pragma once

#include <cstdint>
#include <vector>

#include "smilegan/matrix.hpp"
#include "smilegan/rng.hpp"

namespace smilegan {

enum class Activation { none, leaky_relu, sigmoid, softmax };

// One affine layer with an optional bias and a fixed activation.
// weight is out x in; bias, when present, has length out.
struct LinearLayer {
    Matrix weight;
    Vector bias;  // empty means no bias term
    Activation activation = Activation::none;
    double leaky_alpha = 0.2;

    std::size_t in_dim() const { return weight.cols(); }
    std::size_t out_dim() const { return weight.rows(); }
    bool has_bias() const { return !bias.empty(); }
};

struct LayerTensors {
    Matrix weight;
    Vector bias;
};

// Parameters of one network together with its gradient and ADAM buffers.
// Gradients accumulate across backward calls until adam_step or clear_gradients.
struct ParamSet {
    std::vector<LinearLayer> layers;
    std::vector<LayerTensors> grad;
    std::vector<LayerTensors> adam_m;
    std::vector<LayerTensors> adam_v;
    std::int64_t step = 0;

    static ParamSet create(std::vector<LinearLayer> layers);

    void clear_gradients();
    std::size_t parameter_count() const;
    bool shapes_match(const ParamSet& other) const;
};

struct OptimizerConfig {
    double learning_rate = 0.002;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Retained forward pass through a layer stack. acts[0] is the input batch,
// acts[i+1] the output of layer i; preacts[i] holds the affine result before
// the activation.
struct Workspace {
    std::vector<Matrix> acts;
    std::vector<Matrix> preacts;
    bool retained = false;

    const Matrix& output() const { return acts.back(); }
};

// Forward through the stack on a batch (rows are samples). All intermediate
// values are retained for a later backward pass. The span form runs a
// sub-range of a network's layers (the mapping function is three such
// sub-stacks joined by an elementwise product and a residual add).
Workspace forward(std::span<const LinearLayer> layers, const Matrix& input);
Workspace forward(const std::vector<LinearLayer>& layers, const Matrix& input);

// Backpropagate d(loss)/d(output) through the retained pass of
// params.layers[first_layer, first_layer + layer_count). Returns
// d(loss)/d(input); parameter gradients are accumulated into `params.grad`
// only when accumulate_param_grads is set (the discriminator and clustering
// networks act as frozen critics inside the mapping update).
Matrix backward(ParamSet& params, std::size_t first_layer, std::size_t layer_count,
                const Workspace& ws, const Matrix& d_output, bool accumulate_param_grads);
Matrix backward(ParamSet& params, const Workspace& ws, const Matrix& d_output,
                bool accumulate_param_grads);

// Backward pass seeded at the final layer's pre-activation. Pairs with
// softmax_cross_entropy_logit_grad: the fused form stays exact when the
// softmax underflows, where the factored chain would round the gradient to
// zero and freeze the network.
Matrix backward_from_logits(ParamSet& params, const Workspace& ws, const Matrix& d_logits,
                            bool accumulate_param_grads);

// (probabilities - targets) / batch: the gradient of the batch-mean cross
// entropy with respect to the softmax pre-activations.
Matrix softmax_cross_entropy_logit_grad(const Matrix& targets, const Matrix& probabilities);

// -sum_i target_i * log(predicted_i), with predicted clamped to [1e-12, 1].
double cross_entropy(std::span<const double> target, std::span<const double> predicted);

// Row-wise cross entropy averaged over the batch.
double cross_entropy_batch(const Matrix& targets, const Matrix& predicted);

// Gradient of cross_entropy_batch with respect to `predicted`.
Matrix cross_entropy_batch_grad(const Matrix& targets, const Matrix& predicted);

// sum_i |y_prime_i - x_i|
double l1_change(std::span<const double> y_prime, std::span<const double> x);

// Mean over rows of the per-row L1 change.
double l1_change_batch(const Matrix& y_prime, const Matrix& x);

// Gradient of l1_change_batch with respect to y_prime; the subgradient at
// exactly zero is taken as zero.
Matrix l1_change_batch_grad(const Matrix& y_prime, const Matrix& x);

// ADAM update with bias correction; increments the step counter and clears
// the gradient buffers.
void adam_step(ParamSet& params, const OptimizerConfig& config);

// Scale all gradients in the set so their global L2 norm is at most max_norm.
void clip_gradients(ParamSet& params, double max_norm);

// Clamp every weight and bias entry into [-c, c].
void clip_weights(ParamSet& params, double c);

double gradient_norm(const ParamSet& params);
double max_abs_parameter(const ParamSet& params);

// uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases
void init_parameters(ParamSet& params, Rng& rng);

}  // namespace smilegan
