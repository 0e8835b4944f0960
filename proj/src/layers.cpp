#include "smilegan/layers.hpp"

#include <algorithm>
#include <cmath>

namespace smilegan {

namespace {

constexpr double kLogClamp = 1e-12;

LayerTensors zeros_like(const LinearLayer& layer) {
    LayerTensors t;
    t.weight = Matrix(layer.weight.rows(), layer.weight.cols());
    t.bias.assign(layer.bias.size(), 0.0);
    return t;
}

}  // namespace

ParamSet ParamSet::create(std::vector<LinearLayer> layers) {
    ParamSet p;
    p.layers = std::move(layers);
    for (const auto& l : p.layers) {
        p.grad.push_back(zeros_like(l));
        p.adam_m.push_back(zeros_like(l));
        p.adam_v.push_back(zeros_like(l));
    }
    return p;
}

void ParamSet::clear_gradients() {
    for (auto& g : grad) {
        std::fill(g.weight.data(), g.weight.data() + g.weight.size(), 0.0);
        std::fill(g.bias.begin(), g.bias.end(), 0.0);
    }
}

std::size_t ParamSet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
}

bool ParamSet::shapes_match(const ParamSet& other) const {
    if (layers.size() != other.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (!layers[i].weight.same_shape(other.layers[i].weight)) return false;
        if (layers[i].bias.size() != other.layers[i].bias.size()) return false;
    }
    return true;
}

Workspace forward(const std::vector<LinearLayer>& layers, const Matrix& input) {
    return forward(std::span<const LinearLayer>(layers), input);
}

Workspace forward(std::span<const LinearLayer> layers, const Matrix& input) {
    Workspace ws;
    ws.acts.reserve(layers.size() + 1);
    ws.preacts.reserve(layers.size());
    ws.acts.push_back(input);

    for (const auto& layer : layers) {
        const Matrix& x = ws.acts.back();
        if (x.cols() != layer.in_dim())
            throw Error(ErrorCode::ShapeMismatch, "input width does not match layer fan-in");

        Matrix pre = matmul_bt(x, layer.weight);
        if (layer.has_bias()) {
            for (std::size_t i = 0; i < pre.rows(); ++i) {
                double* row = pre.data() + i * pre.cols();
                for (std::size_t j = 0; j < pre.cols(); ++j) row[j] += layer.bias[j];
            }
        }

        Matrix out = pre;
        switch (layer.activation) {
            case Activation::none:
                break;
            case Activation::leaky_relu: {
                const double alpha = layer.leaky_alpha;
                for (std::size_t i = 0; i < out.size(); ++i) {
                    double& v = out.data()[i];
                    if (v < 0.0) v *= alpha;
                }
                break;
            }
            case Activation::sigmoid:
                for (std::size_t i = 0; i < out.size(); ++i) {
                    double& v = out.data()[i];
                    v = 1.0 / (1.0 + std::exp(-v));
                }
                break;
            case Activation::softmax:
                for (std::size_t i = 0; i < out.rows(); ++i) {
                    double* row = out.data() + i * out.cols();
                    double mx = row[0];
                    for (std::size_t j = 1; j < out.cols(); ++j) mx = std::max(mx, row[j]);
                    double sum = 0.0;
                    for (std::size_t j = 0; j < out.cols(); ++j) {
                        row[j] = std::exp(row[j] - mx);
                        sum += row[j];
                    }
                    for (std::size_t j = 0; j < out.cols(); ++j) row[j] /= sum;
                }
                break;
        }

        ws.preacts.push_back(std::move(pre));
        ws.acts.push_back(std::move(out));
    }
    ws.retained = true;
    return ws;
}

Matrix backward(ParamSet& params, const Workspace& ws, const Matrix& d_output,
                bool accumulate_param_grads) {
    return backward(params, 0, params.layers.size(), ws, d_output, accumulate_param_grads);
}

namespace {

Matrix backward_impl(ParamSet& params, std::size_t first_layer, std::size_t layer_count,
                     const Workspace& ws, const Matrix& d_output, bool accumulate_param_grads,
                     bool seed_is_preactivation) {
    if (!ws.retained || ws.acts.size() != layer_count + 1)
        throw Error(ErrorCode::GraphNotRetained, "no retained forward pass for this backward call");
    if (!d_output.same_shape(ws.acts.back()))
        throw Error(ErrorCode::ShapeMismatch, "output gradient shape mismatch");

    Matrix delta = d_output;
    for (std::size_t li = layer_count; li-- > 0;) {
        const LinearLayer& layer = params.layers[first_layer + li];
        const Matrix& x = ws.acts[li];
        const Matrix& pre = ws.preacts[li];
        const Matrix& out = ws.acts[li + 1];

        // activation backward: delta ends up holding d(loss)/d(preact);
        // skipped when the seed already lives at the final pre-activation
        const bool skip_activation = seed_is_preactivation && li == layer_count - 1;
        switch (skip_activation ? Activation::none : layer.activation) {
            case Activation::none:
                break;
            case Activation::leaky_relu: {
                const double alpha = layer.leaky_alpha;
                for (std::size_t i = 0; i < delta.size(); ++i)
                    if (pre.data()[i] < 0.0) delta.data()[i] *= alpha;
                break;
            }
            case Activation::sigmoid:
                for (std::size_t i = 0; i < delta.size(); ++i) {
                    const double s = out.data()[i];
                    delta.data()[i] *= s * (1.0 - s);
                }
                break;
            case Activation::softmax:
                for (std::size_t i = 0; i < delta.rows(); ++i) {
                    double* dr = delta.data() + i * delta.cols();
                    const double* p = out.data() + i * out.cols();
                    double dot = 0.0;
                    for (std::size_t j = 0; j < delta.cols(); ++j) dot += dr[j] * p[j];
                    for (std::size_t j = 0; j < delta.cols(); ++j) dr[j] = p[j] * (dr[j] - dot);
                }
                break;
        }

        if (accumulate_param_grads) {
            LayerTensors& g = params.grad[first_layer + li];
            // dW += delta^T x, accumulated row by row
            for (std::size_t b = 0; b < delta.rows(); ++b) {
                const double* db = delta.data() + b * delta.cols();
                const double* xb = x.data() + b * x.cols();
                for (std::size_t o = 0; o < layer.out_dim(); ++o) {
                    const double d = db[o];
                    if (d == 0.0) continue;
                    double* gw = g.weight.data() + o * layer.in_dim();
                    for (std::size_t k = 0; k < layer.in_dim(); ++k) gw[k] += d * xb[k];
                }
            }
            if (layer.has_bias()) {
                for (std::size_t b = 0; b < delta.rows(); ++b) {
                    const double* db = delta.data() + b * delta.cols();
                    for (std::size_t o = 0; o < layer.out_dim(); ++o) g.bias[o] += db[o];
                }
            }
        }

        // d(loss)/d(input) = delta W
        Matrix dx(delta.rows(), layer.in_dim());
        for (std::size_t b = 0; b < delta.rows(); ++b) {
            const double* db = delta.data() + b * delta.cols();
            double* dxb = dx.data() + b * dx.cols();
            for (std::size_t o = 0; o < layer.out_dim(); ++o) {
                const double d = db[o];
                if (d == 0.0) continue;
                const double* w = layer.weight.data() + o * layer.in_dim();
                for (std::size_t k = 0; k < layer.in_dim(); ++k) dxb[k] += d * w[k];
            }
        }
        delta = std::move(dx);
    }
    return delta;
}

}  // namespace

Matrix backward(ParamSet& params, std::size_t first_layer, std::size_t layer_count,
                const Workspace& ws, const Matrix& d_output, bool accumulate_param_grads) {
    return backward_impl(params, first_layer, layer_count, ws, d_output, accumulate_param_grads,
                         false);
}

Matrix backward_from_logits(ParamSet& params, const Workspace& ws, const Matrix& d_logits,
                            bool accumulate_param_grads) {
    return backward_impl(params, 0, params.layers.size(), ws, d_logits, accumulate_param_grads,
                         true);
}

Matrix softmax_cross_entropy_logit_grad(const Matrix& targets, const Matrix& probabilities) {
    if (!targets.same_shape(probabilities))
        throw Error(ErrorCode::ShapeMismatch, "logit gradient shapes differ");
    const double inv_m = 1.0 / static_cast<double>(targets.rows());
    Matrix g(targets.rows(), targets.cols());
    for (std::size_t i = 0; i < g.size(); ++i)
        g.data()[i] = (probabilities.data()[i] - targets.data()[i]) * inv_m;
    return g;
}

double cross_entropy(std::span<const double> target, std::span<const double> predicted) {
    if (target.size() != predicted.size())
        throw Error(ErrorCode::ShapeMismatch, "cross_entropy vector lengths differ");
    double loss = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double p = std::min(std::max(predicted[i], kLogClamp), 1.0);
        loss -= target[i] * std::log(p);
    }
    return loss;
}

double cross_entropy_batch(const Matrix& targets, const Matrix& predicted) {
    if (!targets.same_shape(predicted))
        throw Error(ErrorCode::ShapeMismatch, "cross_entropy batch shapes differ");
    double total = 0.0;
    for (std::size_t i = 0; i < targets.rows(); ++i)
        total += cross_entropy(targets.row(i), predicted.row(i));
    return total / static_cast<double>(targets.rows());
}

Matrix cross_entropy_batch_grad(const Matrix& targets, const Matrix& predicted) {
    if (!targets.same_shape(predicted))
        throw Error(ErrorCode::ShapeMismatch, "cross_entropy batch shapes differ");
    const double inv_m = 1.0 / static_cast<double>(targets.rows());
    Matrix g(predicted.rows(), predicted.cols());
    for (std::size_t i = 0; i < g.size(); ++i) {
        // -t / max(p, clamp): the clamp bounds the magnitude but keeps the
        // gradient alive under saturation, as the adversarial term requires
        const double p = std::max(predicted.data()[i], kLogClamp);
        g.data()[i] = -targets.data()[i] / p * inv_m;
    }
    return g;
}

double l1_change(std::span<const double> y_prime, std::span<const double> x) {
    if (y_prime.size() != x.size())
        throw Error(ErrorCode::ShapeMismatch, "l1_change vector lengths differ");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(y_prime[i] - x[i]);
    return s;
}

double l1_change_batch(const Matrix& y_prime, const Matrix& x) {
    if (!y_prime.same_shape(x))
        throw Error(ErrorCode::ShapeMismatch, "l1_change batch shapes differ");
    double total = 0.0;
    for (std::size_t i = 0; i < y_prime.rows(); ++i)
        total += l1_change(y_prime.row(i), x.row(i));
    return total / static_cast<double>(y_prime.rows());
}

Matrix l1_change_batch_grad(const Matrix& y_prime, const Matrix& x) {
    if (!y_prime.same_shape(x))
        throw Error(ErrorCode::ShapeMismatch, "l1_change batch shapes differ");
    const double inv_m = 1.0 / static_cast<double>(y_prime.rows());
    Matrix g(y_prime.rows(), y_prime.cols());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double d = y_prime.data()[i] - x.data()[i];
        g.data()[i] = d > 0.0 ? inv_m : (d < 0.0 ? -inv_m : 0.0);
    }
    return g;
}

void adam_step(ParamSet& params, const OptimizerConfig& config) {
    params.step += 1;
    const double t = static_cast<double>(params.step);
    const double bc1 = 1.0 - std::pow(config.beta1, t);
    const double bc2 = 1.0 - std::pow(config.beta2, t);

    auto update = [&](double& p, double& m, double& v, double g) {
        m = config.beta1 * m + (1.0 - config.beta1) * g;
        v = config.beta2 * v + (1.0 - config.beta2) * g * g;
        const double mhat = m / bc1;
        const double vhat = v / bc2;
        p -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
    };

    for (std::size_t li = 0; li < params.layers.size(); ++li) {
        LinearLayer& l = params.layers[li];
        LayerTensors& g = params.grad[li];
        LayerTensors& m = params.adam_m[li];
        LayerTensors& v = params.adam_v[li];
        for (std::size_t i = 0; i < l.weight.size(); ++i)
            update(l.weight.data()[i], m.weight.data()[i], v.weight.data()[i], g.weight.data()[i]);
        for (std::size_t i = 0; i < l.bias.size(); ++i)
            update(l.bias[i], m.bias[i], v.bias[i], g.bias[i]);
    }
    params.clear_gradients();
}

double gradient_norm(const ParamSet& params) {
    double s = 0.0;
    for (const auto& g : params.grad) {
        for (std::size_t i = 0; i < g.weight.size(); ++i)
            s += g.weight.data()[i] * g.weight.data()[i];
        for (double b : g.bias) s += b * b;
    }
    return std::sqrt(s);
}

void clip_gradients(ParamSet& params, double max_norm) {
    const double norm = gradient_norm(params);
    if (norm <= max_norm || norm == 0.0) return;
    const double scale = max_norm / norm;
    for (auto& g : params.grad) {
        for (std::size_t i = 0; i < g.weight.size(); ++i) g.weight.data()[i] *= scale;
        for (double& b : g.bias) b *= scale;
    }
}

void clip_weights(ParamSet& params, double c) {
    for (auto& l : params.layers) {
        for (std::size_t i = 0; i < l.weight.size(); ++i)
            l.weight.data()[i] = std::clamp(l.weight.data()[i], -c, c);
        for (double& b : l.bias) b = std::clamp(b, -c, c);
    }
}

double max_abs_parameter(const ParamSet& params) {
    double m = 0.0;
    for (const auto& l : params.layers) {
        m = std::max(m, max_abs(l.weight));
        for (double b : l.bias) m = std::max(m, std::abs(b));
    }
    return m;
}

void init_parameters(ParamSet& params, Rng& rng) {
    for (auto& l : params.layers) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(l.in_dim()));
        for (std::size_t i = 0; i < l.weight.size(); ++i)
            l.weight.data()[i] = rng.uniform(-bound, bound);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
}

}  // namespace smilegan
