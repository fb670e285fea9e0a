#include "tfcsr/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tfcsr {

namespace {

constexpr double kMaskSentinel = -1e30;

std::string weight_key(std::size_t layer) { return "l" + std::to_string(layer) + ".w"; }
std::string bias_key(std::size_t layer) { return "l" + std::to_string(layer) + ".b"; }

}  // namespace

std::vector<std::size_t> validate_spec(const NetworkSpec& spec) {
    if (spec.output_units < 1) throw std::invalid_argument("spec: output_units must be >= 1");
    if (spec.input_shape.empty()) throw std::invalid_argument("spec: empty input shape");
    std::vector<std::size_t> shape = spec.input_shape;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        switch (l.kind) {
            case LayerSpec::Kind::dense:
                if (shape.size() != 1 || shape[0] != static_cast<std::size_t>(l.in))
                    throw std::invalid_argument("spec: dense layer " + std::to_string(i) +
                                                " input mismatch");
                if (l.out < 1) throw std::invalid_argument("spec: dense output must be >= 1");
                shape = {static_cast<std::size_t>(l.out)};
                break;
            case LayerSpec::Kind::conv2d:
                if (shape.size() != 3 || shape[0] != static_cast<std::size_t>(l.in_ch))
                    throw std::invalid_argument("spec: conv layer " + std::to_string(i) +
                                                " input mismatch");
                if (shape[1] < 3 || shape[2] < 3)
                    throw std::invalid_argument("spec: conv input smaller than 3x3 kernel");
                if (l.out_ch < 1) throw std::invalid_argument("spec: conv out_ch must be >= 1");
                shape = {static_cast<std::size_t>(l.out_ch), shape[1] - 2, shape[2] - 2};
                break;
            case LayerSpec::Kind::maxpool2x2:
                if (shape.size() != 3 || shape[1] < 2 || shape[2] < 2)
                    throw std::invalid_argument("spec: pool layer " + std::to_string(i) +
                                                " needs a [c,h,w] input with h,w >= 2");
                shape = {shape[0], shape[1] / 2, shape[2] / 2};
                break;
            case LayerSpec::Kind::relu:
                break;
            case LayerSpec::Kind::flatten:
                shape = {shape_numel(shape)};
                break;
        }
    }
    if (shape.size() != 1 || shape[0] != static_cast<std::size_t>(spec.output_units))
        throw std::invalid_argument("spec: final layer does not produce output_units logits");
    return shape;
}

NetworkModel init_network(const NetworkSpec& spec, std::uint64_t seed) {
    validate_spec(spec);
    NetworkModel model;
    model.spec = spec;
    Rng rng(seed);
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        if (l.kind == LayerSpec::Kind::dense) {
            const double limit = std::sqrt(6.0 / static_cast<double>(l.in));
            Tensor w = Tensor::zeros({static_cast<std::size_t>(l.out),
                                      static_cast<std::size_t>(l.in)});
            for (auto& v : w.data) v = rng.uniform_range(-limit, limit);
            model.params[weight_key(i)] = std::move(w);
            model.params[bias_key(i)] = Tensor::zeros({static_cast<std::size_t>(l.out)});
        } else if (l.kind == LayerSpec::Kind::conv2d) {
            const double fan_in = static_cast<double>(l.in_ch) * 9.0;
            const double limit = std::sqrt(6.0 / fan_in);
            Tensor w = Tensor::zeros({static_cast<std::size_t>(l.out_ch),
                                      static_cast<std::size_t>(l.in_ch), 3, 3});
            for (auto& v : w.data) v = rng.uniform_range(-limit, limit);
            model.params[weight_key(i)] = std::move(w);
            model.params[bias_key(i)] = Tensor::zeros({static_cast<std::size_t>(l.out_ch)});
        }
    }
    for (const auto& [key, value] : model.params) {
        model.grads[key] = Tensor::zeros(value.shape);
        model.opt.m[key] = Tensor::zeros(value.shape);
        model.opt.v[key] = Tensor::zeros(value.shape);
    }
    model.opt.step = 0;
    return model;
}

namespace {

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    const std::size_t n = x.dim(0), in = x.dim(1), out = b.dim(0);
    Tensor y = Tensor::zeros({n, out});
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.data.data() + i * in;
        double* yi = y.data.data() + i * out;
        for (std::size_t o = 0; o < out; ++o) {
            const double* wo = w.data.data() + o * in;
            double acc = b[o];
            for (std::size_t k = 0; k < in; ++k) acc += xi[k] * wo[k];
            yi[o] = acc;
        }
    }
    return y;
}

Tensor conv_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    const std::size_t n = x.dim(0), ic = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const std::size_t oc = w.dim(0), ho = h - 2, wo = wd - 2;
    Tensor y = Tensor::zeros({n, oc, ho, wo});
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t o = 0; o < oc; ++o) {
            double* yp = y.data.data() + ((s * oc + o) * ho) * wo;
            for (std::size_t i = 0; i < ho; ++i)
                for (std::size_t j = 0; j < wo; ++j) yp[i * wo + j] = b[o];
            for (std::size_t c = 0; c < ic; ++c) {
                const double* xp = x.data.data() + ((s * ic + c) * h) * wd;
                const double* wp = w.data.data() + ((o * ic + c) * 3) * 3;
                for (std::size_t i = 0; i < ho; ++i) {
                    for (std::size_t j = 0; j < wo; ++j) {
                        double acc = 0.0;
                        for (std::size_t u = 0; u < 3; ++u) {
                            const double* xr = xp + (i + u) * wd + j;
                            const double* wr = wp + u * 3;
                            acc += xr[0] * wr[0] + xr[1] * wr[1] + xr[2] * wr[2];
                        }
                        yp[i * wo + j] += acc;
                    }
                }
            }
        }
    }
    return y;
}

Tensor pool_forward(const Tensor& x) {
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t ho = h / 2, wo = w / 2;
    Tensor y = Tensor::zeros({n, c, ho, wo});
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double* xp = x.data.data() + ((s * c + ch) * h) * w;
            double* yp = y.data.data() + ((s * c + ch) * ho) * wo;
            for (std::size_t i = 0; i < ho; ++i) {
                for (std::size_t j = 0; j < wo; ++j) {
                    double best = xp[(2 * i) * w + 2 * j];
                    best = std::max(best, xp[(2 * i) * w + 2 * j + 1]);
                    best = std::max(best, xp[(2 * i + 1) * w + 2 * j]);
                    best = std::max(best, xp[(2 * i + 1) * w + 2 * j + 1]);
                    yp[i * wo + j] = best;
                }
            }
        }
    }
    return y;
}

// Forward through every layer, keeping all activations for backprop.
// acts[0] is the input, acts[i+1] the output of layer i.
std::vector<Tensor> forward_all(const NetworkModel& model, const Tensor& inputs) {
    const NetworkSpec& spec = model.spec;
    if (inputs.rank() != spec.input_shape.size() + 1 ||
        !std::equal(spec.input_shape.begin(), spec.input_shape.end(), inputs.shape.begin() + 1))
        throw std::invalid_argument("forward: input shape does not match network spec");
    const std::size_t n = inputs.dim(0);
    std::vector<Tensor> acts;
    acts.reserve(spec.layers.size() + 1);
    acts.push_back(inputs);
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        const Tensor& x = acts.back();
        switch (l.kind) {
            case LayerSpec::Kind::dense:
                acts.push_back(dense_forward(x, model.params.at(weight_key(i)),
                                             model.params.at(bias_key(i))));
                break;
            case LayerSpec::Kind::conv2d:
                acts.push_back(conv_forward(x, model.params.at(weight_key(i)),
                                            model.params.at(bias_key(i))));
                break;
            case LayerSpec::Kind::maxpool2x2:
                acts.push_back(pool_forward(x));
                break;
            case LayerSpec::Kind::relu: {
                Tensor y = x;
                for (auto& v : y.data) v = v > 0.0 ? v : 0.0;
                acts.push_back(std::move(y));
                break;
            }
            case LayerSpec::Kind::flatten: {
                Tensor y = x;
                y.shape = {n, shape_numel(x.shape) / n};
                acts.push_back(std::move(y));
                break;
            }
        }
    }
    return acts;
}

void dense_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor& dx, Tensor& dw,
                    Tensor& db) {
    const std::size_t n = x.dim(0), in = x.dim(1), out = dy.dim(1);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.data.data() + i * in;
        const double* dyi = dy.data.data() + i * out;
        double* dxi = dx.data.data() + i * in;
        for (std::size_t o = 0; o < out; ++o) {
            const double g = dyi[o];
            db[o] += g;
            const double* wo = w.data.data() + o * in;
            double* dwo = dw.data.data() + o * in;
            for (std::size_t k = 0; k < in; ++k) {
                dxi[k] += g * wo[k];
                dwo[k] += g * xi[k];
            }
        }
    }
}

void conv_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor& dx, Tensor& dw,
                   Tensor& db) {
    const std::size_t n = x.dim(0), ic = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const std::size_t oc = dy.dim(1), ho = dy.dim(2), wo = dy.dim(3);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t o = 0; o < oc; ++o) {
            const double* dyp = dy.data.data() + ((s * oc + o) * ho) * wo;
            for (std::size_t i = 0; i < ho; ++i)
                for (std::size_t j = 0; j < wo; ++j) db[o] += dyp[i * wo + j];
            for (std::size_t c = 0; c < ic; ++c) {
                const double* xp = x.data.data() + ((s * ic + c) * h) * wd;
                double* dxp = dx.data.data() + ((s * ic + c) * h) * wd;
                const double* wp = w.data.data() + ((o * ic + c) * 3) * 3;
                double* dwp = dw.data.data() + ((o * ic + c) * 3) * 3;
                for (std::size_t i = 0; i < ho; ++i) {
                    for (std::size_t j = 0; j < wo; ++j) {
                        const double g = dyp[i * wo + j];
                        if (g == 0.0) continue;
                        for (std::size_t u = 0; u < 3; ++u) {
                            for (std::size_t v = 0; v < 3; ++v) {
                                dxp[(i + u) * wd + (j + v)] += g * wp[u * 3 + v];
                                dwp[u * 3 + v] += g * xp[(i + u) * wd + (j + v)];
                            }
                        }
                    }
                }
            }
        }
    }
}

// Gradient is routed to the first maximum in scan order (deterministic
// tie-break); cells dropped by the floor division receive none.
void pool_backward(const Tensor& x, const Tensor& dy, Tensor& dx) {
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t ho = dy.dim(2), wo = dy.dim(3);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double* xp = x.data.data() + ((s * c + ch) * h) * w;
            double* dxp = dx.data.data() + ((s * c + ch) * h) * w;
            const double* dyp = dy.data.data() + ((s * c + ch) * ho) * wo;
            for (std::size_t i = 0; i < ho; ++i) {
                for (std::size_t j = 0; j < wo; ++j) {
                    std::size_t bi = 2 * i, bj = 2 * j;
                    double best = xp[bi * w + bj];
                    const std::size_t cand[3][2] = {{2 * i, 2 * j + 1},
                                                    {2 * i + 1, 2 * j},
                                                    {2 * i + 1, 2 * j + 1}};
                    for (const auto& rc : cand) {
                        const double v = xp[rc[0] * w + rc[1]];
                        if (v > best) {
                            best = v;
                            bi = rc[0];
                            bj = rc[1];
                        }
                    }
                    dxp[bi * w + bj] += dyp[i * wo + j];
                }
            }
        }
    }
}

}  // namespace

Tensor forward(const NetworkModel& model, const Tensor& inputs) {
    return forward_all(model, inputs).back();
}

double loss_and_grad(NetworkModel& model, const Batch& batch,
                     const std::optional<std::set<int>>& allowed_classes) {
    const std::size_t n = batch.inputs.dim(0);
    const int classes = model.spec.output_units;
    if (batch.targets.size() != n)
        throw std::invalid_argument("loss_and_grad: target count does not match batch size");
    for (int t : batch.targets) {
        if (t < 0 || t >= classes)
            throw std::invalid_argument("loss_and_grad: target outside the output head");
        if (allowed_classes && !allowed_classes->count(t))
            throw std::invalid_argument("loss_and_grad: target not in allowed_classes");
    }

    std::vector<Tensor> acts = forward_all(model, batch.inputs);
    const Tensor& logits = acts.back();
    Tensor dlogits = Tensor::zeros(logits.shape);

    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<double> row(classes);
    for (std::size_t i = 0; i < n; ++i) {
        const double* zp = logits.data.data() + i * classes;
        for (int k = 0; k < classes; ++k) {
            const bool masked = allowed_classes && !allowed_classes->count(k);
            row[k] = masked ? kMaskSentinel : zp[k];
        }
        const double zmax = *std::max_element(row.begin(), row.end());
        const int target = batch.targets[i];
        const double z_target = row[target];
        double sum = 0.0;
        for (int k = 0; k < classes; ++k) {
            row[k] = std::exp(row[k] - zmax);
            sum += row[k];
        }
        loss -= z_target - zmax - std::log(sum);
        double* dp = dlogits.data.data() + i * classes;
        for (int k = 0; k < classes; ++k) {
            const double p = row[k] / sum;
            dp[k] = (p - (k == target ? 1.0 : 0.0)) * inv_n;
        }
    }
    loss *= inv_n;
    if (!std::isfinite(loss)) throw std::runtime_error("loss_and_grad: non-finite loss");

    for (auto& [key, g] : model.grads) std::fill(g.data.begin(), g.data.end(), 0.0);

    // Backward pass, reusing the cached activations.
    Tensor grad_out = std::move(dlogits);
    for (std::size_t ii = model.spec.layers.size(); ii-- > 0;) {
        const LayerSpec& l = model.spec.layers[ii];
        const Tensor& x = acts[ii];
        switch (l.kind) {
            case LayerSpec::Kind::dense: {
                Tensor dx = Tensor::zeros(x.shape);
                dense_backward(x, model.params.at(weight_key(ii)), grad_out, dx,
                               model.grads.at(weight_key(ii)), model.grads.at(bias_key(ii)));
                grad_out = std::move(dx);
                break;
            }
            case LayerSpec::Kind::conv2d: {
                Tensor dx = Tensor::zeros(x.shape);
                conv_backward(x, model.params.at(weight_key(ii)), grad_out, dx,
                              model.grads.at(weight_key(ii)), model.grads.at(bias_key(ii)));
                grad_out = std::move(dx);
                break;
            }
            case LayerSpec::Kind::maxpool2x2: {
                Tensor dx = Tensor::zeros(x.shape);
                pool_backward(x, grad_out, dx);
                grad_out = std::move(dx);
                break;
            }
            case LayerSpec::Kind::relu: {
                Tensor dx = grad_out;
                for (std::size_t k = 0; k < dx.numel(); ++k)
                    if (x.data[k] <= 0.0) dx.data[k] = 0.0;
                grad_out = std::move(dx);
                break;
            }
            case LayerSpec::Kind::flatten: {
                Tensor dx = std::move(grad_out);
                dx.shape = x.shape;
                grad_out = std::move(dx);
                break;
            }
        }
    }
    return loss;
}

void adam_step(NetworkModel& model, double lr, double beta1, double beta2, double eps) {
    model.opt.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(model.opt.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(model.opt.step));
    for (auto& [key, param] : model.params) {
        const Tensor& g = model.grads.at(key);
        Tensor& m = model.opt.m.at(key);
        Tensor& v = model.opt.v.at(key);
        for (std::size_t i = 0; i < param.numel(); ++i) {
            const double gi = g[i];
            if (!std::isfinite(gi)) throw std::runtime_error("adam_step: non-finite gradient");
            m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
            v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

}  // namespace tfcsr
