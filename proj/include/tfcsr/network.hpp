#pragma once

// Minimal deterministic neural network engine: dense / 3x3 valid conv /
// 2x2 max-pool / ReLU / flatten layers, softmax cross-entropy with optional
// class masking, manual backpropagation and Adam.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tfcsr/rng.hpp"
#include "tfcsr/tensor.hpp"

namespace tfcsr {

struct LayerSpec {
    enum class Kind { dense, conv2d, maxpool2x2, relu, flatten };

    Kind kind = Kind::relu;
    int in = 0, out = 0;        // dense
    int in_ch = 0, out_ch = 0;  // conv2d; kernel is fixed 3x3, stride 1, valid

    static LayerSpec dense(int in, int out) {
        LayerSpec l;
        l.kind = Kind::dense;
        l.in = in;
        l.out = out;
        return l;
    }
    static LayerSpec conv2d(int in_ch, int out_ch) {
        LayerSpec l;
        l.kind = Kind::conv2d;
        l.in_ch = in_ch;
        l.out_ch = out_ch;
        return l;
    }
    static LayerSpec maxpool2x2() {
        LayerSpec l;
        l.kind = Kind::maxpool2x2;
        return l;
    }
    static LayerSpec relu() {
        LayerSpec l;
        l.kind = Kind::relu;
        return l;
    }
    static LayerSpec flatten() {
        LayerSpec l;
        l.kind = Kind::flatten;
        return l;
    }
};

struct NetworkSpec {
    std::vector<std::size_t> input_shape;  // per example, e.g. {1,28,28} or {16}
    std::vector<LayerSpec> layers;
    int output_units = 0;
};

// Walks the layer list, returns the per-example output shape.
// Throws std::invalid_argument on inconsistent dimensions or when the final
// shape is not exactly {output_units}.
std::vector<std::size_t> validate_spec(const NetworkSpec& spec);

struct AdamState {
    std::map<std::string, Tensor> m, v;
    long step = 0;
};

struct NetworkModel {
    NetworkSpec spec;
    std::map<std::string, Tensor> params;
    std::map<std::string, Tensor> grads;
    AdamState opt;
};

struct Batch {
    Tensor inputs;             // [n, ...]
    std::vector<int> targets;  // global class indices, length n
};

// He-uniform weights (limit sqrt(6/fan_in), i.e. std sqrt(2/fan_in)),
// zero biases, zeroed Adam state. Identical (spec, seed) pairs yield
// bitwise-identical models.
NetworkModel init_network(const NetworkSpec& spec, std::uint64_t seed);

// Pure forward pass; returns logits [n, output_units].
Tensor forward(const NetworkModel& model, const Tensor& inputs);

// Mean softmax cross-entropy over the batch; writes d loss / d theta into
// model.grads (overwriting). When allowed_classes is given, the logits of
// every other class are pinned to a -1e30 sentinel before the softmax, which
// zeroes their probability and their gradient.
double loss_and_grad(NetworkModel& model, const Batch& batch,
                     const std::optional<std::set<int>>& allowed_classes = std::nullopt);

// Standard Adam with bias correction. Grads are left intact.
// Throws std::runtime_error on non-finite gradients.
void adam_step(NetworkModel& model, double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

}  // namespace tfcsr
