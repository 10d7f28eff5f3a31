#pragma once

#include <cstdint>
#include <vector>

#include "pcgnn/common.hpp"

namespace pcgnn {

enum class Activation { relu, sigmoid, identity };

struct DenseLayer {
    Mat weight; // out x in
    Vec bias;   // out
    Activation act = Activation::relu;

    int in_dim() const { return weight.cols(); }
    int out_dim() const { return weight.rows(); }
};

struct Mlp {
    std::vector<DenseLayer> layers;

    int in_dim() const { return layers.front().in_dim(); }
    int out_dim() const { return layers.back().out_dim(); }
    size_t param_count() const {
        size_t n = 0;
        for (const auto& l : layers) n += l.weight.size() + l.bias.size();
        return n;
    }
};

/// Everything backward needs from one forward call. Post-activations are
/// enough to recover every activation derivative used here (relu slope
/// from the sign, sigmoid slope from s(1-s)).
struct MlpTrace {
    Vec input;
    std::vector<Vec> post;
};

/// Gradient buffers mirroring an Mlp's parameters.
struct MlpGrad {
    std::vector<Mat> d_weight;
    std::vector<Vec> d_bias;

    static MlpGrad zeros_like(const Mlp& mlp);
};

/// Affine-then-activation composition; fills `trace` when non-null.
Vec mlp_forward(const Mlp& mlp, const Vec& input, MlpTrace* trace = nullptr);

/// Exact reverse-mode gradients of upstream . output w.r.t. every weight,
/// bias (accumulated into `grad`) and the input (returned). ReLU uses
/// subgradient 0 at exactly zero pre-activation.
Vec mlp_backward(const Mlp& mlp, const MlpTrace& trace, const Vec& upstream, MlpGrad& grad);

/// Batched variants: columns are independent samples pushed through the
/// net together. These are the hot kernels; results match the per-vector
/// path (same accumulation order per column).
struct MlpBatchTrace {
    Mat input;             // in x E
    std::vector<Mat> post; // out_l x E

    const Mat& output() const { return post.back(); }
};

void mlp_forward_batch(const Mlp& mlp, Mat input, MlpBatchTrace& trace);

/// Forward over trace.input, which the caller fills in place; buffers in
/// the trace are reused across calls.
void mlp_forward_batch_inplace(const Mlp& mlp, MlpBatchTrace& trace);

void mlp_backward_batch(const Mlp& mlp, const MlpBatchTrace& trace, Mat upstream, MlpGrad& grad,
                        Mat& d_input);

/// Kaiming-style uniform init: weights ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in)),
/// biases zero.
void init_kaiming_uniform(DenseLayer& layer, uint64_t seed);

/// dims = {in, h1, ..., out}; acts has one entry per weight layer.
Mlp make_mlp(const std::vector<int>& dims, const std::vector<Activation>& acts, uint64_t seed);

struct AdamState {
    Vec m, v;
    int64_t t = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState zeros(size_t n_params) {
        AdamState s;
        s.m.assign(n_params, 0.0);
        s.v.assign(n_params, 0.0);
        return s;
    }
};

/// One bias-corrected ADAM update. Throws on non-finite gradients instead
/// of silently propagating NaNs into the parameters.
void adam_step(Vec& params, const Vec& grads, AdamState& state);

} // namespace pcgnn
