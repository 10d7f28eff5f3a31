#include "pcgnn/nn.hpp"

#include <cmath>
#include <cstring>

#include "pcgnn/config.hpp"
#include "pcgnn/rng.hpp"

namespace pcgnn {

namespace {

inline double activate(double z, Activation act) {
    switch (act) {
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
        case Activation::identity: return z;
    }
    return z;
}

/// Activation slope recovered from the post-activation value.
inline double act_slope(double post, Activation act) {
    switch (act) {
        case Activation::relu: return post > 0.0 ? 1.0 : 0.0;
        case Activation::sigmoid: return post * (1.0 - post);
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

} // namespace

MlpGrad MlpGrad::zeros_like(const Mlp& mlp) {
    MlpGrad g;
    g.d_weight.reserve(mlp.layers.size());
    g.d_bias.reserve(mlp.layers.size());
    for (const auto& l : mlp.layers) {
        g.d_weight.emplace_back(l.out_dim(), l.in_dim());
        g.d_bias.emplace_back(l.out_dim(), 0.0);
    }
    return g;
}

Vec mlp_forward(const Mlp& mlp, const Vec& input, MlpTrace* trace) {
    if (static_cast<int>(input.size()) != mlp.in_dim())
        throw std::invalid_argument("mlp_forward: input dim mismatch");
    if (trace) {
        trace->input = input;
        trace->post.clear();
        trace->post.reserve(mlp.layers.size());
    }
    Vec x = input;
    for (const auto& layer : mlp.layers) {
        Vec y(layer.out_dim());
        for (int o = 0; o < layer.out_dim(); ++o) {
            double z = layer.bias[o];
            const double* w = layer.weight.row(o);
            for (int i = 0; i < layer.in_dim(); ++i) z += w[i] * x[i];
            y[o] = activate(z, layer.act);
        }
        if (trace) trace->post.push_back(y);
        x = std::move(y);
    }
    return x;
}

Vec mlp_backward(const Mlp& mlp, const MlpTrace& trace, const Vec& upstream, MlpGrad& grad) {
    const int n_layers = static_cast<int>(mlp.layers.size());
    if (trace.post.size() != static_cast<size_t>(n_layers))
        throw std::invalid_argument("mlp_backward: trace does not match mlp");
    if (static_cast<int>(upstream.size()) != mlp.out_dim())
        throw std::invalid_argument("mlp_backward: upstream dim mismatch");

    Vec delta = upstream;
    for (int l = n_layers - 1; l >= 0; --l) {
        const DenseLayer& layer = mlp.layers[l];
        const Vec& post = trace.post[l];
        const Vec& x = l == 0 ? trace.input : trace.post[l - 1];
        // delta becomes the pre-activation gradient of this layer.
        for (int o = 0; o < layer.out_dim(); ++o) delta[o] *= act_slope(post[o], layer.act);

        for (int o = 0; o < layer.out_dim(); ++o) {
            grad.d_bias[l][o] += delta[o];
            double* dw = grad.d_weight[l].row(o);
            for (int i = 0; i < layer.in_dim(); ++i) dw[i] += delta[o] * x[i];
        }
        Vec dx(layer.in_dim(), 0.0);
        for (int o = 0; o < layer.out_dim(); ++o) {
            const double* w = layer.weight.row(o);
            for (int i = 0; i < layer.in_dim(); ++i) dx[i] += w[i] * delta[o];
        }
        delta = std::move(dx);
    }
    return delta;
}

namespace {

// Register-tile width for the batched kernels (doubles per column tile).
#if defined(__AVX512F__)
constexpr int kTile = 16;
#else
constexpr int kTile = 8;
#endif

/// One 4-row x kTile-column register tile of Y = W X + bias. `width`
/// lanes of the result are written back (the rest are padding).
inline void gemm_bias_tile(const double* __restrict w0, const double* __restrict w1,
                           const double* __restrict w2, const double* __restrict w3,
                           const double b0, const double b1, const double b2, const double b3,
                           const double* __restrict X, int x_stride, int in, double* Y,
                           size_t y_stride, int width) {
    double acc0[kTile], acc1[kTile], acc2[kTile], acc3[kTile];
    for (int t = 0; t < kTile; ++t) {
        acc0[t] = b0;
        acc1[t] = b1;
        acc2[t] = b2;
        acc3[t] = b3;
    }
    for (int i = 0; i < in; ++i) {
        const double* __restrict xr = X + static_cast<size_t>(i) * x_stride;
        const double a0 = w0[i], a1 = w1[i], a2 = w2[i], a3 = w3[i];
        for (int t = 0; t < kTile; ++t) {
            const double x = xr[t];
            acc0[t] += a0 * x;
            acc1[t] += a1 * x;
            acc2[t] += a2 * x;
            acc3[t] += a3 * x;
        }
    }
    std::memcpy(Y + 0 * y_stride, acc0, width * sizeof(double));
    std::memcpy(Y + 1 * y_stride, acc1, width * sizeof(double));
    std::memcpy(Y + 2 * y_stride, acc2, width * sizeof(double));
    std::memcpy(Y + 3 * y_stride, acc3, width * sizeof(double));
}

/// Y = W X + bias, blocked 4 output rows x kTile columns so accumulators
/// stay in registers across the reduction. Per output element the
/// accumulation order over inputs is plain ascending, matching the
/// per-vector path. The last partial column tile runs through the same
/// tile code on a zero-padded copy, so every column sees an identical
/// instruction sequence regardless of its position (graph relabelings
/// stay bit-exact).
void gemm_bias(const Mat& w_mat, const Vec& bias, const Mat& x_mat, Mat& y_mat) {
    const int out = w_mat.rows(), in = w_mat.cols(), e_count = x_mat.cols();
    const double* W = w_mat.data();
    const double* X = x_mat.data();
    double* Y = y_mat.data();
    const int e_main = e_count - e_count % kTile;
    const int tail = e_count - e_main;

    std::vector<double> xpad;
    if (tail > 0) {
        xpad.assign(static_cast<size_t>(in) * kTile, 0.0);
        for (int i = 0; i < in; ++i)
            std::memcpy(xpad.data() + static_cast<size_t>(i) * kTile,
                        X + static_cast<size_t>(i) * e_count + e_main, tail * sizeof(double));
    }

    int ob = 0;
    for (; ob + 4 <= out; ob += 4) {
        const double* w0 = W + static_cast<size_t>(ob + 0) * in;
        const double* w1 = W + static_cast<size_t>(ob + 1) * in;
        const double* w2 = W + static_cast<size_t>(ob + 2) * in;
        const double* w3 = W + static_cast<size_t>(ob + 3) * in;
        for (int e0 = 0; e0 < e_main; e0 += kTile)
            gemm_bias_tile(w0, w1, w2, w3, bias[ob], bias[ob + 1], bias[ob + 2], bias[ob + 3],
                           X + e0, e_count, in, Y + static_cast<size_t>(ob) * e_count + e0,
                           e_count, kTile);
        if (tail > 0)
            gemm_bias_tile(w0, w1, w2, w3, bias[ob], bias[ob + 1], bias[ob + 2], bias[ob + 3],
                           xpad.data(), kTile, in,
                           Y + static_cast<size_t>(ob) * e_count + e_main, e_count, tail);
    }
    for (; ob < out; ++ob) {
        // Row remainder: every column of this row takes this same path.
        const double* w = W + static_cast<size_t>(ob) * in;
        for (int e = 0; e < e_count; ++e) {
            double s = bias[ob];
            for (int i = 0; i < in; ++i) s += w[i] * X[static_cast<size_t>(i) * e_count + e];
            Y[static_cast<size_t>(ob) * e_count + e] = s;
        }
    }
}

/// dX = W^T dY with the same 4 x kTile register tiling.
void gemm_tn(const Mat& w_mat, const Mat& dy_mat, Mat& dx_mat) {
    const int out = w_mat.rows(), in = w_mat.cols(), e_count = dy_mat.cols();
    const double* W = w_mat.data();
    const double* DY = dy_mat.data();
    double* DX = dx_mat.data();
    int ib = 0;
    for (; ib + 4 <= in; ib += 4) {
        int e0 = 0;
        for (; e0 + kTile <= e_count; e0 += kTile) {
            double acc0[kTile] = {}, acc1[kTile] = {}, acc2[kTile] = {}, acc3[kTile] = {};
            for (int o = 0; o < out; ++o) {
                const double* __restrict dyr = DY + static_cast<size_t>(o) * e_count + e0;
                const double* wr = W + static_cast<size_t>(o) * in + ib;
                const double a0 = wr[0], a1 = wr[1], a2 = wr[2], a3 = wr[3];
                for (int t = 0; t < kTile; ++t) {
                    const double d = dyr[t];
                    acc0[t] += a0 * d;
                    acc1[t] += a1 * d;
                    acc2[t] += a2 * d;
                    acc3[t] += a3 * d;
                }
            }
            std::memcpy(DX + static_cast<size_t>(ib + 0) * e_count + e0, acc0, sizeof acc0);
            std::memcpy(DX + static_cast<size_t>(ib + 1) * e_count + e0, acc1, sizeof acc1);
            std::memcpy(DX + static_cast<size_t>(ib + 2) * e_count + e0, acc2, sizeof acc2);
            std::memcpy(DX + static_cast<size_t>(ib + 3) * e_count + e0, acc3, sizeof acc3);
        }
        for (; e0 < e_count; ++e0) {
            double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
            for (int o = 0; o < out; ++o) {
                const double d = DY[static_cast<size_t>(o) * e_count + e0];
                const double* wr = W + static_cast<size_t>(o) * in + ib;
                s0 += wr[0] * d;
                s1 += wr[1] * d;
                s2 += wr[2] * d;
                s3 += wr[3] * d;
            }
            DX[static_cast<size_t>(ib + 0) * e_count + e0] = s0;
            DX[static_cast<size_t>(ib + 1) * e_count + e0] = s1;
            DX[static_cast<size_t>(ib + 2) * e_count + e0] = s2;
            DX[static_cast<size_t>(ib + 3) * e_count + e0] = s3;
        }
    }
    for (; ib < in; ++ib) {
        for (int e = 0; e < e_count; ++e) {
            double s = 0;
            for (int o = 0; o < out; ++o)
                s += W[static_cast<size_t>(o) * in + ib] * DY[static_cast<size_t>(o) * e_count + e];
            DX[static_cast<size_t>(ib) * e_count + e] = s;
        }
    }
}

void apply_activation(Mat& y, Activation act) {
    double* __restrict v = y.data();
    const size_t n = y.size();
    switch (act) {
        case Activation::relu:
            for (size_t e = 0; e < n; ++e) v[e] = v[e] > 0.0 ? v[e] : 0.0;
            break;
        case Activation::sigmoid:
            for (size_t e = 0; e < n; ++e) v[e] = 1.0 / (1.0 + std::exp(-v[e]));
            break;
        case Activation::identity: break;
    }
}

/// dW += dY X^T. Columns are walked in blocks small enough that the
/// re-read operand rows stay in L1 across the 2x2 register sub-blocks;
/// each operand streams from L2 once. Lane reassociation is fixed, so
/// results are reproducible.
void gemm_acc_nt(const Mat& dy_mat, const Mat& x_mat, Mat& dw_mat) {
    const int out = dy_mat.rows(), in = x_mat.rows(), e_count = dy_mat.cols();
    constexpr int kBlock = 128; // doubles per operand row per pass: 2x64 KB stays hot
    for (int e0 = 0; e0 < e_count; e0 += kBlock) {
        const int bw = std::min(kBlock, e_count - e0);
        int ob = 0;
        for (; ob + 2 <= out; ob += 2) {
            const double* __restrict d0 = dy_mat.row(ob) + e0;
            const double* __restrict d1 = dy_mat.row(ob + 1) + e0;
            int ib = 0;
            for (; ib + 2 <= in; ib += 2) {
                const double* __restrict x0 = x_mat.row(ib) + e0;
                const double* __restrict x1 = x_mat.row(ib + 1) + e0;
                double a00[kTile] = {}, a01[kTile] = {}, a10[kTile] = {}, a11[kTile] = {};
                int e = 0;
                for (; e + kTile <= bw; e += kTile) {
                    for (int t = 0; t < kTile; ++t) {
                        const double v0 = d0[e + t], v1 = d1[e + t];
                        const double u0 = x0[e + t], u1 = x1[e + t];
                        a00[t] += v0 * u0;
                        a01[t] += v0 * u1;
                        a10[t] += v1 * u0;
                        a11[t] += v1 * u1;
                    }
                }
                double s00 = 0, s01 = 0, s10 = 0, s11 = 0;
                for (int t = 0; t < kTile; ++t) {
                    s00 += a00[t];
                    s01 += a01[t];
                    s10 += a10[t];
                    s11 += a11[t];
                }
                for (; e < bw; ++e) {
                    s00 += d0[e] * x0[e];
                    s01 += d0[e] * x1[e];
                    s10 += d1[e] * x0[e];
                    s11 += d1[e] * x1[e];
                }
                dw_mat(ob, ib) += s00;
                dw_mat(ob, ib + 1) += s01;
                dw_mat(ob + 1, ib) += s10;
                dw_mat(ob + 1, ib + 1) += s11;
            }
            for (; ib < in; ++ib) {
                const double* __restrict x0 = x_mat.row(ib) + e0;
                double s0 = 0, s1 = 0;
                for (int e = 0; e < bw; ++e) {
                    s0 += d0[e] * x0[e];
                    s1 += d1[e] * x0[e];
                }
                dw_mat(ob, ib) += s0;
                dw_mat(ob + 1, ib) += s1;
            }
        }
        for (; ob < out; ++ob) {
            const double* __restrict d0 = dy_mat.row(ob) + e0;
            for (int ib = 0; ib < in; ++ib) {
                const double* __restrict x0 = x_mat.row(ib) + e0;
                double s = 0;
                for (int e = 0; e < bw; ++e) s += d0[e] * x0[e];
                dw_mat(ob, ib) += s;
            }
        }
    }
}

/// Dot product over independent accumulator lanes; fixed reassociation,
/// so results are reproducible run to run and vectorize without
/// fast-math.
inline double lane_dot(const double* __restrict a, const double* __restrict b, int n) {
    double lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    int e = 0;
    for (; e + 8 <= n; e += 8)
        for (int j = 0; j < 8; ++j) lanes[j] += a[e + j] * b[e + j];
    double tail = 0.0;
    for (; e < n; ++e) tail += a[e] * b[e];
    return (((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
            ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]))) +
           tail;
}

inline double lane_sum(const double* __restrict a, int n) {
    double lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    int e = 0;
    for (; e + 8 <= n; e += 8)
        for (int j = 0; j < 8; ++j) lanes[j] += a[e + j];
    double tail = 0.0;
    for (; e < n; ++e) tail += a[e];
    return (((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
            ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]))) +
           tail;
}

} // namespace

void mlp_forward_batch(const Mlp& mlp, Mat input, MlpBatchTrace& trace) {
    trace.input = std::move(input);
    mlp_forward_batch_inplace(mlp, trace);
}

void mlp_forward_batch_inplace(const Mlp& mlp, MlpBatchTrace& trace) {
    if (trace.input.rows() != mlp.in_dim())
        throw std::invalid_argument("mlp_forward_batch: input dim mismatch");
    const int e_count = trace.input.cols();
    trace.post.resize(mlp.layers.size());

    const Mat* x = &trace.input;
    for (size_t l = 0; l < mlp.layers.size(); ++l) {
        const DenseLayer& layer = mlp.layers[l];
        Mat& y = trace.post[l];
        y.reshape(layer.out_dim(), e_count);
        gemm_bias(layer.weight, layer.bias, *x, y);
        apply_activation(y, layer.act);
        x = &y;
    }
}

void mlp_backward_batch(const Mlp& mlp, const MlpBatchTrace& trace, Mat upstream, MlpGrad& grad,
                        Mat& d_input) {
    const int n_layers = static_cast<int>(mlp.layers.size());
    const int e_count = trace.input.cols();
    if (upstream.rows() != mlp.out_dim() || upstream.cols() != e_count)
        throw std::invalid_argument("mlp_backward_batch: upstream shape mismatch");

    Mat delta = std::move(upstream);
    for (int l = n_layers - 1; l >= 0; --l) {
        const DenseLayer& layer = mlp.layers[l];
        const Mat& post = trace.post[l];
        const Mat& x = l == 0 ? trace.input : trace.post[l - 1];

        for (int o = 0; o < layer.out_dim(); ++o) {
            double* __restrict dr = delta.row(o);
            const double* __restrict pr = post.row(o);
            switch (layer.act) {
                case Activation::relu:
                    for (int e = 0; e < e_count; ++e) dr[e] = pr[e] > 0.0 ? dr[e] : 0.0;
                    break;
                case Activation::sigmoid:
                    for (int e = 0; e < e_count; ++e) dr[e] *= pr[e] * (1.0 - pr[e]);
                    break;
                case Activation::identity: break;
            }
        }

        for (int o = 0; o < layer.out_dim(); ++o)
            grad.d_bias[l][o] += lane_sum(delta.row(o), e_count);
        gemm_acc_nt(delta, x, grad.d_weight[l]);

        Mat dx;
        dx.reshape(layer.in_dim(), e_count);
        gemm_tn(layer.weight, delta, dx);
        delta = std::move(dx);
    }
    d_input = std::move(delta);
}

void init_kaiming_uniform(DenseLayer& layer, uint64_t seed) {
    const int fan_in = layer.in_dim();
    if (fan_in < 1) throw std::invalid_argument("init: fan_in must be >= 1");
    const double bound = std::sqrt(6.0 / fan_in);
    Rng rng(seed);
    for (int o = 0; o < layer.out_dim(); ++o) {
        double* w = layer.weight.row(o);
        for (int i = 0; i < fan_in; ++i) w[i] = rng.uniform(-bound, bound);
    }
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
}

Mlp make_mlp(const std::vector<int>& dims, const std::vector<Activation>& acts, uint64_t seed) {
    if (dims.size() < 2 || acts.size() != dims.size() - 1)
        throw std::invalid_argument("make_mlp: dims/acts mismatch");
    Mlp mlp;
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        DenseLayer layer;
        layer.weight = Mat(dims[l + 1], dims[l]);
        layer.bias.assign(dims[l + 1], 0.0);
        layer.act = acts[l];
        init_kaiming_uniform(layer, derive_seed(seed, kStreamInit, l));
        mlp.layers.push_back(std::move(layer));
    }
    return mlp;
}

void adam_step(Vec& params, const Vec& grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw std::invalid_argument("adam_step: size mismatch");
    for (size_t i = 0; i < grads.size(); ++i)
        if (!std::isfinite(grads[i]))
            throw std::runtime_error("adam_step: non-finite gradient at index " +
                                     std::to_string(i));
    state.t += 1;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
}

} // namespace pcgnn
