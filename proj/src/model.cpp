#include "pcgnn/model.hpp"

#include <algorithm>
#include <cmath>

#include "pcgnn/rng.hpp"

namespace pcgnn {

namespace {

// Canonical edge enumeration: source-major over ordered pairs (m -> n),
// m != n. Aggregation and gradient scatter both follow this order.
inline int edge_id(int m, int n, int n_nodes) {
    return m * (n_nodes - 1) + n - (n > m ? 1 : 0);
}

/// Sum in ascending value order. The summand multiset at a node is
/// invariant under graph relabeling, so sorting makes the mean bit-exact
/// under permutation. Insertion sort: the arrays are tiny (N-1 entries).
double sorted_mean(Vec& buf) {
    const int n = static_cast<int>(buf.size());
    double* __restrict v = buf.data();
    for (int i = 1; i < n; ++i) {
        const double key = v[i];
        int j = i - 1;
        while (j >= 0 && v[j] > key) {
            v[j + 1] = v[j];
            --j;
        }
        v[j + 1] = key;
    }
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += v[i];
    return s / static_cast<double>(n);
}

void check_graph(const PcgnnModel& model, const FeatureGraph& graph) {
    if (graph.variant != model.variant)
        throw std::invalid_argument("pcgnn: graph variant does not match model");
    if (!graph.normalized)
        throw std::invalid_argument("pcgnn: graph must be normalized before the forward pass");
    if (graph.n() < 1) throw std::invalid_argument("pcgnn: empty graph");
}

} // namespace

size_t PcgnnModel::param_count() const {
    size_t n = 0;
    for (int k = 0; k < k_layers; ++k) n += message[k].param_count() + combine[k].param_count();
    return n;
}

Vec PcgnnModel::gather_params() const {
    Vec flat;
    flat.reserve(param_count());
    auto push_mlp = [&flat](const Mlp& mlp) {
        for (const auto& l : mlp.layers) {
            flat.insert(flat.end(), l.weight.data(), l.weight.data() + l.weight.size());
            flat.insert(flat.end(), l.bias.begin(), l.bias.end());
        }
    };
    for (int k = 0; k < k_layers; ++k) {
        push_mlp(message[k]);
        push_mlp(combine[k]);
    }
    return flat;
}

void PcgnnModel::scatter_params(const Vec& flat) {
    if (flat.size() != param_count())
        throw std::invalid_argument("scatter_params: size mismatch");
    size_t pos = 0;
    auto pull_mlp = [&flat, &pos](Mlp& mlp) {
        for (auto& l : mlp.layers) {
            std::copy(flat.begin() + pos, flat.begin() + pos + l.weight.size(), l.weight.data());
            pos += l.weight.size();
            std::copy(flat.begin() + pos, flat.begin() + pos + l.bias.size(), l.bias.begin());
            pos += l.bias.size();
        }
    };
    for (int k = 0; k < k_layers; ++k) {
        pull_mlp(message[k]);
        pull_mlp(combine[k]);
    }
}

PcgnnModel make_model(Variant variant, int k_layers, double p_max, uint64_t seed) {
    if (k_layers < 1) throw std::invalid_argument("make_model: need k_layers >= 1");
    if (p_max <= 0) throw std::invalid_argument("make_model: p_max must be > 0");
    PcgnnModel m;
    m.variant = variant;
    m.k_layers = k_layers;
    m.p_max = p_max;
    const int w = PcgnnModel::kMessageWidth;
    for (int k = 1; k <= k_layers; ++k) {
        const int d_prev = m.emb_dim(k - 1);
        m.message.push_back(make_mlp(
            {d_prev + 1, w, w, w},
            {Activation::relu, Activation::relu, Activation::relu},
            derive_seed(seed, kStreamInit, 2 * k)));
        m.combine.push_back(make_mlp(
            {d_prev + w, w, PcgnnModel::kCombineHidden, 1},
            {Activation::relu, Activation::relu, Activation::sigmoid},
            derive_seed(seed, kStreamInit, 2 * k + 1)));
    }
    return m;
}

PowerAllocation pcgnn_forward(const PcgnnModel& model, const FeatureGraph& graph,
                              ForwardTrace* trace) {
    check_graph(model, graph);
    const int n = graph.n();
    const int e_count = n * (n - 1);
    const int w = PcgnnModel::kMessageWidth;

    // Edge endpoint tables and static edge features, shared by all layers.
    std::vector<int> src(e_count), dst(e_count);
    Vec edge_feat(e_count);
    for (int m = 0, e = 0; m < n; ++m)
        for (int j = 0; j < n; ++j) {
            if (j == m) continue;
            src[e] = m;
            dst[e] = j;
            edge_feat[e] = graph.edge_features(m, j);
            ++e;
        }
    // Incoming edge ids per node, source-ascending.
    std::vector<int> in_edges(std::max(e_count, 1));
    for (int j = 0; j < n; ++j)
        for (int m = 0, idx = 0; m < n; ++m) {
            if (m == j) continue;
            in_edges[static_cast<size_t>(j) * (n - 1) + idx++] = edge_id(m, j, n);
        }

    // Buffers inside a reused trace keep their capacity across calls.
    ForwardTrace local;
    ForwardTrace& tr = trace ? *trace : local;
    tr.n = n;
    tr.beta.resize(model.k_layers + 1);
    tr.msg_trace.resize(model.k_layers);
    tr.comb_trace.resize(model.k_layers);
    tr.agg.resize(model.k_layers);

    tr.beta[0].reshape(1, n);
    for (int i = 0; i < n; ++i) tr.beta[0](0, i) = graph.node_features[i];

    Vec buf(std::max(n - 1, 1));
    for (int k = 0; k < model.k_layers; ++k) {
        const Mat& prev = tr.beta[k];
        const int d_prev = prev.rows();

        Mat& agg = tr.agg[k];
        agg.reshape(w, n);
        if (e_count > 0) {
            Mat& x_msg = tr.msg_trace[k].input;
            x_msg.reshape(d_prev + 1, e_count);
            for (int r = 0; r < d_prev; ++r) {
                double* xr = x_msg.row(r);
                const double* br = prev.row(r);
                for (int e = 0; e < e_count; ++e) xr[e] = br[src[e]];
            }
            {
                double* xr = x_msg.row(d_prev);
                for (int e = 0; e < e_count; ++e) xr[e] = edge_feat[e];
            }
            mlp_forward_batch_inplace(model.message[k], tr.msg_trace[k]);
            const Mat& msgs = tr.msg_trace[k].output();

            buf.resize(n - 1);
            for (int j = 0; j < n; ++j) {
                const int* __restrict in_e = in_edges.data() + static_cast<size_t>(j) * (n - 1);
                for (int d = 0; d < w; ++d) {
                    const double* __restrict mr = msgs.row(d);
                    for (int m = 0; m < n - 1; ++m) buf[m] = mr[in_e[m]];
                    agg(d, j) = sorted_mean(buf);
                }
            }
        } else {
            // n == 1: no neighbors, aggregate defined as the zero vector.
            agg.fill(0.0);
        }

        Mat& x_comb = tr.comb_trace[k].input;
        x_comb.reshape(d_prev + w, n);
        for (int r = 0; r < d_prev; ++r)
            std::copy(prev.row(r), prev.row(r) + n, x_comb.row(r));
        for (int d = 0; d < w; ++d)
            std::copy(agg.row(d), agg.row(d) + n, x_comb.row(d_prev + d));
        mlp_forward_batch_inplace(model.combine[k], tr.comb_trace[k]);
        const Mat& s = tr.comb_trace[k].output(); // 1 x N, sigmoid output

        Mat& next = tr.beta[k + 1];
        if (k + 1 < model.k_layers) {
            next.reshape(d_prev + 1, n);
            std::copy(s.row(0), s.row(0) + n, next.row(0));
            for (int r = 0; r < d_prev; ++r)
                std::copy(prev.row(r), prev.row(r) + n, next.row(r + 1));
        } else {
            next = s;
        }
    }

    PowerAllocation power;
    power.p.resize(n);
    const Mat& out = tr.beta[model.k_layers];
    for (int i = 0; i < n; ++i) power.p[i] = out(0, i) * model.p_max;
    return power;
}

PowerAllocation pcgnn_forward_reference(const PcgnnModel& model, const FeatureGraph& graph) {
    check_graph(model, graph);
    const int n = graph.n();
    const int w = PcgnnModel::kMessageWidth;

    // beta[i] is the embedding of node i; starts as the scalar node feature.
    std::vector<Vec> beta(n);
    for (int i = 0; i < n; ++i) beta[i] = Vec{graph.node_features[i]};

    for (int k = 0; k < model.k_layers; ++k) {
        std::vector<Vec> next(n);
        for (int j = 0; j < n; ++j) {
            // Messages from every neighbor, then per-dimension sorted mean.
            Vec agg(w, 0.0);
            if (n > 1) {
                std::vector<Vec> msgs;
                msgs.reserve(n - 1);
                for (int m = 0; m < n; ++m) {
                    if (m == j) continue;
                    Vec in = beta[m];
                    in.push_back(graph.edge_features(m, j));
                    msgs.push_back(mlp_forward(model.message[k], in));
                }
                Vec buf(msgs.size());
                for (int d = 0; d < w; ++d) {
                    for (size_t t = 0; t < msgs.size(); ++t) buf[t] = msgs[t][d];
                    agg[d] = sorted_mean(buf);
                }
            }
            Vec in = beta[j];
            in.insert(in.end(), agg.begin(), agg.end());
            const Vec s = mlp_forward(model.combine[k], in);
            if (k + 1 < model.k_layers) {
                Vec grown{s[0]};
                grown.insert(grown.end(), beta[j].begin(), beta[j].end());
                next[j] = std::move(grown);
            } else {
                next[j] = s;
            }
        }
        beta = std::move(next);
    }

    PowerAllocation power;
    power.p.resize(n);
    for (int i = 0; i < n; ++i) power.p[i] = beta[i][0] * model.p_max;
    return power;
}

double pcgnn_loss(const PowerAllocation& power, const Mat& gain, double noise_w) {
    return -sum_se(power.p, gain, noise_w);
}

Vec pcgnn_backward_from_power_grad(const PcgnnModel& model, const ForwardTrace& trace,
                                   const FeatureGraph& graph, const Vec& dloss_dp) {
    const int n = trace.n;
    if (n != graph.n() || static_cast<int>(dloss_dp.size()) != n)
        throw std::invalid_argument("pcgnn_backward: trace/graph/gradient size mismatch");
    if (trace.beta.empty() || trace.beta[0].cols() != n)
        throw std::invalid_argument("pcgnn_backward: stale or missing trace");
    for (int i = 0; i < n; ++i)
        if (trace.beta[0](0, i) != graph.node_features[i])
            throw std::invalid_argument("pcgnn_backward: trace does not match this graph");

    const int e_count = n * (n - 1);
    const int w = PcgnnModel::kMessageWidth;
    std::vector<int> src(e_count), dst(e_count);
    for (int m = 0, e = 0; m < n; ++m)
        for (int j = 0; j < n; ++j) {
            if (j == m) continue;
            src[e] = m;
            dst[e] = j;
            ++e;
        }

    std::vector<MlpGrad> g_msg, g_comb;
    for (int k = 0; k < model.k_layers; ++k) {
        g_msg.push_back(MlpGrad::zeros_like(model.message[k]));
        g_comb.push_back(MlpGrad::zeros_like(model.combine[k]));
    }

    // d(loss)/d(beta^K), one row.
    Mat d_beta(1, n);
    for (int i = 0; i < n; ++i) d_beta(0, i) = dloss_dp[i] * model.p_max;

    const double inv_cnt = n > 1 ? 1.0 / static_cast<double>(n - 1) : 0.0;
    for (int k = model.k_layers - 1; k >= 0; --k) {
        const int d_prev = model.emb_dim(k);

        // Split the incoming embedding gradient into the sigmoid output row
        // and the pass-through rows of the skip concatenation.
        Mat ds(1, n);
        Mat d_prev_acc(d_prev, n);
        if (k + 1 < model.k_layers) {
            std::copy(d_beta.row(0), d_beta.row(0) + n, ds.row(0));
            for (int r = 0; r < d_prev; ++r)
                std::copy(d_beta.row(r + 1), d_beta.row(r + 1) + n, d_prev_acc.row(r));
        } else {
            std::copy(d_beta.row(0), d_beta.row(0) + n, ds.row(0));
        }

        Mat dx_comb;
        mlp_backward_batch(model.combine[k], trace.comb_trace[k], std::move(ds), g_comb[k],
                           dx_comb);
        for (int r = 0; r < d_prev; ++r) {
            const double* s_row = dx_comb.row(r);
            double* a_row = d_prev_acc.row(r);
            for (int i = 0; i < n; ++i) a_row[i] += s_row[i];
        }

        if (e_count > 0) {
            // Mean aggregation spreads each node's gradient evenly over its
            // incoming messages.
            Mat d_msgs;
            d_msgs.reshape(w, e_count);
            for (int d = 0; d < w; ++d) {
                double* mr = d_msgs.row(d);
                const double* ar = dx_comb.row(d_prev + d);
                for (int e = 0; e < e_count; ++e) mr[e] = ar[dst[e]] * inv_cnt;
            }
            Mat dx_msg;
            mlp_backward_batch(model.message[k], trace.msg_trace[k], std::move(d_msgs), g_msg[k],
                               dx_msg);
            // Edge-feature row of dx_msg is not a parameter; dropped.
            for (int r = 0; r < d_prev; ++r) {
                const double* s_row = dx_msg.row(r);
                double* a_row = d_prev_acc.row(r);
                for (int e = 0; e < e_count; ++e) a_row[src[e]] += s_row[e];
            }
        }
        d_beta = std::move(d_prev_acc);
    }

    Vec flat;
    flat.reserve(model.param_count());
    auto push_grad = [&flat](const MlpGrad& g) {
        for (size_t l = 0; l < g.d_weight.size(); ++l) {
            flat.insert(flat.end(), g.d_weight[l].data(),
                        g.d_weight[l].data() + g.d_weight[l].size());
            flat.insert(flat.end(), g.d_bias[l].begin(), g.d_bias[l].end());
        }
    };
    for (int k = 0; k < model.k_layers; ++k) {
        push_grad(g_msg[k]);
        push_grad(g_comb[k]);
    }
    return flat;
}

Vec pcgnn_backward(const PcgnnModel& model, const ForwardTrace& trace, const FeatureGraph& graph,
                   const Mat& gain, double noise_w) {
    const int n = trace.n;
    if (trace.beta.empty() || trace.beta.back().cols() != n)
        throw std::invalid_argument("pcgnn_backward: stale trace");
    const Mat& out = trace.beta.back();
    Vec p(n);
    for (int i = 0; i < n; ++i) p[i] = out(0, i) * model.p_max;
    Vec d_se = sum_se_grad(p, gain, noise_w);
    for (double& g : d_se) g = -g; // loss is the negated sum SE
    return pcgnn_backward_from_power_grad(model, trace, graph, d_se);
}

GradCheckResult gradcheck_model(PcgnnModel& model, const FeatureGraph& graph, const Mat& gain,
                                double noise_w, double fd_step, double rtol, double atol) {
    ForwardTrace trace;
    pcgnn_forward(model, graph, &trace);
    const Vec analytic = pcgnn_backward(model, trace, graph, gain, noise_w);

    Vec params = model.gather_params();
    GradCheckResult res;
    res.n_params = params.size();
    for (size_t i = 0; i < params.size(); ++i) {
        const double theta = params[i];
        const double h = fd_step * std::max(1.0, std::abs(theta));
        params[i] = theta + h;
        model.scatter_params(params);
        const double f_plus = pcgnn_loss(pcgnn_forward(model, graph), gain, noise_w);
        params[i] = theta - h;
        model.scatter_params(params);
        const double f_minus = pcgnn_loss(pcgnn_forward(model, graph), gain, noise_w);
        params[i] = theta;
        const double fd = (f_plus - f_minus) / (2.0 * h);

        const double abs_err = std::abs(fd - analytic[i]);
        const double denom = std::max(std::abs(fd), std::abs(analytic[i]));
        res.max_abs_err = std::max(res.max_abs_err, abs_err);
        if (denom > 1e-3) {
            res.n_measurable += 1;
            res.max_rel_err = std::max(res.max_rel_err, abs_err / denom);
        }
        if (abs_err > atol + rtol * denom) res.n_failed += 1;
    }
    model.scatter_params(params);
    return res;
}

} // namespace pcgnn
