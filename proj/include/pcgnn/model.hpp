#pragma once

#include <cstdint>
#include <vector>

#include "pcgnn/channel.hpp"
#include "pcgnn/graph.hpp"
#include "pcgnn/nn.hpp"

namespace pcgnn {

/// K-layer message-passing power-control network. Layer k owns a message
/// net (input: upstream embedding + one edge feature) and a combination
/// net (input: own embedding + mean-aggregated messages); embeddings grow
/// by skip concatenation, so input widths differ per layer and weights are
/// per-layer, not shared.
struct PcgnnModel {
    Variant variant = Variant::hD;
    int k_layers = 3;
    double p_max = 1e-3;
    std::vector<Mlp> message; // k_layers entries
    std::vector<Mlp> combine; // k_layers entries
    Normalizer normalizer;

    static constexpr int kMessageWidth = 32;   // message net hidden/output width
    static constexpr int kCombineHidden = 16;  // combine net second hidden width

    /// Embedding width after layer k (k = 0 is the scalar node feature).
    int emb_dim(int k) const {
        if (k <= 0) return 1;
        return k < k_layers ? emb_dim(k - 1) + 1 : 1;
    }

    size_t param_count() const;
    Vec gather_params() const;
    void scatter_params(const Vec& flat);
};

/// Fresh model with Kaiming-uniform weights; layer seeds derive from `seed`.
PcgnnModel make_model(Variant variant, int k_layers, double p_max, uint64_t seed);

/// Per-layer activations retained for backward: embeddings, message-net
/// and combine-net traces, aggregates.
struct ForwardTrace {
    int n = 0;
    std::vector<Mat> beta;                 // beta[k]: emb_dim(k) x N
    std::vector<MlpBatchTrace> msg_trace;  // per layer, E = N(N-1) columns
    std::vector<MlpBatchTrace> comb_trace; // per layer, N columns
    std::vector<Mat> agg;                  // per layer, kMessageWidth x N
};

/// Algorithm forward pass. The graph must be normalized with the model's
/// normalizer and match the model's variant. Neighbor means accumulate in
/// value-sorted order so relabeling nodes permutes outputs bit-exactly.
PowerAllocation pcgnn_forward(const PcgnnModel& model, const FeatureGraph& graph,
                              ForwardTrace* trace = nullptr);

/// Plain per-edge implementation of the same computation, kept as the
/// reference for the batched kernels and the benchmark.
PowerAllocation pcgnn_forward_reference(const PcgnnModel& model, const FeatureGraph& graph);

/// Unsupervised training loss: negative network sum spectral efficiency.
double pcgnn_loss(const PowerAllocation& power, const Mat& gain, double noise_w);

/// Exact loss gradient w.r.t. every message/combination parameter, flat in
/// gather_params order. Includes the interference coupling: each power
/// affects every link's SINR.
Vec pcgnn_backward(const PcgnnModel& model, const ForwardTrace& trace,
                   const FeatureGraph& graph, const Mat& gain, double noise_w);

/// Backward from an explicit d(loss)/d(power) vector (training and tests).
Vec pcgnn_backward_from_power_grad(const PcgnnModel& model, const ForwardTrace& trace,
                                   const FeatureGraph& graph, const Vec& dloss_dp);

/// Central finite-difference check of the full pipeline gradient.
/// max_rel_err is taken over gradients large enough to measure against
/// FD roundoff (|g| > 1e-3); smaller entries are held to the absolute
/// tolerance, which sits well above the difference-quotient noise floor.
struct GradCheckResult {
    size_t n_params = 0;
    size_t n_measurable = 0;
    size_t n_failed = 0;
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;

    bool ok() const { return n_failed == 0; }
};

GradCheckResult gradcheck_model(PcgnnModel& model, const FeatureGraph& graph, const Mat& gain,
                                double noise_w, double fd_step = 1e-6, double rtol = 1e-5,
                                double atol = 1e-7);

} // namespace pcgnn
