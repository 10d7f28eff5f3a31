// Compares the serial reference forward pass against the batched kernels
// and measures training-step throughput at different thread counts.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <omp.h>
#include <vector>

#include "pcgnn/metrics.hpp"
#include "pcgnn/rng.hpp"

using namespace pcgnn;
using clk = std::chrono::steady_clock;

namespace {

double seconds_since(clk::time_point t0) {
    return std::chrono::duration<double>(clk::now() - t0).count();
}

/// Flop count of one fused forward+backward pass on an N-node snapshot
/// (multiply-adds counted as two flops).
double snapshot_flops(const PcgnnModel& model, int n) {
    const int e_count = n * (n - 1);
    double madds = 0.0;
    for (int k = 0; k < model.k_layers; ++k) {
        for (const auto& l : model.message[k].layers)
            madds += static_cast<double>(l.in_dim()) * l.out_dim() * e_count;
        for (const auto& l : model.combine[k].layers)
            madds += static_cast<double>(l.in_dim()) * l.out_dim() * n;
    }
    return 2.0 * 3.0 * madds; // forward + dW + dX
}

} // namespace

int main(int argc, char** argv) {
    const int n = argc > 1 ? std::atoi(argv[1]) : 20;
    const int batch = argc > 2 ? std::atoi(argv[2]) : 64;
    const int reps = argc > 3 ? std::atoi(argv[3]) : 20;

    SystemConfig cfg;
    cfg.n_subnetworks = n;
    const double noise = noise_power(cfg);
    const Dataset data = generate_dataset(cfg, 7, kStreamTrainData, batch);

    PcgnnModel model = make_model(Variant::hD, 3, cfg.max_power_w, 11);
    std::vector<FeatureGraph> graphs;
    for (const Snapshot& s : data.snapshots) graphs.push_back(build_graph(s, Variant::hD));
    model.normalizer = fit_normalizer(graphs, cfg.area_side_m);
    for (FeatureGraph& g : graphs) apply_normalizer(g, model.normalizer);

    // Correctness: batched kernels against the per-edge reference.
    double max_dev = 0.0;
    for (int i = 0; i < batch; ++i) {
        const PowerAllocation fast = pcgnn_forward(model, graphs[i]);
        const PowerAllocation ref = pcgnn_forward_reference(model, graphs[i]);
        for (int j = 0; j < n; ++j) {
            const double rel = std::abs(fast.p[j] - ref.p[j]) /
                               std::max({std::abs(fast.p[j]), std::abs(ref.p[j]), 1e-300});
            max_dev = std::max(max_dev, rel);
        }
    }
    std::printf("batched vs reference forward: max relative deviation %.3e over %d snapshots\n",
                max_dev, batch);

    // Serial reference forward throughput.
    {
        const auto t0 = clk::now();
        double sink = 0.0;
        for (int r = 0; r < reps; ++r)
            for (int i = 0; i < batch; ++i) sink += pcgnn_forward_reference(model, graphs[i]).p[0];
        const double dt = seconds_since(t0);
        std::printf("reference forward : %8.2f snapshots/s   (sink %g)\n", reps * batch / dt,
                    sink);
    }
    // Batched forward throughput.
    {
        const auto t0 = clk::now();
        double sink = 0.0;
        for (int r = 0; r < reps; ++r)
            for (int i = 0; i < batch; ++i) sink += pcgnn_forward(model, graphs[i]).p[0];
        const double dt = seconds_since(t0);
        std::printf("batched forward   : %8.2f snapshots/s   (sink %g)\n", reps * batch / dt,
                    sink);
    }

    // Full forward+backward training step, single thread vs OpenMP.
    const double flops = snapshot_flops(model, n) * batch * reps;
    for (const int threads : {1, omp_get_max_threads()}) {
        omp_set_num_threads(threads);
        std::vector<Vec> grads(batch);
        const auto t0 = clk::now();
        for (int r = 0; r < reps; ++r) {
#pragma omp parallel for schedule(dynamic)
            for (int i = 0; i < batch; ++i) {
                ForwardTrace trace;
                pcgnn_forward(model, graphs[i], &trace);
                grads[i] = pcgnn_backward(model, trace, graphs[i], data.snapshots[i].gain, noise);
            }
        }
        const double dt = seconds_since(t0);
        std::printf("forward+backward  : %8.2f snapshots/s, %6.2f GFlop/s  (%d threads)\n",
                    reps * batch / dt, flops / dt / 1e9, threads);
        if (threads == omp_get_max_threads() && threads > 1) {
            // Determinism across thread counts: fixed-order reduction.
            Vec sum(grads[0].size(), 0.0);
            for (const Vec& g : grads)
                for (size_t j = 0; j < sum.size(); ++j) sum[j] += g[j];
            std::printf("gradient checksum : %.17g\n", sum[0]);
        }
    }
    return 0;
}
