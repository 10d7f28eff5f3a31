#include "pcgnn/train.hpp"

#include <cmath>
#include <numeric>

#include "pcgnn/rng.hpp"

namespace pcgnn {

Dataset generate_dataset(const SystemConfig& config, uint64_t master_seed, uint64_t stream,
                         int count) {
    config.validate();
    if (count < 1) throw std::invalid_argument("generate_dataset: count must be >= 1");
    Dataset d;
    d.config = config;
    d.master_seed = master_seed;
    d.seed_stream = stream;
    d.snapshots.resize(count);

    int first_fail = -1;
    std::string fail_msg;
#pragma omp parallel for schedule(dynamic, 16)
    for (int i = 0; i < count; ++i) {
        try {
            d.snapshots[i] = make_snapshot(config, derive_seed(master_seed, stream, i));
        } catch (const std::exception& e) {
#pragma omp critical
            if (first_fail < 0 || i < first_fail) {
                first_fail = i;
                fail_msg = e.what();
            }
        }
    }
    if (first_fail >= 0)
        throw placement_failure("snapshot " + std::to_string(first_fail) + ": " + fail_msg);
    return d;
}

void train(PcgnnModel& model, const Dataset& data, const TrainSchedule& schedule,
           TrainState& state, const std::function<void(int, double)>& on_epoch) {
    if (data.count() < 1) throw std::invalid_argument("train: empty dataset");
    if (schedule.batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");
    const int count = data.count();
    const double noise_w = noise_power(data.config);

    // Feature graphs are static across epochs; build and normalize once.
    std::vector<FeatureGraph> graphs(count);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < count; ++i) graphs[i] = build_graph(data.snapshots[i], model.variant);
    if (!model.normalizer.fitted) model.normalizer = fit_normalizer(graphs, data.config.area_side_m);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < count; ++i) apply_normalizer(graphs[i], model.normalizer);

    Vec params = model.gather_params();
    if (state.adam.m.size() != params.size()) {
        state.adam = AdamState::zeros(params.size());
        state.adam.lr = schedule.lr;
        state.adam.beta1 = schedule.beta1;
        state.adam.beta2 = schedule.beta2;
        state.adam.eps = schedule.eps;
    }

    std::vector<int> order(count);
    std::iota(order.begin(), order.end(), 0);
    const int max_batch = std::min(schedule.batch_size, count);
    std::vector<Vec> batch_grads(max_batch);
    std::vector<ForwardTrace> batch_traces(max_batch); // reused across batches
    Vec batch_losses(max_batch);
    Vec snapshot_losses(count); // per-snapshot, summed in index order
    Vec grad_sum(params.size());

    for (int epoch = state.epochs_done; epoch < schedule.epochs; ++epoch) {
        const Vec params_backup = params;
        const AdamState adam_backup = state.adam;

        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng(derive_seed(schedule.seed, kStreamShuffle, epoch));
        shuffle(order, shuffle_rng);

        bool finite = true;
        for (int start = 0; start < count && finite; start += schedule.batch_size) {
            const int bsz = std::min(schedule.batch_size, count - start);
#pragma omp parallel for schedule(dynamic)
            for (int b = 0; b < bsz; ++b) {
                const int i = order[start + b];
                ForwardTrace& trace = batch_traces[b];
                const PowerAllocation p = pcgnn_forward(model, graphs[i], &trace);
                batch_losses[b] = pcgnn_loss(p, data.snapshots[i].gain, noise_w);
                batch_grads[b] =
                    pcgnn_backward(model, trace, graphs[i], data.snapshots[i].gain, noise_w);
            }
            // Fixed-order reduction keeps runs reproducible under OpenMP.
            std::fill(grad_sum.begin(), grad_sum.end(), 0.0);
            double batch_loss = 0.0;
            for (int b = 0; b < bsz; ++b) {
                batch_loss += batch_losses[b];
                snapshot_losses[order[start + b]] = batch_losses[b];
                const Vec& g = batch_grads[b];
                for (size_t j = 0; j < grad_sum.size(); ++j) grad_sum[j] += g[j];
            }
            const double inv = 1.0 / static_cast<double>(bsz);
            for (double& g : grad_sum) g *= inv;
            if (!all_finite(grad_sum) || !std::isfinite(batch_loss)) {
                finite = false;
                break;
            }
            adam_step(params, grad_sum, state.adam);
            model.scatter_params(params);
        }

        if (!finite) {
            model.scatter_params(params_backup);
            params = params_backup;
            state.adam = adam_backup;
            throw training_diverged("train: non-finite loss in epoch " + std::to_string(epoch) +
                                    "; model restored to its state before this epoch");
        }

        // Epoch loss summed in snapshot order, so the reported history does
        // not depend on the shuffle.
        double epoch_loss = 0.0;
        for (int i = 0; i < count; ++i) epoch_loss += snapshot_losses[i];
        const double mean_loss = epoch_loss / static_cast<double>(count);
        state.history.push_back(mean_loss);
        state.epochs_done = epoch + 1;
        if (on_epoch) on_epoch(epoch, mean_loss);
    }
}

} // namespace pcgnn
