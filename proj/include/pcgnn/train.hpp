#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pcgnn/channel.hpp"
#include "pcgnn/model.hpp"

namespace pcgnn {

/// In-memory snapshot collection plus the seeds that produced it.
struct Dataset {
    SystemConfig config;
    uint64_t master_seed = 0;
    uint64_t seed_stream = kStreamTrainData;
    std::vector<Snapshot> snapshots;

    int count() const { return static_cast<int>(snapshots.size()); }
};

/// Snapshot i comes from derive_seed(master, stream, i), so generation is
/// order-free and parallelized across snapshots.
Dataset generate_dataset(const SystemConfig& config, uint64_t master_seed, uint64_t stream,
                         int count);

struct TrainSchedule {
    int epochs = 300;
    int batch_size = 64;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    uint64_t seed = 1;
};

/// Mutable optimizer/progress state, carried across resumes.
struct TrainState {
    AdamState adam;
    int epochs_done = 0;
    Vec history; // mean per-snapshot loss per epoch
};

/// Raised when an epoch produces a non-finite loss or gradient; the model
/// is restored to the last completed epoch before this is thrown.
struct training_diverged : std::runtime_error {
    explicit training_diverged(const std::string& what) : std::runtime_error(what) {}
};

/// Mini-batch ADAM on the negated sum spectral efficiency. Fits the
/// model's normalizer on `data` when it is not fitted yet. Per-snapshot
/// gradients are computed in parallel and reduced in snapshot order, so a
/// given seed reproduces the run bit-exactly at any thread count.
/// `on_epoch(epoch_index, mean_loss)` fires after every epoch.
void train(PcgnnModel& model, const Dataset& data, const TrainSchedule& schedule,
           TrainState& state,
           const std::function<void(int, double)>& on_epoch = {});

} // namespace pcgnn
