#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pcgnn/metrics.hpp"
#include "pcgnn/model.hpp"
#include "pcgnn/train.hpp"

namespace pcgnn {

/// Shortest exact decimal form of a double ("%.17g"); parsing it back
/// recovers the same bits, so written files round-trip byte-identically.
std::string format_double(double v);

/// Write-temp-then-rename so readers never observe partial files.
void atomic_write(const std::string& path, const std::string& content);

/// FNV-1a over the canonical system-config text; stored in model files at
/// training time and compared against the dataset config at evaluation.
uint64_t config_digest(const SystemConfig& config);

// ---- dataset files -------------------------------------------------------
// <dir>/manifest.json   config, seeds, count, format version
// <dir>/snapshots.tsv   one row per snapshot:
//   index  seed  ctrl_x[N]  ctrl_y[N]  dev_x[N]  dev_y[N]  D row-major  H row-major

void save_dataset(const std::string& dir, const Dataset& data, bool force = false);
Dataset load_dataset(const std::string& dir);

// ---- model files ----------------------------------------------------------

struct ModelFile {
    PcgnnModel model;
    uint64_t digest = 0;
    // Checkpoint extras; absent in final model files.
    std::optional<AdamState> adam;
    int epochs_done = 0;
    Vec history;
};

void save_model(const std::string& path, const ModelFile& mf);
ModelFile load_model(const std::string& path);

// ---- result tables ---------------------------------------------------------

void write_metrics_tsv(const std::string& path, const std::vector<MetricsRecord>& records);
void write_cdf_tsv(const std::string& path, const std::vector<std::pair<double, double>>& cdf);
void write_history_tsv(const std::string& path, const Vec& history);
void write_sweep_tsv(const std::string& path, const std::vector<SweepEntry>& entries);

struct SummaryRow {
    std::string policy;
    double mean_avg_se = 0.0;
    double mean_avg_power_w = 0.0;
    double mean_iterations = 0.0;
};
void write_summary_tsv(const std::string& path, const std::vector<SummaryRow>& rows);

struct GainRow {
    std::string policy_a, policy_b;
    double gain_pct = 0.0;
};
void write_gains_tsv(const std::string& path, const std::vector<GainRow>& rows);

} // namespace pcgnn
