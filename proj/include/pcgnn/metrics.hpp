#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pcgnn/baselines.hpp"
#include "pcgnn/train.hpp"

namespace pcgnn {

/// Per-snapshot outcome of one policy: link-averaged spectral efficiency
/// and link-averaged transmit power, plus solver iterations when relevant.
struct MetricsRecord {
    std::string policy;
    int snapshot_id = 0;
    double avg_se = 0.0;      // bits/s/Hz, mean over the N links
    double avg_power_w = 0.0; // watts, mean over the N links
    int iterations = -1;      // WMMSE only
    bool converged = true;
};

std::vector<MetricsRecord> evaluate_max_power(const Dataset& data);
std::vector<MetricsRecord> evaluate_wmmse(const Dataset& data, WmmseOptions opts = {});

/// Runs the model on every snapshot. For limited-CSI variants (hD, dD) the
/// policy sees a redacted snapshot whose unavailable gain entries are NaN,
/// so any read of hidden CSI poisons the output and trips the feasibility
/// check instead of passing silently.
std::vector<MetricsRecord> evaluate_pcgnn(const PcgnnModel& model, const Dataset& data,
                                          const std::string& policy_name = "");

/// Copy of a snapshot with every gain entry the variant may not read
/// replaced by NaN (hD: off-diagonal; dD: all; hH: none).
Snapshot redact_csi(const Snapshot& snapshot, Variant variant);

/// Right-continuous empirical CDF: sorted (value, probability) pairs.
std::vector<std::pair<double, double>> empirical_cdf(const Vec& values);

double mean_avg_se(const std::vector<MetricsRecord>& records);
double mean_avg_power(const std::vector<MetricsRecord>& records);
double mean_iterations(const std::vector<MetricsRecord>& records);

/// Percent gain of a's mean average SE over b's, on the same snapshot set.
double gain_vs_baseline(const std::vector<MetricsRecord>& records_a,
                        const std::vector<MetricsRecord>& records_b);

enum class SweepParam { shadowing, density };

/// Robustness protocol: T1 evaluates the base models across the grid,
/// T2 retrains at each grid value before evaluating there.
struct SweepSpec {
    SweepParam param = SweepParam::shadowing;
    std::vector<double> values; // dB, or subnetworks per km^2
    SystemConfig base;
    double trained_value = 0.0; // grid value the base models were trained at
    int train_count = 2000;
    int test_count = 5000;
    TrainSchedule schedule;
    uint64_t data_seed = 1;
    std::vector<Variant> t1_variants;
    std::vector<Variant> t2_variants;
};

struct SweepEntry {
    double value = 0.0;
    Variant variant = Variant::hD;
    std::string protocol; // "T1" or "T2"
    double gain_pct = 0.0; // mean average-SE gain vs max power
};

SystemConfig sweep_config(const SystemConfig& base, SweepParam param, double value);

std::vector<SweepEntry> robustness_sweep(
    const SweepSpec& spec, const std::map<Variant, const PcgnnModel*>& base_models,
    const std::function<void(const std::string&)>& log = {});

} // namespace pcgnn
