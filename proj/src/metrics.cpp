#include "pcgnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pcgnn/rng.hpp"

namespace pcgnn {

namespace {

MetricsRecord make_record(const std::string& policy, int id, const PowerAllocation& power,
                          const Snapshot& snapshot, double noise_w, double p_max) {
    if (!power.feasible(p_max))
        throw std::runtime_error("policy '" + policy + "' produced an infeasible power on snapshot " +
                                 std::to_string(id));
    const int n = snapshot.n();
    MetricsRecord r;
    r.policy = policy;
    r.snapshot_id = id;
    double se = 0.0, pw = 0.0;
    for (int i = 0; i < n; ++i) {
        se += link_se(i, power.p, snapshot.gain, noise_w);
        pw += power.p[i];
    }
    r.avg_se = se / n;
    r.avg_power_w = pw / n;
    return r;
}

} // namespace

std::vector<MetricsRecord> evaluate_max_power(const Dataset& data) {
    const double noise_w = noise_power(data.config);
    const double p_max = data.config.max_power_w;
    std::vector<MetricsRecord> out(data.count());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < data.count(); ++i) {
        const PowerAllocation p = max_power(data.snapshots[i].n(), p_max);
        out[i] = make_record("max_power", i, p, data.snapshots[i], noise_w, p_max);
    }
    return out;
}

std::vector<MetricsRecord> evaluate_wmmse(const Dataset& data, WmmseOptions opts) {
    const double noise_w = noise_power(data.config);
    const double p_max = data.config.max_power_w;
    std::vector<MetricsRecord> out(data.count());
#pragma omp parallel for schedule(dynamic, 8)
    for (int i = 0; i < data.count(); ++i) {
        const WmmseResult res = wmmse(data.snapshots[i].gain, noise_w, p_max, opts);
        out[i] = make_record("wmmse", i, res.power, data.snapshots[i], noise_w, p_max);
        out[i].iterations = res.iterations;
        out[i].converged = res.converged;
    }
    return out;
}

Snapshot redact_csi(const Snapshot& snapshot, Variant variant) {
    Snapshot s = snapshot;
    if (variant == Variant::hH) return s;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const int n = s.n();
    for (int m = 0; m < n; ++m)
        for (int j = 0; j < n; ++j)
            if (variant == Variant::dD || m != j) s.gain(m, j) = nan;
    return s;
}

std::vector<MetricsRecord> evaluate_pcgnn(const PcgnnModel& model, const Dataset& data,
                                          const std::string& policy_name) {
    if (!model.normalizer.fitted)
        throw std::invalid_argument("evaluate_pcgnn: model has no fitted normalizer");
    const double noise_w = noise_power(data.config);
    const double p_max = data.config.max_power_w;
    const std::string name =
        policy_name.empty() ? "pcgnn_" + variant_name(model.variant) : policy_name;
    std::vector<MetricsRecord> out(data.count());
#pragma omp parallel for schedule(dynamic, 8)
    for (int i = 0; i < data.count(); ++i) {
        // The policy decides powers from the redacted view; metrics use the
        // true gains afterwards.
        const Snapshot limited = redact_csi(data.snapshots[i], model.variant);
        FeatureGraph g = build_graph(limited, model.variant);
        apply_normalizer(g, model.normalizer);
        const PowerAllocation p = pcgnn_forward(model, g);
        out[i] = make_record(name, i, p, data.snapshots[i], noise_w, p_max);
    }
    return out;
}

std::vector<std::pair<double, double>> empirical_cdf(const Vec& values) {
    if (values.empty()) throw std::invalid_argument("empirical_cdf: empty input");
    Vec sorted = values;
    std::stable_sort(sorted.begin(), sorted.end());
    std::vector<std::pair<double, double>> cdf(sorted.size());
    const double n = static_cast<double>(sorted.size());
    for (size_t i = 0; i < sorted.size(); ++i)
        cdf[i] = {sorted[i], static_cast<double>(i + 1) / n};
    return cdf;
}

double mean_avg_se(const std::vector<MetricsRecord>& records) {
    if (records.empty()) throw std::invalid_argument("mean_avg_se: no records");
    double s = 0.0;
    for (const auto& r : records) s += r.avg_se;
    return s / static_cast<double>(records.size());
}

double mean_avg_power(const std::vector<MetricsRecord>& records) {
    if (records.empty()) throw std::invalid_argument("mean_avg_power: no records");
    double s = 0.0;
    for (const auto& r : records) s += r.avg_power_w;
    return s / static_cast<double>(records.size());
}

double mean_iterations(const std::vector<MetricsRecord>& records) {
    double s = 0.0;
    size_t n = 0;
    for (const auto& r : records)
        if (r.iterations >= 0) {
            s += r.iterations;
            ++n;
        }
    return n > 0 ? s / static_cast<double>(n) : 0.0;
}

double gain_vs_baseline(const std::vector<MetricsRecord>& records_a,
                        const std::vector<MetricsRecord>& records_b) {
    if (records_a.size() != records_b.size())
        throw std::invalid_argument("gain_vs_baseline: snapshot sets differ in size");
    for (size_t i = 0; i < records_a.size(); ++i)
        if (records_a[i].snapshot_id != records_b[i].snapshot_id)
            throw std::invalid_argument("gain_vs_baseline: snapshot sets are not aligned");
    const double mean_a = mean_avg_se(records_a);
    const double mean_b = mean_avg_se(records_b);
    return 100.0 * (mean_a - mean_b) / mean_b;
}

SystemConfig sweep_config(const SystemConfig& base, SweepParam param, double value) {
    SystemConfig cfg = base;
    if (param == SweepParam::shadowing) {
        cfg.shadowing_std_db = value;
    } else {
        const double area_km2 = (base.area_side_m / 1000.0) * (base.area_side_m / 1000.0);
        cfg.n_subnetworks = static_cast<int>(std::lround(value * area_km2));
        if (cfg.n_subnetworks < 1)
            throw std::invalid_argument("sweep_config: density too low for this area");
    }
    return cfg;
}

std::vector<SweepEntry> robustness_sweep(
    const SweepSpec& spec, const std::map<Variant, const PcgnnModel*>& base_models,
    const std::function<void(const std::string&)>& log) {
    if (spec.values.empty()) throw std::invalid_argument("robustness_sweep: empty grid");
    for (Variant v : spec.t1_variants)
        if (!base_models.count(v))
            throw std::invalid_argument("robustness_sweep: missing base model for T1 variant " +
                                        variant_name(v));

    std::vector<SweepEntry> entries;
    for (size_t vi = 0; vi < spec.values.size(); ++vi) {
        const double value = spec.values[vi];
        const SystemConfig cfg = sweep_config(spec.base, spec.param, value);
        const uint64_t master_v = derive_seed(spec.data_seed, kStreamSweepData, vi);
        if (log)
            log("sweep point " + std::to_string(value) + " (N=" +
                std::to_string(cfg.n_subnetworks) + ", shadowing " +
                std::to_string(cfg.shadowing_std_db) + " dB)");

        const Dataset test = generate_dataset(cfg, master_v, kStreamTestData, spec.test_count);
        const auto mp = evaluate_max_power(test);

        for (Variant v : spec.t1_variants) {
            const auto recs = evaluate_pcgnn(*base_models.at(v), test);
            entries.push_back({value, v, "T1", gain_vs_baseline(recs, mp)});
        }

        const bool at_trained_point =
            sweep_config(spec.base, spec.param, spec.trained_value).n_subnetworks ==
                cfg.n_subnetworks &&
            sweep_config(spec.base, spec.param, spec.trained_value).shadowing_std_db ==
                cfg.shadowing_std_db;
        for (Variant v : spec.t2_variants) {
            if (at_trained_point && base_models.count(v)) {
                // The base model is already trained at this grid value.
                const auto recs = evaluate_pcgnn(*base_models.at(v), test);
                entries.push_back({value, v, "T2", gain_vs_baseline(recs, mp)});
                continue;
            }
            const Dataset train_set =
                generate_dataset(cfg, master_v, kStreamTrainData, spec.train_count);
            PcgnnModel model = make_model(v, 3, cfg.max_power_w,
                                          derive_seed(spec.schedule.seed, kStreamInit, 100 + vi));
            TrainSchedule sched = spec.schedule;
            sched.seed = derive_seed(spec.schedule.seed, kStreamShuffle, 100 + vi);
            TrainState state;
            if (log) log("  training T2 " + variant_name(v) + " model...");
            train(model, train_set, sched, state);
            const auto recs = evaluate_pcgnn(model, test);
            entries.push_back({value, v, "T2", gain_vs_baseline(recs, mp)});
        }
    }
    return entries;
}

} // namespace pcgnn
