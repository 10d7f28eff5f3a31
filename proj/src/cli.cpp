#include "pcgnn/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "pcgnn/rng.hpp"

namespace fs = std::filesystem;

namespace pcgnn {

int cmd_gen(const GenOptions& opts) {
    opts.config.validate();
    std::printf("generating %d snapshots (N=%d, seed=%llu, stream=%llu) -> %s\n", opts.count,
                opts.config.n_subnetworks, static_cast<unsigned long long>(opts.config.master_seed),
                static_cast<unsigned long long>(opts.stream), opts.out_dir.c_str());
    Dataset data =
        generate_dataset(opts.config, opts.config.master_seed, opts.stream, opts.count);
    save_dataset(opts.out_dir, data, opts.force);
    std::printf("wrote %d snapshots\n", data.count());
    return 0;
}

int cmd_train(const TrainOptions& opts) {
    const Dataset data = load_dataset(opts.data_dir);
    const std::string ckpt_path = opts.model_path + ".ckpt";
    const std::string history_path =
        opts.history_path.empty() ? opts.model_path + ".history.tsv" : opts.history_path;
    const uint64_t digest = config_digest(data.config);

    PcgnnModel model;
    TrainState state;
    if (opts.resume && fs::exists(ckpt_path)) {
        ModelFile mf = load_model(ckpt_path);
        if (mf.model.variant != opts.variant)
            throw std::runtime_error("checkpoint variant does not match requested variant");
        if (!mf.adam) throw std::runtime_error(ckpt_path + " carries no optimizer state");
        model = std::move(mf.model);
        state.adam = *mf.adam;
        state.epochs_done = mf.epochs_done;
        state.history = mf.history;
        std::printf("resuming %s from epoch %d\n", ckpt_path.c_str(), state.epochs_done);
    } else {
        model = make_model(opts.variant, opts.k_layers, data.config.max_power_w,
                           derive_seed(opts.schedule.seed, kStreamInit, 0));
    }

    auto write_checkpoint = [&]() {
        ModelFile mf;
        mf.model = model;
        mf.digest = digest;
        mf.adam = state.adam;
        mf.epochs_done = state.epochs_done;
        mf.history = state.history;
        save_model(ckpt_path, mf);
    };

    try {
        train(model, data, opts.schedule, state, [&](int epoch, double loss) {
            if (!opts.quiet && (epoch % 10 == 0 || epoch + 1 == opts.schedule.epochs))
                std::printf("epoch %4d  mean loss %.6f\n", epoch, loss);
            if (opts.checkpoint_every > 0 && (epoch + 1) % opts.checkpoint_every == 0)
                write_checkpoint();
        });
    } catch (const training_diverged& e) {
        write_checkpoint();
        std::fprintf(stderr, "%s\nlast-good checkpoint saved to %s\n", e.what(),
                     ckpt_path.c_str());
        return 3;
    }

    ModelFile mf;
    mf.model = model;
    mf.digest = digest;
    mf.history = state.history;
    save_model(opts.model_path, mf);
    write_history_tsv(history_path, state.history);
    if (fs::exists(ckpt_path)) fs::remove(ckpt_path);
    std::printf("trained %s model (%d epochs) -> %s\n", variant_name(model.variant).c_str(),
                state.epochs_done, opts.model_path.c_str());
    return 0;
}

int cmd_eval(const EvalOptions& opts) {
    const Dataset data = load_dataset(opts.data_dir);
    fs::create_directories(opts.out_dir);
    const fs::path out(opts.out_dir);

    std::vector<std::pair<std::string, std::vector<MetricsRecord>>> all;
    if (opts.run_max_power) all.emplace_back("max_power", evaluate_max_power(data));
    if (opts.run_wmmse) all.emplace_back("wmmse", evaluate_wmmse(data, opts.wmmse));

    const uint64_t data_digest = config_digest(data.config);
    for (const std::string& path : opts.model_paths) {
        ModelFile mf = load_model(path);
        if (mf.digest != data_digest)
            std::fprintf(stderr,
                         "warning: %s was trained under a different configuration than %s\n",
                         path.c_str(), opts.data_dir.c_str());
        const std::string name = "pcgnn_" + variant_name(mf.model.variant);
        all.emplace_back(name, evaluate_pcgnn(mf.model, data, name));
    }

    std::vector<SummaryRow> summary;
    for (const auto& [name, records] : all) {
        write_metrics_tsv((out / ("metrics_" + name + ".tsv")).string(), records);
        Vec se(records.size()), pw(records.size());
        for (size_t i = 0; i < records.size(); ++i) {
            se[i] = records[i].avg_se;
            pw[i] = records[i].avg_power_w;
        }
        write_cdf_tsv((out / ("cdf_avg_se_" + name + ".tsv")).string(), empirical_cdf(se));
        write_cdf_tsv((out / ("cdf_avg_power_" + name + ".tsv")).string(), empirical_cdf(pw));
        summary.push_back(
            {name, mean_avg_se(records), mean_avg_power(records), mean_iterations(records)});
    }
    write_summary_tsv((out / "summary.tsv").string(), summary);

    std::vector<GainRow> gains;
    for (const auto& [name_a, rec_a] : all)
        for (const auto& [name_b, rec_b] : all)
            if (name_a != name_b)
                gains.push_back({name_a, name_b, gain_vs_baseline(rec_a, rec_b)});
    write_gains_tsv((out / "gains.tsv").string(), gains);

    for (const auto& row : summary)
        std::printf("%-12s  mean avg SE %8.4f bits/s/Hz  mean power %.3e W  iters %.1f\n",
                    row.policy.c_str(), row.mean_avg_se, row.mean_avg_power_w,
                    row.mean_iterations);
    return 0;
}

int cmd_sweep(const SweepOptions& opts) {
    SweepSpec spec;
    spec.param = opts.param;
    spec.values = opts.values;
    spec.base = opts.base;
    spec.trained_value = opts.trained_value;
    spec.train_count = opts.train_count;
    spec.test_count = opts.test_count;
    spec.schedule = opts.schedule;
    spec.data_seed = opts.data_seed;
    spec.t2_variants = opts.t2_variants;

    std::vector<ModelFile> files;
    std::map<Variant, const PcgnnModel*> base_models;
    files.reserve(opts.base_model_paths.size());
    for (const std::string& path : opts.base_model_paths) {
        files.push_back(load_model(path));
        spec.t1_variants.push_back(files.back().model.variant);
    }
    for (const ModelFile& mf : files) base_models[mf.model.variant] = &mf.model;

    const auto entries = robustness_sweep(spec, base_models, [&](const std::string& msg) {
        if (!opts.quiet) std::printf("%s\n", msg.c_str());
    });
    write_sweep_tsv(opts.out_path, entries);
    for (const auto& e : entries)
        std::printf("value %8.1f  %s  %s  gain vs max power %+7.2f%%\n", e.value,
                    variant_name(e.variant).c_str(), e.protocol.c_str(), e.gain_pct);
    return 0;
}

int cmd_oracle(const OracleOptions& opts) {
    if (opts.config.n_subnetworks > 3)
        throw std::invalid_argument("oracle: N must be <= 3 (grid cost is grid^N)");
    const double noise_w = noise_power(opts.config);
    const double p_max = opts.config.max_power_w;

    std::string table = "snapshot\twmmse_sum_se\toracle_sum_se\tgap\twmmse_iterations\n";
    Vec gaps(opts.count);
    int wmmse_wins = 0;
    for (int i = 0; i < opts.count; ++i) {
        const Snapshot snap =
            make_snapshot(opts.config, derive_seed(opts.seed, kStreamTestData, i));
        const WmmseResult wm = wmmse(snap.gain, noise_w, p_max);
        const GridOracleResult oracle =
            grid_oracle(snap.gain, noise_w, p_max, opts.grid_points);
        const double wm_se = sum_se(wm.power.p, snap.gain, noise_w);
        const double gap = oracle.best_sum_se - wm_se;
        gaps[i] = gap;
        if (gap <= 0) ++wmmse_wins;
        table += std::to_string(i) + '\t' + format_double(wm_se) + '\t' +
                 format_double(oracle.best_sum_se) + '\t' + format_double(gap) + '\t' +
                 std::to_string(wm.iterations) + '\n';
    }
    if (!opts.out_path.empty()) atomic_write(opts.out_path, table);

    Vec sorted = gaps;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    std::printf("oracle comparison over %d snapshots (N=%d, grid=%d):\n", opts.count,
                opts.config.n_subnetworks, opts.grid_points);
    std::printf("  median gap (oracle - wmmse) %.3e bits/s/Hz, max %.3e, wmmse at/above oracle "
                "on %d/%d\n",
                median, sorted.back(), wmmse_wins, opts.count);
    return 0;
}

int cmd_gradcheck(const GradcheckOptions& opts) {
    SystemConfig config;
    config.n_subnetworks = opts.n_subnetworks;
    const double noise_w = noise_power(config);

    bool all_ok = true;
    for (const Variant variant : {Variant::hD, Variant::dD, Variant::hH}) {
        for (const int k : opts.k_values) {
            const Snapshot snap = make_snapshot(config, derive_seed(opts.seed, kStreamTestData, k));
            FeatureGraph graph = build_graph(snap, variant);
            const Normalizer norm = fit_normalizer({graph}, config.area_side_m);
            apply_normalizer(graph, norm);
            PcgnnModel model =
                make_model(variant, k, config.max_power_w, derive_seed(opts.seed, kStreamInit, k));
            model.normalizer = norm;
            const GradCheckResult res =
                gradcheck_model(model, graph, snap.gain, noise_w, opts.step, opts.rtol, opts.atol);
            std::printf("%s K=%d: %zu params, max rel err %.3e over %zu measurable grads, "
                        "max abs err %.3e -> %s\n",
                        variant_name(variant).c_str(), k, res.n_params, res.max_rel_err,
                        res.n_measurable, res.max_abs_err, res.ok() ? "ok" : "FAIL");
            all_ok = all_ok && res.ok();
        }
    }
    return all_ok ? 0 : 4;
}

} // namespace pcgnn
