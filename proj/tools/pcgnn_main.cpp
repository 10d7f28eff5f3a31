#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pcgnn/cli.hpp"

namespace {

/// Flags mirroring the deployment parameter table. Powers are given in
/// dBm on the command line and stored in watts.
void add_config_flags(CLI::App* app, pcgnn::SystemConfig* cfg, double* max_power_dbm) {
    app->add_option("--n", cfg->n_subnetworks, "Number of subnetworks per snapshot");
    app->add_option("--area-side", cfg->area_side_m, "Factory area side L (m)");
    app->add_option("--cell-radius", cfg->cell_radius_m, "Subnetwork radius R (m)");
    app->add_option("--min-controller-sep", cfg->min_controller_separation_m,
                    "Minimum distance between controllers (m)");
    app->add_option("--min-device-dist", cfg->min_device_distance_m,
                    "Sensor to controller minimum distance (m)");
    app->add_option("--shadowing-std", cfg->shadowing_std_db,
                    "Shadowing standard deviation (dB)");
    app->add_option("--pathloss-exp", cfg->pathloss_exponent, "Path loss exponent r");
    app->add_option("--max-power-dbm", *max_power_dbm, "Maximum transmit power (dBm)");
    app->add_option("--bandwidth", cfg->bandwidth_hz, "Bandwidth B (Hz)");
    app->add_option("--carrier-freq", cfg->carrier_freq_hz, "Center frequency f (Hz)");
    app->add_option("--noise-figure", cfg->noise_figure_db, "Noise figure NF (dB)");
    app->add_option("--temperature", cfg->temperature_k, "Noise temperature T (K)");
}

void add_schedule_flags(CLI::App* app, pcgnn::TrainSchedule* sched) {
    app->add_option("--epochs", sched->epochs, "Training epochs");
    app->add_option("--batch", sched->batch_size, "Mini-batch size");
    app->add_option("--lr", sched->lr, "ADAM learning rate");
    app->add_option("--beta1", sched->beta1, "ADAM beta1");
    app->add_option("--beta2", sched->beta2, "ADAM beta2");
    app->add_option("--adam-eps", sched->eps, "ADAM epsilon");
    app->add_option("--train-seed", sched->seed, "Training seed (init + shuffling)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Power control for dense wireless subnetworks: simulator, GNN policy "
                 "training and benchmarks"};
    app.require_subcommand(1);

    // gen ------------------------------------------------------------------
    pcgnn::GenOptions gen;
    double gen_pmax_dbm = 0.0;
    CLI::App* gen_cmd = app.add_subcommand("gen", "Generate a snapshot dataset");
    gen_cmd->add_option("--out", gen.out_dir, "Output dataset directory")->required();
    gen_cmd->add_option("--count", gen.count, "Snapshots to generate")->required();
    gen_cmd->add_option("--seed", gen.config.master_seed, "Master seed");
    gen_cmd->add_option("--stream", gen.stream,
                        "Seed stream (0 train, 1 test; keeps splits disjoint)");
    gen_cmd->add_flag("--force", gen.force, "Overwrite an existing dataset");
    add_config_flags(gen_cmd, &gen.config, &gen_pmax_dbm);

    // train ----------------------------------------------------------------
    pcgnn::TrainOptions tr;
    std::string tr_variant = "hD";
    CLI::App* train_cmd = app.add_subcommand("train", "Train a power-control model");
    train_cmd->add_option("--data", tr.data_dir, "Training dataset directory")->required();
    train_cmd->add_option("--out", tr.model_path, "Output model file")->required();
    train_cmd->add_option("--variant", tr_variant, "Graph variant: hD, dD or hH");
    train_cmd->add_option("--layers", tr.k_layers, "Message-passing layers K");
    train_cmd->add_option("--history", tr.history_path, "Loss history output path");
    train_cmd->add_option("--checkpoint-every", tr.checkpoint_every,
                          "Checkpoint interval in epochs (0 disables)");
    train_cmd->add_flag("--resume", tr.resume, "Resume from <out>.ckpt if present");
    train_cmd->add_flag("--quiet", tr.quiet, "Suppress per-epoch output");
    add_schedule_flags(train_cmd, &tr.schedule);

    // eval -----------------------------------------------------------------
    pcgnn::EvalOptions ev;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate policies on a test dataset");
    eval_cmd->add_option("--data", ev.data_dir, "Test dataset directory")->required();
    eval_cmd->add_option("--out", ev.out_dir, "Output directory for result tables")->required();
    eval_cmd->add_option("--model", ev.model_paths, "Model file (repeatable)");
    eval_cmd->add_flag("!--no-max-power", ev.run_max_power, "Skip the max-power baseline");
    eval_cmd->add_flag("!--no-wmmse", ev.run_wmmse, "Skip the WMMSE baseline");
    eval_cmd->add_option("--wmmse-tol", ev.wmmse.tol, "WMMSE sum-SE stop threshold");
    eval_cmd->add_option("--wmmse-max-iter", ev.wmmse.max_iter, "WMMSE iteration cap");

    // sweep ------------------------------------------------------------------
    pcgnn::SweepOptions sw;
    std::string sw_param = "shadowing";
    std::vector<std::string> sw_t2;
    double sw_pmax_dbm = 0.0;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "Robustness sweep (T1/T2 protocols)");
    sweep_cmd->add_option("--param", sw_param, "Swept parameter: shadowing or density");
    sweep_cmd->add_option("--values", sw.values, "Grid values (dB or subnetworks/km^2)")
        ->required();
    sweep_cmd->add_option("--model", sw.base_model_paths, "Base model for T1 (repeatable)")
        ->required();
    sweep_cmd->add_option("--t2-variant", sw_t2, "Variant to retrain per value (repeatable)");
    sweep_cmd->add_option("--trained-value", sw.trained_value,
                          "Grid value the base models were trained at");
    sweep_cmd->add_option("--train-count", sw.train_count, "T2 training snapshots per value");
    sweep_cmd->add_option("--test-count", sw.test_count, "Test snapshots per value");
    sweep_cmd->add_option("--data-seed", sw.data_seed, "Seed for sweep datasets");
    sweep_cmd->add_option("--out", sw.out_path, "Output sweep table")->required();
    sweep_cmd->add_flag("--quiet", sw.quiet, "Suppress progress output");
    add_config_flags(sweep_cmd, &sw.base, &sw_pmax_dbm);
    add_schedule_flags(sweep_cmd, &sw.schedule);

    // oracle -----------------------------------------------------------------
    pcgnn::OracleOptions orc;
    double orc_pmax_dbm = 0.0;
    CLI::App* oracle_cmd =
        app.add_subcommand("oracle", "Compare WMMSE against the exhaustive power grid (N <= 3)");
    orc.config.n_subnetworks = 2;
    oracle_cmd->add_option("--count", orc.count, "Snapshots to verify");
    oracle_cmd->add_option("--grid", orc.grid_points, "Grid points per link");
    oracle_cmd->add_option("--seed", orc.seed, "Snapshot seed");
    oracle_cmd->add_option("--out", orc.out_path, "Optional per-snapshot gap table");
    add_config_flags(oracle_cmd, &orc.config, &orc_pmax_dbm);

    // gradcheck ----------------------------------------------------------------
    pcgnn::GradcheckOptions gc;
    CLI::App* gradcheck_cmd =
        app.add_subcommand("gradcheck", "Finite-difference check of the model gradients");
    gradcheck_cmd->add_option("--n", gc.n_subnetworks, "Snapshot size N");
    gradcheck_cmd->add_option("--k", gc.k_values, "Layer counts to check (repeatable)");
    gradcheck_cmd->add_option("--seed", gc.seed, "Seed");
    gradcheck_cmd->add_option("--rtol", gc.rtol, "Relative tolerance");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen_cmd->parsed()) {
            if (gen_cmd->count("--max-power-dbm")) gen.config.max_power_w = pcgnn::dbm_to_watt(gen_pmax_dbm);
            return pcgnn::cmd_gen(gen);
        }
        if (train_cmd->parsed()) {
            tr.variant = pcgnn::variant_from_name(tr_variant);
            return pcgnn::cmd_train(tr);
        }
        if (eval_cmd->parsed()) return pcgnn::cmd_eval(ev);
        if (sweep_cmd->parsed()) {
            if (sw_param == "shadowing")
                sw.param = pcgnn::SweepParam::shadowing;
            else if (sw_param == "density")
                sw.param = pcgnn::SweepParam::density;
            else
                throw std::invalid_argument("sweep --param must be 'shadowing' or 'density'");
            if (sweep_cmd->count("--max-power-dbm"))
                sw.base.max_power_w = pcgnn::dbm_to_watt(sw_pmax_dbm);
            if (!sweep_cmd->count("--trained-value"))
                sw.trained_value = sw.param == pcgnn::SweepParam::shadowing
                                       ? sw.base.shadowing_std_db
                                       : sw.base.density_per_km2();
            for (const std::string& v : sw_t2)
                sw.t2_variants.push_back(pcgnn::variant_from_name(v));
            return pcgnn::cmd_sweep(sw);
        }
        if (oracle_cmd->parsed()) {
            if (oracle_cmd->count("--max-power-dbm"))
                orc.config.max_power_w = pcgnn::dbm_to_watt(orc_pmax_dbm);
            return pcgnn::cmd_oracle(orc);
        }
        if (gradcheck_cmd->parsed()) return pcgnn::cmd_gradcheck(gc);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
