#pragma once

#include <string>
#include <vector>

#include "pcgnn/io.hpp"

namespace pcgnn {

struct GenOptions {
    SystemConfig config;
    std::string out_dir;
    int count = 1000;
    uint64_t stream = kStreamTrainData;
    bool force = false;
};
int cmd_gen(const GenOptions& opts);

struct TrainOptions {
    std::string data_dir;
    std::string model_path;
    std::string history_path; // defaults to <model>.history.tsv
    Variant variant = Variant::hD;
    int k_layers = 3;
    TrainSchedule schedule;
    bool resume = false;
    int checkpoint_every = 25;
    bool quiet = false;
};
int cmd_train(const TrainOptions& opts);

struct EvalOptions {
    std::string data_dir;
    std::string out_dir;
    std::vector<std::string> model_paths;
    bool run_max_power = true;
    bool run_wmmse = true;
    WmmseOptions wmmse;
};
int cmd_eval(const EvalOptions& opts);

struct SweepOptions {
    SweepParam param = SweepParam::shadowing;
    std::vector<double> values;
    std::vector<std::string> base_model_paths; // evaluated under T1
    std::vector<Variant> t2_variants;          // retrained per grid value
    double trained_value = 0.0;                // grid value of the base models
    SystemConfig base;
    int train_count = 2000;
    int test_count = 5000;
    TrainSchedule schedule;
    uint64_t data_seed = 1;
    std::string out_path;
    bool quiet = false;
};
int cmd_sweep(const SweepOptions& opts);

struct OracleOptions {
    SystemConfig config; // n_subnetworks <= 3
    int count = 100;
    int grid_points = 1001;
    uint64_t seed = 1;
    std::string out_path;
};
int cmd_oracle(const OracleOptions& opts);

struct GradcheckOptions {
    int n_subnetworks = 4;
    std::vector<int> k_values = {1, 2, 3};
    uint64_t seed = 1;
    double step = 1e-6;
    double rtol = 1e-5;
    double atol = 1e-7;
};
int cmd_gradcheck(const GradcheckOptions& opts);

} // namespace pcgnn
