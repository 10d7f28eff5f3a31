#pragma once

#include <vector>

#include "pcgnn/channel.hpp"
#include "pcgnn/common.hpp"

namespace pcgnn {

/// Everybody transmits at P_max.
PowerAllocation max_power(int n, double p_max);

struct WmmseOptions {
    double tol = 1e-5;  // stop when the sum-SE step falls below this
    int max_iter = 500; // safety cap; typical runs converge in ~10
};

struct WmmseResult {
    PowerAllocation power;
    int iterations = 0;
    bool converged = false;
    Vec trajectory; // sum SE after each full (u, w, v) round
};

/// Scalar-channel WMMSE with block-coordinate updates on receiver gains u,
/// weights w and amplitudes v = sqrt(p), initialized at full power. The
/// sum-SE trajectory is non-decreasing up to numerical noise.
WmmseResult wmmse(const Mat& gain, double noise_w, double p_max, WmmseOptions opts = {});

struct GridOracleResult {
    PowerAllocation power;
    double best_sum_se = 0.0;
};

/// Exhaustive search over the uniform per-link power grid (endpoints 0 and
/// P_max included). Verification oracle; cost is grid_points^N, so N <= 3.
GridOracleResult grid_oracle(const Mat& gain, double noise_w, double p_max, int grid_points);

} // namespace pcgnn
