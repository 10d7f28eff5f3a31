#include "pcgnn/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace pcgnn {

PowerAllocation max_power(int n, double p_max) {
    PowerAllocation a;
    a.p.assign(n, p_max);
    return a;
}

WmmseResult wmmse(const Mat& gain, double noise_w, double p_max, WmmseOptions opts) {
    const int n = gain.rows();
    if (n < 1) throw std::invalid_argument("wmmse: empty gain matrix");
    if (opts.tol <= 0) throw std::invalid_argument("wmmse: tol must be > 0");

    // Amplitude-domain channel: g(m, j) = sqrt(h(m, j)).
    Mat g(n, n);
    for (int m = 0; m < n; ++m)
        for (int j = 0; j < n; ++j) {
            const double h = gain(m, j);
            if (!(h > 0.0) || !std::isfinite(h))
                throw std::invalid_argument("wmmse: gains must be positive and finite");
            g(m, j) = std::sqrt(h);
        }

    const double v_max = std::sqrt(p_max);
    Vec v(n, v_max), u(n), w(n);

    WmmseResult res;
    auto current_se = [&]() {
        Vec p(n);
        for (int i = 0; i < n; ++i) p[i] = v[i] * v[i];
        return sum_se(p, gain, noise_w);
    };

    double prev_se = current_se();
    res.trajectory.push_back(prev_se);

    for (int it = 1; it <= opts.max_iter; ++it) {
        // Receiver gains: MMSE estimate of the desired amplitude.
        for (int j = 0; j < n; ++j) {
            double denom = noise_w;
            for (int m = 0; m < n; ++m) denom += g(m, j) * g(m, j) * v[m] * v[m];
            u[j] = g(j, j) * v[j] / denom;
        }
        // Weights: 1 / (1 - u g v), floored away from the singularity.
        for (int j = 0; j < n; ++j) {
            const double e = std::max(1.0 - u[j] * g(j, j) * v[j], 1e-15);
            w[j] = 1.0 / e;
        }
        // Amplitudes, clipped to the feasible box.
        for (int i = 0; i < n; ++i) {
            double denom = 0.0;
            for (int m = 0; m < n; ++m) denom += w[m] * u[m] * u[m] * g(i, m) * g(i, m);
            const double vi = denom > 0.0 ? w[i] * u[i] * g(i, i) / denom : v_max;
            v[i] = std::clamp(vi, 0.0, v_max);
        }

        const double se = current_se();
        res.trajectory.push_back(se);
        res.iterations = it;
        if (std::abs(se - prev_se) < opts.tol) {
            res.converged = true;
            prev_se = se;
            break;
        }
        prev_se = se;
    }

    res.power.p.resize(n);
    for (int i = 0; i < n; ++i) res.power.p[i] = v[i] * v[i];
    return res;
}

GridOracleResult grid_oracle(const Mat& gain, double noise_w, double p_max, int grid_points) {
    const int n = gain.rows();
    if (n > 3) throw std::invalid_argument("grid_oracle: N must be <= 3");
    if (grid_points < 2) throw std::invalid_argument("grid_oracle: need >= 2 grid points");

    Vec levels(grid_points);
    for (int i = 0; i < grid_points; ++i)
        levels[i] = p_max * static_cast<double>(i) / static_cast<double>(grid_points - 1);

    GridOracleResult best;
    best.power.p.assign(n, 0.0);
    best.best_sum_se = -1.0;

    Vec p(n, 0.0);
    std::vector<int> idx(n, 0);
    for (;;) {
        for (int i = 0; i < n; ++i) p[i] = levels[idx[i]];
        const double se = sum_se(p, gain, noise_w);
        if (se > best.best_sum_se) {
            best.best_sum_se = se;
            best.power.p = p;
        }
        int pos = 0;
        while (pos < n && ++idx[pos] == grid_points) {
            idx[pos] = 0;
            ++pos;
        }
        if (pos == n) break;
    }
    return best;
}

} // namespace pcgnn
