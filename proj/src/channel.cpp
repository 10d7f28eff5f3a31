#include "pcgnn/channel.hpp"

#include <cmath>
#include <numbers>

#include "pcgnn/rng.hpp"

namespace pcgnn {

Snapshot sample_deployment(const SystemConfig& config, uint64_t seed) {
    config.validate();
    const int n = config.n_subnetworks;
    const double l = config.area_side_m;
    const double min_sep2 =
        config.min_controller_separation_m * config.min_controller_separation_m;

    Rng rng(seed);
    Snapshot s;
    s.seed = seed;
    s.controller_x.resize(n);
    s.controller_y.resize(n);
    s.device_x.resize(n);
    s.device_y.resize(n);

    // Controllers: uniform in the hall, min mutual separation enforced by
    // redrawing the offending controller. The attempt budget is shared
    // across the whole snapshot so infeasible densities fail loudly.
    int attempts = 0;
    for (int i = 0; i < n; ++i) {
        for (;;) {
            if (++attempts > config.placement_attempt_cap)
                throw placement_failure(
                    "controller placement exceeded " +
                    std::to_string(config.placement_attempt_cap) + " attempts (N=" +
                    std::to_string(n) + ", area=" + std::to_string(l) + ")");
            const double x = rng.uniform(0.0, l);
            const double y = rng.uniform(0.0, l);
            bool ok = true;
            for (int j = 0; j < i; ++j) {
                const double dx = x - s.controller_x[j];
                const double dy = y - s.controller_y[j];
                if (dx * dx + dy * dy < min_sep2) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                s.controller_x[i] = x;
                s.controller_y[i] = y;
                break;
            }
        }
    }

    // One device per subnetwork: uniform angle, uniform radial distance in
    // [min_device_distance, R]. Devices may land outside the hall; only
    // distances matter downstream.
    for (int i = 0; i < n; ++i) {
        const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double r = rng.uniform(config.min_device_distance_m, config.cell_radius_m);
        s.device_x[i] = s.controller_x[i] + r * std::cos(theta);
        s.device_y[i] = s.controller_y[i] + r * std::sin(theta);
    }

    s.distance = Mat(n, n);
    for (int m = 0; m < n; ++m)
        for (int j = 0; j < n; ++j) {
            const double dx = s.device_x[m] - s.controller_x[j];
            const double dy = s.device_y[m] - s.controller_y[j];
            s.distance(m, j) = std::sqrt(dx * dx + dy * dy);
        }
    return s;
}

double pathloss_gain(double distance_m, double carrier_freq_hz, double pathloss_exponent) {
    const double fs = 4.0 * std::numbers::pi * carrier_freq_hz;
    return kSpeedOfLight * kSpeedOfLight /
           (fs * fs * std::pow(distance_m, pathloss_exponent));
}

void sample_channel(Snapshot& snapshot, const SystemConfig& config, uint64_t seed) {
    const int n = snapshot.n();
    if (n == 0) throw std::invalid_argument("sample_channel: empty geometry");
    Rng rng(seed);
    snapshot.gain = Mat(n, n);
    const double inv_sqrt2 = std::sqrt(0.5);
    for (int m = 0; m < n; ++m) {
        for (int j = 0; j < n; ++j) {
            const double d = snapshot.distance(m, j);
            if (!(d > 0.0)) throw std::invalid_argument("sample_channel: nonpositive distance");
            // Shadowing: dB-domain Normal(0, lambda^2), i.e. kappa = 10^(X/10).
            const double kappa = db_to_linear(config.shadowing_std_db * rng.normal());
            // Rayleigh fading: |zeta|^2 with zeta ~ CN(0, 1).
            const double re = rng.normal() * inv_sqrt2;
            const double im = rng.normal() * inv_sqrt2;
            const double fading = re * re + im * im;
            snapshot.gain(m, j) =
                pathloss_gain(d, config.carrier_freq_hz, config.pathloss_exponent) *
                kappa * fading;
        }
    }
}

Snapshot make_snapshot(const SystemConfig& config, uint64_t seed) {
    Snapshot s = sample_deployment(config, derive_seed(seed, kStreamGeometry, 0));
    sample_channel(s, config, derive_seed(seed, kStreamChannel, 0));
    s.seed = seed;
    return s;
}

double noise_power(const SystemConfig& config) {
    return kBoltzmann * config.temperature_k * config.bandwidth_hz *
           db_to_linear(config.noise_figure_db);
}

double link_se(int n, const Vec& p, const Mat& gain, double noise_w) {
    double interference = 0.0;
    const int count = gain.rows();
    for (int m = 0; m < count; ++m)
        if (m != n) interference += p[m] * gain(m, n);
    const double sinr = p[n] * gain(n, n) / (interference + noise_w);
    return std::log2(1.0 + sinr);
}

double sum_se(const Vec& p, const Mat& gain, double noise_w) {
    double total = 0.0;
    for (int n = 0; n < gain.rows(); ++n) total += link_se(n, p, gain, noise_w);
    return total;
}

Vec sum_se_grad(const Vec& p, const Mat& gain, double noise_w) {
    const int n = gain.rows();
    constexpr double inv_ln2 = 1.4426950408889634074;
    // Per-receiver signal and interference-plus-noise terms.
    Vec sig(n), ipn(n);
    for (int j = 0; j < n; ++j) {
        double interference = 0.0;
        for (int m = 0; m < n; ++m)
            if (m != j) interference += p[m] * gain(m, j);
        sig[j] = p[j] * gain(j, j);
        ipn[j] = interference + noise_w;
    }
    Vec grad(n, 0.0);
    for (int q = 0; q < n; ++q) {
        double g = gain(q, q) / (ipn[q] + sig[q]);
        for (int j = 0; j < n; ++j) {
            if (j == q) continue;
            // Raising p_q adds interference at receiver j.
            g -= gain(q, j) * sig[j] / (ipn[j] * (ipn[j] + sig[j]));
        }
        grad[q] = inv_ln2 * g;
    }
    return grad;
}

} // namespace pcgnn
