#pragma once

#include <cstdint>
#include <vector>

#include "pcgnn/common.hpp"
#include "pcgnn/config.hpp"

namespace pcgnn {

/// Raised when rejection sampling cannot place controllers under the
/// min-separation constraint within the configured attempt budget.
struct placement_failure : std::runtime_error {
    explicit placement_failure(const std::string& what) : std::runtime_error(what) {}
};

/// One deployment realization. distance(m, n) is the Euclidean distance
/// from the device of subnetwork m to the controller of subnetwork n, so
/// the matrix is not symmetric. gain(m, n) is the linear power gain of
/// the same directed link.
struct Snapshot {
    std::vector<double> controller_x, controller_y;
    std::vector<double> device_x, device_y;
    Mat distance; // N x N, meters
    Mat gain;     // N x N, linear power gain
    uint64_t seed = 0;

    int n() const { return distance.rows(); }
};

struct PowerAllocation {
    Vec p; // watts, one entry per subnetwork

    int n() const { return static_cast<int>(p.size()); }
    bool feasible(double p_max, double slack = 0.0) const {
        for (double v : p)
            if (!(v >= -slack && v <= p_max + slack)) return false;
        return true;
    }
};

/// Controller + device placement and the distance matrix. Channel gains
/// are left empty; see sample_channel.
Snapshot sample_deployment(const SystemConfig& config, uint64_t seed);

/// Fills snapshot.gain from the distance matrix: free-space factor times
/// d^-r path loss, lognormal shadowing (std in dB) and Rayleigh fading,
/// drawn i.i.d. per ordered link in row-major order.
void sample_channel(Snapshot& snapshot, const SystemConfig& config, uint64_t seed);

/// Geometry + channel in one call; internal seeds derived from `seed`.
Snapshot make_snapshot(const SystemConfig& config, uint64_t seed);

/// Deterministic part of the link gain: c^2 / ((4 pi f)^2 d^r).
double pathloss_gain(double distance_m, double carrier_freq_hz, double pathloss_exponent);

/// Thermal noise power J*T*B*10^(NF/10) in watts.
double noise_power(const SystemConfig& config);

/// Shannon spectral efficiency of link n under allocation p (bits/s/Hz).
double link_se(int n, const Vec& p, const Mat& gain, double noise_w);

/// Network sum spectral efficiency (bits/s/Hz).
double sum_se(const Vec& p, const Mat& gain, double noise_w);

/// Exact gradient of sum_se with respect to every transmit power. Each
/// p_m enters every other link through the interference sum, so the
/// gradient couples all entries.
Vec sum_se_grad(const Vec& p, const Mat& gain, double noise_w);

} // namespace pcgnn
