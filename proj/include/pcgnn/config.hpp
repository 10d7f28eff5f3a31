#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pcgnn {

inline constexpr double kBoltzmann = 1.380649e-23; // J/K
inline constexpr double kSpeedOfLight = 2.99792458e8; // m/s

/// Deployment and radio parameters for one simulated factory hall.
/// Defaults are the baseline configuration used throughout.
struct SystemConfig {
    int n_subnetworks = 20;
    double area_side_m = 20.0;
    double cell_radius_m = 2.0;
    double min_controller_separation_m = 2.0;
    double min_device_distance_m = 0.5;
    double shadowing_std_db = 7.0;
    double pathloss_exponent = 2.7;
    double max_power_w = 1e-3; // 0 dBm
    double bandwidth_hz = 20e6;
    double carrier_freq_hz = 6e9;
    double noise_figure_db = 10.0;
    double temperature_k = 290.0;
    uint64_t master_seed = 1;

    // Attempt budget for min-separation controller placement, per snapshot.
    int placement_attempt_cap = 10000;

    void validate() const {
        if (n_subnetworks < 1) throw std::invalid_argument("config: N must be >= 1");
        if (area_side_m <= 0) throw std::invalid_argument("config: area side must be > 0");
        if (min_device_distance_m <= 0 || min_device_distance_m > cell_radius_m)
            throw std::invalid_argument("config: need 0 < min device distance <= cell radius");
        if (min_controller_separation_m < 0)
            throw std::invalid_argument("config: controller separation must be >= 0");
        if (shadowing_std_db < 0) throw std::invalid_argument("config: shadowing std must be >= 0");
        if (pathloss_exponent <= 0) throw std::invalid_argument("config: pathloss exponent must be > 0");
        if (max_power_w <= 0) throw std::invalid_argument("config: max power must be > 0");
        if (bandwidth_hz <= 0) throw std::invalid_argument("config: bandwidth must be > 0");
        if (carrier_freq_hz <= 0) throw std::invalid_argument("config: carrier frequency must be > 0");
        if (temperature_k <= 0) throw std::invalid_argument("config: temperature must be > 0");
    }

    /// Subnetworks per km^2 implied by N and the area.
    double density_per_km2() const {
        const double area_km2 = (area_side_m / 1000.0) * (area_side_m / 1000.0);
        return n_subnetworks / area_km2;
    }
};

/// Seed streams: all randomness in the project flows from
/// derive_seed(master, stream, index) with these stream tags.
enum SeedStream : uint64_t {
    kStreamTrainData = 0,
    kStreamTestData = 1,
    kStreamGeometry = 2,
    kStreamChannel = 3,
    kStreamInit = 4,
    kStreamShuffle = 5,
    kStreamSweepData = 6,
};

} // namespace pcgnn
