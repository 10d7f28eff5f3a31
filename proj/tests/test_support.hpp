#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "pcgnn/channel.hpp"
#include "pcgnn/config.hpp"

namespace testutil {

inline bool close(double a, double b, double rtol, double atol = 0.0) {
    return std::abs(a - b) <= atol + rtol * std::max(std::abs(a), std::abs(b));
}

/// Unique fresh directory under the system temp root.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        namespace fs = std::filesystem;
        path_ = (fs::temp_directory_path() / ("pcgnn_test_" + tag + "_" +
                                              std::to_string(::getpid()))).string();
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::string& path() const { return path_; }
    std::string sub(const std::string& name) const { return path_ + "/" + name; }

private:
    std::string path_;
};

inline pcgnn::SystemConfig small_config(int n) {
    pcgnn::SystemConfig cfg;
    cfg.n_subnetworks = n;
    return cfg;
}

} // namespace testutil
