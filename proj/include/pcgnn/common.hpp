#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcgnn {

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles. Sized for N <= a few hundred;
/// everything in this project fits comfortably in memory. Owns a raw
/// buffer so reshape() can reuse or grow capacity without zero-filling.
class Mat {
public:
    Mat() = default;
    Mat(int rows, int cols, double fill = 0.0) {
        reshape(rows, cols);
        this->fill(fill);
    }
    Mat(const Mat& o) { *this = o; }
    Mat& operator=(const Mat& o) {
        if (this != &o) {
            reshape(o.rows_, o.cols_);
            std::copy(o.data(), o.data() + o.size(), d_.get());
        }
        return *this;
    }
    Mat(Mat&&) noexcept = default;
    Mat& operator=(Mat&&) noexcept = default;

    double& operator()(int r, int c) {
        assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
        return d_[static_cast<size_t>(r) * cols_ + c];
    }
    double operator()(int r, int c) const {
        assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
        return d_[static_cast<size_t>(r) * cols_ + c];
    }

    double* row(int r) { return d_.get() + static_cast<size_t>(r) * cols_; }
    const double* row(int r) const { return d_.get() + static_cast<size_t>(r) * cols_; }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return static_cast<size_t>(rows_) * cols_; }
    double* data() { return d_.get(); }
    const double* data() const { return d_.get(); }
    void fill(double v) { std::fill(d_.get(), d_.get() + size(), v); }

    /// Resize reusing existing capacity when possible. Contents are
    /// unspecified afterwards; callers overwrite every entry.
    void reshape(int rows, int cols) {
        const size_t need = static_cast<size_t>(rows) * cols;
        if (need > cap_) {
            d_ = std::make_unique_for_overwrite<double[]>(need);
            cap_ = need;
        }
        rows_ = rows;
        cols_ = cols;
    }

    bool operator==(const Mat& o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_) return false;
        return std::equal(data(), data() + size(), o.data());
    }

private:
    int rows_ = 0, cols_ = 0;
    size_t cap_ = 0;
    std::unique_ptr<double[]> d_;
};

inline bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const Mat& m) {
    for (size_t i = 0; i < m.size(); ++i)
        if (!std::isfinite(m.data()[i])) return false;
    return true;
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

} // namespace pcgnn
