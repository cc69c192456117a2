#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "echelon/matrix.hpp"

namespace echelon {

/// Per-column min-max scaler. Extrema are taken over the fitting rows only;
/// rows transformed later may land outside [0, 1] and are left there —
/// clamping would erase trend information. A degenerate column (max == min)
/// always maps to 0.
class MinMaxScaler {
public:
    MinMaxScaler() = default;

    void fit(const Matrix& data, std::size_t row_begin, std::size_t row_end) {
        if (row_begin >= row_end || row_end > data.rows())
            throw std::invalid_argument("MinMaxScaler::fit: empty training range");
        min_.assign(data.cols(), 0.0);
        max_.assign(data.cols(), 0.0);
        for (std::size_t c = 0; c < data.cols(); ++c) {
            double lo = data(row_begin, c), hi = data(row_begin, c);
            for (std::size_t r = row_begin + 1; r < row_end; ++r) {
                lo = std::min(lo, data(r, c));
                hi = std::max(hi, data(r, c));
            }
            min_[c] = lo;
            max_[c] = hi;
        }
    }

    double transform_value(double v, std::size_t col) const {
        const double span = max_[col] - min_[col];
        return span == 0.0 ? 0.0 : (v - min_[col]) / span;
    }

    double inverse_value(double v, std::size_t col) const {
        return min_[col] + v * (max_[col] - min_[col]);
    }

    Matrix transform(const Matrix& data) const {
        check_dim(data.cols());
        Matrix out(data.rows(), data.cols());
        for (std::size_t r = 0; r < data.rows(); ++r)
            for (std::size_t c = 0; c < data.cols(); ++c)
                out(r, c) = transform_value(data(r, c), c);
        return out;
    }

    Matrix inverse_transform(const Matrix& data) const {
        check_dim(data.cols());
        Matrix out(data.rows(), data.cols());
        for (std::size_t r = 0; r < data.rows(); ++r)
            for (std::size_t c = 0; c < data.cols(); ++c)
                out(r, c) = inverse_value(data(r, c), c);
        return out;
    }

    std::size_t dims() const { return min_.size(); }
    const std::vector<double>& mins() const { return min_; }
    const std::vector<double>& maxs() const { return max_; }
    void set_extrema(std::vector<double> mins, std::vector<double> maxs) {
        min_ = std::move(mins);
        max_ = std::move(maxs);
    }

private:
    void check_dim(std::size_t cols) const {
        if (cols != min_.size()) throw std::invalid_argument("MinMaxScaler: dimension mismatch");
    }

    std::vector<double> min_;
    std::vector<double> max_;
};

/// Fit on [train_begin, train_end) and transform every row.
inline std::pair<MinMaxScaler, Matrix> scaler_fit_transform(const Matrix& data,
                                                            std::size_t train_begin,
                                                            std::size_t train_end) {
    MinMaxScaler s;
    s.fit(data, train_begin, train_end);
    return {s, s.transform(data)};
}

}  // namespace echelon
