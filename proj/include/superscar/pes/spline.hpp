#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "superscar/errors.hpp"

namespace superscar::pes {

/// Value and first two derivatives of a 1-D curve at a point.
struct CurvePoint {
    double value = 0.0;
    double slope = 0.0;
    double curvature = 0.0;
};

/// C2 piecewise-cubic interpolant.
///
/// End conditions are natural (zero second derivative) unless end slopes are
/// given, in which case the spline is clamped to them.
class CubicSpline {
public:
    CubicSpline() = default;

    CubicSpline(std::vector<double> x, std::vector<double> y,
                std::optional<double> slope_lo = std::nullopt,
                std::optional<double> slope_hi = std::nullopt)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n) {
            throw ContractError("spline needs at least two (x, y) pairs of equal length");
        }
        for (std::size_t i = 1; i < n; ++i) {
            if (!(x_[i] > x_[i - 1])) throw ContractError("spline abscissae must be strictly increasing");
        }
        // Tridiagonal system for the second derivatives m_i.
        std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), r(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
            a[i] = h0 / 6.0;
            b[i] = (h0 + h1) / 3.0;
            c[i] = h1 / 6.0;
            r[i] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
        }
        if (slope_lo) {
            const double h = x_[1] - x_[0];
            b[0] = h / 3.0;
            c[0] = h / 6.0;
            r[0] = (y_[1] - y_[0]) / h - *slope_lo;
        } else {
            b[0] = 1.0;
        }
        if (slope_hi) {
            const double h = x_[n - 1] - x_[n - 2];
            a[n - 1] = h / 6.0;
            b[n - 1] = h / 3.0;
            r[n - 1] = *slope_hi - (y_[n - 1] - y_[n - 2]) / h;
        } else {
            b[n - 1] = 1.0;
        }
        // Thomas algorithm.
        for (std::size_t i = 1; i < n; ++i) {
            const double w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            r[i] -= w * r[i - 1];
        }
        m_.assign(n, 0.0);
        m_[n - 1] = r[n - 1] / b[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) m_[i] = (r[i] - c[i] * m_[i + 1]) / b[i];
    }

    double lo() const { return x_.front(); }
    double hi() const { return x_.back(); }
    std::span<const double> abscissae() const { return x_; }
    std::span<const double> ordinates() const { return y_; }

    bool contains(double x) const { return x >= x_.front() && x <= x_.back(); }

    CurvePoint operator()(double x) const {
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
        i = std::min(i, x_.size() - 2);
        const double h = x_[i + 1] - x_[i];
        const double A = (x_[i + 1] - x) / h, B = (x - x_[i]) / h;
        CurvePoint p;
        p.value = A * y_[i] + B * y_[i + 1] + ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
        p.slope = (y_[i + 1] - y_[i]) / h - (3.0 * A * A - 1.0) / 6.0 * h * m_[i] + (3.0 * B * B - 1.0) / 6.0 * h * m_[i + 1];
        p.curvature = A * m_[i] + B * m_[i + 1];
        return p;
    }

private:
    std::vector<double> x_, y_, m_;
};

} // namespace superscar::pes
