#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "superscar/errors.hpp"
#include "superscar/scar/ladder.hpp"
#include "superscar/scar/width.hpp"

namespace superscar::scar {

enum class Classification { superscar, ordinary, indeterminate };

inline const char* to_string(Classification c) {
    switch (c) {
    case Classification::superscar: return "superscar";
    case Classification::ordinary: return "ordinary";
    default: return "indeterminate";
    }
}

struct FitPoint {
    int n = 0;
    double x = 0.0;     // n + nu/4
    double sigma = 0.0; // radians
};

/// sigma = prefactor * x^(-alpha), fitted in log-log space.
struct ScalingFit {
    std::vector<FitPoint> samples;
    double alpha = 0.0;
    double alpha_err = 0.0;
    double prefactor = 0.0;
    Classification classification = Classification::indeterminate;
    bool weighted = false;

    double fitted(double x) const { return prefactor * std::pow(x, -alpha); }
};

struct FitOptions {
    double band = 0.05;                // minimum half-width of the classification bands
    double error_multiple = 2.0;       // ... or this many standard errors, whichever is wider
    double min_span = 2.0;             // samples must span this factor in x
    std::size_t min_samples = 4;
    std::optional<std::vector<double>> weights; // weighted least squares when set
};

/// |alpha - 1/3| within max(band, k alpha_err) gives superscar, the same
/// test against 1/2 gives ordinary; both or neither is indeterminate.
inline Classification classify(double alpha, double alpha_err, const FitOptions& opts = {}) {
    const double tol = std::max(opts.band, opts.error_multiple * alpha_err);
    const bool third = std::abs(alpha - 1.0 / 3.0) <= tol;
    const bool half = std::abs(alpha - 0.5) <= tol;
    if (third && !half) return Classification::superscar;
    if (half && !third) return Classification::ordinary;
    return Classification::indeterminate;
}

inline ScalingFit scaling_fit(std::vector<FitPoint> pts, const FitOptions& opts = {}) {
    if (pts.size() < opts.min_samples) {
        std::ostringstream os;
        os << "scaling fit needs at least " << opts.min_samples << " samples, got " << pts.size();
        throw ContractError(os.str());
    }
    double xmin = pts.front().x, xmax = pts.front().x;
    for (const auto& p : pts) {
        if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) {
            std::ostringstream os;
            os << "non-positive width " << p.sigma << " at n = " << p.n;
            throw DataError(os.str());
        }
        if (!(p.x > 0.0)) throw DataError("n + nu/4 must be positive");
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
    }
    if (xmax < opts.min_span * xmin) {
        std::ostringstream os;
        os << "samples span a factor " << xmax / xmin << " in n + nu/4; at least " << opts.min_span << " is needed";
        throw ContractError(os.str());
    }
    std::sort(pts.begin(), pts.end(), [](const FitPoint& a, const FitPoint& b) { return a.x < b.x; });
    const std::size_t N = pts.size();
    std::vector<double> w(N, 1.0);
    if (opts.weights) {
        if (opts.weights->size() != N) throw ContractError("fit weights do not match the samples");
        w = *opts.weights;
    }

    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
        sw += w[k];
        sx += w[k] * std::log(pts[k].x);
        sy += w[k] * std::log(pts[k].sigma);
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
        const double dx = std::log(pts[k].x) - mx;
        sxx += w[k] * dx * dx;
        sxy += w[k] * dx * (std::log(pts[k].sigma) - my);
    }
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double rss = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
        const double r = std::log(pts[k].sigma) - (intercept + slope * std::log(pts[k].x));
        rss += w[k] * r * r;
    }

    ScalingFit fit;
    fit.samples = std::move(pts);
    fit.alpha = -slope;
    fit.alpha_err = std::sqrt(rss / static_cast<double>(N - 2) / sxx);
    fit.prefactor = std::exp(intercept);
    fit.weighted = opts.weights.has_value();
    fit.classification = classify(fit.alpha, fit.alpha_err, opts);
    return fit;
}

/// Fit of width samples against a ladder. Samples must carry their n.
inline ScalingFit scaling_fit(const std::vector<WidthSample>& samples, const BSLadder& ladder,
                              const FitOptions& opts = {}) {
    std::vector<FitPoint> pts;
    for (const auto& s : samples) {
        if (!s.n) throw ContractError("width sample has no excitation number");
        pts.push_back({*s.n, ladder.effective_n(*s.n), s.sigma});
    }
    return scaling_fit(std::move(pts), opts);
}

} // namespace superscar::scar
