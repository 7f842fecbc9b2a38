#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace skewgraph {

/// Pairwise (cascade) summation: deterministic for a fixed element order and
/// far more accurate than a running sum on long Monte-Carlo arrays.
inline double pairwise_sum(const double* xs, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += xs[i];
        return s;
    }
    std::size_t half = n / 2;
    return pairwise_sum(xs, half) + pairwise_sum(xs + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& xs) {
    return pairwise_sum(xs.data(), xs.size());
}

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;  // sqrt(sample variance / n); 0 when n < 2
};

inline MeanStderr mean_and_stderr(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("mean_and_stderr needs data");
    std::size_t n = xs.size();
    MeanStderr out;
    out.mean = pairwise_sum(xs) / static_cast<double>(n);
    if (n < 2) return out;
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = (xs[i] - out.mean) * (xs[i] - out.mean);
    double var = pairwise_sum(sq) / static_cast<double>(n - 1);
    out.stderr_ = std::sqrt(var / static_cast<double>(n));
    return out;
}

struct LinearFit {
    bool ok = false;  // false when fewer than 2 points or zero x-spread
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    std::size_t n_used = 0;
};

/// Ordinary least squares y ~ intercept + slope*x. r2 is 1 - ss_res/ss_tot,
/// clamped to 1 when the residuals vanish and to 0 when y has no variance to
/// explain (a flat exact fit still reports ok = true, slope 0).
inline LinearFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("fit_line size mismatch");
    LinearFit fit;
    fit.n_used = xs.size();
    if (xs.size() < 2) return fit;
    std::size_t n = xs.size();
    double xbar = pairwise_sum(xs) / static_cast<double>(n);
    double ybar = pairwise_sum(ys) / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = xs[i] - xbar, dy = ys[i] - ybar;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx <= 0.0) return fit;
    fit.ok = true;
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
        ss_res += r * r;
    }
    if (ss_res <= 1e-24) {
        fit.r2 = 1.0;
    } else if (syy <= 1e-24) {
        fit.r2 = 0.0;
    } else {
        fit.r2 = 1.0 - ss_res / syy;
    }
    return fit;
}

}  // namespace skewgraph
