#pragma once

// Deterministic 2-D tensor-product Gauss-Legendre quadrature with node
// doubling until a certified relative-error target is met.

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace mdiqss::quadrature {

/// Nodes/weights of the n-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
    std::vector<double> x;
    std::vector<double> w;
};

namespace detail {

inline GaussLegendre build_gauss_legendre(int n) {
    GaussLegendre rule;
    rule.x.resize(n);
    rule.w.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Tricomi-style initial guess, then Newton on P_n
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double p_deriv = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            p_deriv = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / p_deriv;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.x[i] = -x;
        rule.x[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * p_deriv * p_deriv);
        rule.w[i] = w;
        rule.w[n - 1 - i] = w;
    }
    return rule;
}

} // namespace detail

/// Cached n-point rule (thread-safe; rules are immutable once built).
inline const GaussLegendre& gauss_legendre(int n) {
    static std::map<int, GaussLegendre> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, detail::build_gauss_legendre(n)).first;
    return it->second;
}

/// Raised when node doubling hits the cap before reaching the target.
class QuadratureError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Integrates a smooth two-component integrand f(u, v) -> {f0, f1} over
/// [0, a] x [0, b] with an n x n tensor rule.
template <class F>
std::array<double, 2> tensor_integrate_2d(F&& f, double a, double b, int n) {
    const GaussLegendre& g = gauss_legendre(n);
    std::array<double, 2> acc{0.0, 0.0};
    // map [-1,1] -> [0,a] and [0,b]
    for (int i = 0; i < n; ++i) {
        const double u = 0.5 * a * (g.x[i] + 1.0);
        const double wu = 0.5 * a * g.w[i];
        std::array<double, 2> row{0.0, 0.0};
        for (int j = 0; j < n; ++j) {
            const double v = 0.5 * b * (g.x[j] + 1.0);
            const double wv = 0.5 * b * g.w[j];
            std::array<double, 2> val = f(u, v);
            row[0] += wv * val[0];
            row[1] += wv * val[1];
        }
        acc[0] += wu * row[0];
        acc[1] += wu * row[1];
    }
    return acc;
}

/// Node-doubling driver: starts at `n_start` x `n_start`, doubles until both
/// components change by less than `rel_tol` relatively (hard cap `n_cap`).
/// Throws QuadratureError if the cap is reached without convergence.
template <class F>
std::array<double, 2> adaptive_integrate_2d(F&& f, double a, double b,
                                            double rel_tol = 1e-9,
                                            int n_start = 32, int n_cap = 512) {
    std::array<double, 2> prev = tensor_integrate_2d(f, a, b, n_start);
    for (int n = 2 * n_start; n <= n_cap; n *= 2) {
        std::array<double, 2> cur = tensor_integrate_2d(f, a, b, n);
        bool ok = true;
        for (int c = 0; c < 2; ++c) {
            double diff = std::abs(cur[c] - prev[c]);
            if (diff > rel_tol * std::abs(cur[c]) + 1e-300) ok = false;
        }
        if (ok) return cur;
        prev = cur;
    }
    throw QuadratureError("2-D quadrature did not converge within the node cap");
}

} // namespace mdiqss::quadrature
