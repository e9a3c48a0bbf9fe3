#pragma once

// Globally adaptive 7/15-point Gauss-Kronrod quadrature. The interval with the
// largest error estimate is bisected until the summed estimate drops below the
// absolute tolerance or the evaluation budget runs out.

#include <array>
#include <cmath>
#include <complex>
#include <queue>
#include <vector>

namespace expobeam {

template <class T>
struct QuadratureResult {
    T value{};
    double error = 0.0;
    int evaluations = 0;
    bool converged = false;
};

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};

inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline double magnitude(double x) { return std::abs(x); }
inline double magnitude(const std::complex<double>& x) { return std::abs(x); }

template <class T>
struct Panel {
    double a;
    double b;
    T value;
    double error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class T, class F>
Panel<T> gauss_kronrod_15(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const T fc = f(c);
    T kronrod = fc * kKronrodWeights[7];
    T gauss = fc * kGaussWeights[3];
    for (int i = 0; i < 7; ++i) {
        const double dx = h * kKronrodNodes[static_cast<std::size_t>(i)];
        const T pair = f(c - dx) + f(c + dx);
        kronrod += pair * kKronrodWeights[static_cast<std::size_t>(i)];
        if (i % 2 == 1) {
            gauss += pair * kGaussWeights[static_cast<std::size_t>(i / 2)];
        }
    }
    kronrod *= h;
    gauss *= h;
    return {a, b, kronrod, magnitude(kronrod - gauss)};
}

}  // namespace detail

/// Integrate f over each consecutive pair of `breakpoints` (at least two, increasing).
/// Breakpoints let callers place kinks of the integrand on panel edges.
template <class T, class F>
QuadratureResult<T> integrate_adaptive(const F& f, const std::vector<double>& breakpoints,
                                       double abs_tol, int max_evaluations = 1 << 14) {
    std::priority_queue<detail::Panel<T>> heap;
    QuadratureResult<T> out;
    T total{};
    double total_err = 0.0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        auto p = detail::gauss_kronrod_15<T>(f, breakpoints[i], breakpoints[i + 1]);
        out.evaluations += 15;
        total += p.value;
        total_err += p.error;
        heap.push(p);
    }
    while (total_err > abs_tol && out.evaluations + 30 <= max_evaluations) {
        const auto worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        auto left = detail::gauss_kronrod_15<T>(f, worst.a, mid);
        auto right = detail::gauss_kronrod_15<T>(f, mid, worst.b);
        out.evaluations += 30;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the cancellation error of the running updates.
    total = T{};
    total_err = 0.0;
    while (!heap.empty()) {
        total += heap.top().value;
        total_err += heap.top().error;
        heap.pop();
    }
    out.value = total;
    out.error = total_err;
    out.converged = total_err <= abs_tol;
    return out;
}

template <class T, class F>
QuadratureResult<T> integrate_adaptive(const F& f, double a, double b, double abs_tol,
                                       int max_evaluations = 1 << 14) {
    return integrate_adaptive<T>(f, std::vector<double>{a, b}, abs_tol, max_evaluations);
}

}  // namespace expobeam
