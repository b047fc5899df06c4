#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "tfrp/errors.hpp"

namespace tfrp {

// Adaptive Gauss-Kronrod (G7/K15) on a finite interval. The error estimate per
// panel is |K15 - G7|; panels are split until the local estimate meets the
// tolerance share or the depth cap is hit.
namespace detail {

// K15 abscissae on [0,1] (positive half) and weights; G7 weights interleave.
inline constexpr double kKronrodX[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
inline constexpr double kKronrodW[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double kGaussW[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct Panel {
    double a, b, integral, err;
};

template <typename F>
inline Panel gk15(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double resk = 0.0, resg = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double dx = h * kKronrodX[i];
        const double fv = (i == 7) ? f(c) : f(c - dx) + f(c + dx);
        resk += kKronrodW[i] * fv;
        if (i % 2 == 1) resg += kGaussW[i / 2] * fv;  // G7 nodes interleave, center included
    }
    resk *= h;
    resg *= h;
    return {a, b, resk, std::abs(resk - resg)};
}

}  // namespace detail

struct QuadratureResult {
    double value;
    double error_estimate;
    std::size_t panels;
    bool converged;
};

/// Adaptive G7/K15 integration of f over [a,b].
template <typename F>
inline QuadratureResult integrate_adaptive(const F& f, double a, double b,
                                           double rel_tol = 1e-13,
                                           double abs_tol = 0.0,
                                           std::size_t max_panels = 20000) {
    // Worst-first splitting with a simple binary heap over panels.
    std::vector<detail::Panel> heap;
    heap.push_back(detail::gk15(f, a, b));
    double total = heap[0].integral, err = heap[0].err;
    auto cmp = [](const detail::Panel& x, const detail::Panel& y) { return x.err < y.err; };
    while (heap.size() < max_panels) {
        if (err <= std::max(abs_tol, rel_tol * std::abs(total))) break;
        std::pop_heap(heap.begin(), heap.end(), cmp);
        detail::Panel worst = heap.back();
        heap.pop_back();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {  // interval exhausted at double precision
            heap.push_back(worst);
            std::push_heap(heap.begin(), heap.end(), cmp);
            break;
        }
        detail::Panel left = detail::gk15(f, worst.a, mid);
        detail::Panel right = detail::gk15(f, mid, worst.b);
        total += left.integral + right.integral - worst.integral;
        err += left.err + right.err - worst.err;
        heap.push_back(left);
        std::push_heap(heap.begin(), heap.end(), cmp);
        heap.push_back(right);
        std::push_heap(heap.begin(), heap.end(), cmp);
    }
    // Recompute the totals once to shed accumulated drift.
    total = 0.0;
    err = 0.0;
    for (const auto& p : heap) {
        total += p.integral;
        err += p.err;
    }
    const bool ok = err <= std::max(abs_tol, rel_tol * std::abs(total)) * 4.0;
    return {total, err, heap.size(), ok};
}

}  // namespace tfrp
