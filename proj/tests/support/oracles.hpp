#pragma once

// Independent reference implementations used only by the tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "permuton/excursion.hpp"
#include "permuton/signed_tree.hpp"

namespace oracle {

using permuton::Permutation;
using permuton::Sign;
using permuton::SignedBinaryTree;

// Levy density 2 e^x / sqrt(2 pi (e^x - 1)^3), written to avoid overflow.
inline double levy_density(double x) {
    const double em = -std::expm1(-x);  // 1 - e^{-x}
    return 2.0 * std::exp(-0.5 * x) / std::sqrt(2.0 * std::numbers::pi * em * em * em);
}

// e^{-qx} Lambda(dx)/dx with the exponentials merged so large x cannot overflow.
inline double laplace_density(double q, double x) {
    const double em = -std::expm1(-x);
    return 2.0 * std::exp(-(q + 0.5) * x) / std::sqrt(2.0 * std::numbers::pi * em * em * em);
}

// (1 - e^{-qx}) Lambda(dx)/dx.
inline double thinned_density(double q, double x) {
    if (q * x > -700.0) return -std::expm1(-q * x) * levy_density(x);
    return levy_density(x) - laplace_density(q, x);
}

inline double levy_tail_quad(double a, double b) {
    using boost::math::quadrature::gauss_kronrod;
    return gauss_kronrod<double, 61>::integrate(levy_density, a, b, 15, 1e-13);
}

// int_0^inf (1 - e^{-qx}) Lambda(dx), split at 1: Gauss-Kronrod on (0, 1],
// exp_sinh on the tail.
inline double phi_quad(double q) {
    auto f = [q](double x) { return thinned_density(q, x); };
    // x = t^2 removes the x^{-1/2} endpoint behaviour of the head.
    auto g = [&f](double t) { return t > 0.0 ? 2.0 * t * f(t * t) : 0.0; };
    using boost::math::quadrature::gauss_kronrod;
    const double head = gauss_kronrod<double, 61>::integrate(g, 0.0, 1.0, 20, 1e-14);
    boost::math::quadrature::exp_sinh<double> tail;
    return head + tail.integrate(f, 1.0, std::numeric_limits<double>::infinity(), 1e-14);
}

// int_{log 2}^inf (1 - e^{-qx}) Lambda(dx) directly in x.
inline double kill_tail_quad(double q) {
    auto f = [q](double x) { return thinned_density(q, x); };
    boost::math::quadrature::exp_sinh<double> tail;
    return tail.integrate(f, std::numbers::ln2, std::numeric_limits<double>::infinity(), 1e-14);
}

// int_{log 2}^inf e^{-qx} Lambda(dx), q > -1/2.
inline double laplace_tail_quad(double q) {
    auto f = [q](double x) { return laplace_density(q, x); };
    boost::math::quadrature::exp_sinh<double> tail;
    return tail.integrate(f, std::numbers::ln2, std::numeric_limits<double>::infinity(), 1e-14);
}

// Leaf rank range [lo, hi] and sign of the lowest common ancestor of two leaves,
// found by walking down from the root.
inline Sign lca_sign(const SignedBinaryTree& t, std::int32_t i, std::int32_t j) {
    std::int32_t id = t.root();
    for (;;) {
        const auto& nd = t.node(id);
        const auto& l = t.node(nd.left);
        const std::int32_t split = l.first_leaf + l.leaf_count;  // first rank on the right
        if (i < split && j < split) {
            id = nd.left;
        } else if (i >= split && j >= split) {
            id = nd.right;
        } else {
            return nd.sign;
        }
    }
}

// Permutation from pairwise LCA signs: sigma(i) = 1 + #{j : j below i}.
inline Permutation perm_from_pairs(std::int32_t n, auto&& plus_between) {
    std::vector<std::int32_t> v(static_cast<std::size_t>(n), 1);
    for (std::int32_t i = 1; i <= n; ++i) {
        for (std::int32_t j = i + 1; j <= n; ++j) {
            if (plus_between(i, j)) {
                ++v[static_cast<std::size_t>(j - 1)];
            } else {
                ++v[static_cast<std::size_t>(i - 1)];
            }
        }
    }
    return Permutation(std::move(v));
}

inline Permutation perm_by_lca(const SignedBinaryTree& t) {
    return perm_from_pairs(t.leaf_count(), [&](std::int32_t i, std::int32_t j) { return lca_sign(t, i, j) == Sign::Plus; });
}

// Leftmost argmin of heights over the closed index range [a, b].
inline std::int64_t leftmost_argmin(std::span<const std::int32_t> e, std::int64_t a, std::int64_t b) {
    std::int64_t best = a;
    for (std::int64_t k = a + 1; k <= b; ++k) {
        if (e[static_cast<std::size_t>(k)] < e[static_cast<std::size_t>(best)]) best = k;
    }
    return best;
}

// Permutation of sample points by pairwise range minima, O(m^2 N).
inline Permutation perm_by_range_minima(const permuton::DiscreteExcursion& exc, std::span<const std::int64_t> pts) {
    const auto e = exc.heights();
    return perm_from_pairs(static_cast<std::int32_t>(pts.size()), [&](std::int32_t i, std::int32_t j) {
        const auto k = leftmost_argmin(e, pts[static_cast<std::size_t>(i - 1)], pts[static_cast<std::size_t>(j - 1)]);
        return exc.coin(k) == Sign::Plus;
    });
}

// Recursive argmin split of the point range [lo, hi) (0-based point indices);
// returns the nested text form with leaf labels lo+1..hi.
inline std::string naive_cartesian(const permuton::DiscreteExcursion& exc, std::span<const std::int64_t> pts,
                                   std::size_t lo, std::size_t hi) {
    if (hi - lo == 1) return std::to_string(lo + 1);
    const auto e = exc.heights();
    // Gap g lies between points g and g + 1; choose the gap holding the
    // leftmost minimum over the whole spanned range.
    std::size_t best_gap = lo;
    std::int64_t best_k = leftmost_argmin(e, pts[lo], pts[lo + 1]);
    for (std::size_t g = lo + 1; g + 1 < hi; ++g) {
        const auto k = leftmost_argmin(e, pts[g], pts[g + 1]);
        if (e[static_cast<std::size_t>(k)] < e[static_cast<std::size_t>(best_k)]) {
            best_k = k;
            best_gap = g;
        }
    }
    return "(" + naive_cartesian(exc, pts, lo, best_gap + 1) + "," + naive_cartesian(exc, pts, best_gap + 1, hi) + ")" +
           permuton::to_char(exc.coin(best_k));
}

// Length of the fragment {e > h} around t, as (right end) - (left end) where
// the ends are the first indices on either side with e <= h.
inline std::int64_t flood_fill_length(std::span<const std::int32_t> e, std::int64_t t, std::int32_t h) {
    std::int64_t i = t;
    while (e[static_cast<std::size_t>(i)] > h) --i;
    std::int64_t j = t;
    while (e[static_cast<std::size_t>(j)] > h) ++j;
    return j - i;
}

// Every weak Dyck path of half-length n as a height vector, enumerated
// recursively (small n only).
inline void dyck_paths(std::vector<std::int32_t>& cur, std::int32_t n, std::vector<std::vector<std::int32_t>>& out) {
    const auto len = static_cast<std::int32_t>(cur.size()) - 1;
    if (len == 2 * n) {
        if (cur.back() == 0) out.push_back(cur);
        return;
    }
    const std::int32_t h = cur.back();
    if (h + 1 <= 2 * n - len - 1) {
        cur.push_back(h + 1);
        dyck_paths(cur, n, out);
        cur.pop_back();
    }
    if (h > 0) {
        cur.push_back(h - 1);
        dyck_paths(cur, n, out);
        cur.pop_back();
    }
}

}  // namespace oracle
