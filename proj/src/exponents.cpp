#include "permuton/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "permuton/parallel.hpp"

namespace permuton {

namespace {

constexpr double kSqrt2OverPi = 0.79788456080286535588;  // sqrt(2 / pi)
constexpr double kLog2 = std::numbers::ln2;

void require_open_probability(double p, const char* who) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error(std::string(who) + ": p must lie in (0, 1), got " + std::to_string(p));
    }
}

// Bisection for a decreasing function with g(lo) > 0 > g(hi). Runs until the
// bracket collapses to adjacent doubles or |g| <= abs_tol.
template <class G>
RootResult bisect_decreasing(G&& g, double lo, double hi, double abs_tol, int max_iter = 400) {
    RootResult out;
    double g_lo = g(lo);
    double g_hi = g(hi);
    if (!(g_lo > 0.0 && g_hi < 0.0)) {
        throw NumericalError("bisection bracket lost: g(" + std::to_string(lo) + ") = " + std::to_string(g_lo) +
                             ", g(" + std::to_string(hi) + ") = " + std::to_string(g_hi));
    }
    for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double gm = g(mid);
        if (std::abs(gm) <= abs_tol) {
            out.root = mid;
            out.residual = std::abs(gm);
            return out;
        }
        if (gm > 0.0) {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
            g_hi = gm;
        }
    }
    if (std::abs(g_lo) <= std::abs(g_hi)) {
        out.root = lo;
        out.residual = std::abs(g_lo);
    } else {
        out.root = hi;
        out.residual = std::abs(g_hi);
    }
    return out;
}

// Upper end of a bracket in (0, 1/2) for a function that tends to -inf at 1/2.
template <class G>
double upper_bracket(G&& g) {
    for (double gap = 1e-3; gap >= 1e-15; gap *= 0.1) {
        if (g(0.5 - gap) < 0.0) return 0.5 - gap;
    }
    throw NumericalError("no sign change below 1/2: bracket lost");
}

struct GoldenResult {
    double x;
    double value;
};

template <class F>
GoldenResult golden_max(F&& f, double a, double b, double tol) {
    constexpr double kInvPhi = 0.61803398874989484820;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
        }
    }
    return fc >= fd ? GoldenResult{c, fc} : GoldenResult{d, fd};
}

boost::math::quadrature::tanh_sinh<double>& integrator() {
    thread_local boost::math::quadrature::tanh_sinh<double> ts;
    return ts;
}

}  // namespace

double levy_tail(double a, double b) {
    if (!(a > 0.0)) throw std::domain_error("levy_tail: a must be > 0 (the measure is infinite near 0)");
    if (!(b > a)) throw std::invalid_argument("levy_tail: need a < b");
    const double upper = std::isinf(b) ? 0.0 : 1.0 / std::sqrt(std::expm1(b));
    return 2.0 * kSqrt2OverPi * (1.0 / std::sqrt(std::expm1(a)) - upper);
}

double phi(double q) {
    if (!(q > -0.5)) throw std::domain_error("phi: q must be > -1/2");
    if (q == 0.0) return 0.0;
    return 2.0 * std::numbers::sqrt2 * q *
           std::exp(boost::math::lgamma(q + 0.5) - boost::math::lgamma(q + 1.0));
}

double kill_tail_integral(double q, double* error_estimate) {
    if (!(q > -0.5)) throw std::domain_error("kill_tail_integral: q must be > -1/2");
    if (error_estimate) *error_estimate = 0.0;
    if (q == 0.0) return 0.0;
    // In u: 2 sqrt(2/pi) * int_0^1 [1 - u^{2q} (1 + u^2)^{-q}] du. Splitting
    // off int_0^1 (1 - u^{2q}) du = 2q / (2q + 1) leaves a bounded integrand.
    auto f = [q](double u) { return std::pow(u, 2.0 * q) * -std::expm1(-q * std::log1p(u * u)); };
    double err = 0.0;
    double l1 = 0.0;
    const double rest = integrator().integrate(f, 0.0, 1.0, 1e-14, &err, &l1);
    if (error_estimate) *error_estimate = 2.0 * kSqrt2OverPi * err * std::max(1.0, l1);
    return 2.0 * kSqrt2OverPi * (2.0 * q / (2.0 * q + 1.0) + rest);
}

double phi_S(double p, double q, double* error_estimate) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("phi_S: p must lie in [0, 1]");
    if (!(q > -0.5)) throw std::domain_error("phi_S: q must be > -1/2");
    if (p == 1.0) {
        if (error_estimate) *error_estimate = 0.0;
        return phi(q);
    }
    return phi(q) - (1.0 - p) * kill_tail_integral(q, error_estimate);
}

double lambda_kill(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("lambda_kill: p must lie in [0, 1]");
    return 2.0 * (1.0 - p) * kSqrt2OverPi;
}

RootResult lambda_star_lower(double p) {
    require_open_probability(p, "lambda_star_lower");
    const double kill = lambda_kill(p);
    double quad_err = 0.0;
    auto g = [&](double x) {
        double e = 0.0;
        const double v = phi_S(p, -x, &e) + kill;
        quad_err = std::max(quad_err, e);
        return v;
    };
    const double hi = upper_bracket(g);
    RootResult r = bisect_decreasing(g, 0.0, hi, 1e-14);
    r.quadrature_error = quad_err;
    return r;
}

double kappa_rhs(double p, double gamma, double r) {
    return std::expm1(gamma) * (1.0 - p) * levy_tail(-std::log(r), -std::log1p(-r));
}

double kappa_rhs_closed(double p, double gamma, double r) {
    const double inv = 1.0 / r;
    return 2.0 * (1.0 - p) * -std::expm1(gamma) * kSqrt2OverPi * (inv - 2.0) / std::sqrt(inv - 1.0);
}

namespace {

void check_kappa_domain(double p, double gamma, double r) {
    require_open_probability(p, "kappa_star");
    if (!(gamma < 0.0)) throw std::domain_error("kappa_star: gamma must be < 0");
    if (!(r > 0.5 && r < 1.0)) throw std::domain_error("kappa_star: r must lie in (1/2, 1)");
}

// Root of Phi(-k) = rhs for rhs < 0; full double precision.
RootResult solve_kappa(double rhs) {
    if (rhs == 0.0) return {};
    auto g = [rhs](double k) { return phi(-k) - rhs; };
    return bisect_decreasing(g, 0.0, upper_bracket(g), 0.0);
}

constexpr double kSMin = -30.0;
constexpr double kSMax = 5.0;

double seed_s(int i, int seeds) { return kSMin + (kSMax - kSMin) * i / (seeds - 1); }

// Inner supremum given the gamma-independent factor lam = (1-p) Lambda(...).
InnerSup inner_sup_scaled(double lam, double delta, int seeds, int* evaluations) {
    auto f = [&](double s) {
        const double gamma = -std::exp(s);
        if (evaluations) ++*evaluations;
        return gamma * delta + solve_kappa(std::expm1(gamma) * lam).root;
    };
    int best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < seeds; ++i) {
        const double v = f(seed_s(i, seeds));
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    const double a = seed_s(std::max(best - 1, 0), seeds);
    const double b = seed_s(std::min(best + 1, seeds - 1), seeds);
    const auto g = golden_max(f, a, b, 1e-10);
    if (g.value >= best_val) return {g.value, -std::exp(g.x)};
    return {best_val, -std::exp(seed_s(best, seeds))};
}

double balanced_mass(double p, double beta) {
    const double r = std::exp(-beta);
    return (1.0 - p) * levy_tail(beta, -std::log1p(-r));
}

struct Crossing {
    double delta;
    double gamma;
};

// delta > 0 with beta * delta = sup_gamma(gamma * delta + kappa*): the left
// side increases, the right side is convex decreasing with slope gamma_hat.
Crossing solve_crossing(double lam, double beta, double delta0, int seeds, int* evaluations) {
    auto F = [&](double d, double* slope) {
        const auto in = inner_sup_scaled(lam, d, seeds, evaluations);
        *slope = beta - in.gamma;
        return std::pair{beta * d - in.value, in.gamma};
    };
    double slope = 0.0;
    double lo = delta0;
    double hi = delta0;
    auto [f_hi, g_hi] = F(hi, &slope);
    while (f_hi <= 0.0) {
        hi *= 2.0;
        if (hi > 1e9) throw NumericalError("crossing: no upper bracket");
        std::tie(f_hi, g_hi) = F(hi, &slope);
    }
    auto [f_lo, g_lo] = F(lo, &slope);
    while (f_lo >= 0.0) {
        lo *= 0.5;
        if (lo < 1e-12) throw NumericalError("crossing: no lower bracket");
        std::tie(f_lo, g_lo) = F(lo, &slope);
    }
    double d = std::sqrt(lo * hi);
    Crossing best{d, 0.0};
    for (int it = 0; it < 100; ++it) {
        const auto [fd, gd] = F(d, &slope);
        best = {d, gd};
        if (std::abs(fd) < 1e-15) break;
        if (fd > 0.0) hi = d; else lo = d;
        double cand = d - fd / slope;
        if (!(cand > lo && cand < hi)) cand = std::sqrt(lo * hi);
        if ((hi - lo) <= 1e-14 * hi) break;
        d = cand;
    }
    return best;
}

}  // namespace

RootResult kappa_star(double p, double gamma, double r) {
    check_kappa_domain(p, gamma, r);
    return solve_kappa(kappa_rhs(p, gamma, r));
}

InnerSup inner_sup(double p, double beta, double delta, int seeds) {
    require_open_probability(p, "inner_sup");
    if (!(beta > 0.0 && beta < kLog2)) throw std::domain_error("inner_sup: beta must lie in (0, log 2)");
    if (!(delta > 0.0)) throw std::domain_error("inner_sup: delta must be > 0");
    if (seeds < 3) throw std::invalid_argument("inner_sup: need at least 3 seeds");
    return inner_sup_scaled(balanced_mass(p, beta), delta, seeds, nullptr);
}

namespace {

UpperResult upper_once(double p, int nb, int nd, int ns, bool refine) {
    UpperResult out;
    // Grid stage: gamma seeds only, so each cell is a lower bound.
    std::vector<double> gammas(static_cast<std::size_t>(ns));
    for (int i = 0; i < ns; ++i) gammas[static_cast<std::size_t>(i)] = -std::exp(seed_s(i, ns));
    std::vector<double> kap(static_cast<std::size_t>(ns));
    double best = -1.0;
    int best_b = 0;
    int best_d = 0;
    auto beta_at = [&](int i) { return kLog2 * (i + 1) / (nb + 1); };
    auto delta_at = [&](int j) { return std::pow(10.0, -3.0 + 6.0 * j / (nd - 1)); };
    for (int i = 0; i < nb; ++i) {
        const double beta = beta_at(i);
        const double lam = balanced_mass(p, beta);
        for (int s = 0; s < ns; ++s) {
            kap[static_cast<std::size_t>(s)] = solve_kappa(std::expm1(gammas[static_cast<std::size_t>(s)]) * lam).root;
        }
        for (int j = 0; j < nd; ++j) {
            const double delta = delta_at(j);
            double g = -std::numeric_limits<double>::infinity();
            for (int s = 0; s < ns; ++s) {
                g = std::max(g, gammas[static_cast<std::size_t>(s)] * delta + kap[static_cast<std::size_t>(s)]);
            }
            const double v = std::min(beta * delta, g);
            if (v > best) {
                best = v;
                best_b = i;
                best_d = j;
            }
        }
    }
    out.grid_value = best;
    out.beta_hat = beta_at(best_b);
    out.delta_hat = delta_at(best_d);
    out.lambda_upper = best;
    if (!refine) {
        out.gamma_hat = inner_sup_scaled(balanced_mass(p, out.beta_hat), out.delta_hat, ns, nullptr).gamma;
        out.kappa_residual = kappa_star(p, out.gamma_hat, std::exp(-out.beta_hat)).residual;
        return out;
    }

    // Refinement: for fixed beta the max over delta sits where beta * delta
    // meets the decreasing inner supremum, which gives h(beta). The grid cell
    // only bounds the optimum from below, so h is scanned on its own coarse
    // beta lattice before golden-section search between lattice neighbours.
    double delta_guess = out.delta_hat;
    Crossing last{};
    auto h = [&](double beta) {
        const auto c = solve_crossing(balanced_mass(p, beta), beta, delta_guess, ns, &out.inner_evaluations);
        delta_guess = c.delta;
        return beta * c.delta;
    };
    constexpr int kScan = 17;
    auto scan_at = [](int i) { return kLog2 * (i + 1) / (kScan + 1); };
    int best_scan = 0;
    double best_h = -1.0;
    for (int i = 0; i < kScan; ++i) {
        const double v = h(scan_at(i));
        if (v > best_h) {
            best_h = v;
            best_scan = i;
        }
    }
    delta_guess = best_h / scan_at(best_scan);
    const double a = best_scan == 0 ? 0.5 * scan_at(0) : scan_at(best_scan - 1);
    const double b = best_scan == kScan - 1 ? 0.5 * (scan_at(kScan - 1) + kLog2) : scan_at(best_scan + 1);
    const auto g = golden_max(h, a, b, 1e-9);
    last = solve_crossing(balanced_mass(p, g.x), g.x, delta_guess, ns, &out.inner_evaluations);
    const double refined = g.x * last.delta;
    if (refined >= best) {
        out.lambda_upper = refined;
        out.beta_hat = g.x;
        out.delta_hat = last.delta;
        out.gamma_hat = last.gamma;
    } else {
        out.gamma_hat = inner_sup_scaled(balanced_mass(p, out.beta_hat), out.delta_hat, ns, nullptr).gamma;
    }
    out.kappa_residual = kappa_star(p, out.gamma_hat, std::exp(-out.beta_hat)).residual;
    return out;
}

}  // namespace

UpperResult lambda_star_upper(double p, const UpperOptions& options) {
    require_open_probability(p, "lambda_star_upper");
    if (options.beta_points < 1 || options.delta_points < 2 || options.gamma_seeds < 3) {
        throw std::invalid_argument("lambda_star_upper: grid too small");
    }
    UpperResult out = upper_once(p, options.beta_points, options.delta_points, options.gamma_seeds, options.refine);
    if (options.check_grid_doubling) {
        const UpperResult twice =
            upper_once(p, 2 * options.beta_points, 2 * options.delta_points, 2 * options.gamma_seeds, options.refine);
        out.doubling_rel_change = std::abs(twice.lambda_upper - out.lambda_upper) / out.lambda_upper;
        out.inner_evaluations += twice.inner_evaluations;
    }
    return out;
}

ExponentTable exponent_row(double p, const UpperOptions& options) {
    require_open_probability(p, "exponent_row");
    ExponentTable row;
    row.p = p;
    row.lambda_kill = lambda_kill(p);
    const RootResult lower = lambda_star_lower(p);
    row.lambda_lower = lower.root;
    row.alpha_star = 1.0 - lower.root;
    row.residual_lower = lower.residual;
    row.lower_iterations = lower.iterations;
    row.quadrature_error = lower.quadrature_error;

    const UpperResult upper = lambda_star_upper(p, options);
    row.lambda_upper = upper.lambda_upper;
    row.beta_star = 1.0 - upper.lambda_upper;
    row.beta_hat = upper.beta_hat;
    row.delta_hat = upper.delta_hat;
    row.gamma_hat = upper.gamma_hat;
    row.residual_kappa = upper.kappa_residual;
    row.upper_inner_evaluations = upper.inner_evaluations;
    row.upper_grid_value = upper.grid_value;
    row.upper_doubling_rel_change = upper.doubling_rel_change;

    const bool ok = row.lambda_lower > 0.0 && row.lambda_lower < 0.5 && row.lambda_upper > 0.0 &&
                    row.alpha_star > 0.5 && row.alpha_star <= row.beta_star && row.beta_star < 1.0;
    if (!ok) {
        throw NumericalError("exponent_row: invariants violated at p = " + std::to_string(p) +
                             " (alpha_star = " + std::to_string(row.alpha_star) +
                             ", beta_star = " + std::to_string(row.beta_star) + ")");
    }
    return row;
}

std::vector<ExponentTable> exponent_table(std::span<const double> ps, const UpperOptions& options, int threads) {
    for (double p : ps) require_open_probability(p, "exponent_table");
    std::vector<ExponentTable> rows(ps.size());
    parallel_for(static_cast<std::int64_t>(ps.size()), threads,
                 [&](std::int64_t i) { rows[static_cast<std::size_t>(i)] = exponent_row(ps[static_cast<std::size_t>(i)], options); });
    return rows;
}

}  // namespace permuton
