#include "permuton/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

#include "permuton/excursion.hpp"
#include "permuton/parallel.hpp"
#include "permuton/signed_tree.hpp"

namespace permuton {

namespace {

__extension__ using Wide = unsigned __int128;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Exact integer moments; floating point only enters at the end.
struct Moments {
    std::int64_t count = 0;
    Wide sum = 0;
    Wide sum_sq = 0;

    void add(std::uint64_t x) {
        ++count;
        sum += x;
        sum_sq += static_cast<Wide>(x) * x;
    }
    [[nodiscard]] double mean() const {
        return count == 0 ? kNaN : static_cast<double>(sum) / static_cast<double>(count);
    }
    [[nodiscard]] double sd() const {
        if (count < 2) return kNaN;
        const Wide n = static_cast<Wide>(count);
        const Wide num = n * sum_sq - sum * sum;
        return std::sqrt(static_cast<double>(num) / (static_cast<double>(count) * static_cast<double>(count - 1)));
    }
};

std::uint64_t kind_id(ExperimentKind kind) { return static_cast<std::uint64_t>(kind) + 1; }

bool cancelled(const std::atomic<bool>* cancel) { return cancel && cancel->load(std::memory_order_relaxed); }

void require_kind(const ExperimentConfig& config, ExperimentKind kind) {
    if (config.kind != kind) {
        throw std::invalid_argument("experiment kind mismatch: expected " + std::string(to_string(kind)) + ", got " +
                                    std::string(to_string(config.kind)));
    }
    validate(config);
}

ExperimentReport start_report(const ExperimentConfig& config) {
    ExperimentReport r;
    r.config = config;
    r.reference = reference_exponents(config.p);
    return r;
}

RegressionRecord fit_series(std::string series, std::span<const std::pair<double, double>> pts) {
    RegressionRecord rec;
    rec.series = std::move(series);
    std::vector<double> xs;
    for (const auto& [x, y] : pts) xs.push_back(x);
    std::sort(xs.begin(), xs.end());
    const bool distinct = std::adjacent_find(xs.begin(), xs.end(), std::not_equal_to<>()) != xs.end();
    if (pts.size() < 2 || !distinct) {
        rec.note = "regression undefined: fewer than two distinct points";
        return rec;
    }
    rec.fit = loglog_regression(pts);
    return rec;
}

// Survival rows and fit from per-trial kill lengths; a negative entry marks a
// trial that never ran.
void survival_series(ExperimentReport& report, const std::string& series, std::span<const std::int64_t> kill,
                     std::int64_t total_length) {
    std::vector<std::pair<double, double>> pts;
    std::int64_t dropped = 0;
    for (double eps : report.config.eps_grid) {
        Moments m;
        const double cutoff = eps * static_cast<double>(total_length);
        for (std::int64_t k : kill) {
            if (k < 0) continue;
            m.add(static_cast<double>(k) < cutoff ? 1 : 0);
        }
        report.rows.push_back({series, eps, m.mean(), m.sd(), m.count});
        const double phat = m.mean();
        if (phat > 0.0) {
            pts.emplace_back(std::log(eps), std::log(phat));
        } else {
            ++dropped;
        }
    }
    auto rec = fit_series(series, pts);
    if (dropped > 0) {
        rec.note += (rec.note.empty() ? "" : "; ") + std::to_string(dropped) + " eps value(s) with zero survivors omitted";
    }
    report.regressions.push_back(std::move(rec));
}

template <class T>
thread_local std::vector<T> scratch;

}  // namespace

std::string_view to_string(ExperimentKind kind) noexcept {
    switch (kind) {
        case ExperimentKind::LisScaling: return "lis_scaling";
        case ExperimentKind::Survival: return "survival";
        case ExperimentKind::TwoPoint: return "two_point";
        case ExperimentKind::CrossValidate: return "cross_validate";
    }
    return "unknown";
}

ExperimentKind parse_kind(std::string_view name) {
    if (name == "lis_scaling") return ExperimentKind::LisScaling;
    if (name == "survival") return ExperimentKind::Survival;
    if (name == "two_point") return ExperimentKind::TwoPoint;
    if (name == "cross_validate" || name == "crossval") return ExperimentKind::CrossValidate;
    throw std::invalid_argument("unknown experiment kind '" + std::string(name) + "'");
}

ExperimentConfig default_config(ExperimentKind kind) {
    ExperimentConfig c;
    c.kind = kind;
    switch (kind) {
        case ExperimentKind::LisScaling:
            for (int k = 10; k <= 15; ++k) c.sizes.push_back(std::int64_t{1} << k);
            c.reps = 2000;
            break;
        case ExperimentKind::Survival:
        case ExperimentKind::TwoPoint:
            c.sizes = {std::int64_t{1} << 20};
            c.reps = 10000;
            break;
        case ExperimentKind::CrossValidate:
            c.sizes = {std::int64_t{1} << 16};
            c.reps = 100000;
            break;
    }
    for (int k = 4; k <= 10; ++k) c.eps_grid.push_back(std::ldexp(1.0, -k));
    return c;
}

void validate(const ExperimentConfig& c) {
    if (!(c.p >= 0.0 && c.p <= 1.0)) throw std::invalid_argument("p must lie in [0, 1]");
    if (c.reps < 1) throw std::invalid_argument("reps must be >= 1");
    if (c.threads < 0) throw std::invalid_argument("threads must be >= 0");
    if (c.sizes.empty()) throw std::invalid_argument("sizes must be nonempty");
    for (std::size_t i = 1; i < c.sizes.size(); ++i) {
        if (c.sizes[i] <= c.sizes[i - 1]) throw std::invalid_argument("sizes must be strictly increasing");
    }
    if (c.kind == ExperimentKind::LisScaling) {
        if (c.sizes.front() < 1 || c.sizes.back() > (std::int64_t{1} << 26)) {
            throw std::invalid_argument("lis_scaling sizes must lie in [1, 2^26]");
        }
        return;
    }
    if (c.sizes.size() != 1) throw std::invalid_argument("excursion experiments take exactly one size N");
    const std::int64_t n = c.sizes.front();
    if (n < 2 || n > kMaxHalfLength) throw std::invalid_argument("half-length N must lie in [2, 2^29]");
    if (c.kind == ExperimentKind::CrossValidate) return;
    if (c.eps_grid.empty()) throw std::invalid_argument("eps_grid must be nonempty");
    for (std::size_t i = 0; i < c.eps_grid.size(); ++i) {
        const double e = c.eps_grid[i];
        if (!(e > 0.0 && e <= 1.0)) throw std::invalid_argument("eps values must lie in (0, 1]");
        if (i > 0 && !(e < c.eps_grid[i - 1])) throw std::invalid_argument("eps_grid must be strictly decreasing");
    }
}

Regression loglog_regression(std::span<const std::pair<double, double>> points) {
    const auto n = static_cast<double>(points.size());
    if (points.size() < 2) throw std::invalid_argument("loglog_regression: need at least two points");
    double mx = 0.0;
    double my = 0.0;
    for (const auto& [x, y] : points) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (const auto& [x, y] : points) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("loglog_regression: all x values are equal");
    Regression r;
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    double sse = 0.0;
    for (const auto& [x, y] : points) {
        const double e = y - (r.intercept + r.slope * x);
        sse += e * e;
    }
    r.stderr_slope = points.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
    r.r2 = syy > 0.0 ? std::max(0.0, 1.0 - sse / syy) : 1.0;
    return r;
}

std::optional<ExponentTable> reference_exponents(double p) {
    if (!(p > 0.0 && p < 1.0)) return std::nullopt;
    static std::mutex mutex;
    static std::map<double, ExponentTable> cache;
    std::lock_guard lock(mutex);
    if (auto it = cache.find(p); it != cache.end()) return it->second;
    ExponentTable row = exponent_row(p);
    cache.emplace(p, row);
    return row;
}

std::vector<std::pair<std::string, double>> exact_pattern_law(int n, double p) {
    if (n < 1 || n > 8) throw std::invalid_argument("exact_pattern_law: n must lie in [1, 8]");
    std::vector<std::int32_t> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 1);
    std::map<std::vector<std::int32_t>, double> law;
    do {
        law.emplace(perm, 0.0);
    } while (std::next_permutation(perm.begin(), perm.end()));

    const auto trees = enumerate_trees(n);
    const double shapes = static_cast<double>(trees.size()) / std::ldexp(1.0, n - 1);
    for (const auto& t : trees) {
        double w = 1.0 / shapes;
        for (const auto& node : t.nodes()) {
            if (!node.is_leaf()) w *= node.sign == Sign::Plus ? p : 1.0 - p;
        }
        const Permutation perm_t = to_permutation(t);
        const auto v = perm_t.values();
        law[std::vector<std::int32_t>(v.begin(), v.end())] += w;
    }
    std::vector<std::pair<std::string, double>> out;
    for (const auto& [pv, prob] : law) {
        std::string name;
        for (auto x : pv) name += std::to_string(x);
        out.emplace_back(std::move(name), prob);
    }
    return out;
}

ChiSquare chi_square_fit(std::span<const std::int64_t> observed, std::span<const double> expected) {
    if (observed.size() != expected.size()) throw std::invalid_argument("chi_square_fit: size mismatch");
    const double total = static_cast<double>(std::accumulate(observed.begin(), observed.end(), std::int64_t{0}));
    ChiSquare c;
    int cells = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = expected[i] * total;
        if (expected[i] <= 0.0) {
            if (observed[i] > 0) c.statistic = std::numeric_limits<double>::infinity();
            continue;
        }
        const double d = static_cast<double>(observed[i]) - e;
        c.statistic += d * d / e;
        ++cells;
    }
    c.dof = std::max(cells - 1, 0);
    if (std::isinf(c.statistic)) {
        c.p_value = 0.0;
    } else {
        c.p_value = c.dof > 0 ? boost::math::gamma_q(0.5 * c.dof, 0.5 * c.statistic) : 1.0;
    }
    return c;
}

ChiSquare chi_square_homogeneity(std::span<const std::int64_t> a, std::span<const std::int64_t> b) {
    if (a.size() != b.size()) throw std::invalid_argument("chi_square_homogeneity: size mismatch");
    const double na = static_cast<double>(std::accumulate(a.begin(), a.end(), std::int64_t{0}));
    const double nb = static_cast<double>(std::accumulate(b.begin(), b.end(), std::int64_t{0}));
    ChiSquare c;
    int cells = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double col = static_cast<double>(a[i] + b[i]);
        if (col == 0.0) continue;
        ++cells;
        const double ea = col * na / (na + nb);
        const double eb = col * nb / (na + nb);
        c.statistic += (static_cast<double>(a[i]) - ea) * (static_cast<double>(a[i]) - ea) / ea;
        c.statistic += (static_cast<double>(b[i]) - eb) * (static_cast<double>(b[i]) - eb) / eb;
    }
    c.dof = std::max(cells - 1, 0);
    c.p_value = c.dof > 0 ? boost::math::gamma_q(0.5 * c.dof, 0.5 * c.statistic) : 1.0;
    return c;
}

ExperimentReport run_lis_scaling(const ExperimentConfig& config, const std::atomic<bool>* cancel) {
    require_kind(config, ExperimentKind::LisScaling);
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentReport report = start_report(config);
    const auto sizes = static_cast<std::int64_t>(config.sizes.size());
    const std::int64_t trials = sizes * config.reps;
    std::vector<std::int32_t> lis(static_cast<std::size_t>(trials), -1);
    parallel_for(trials, config.threads, [&](std::int64_t i) {
        if (cancelled(cancel)) return;
        const std::int64_t s = i / config.reps;
        const std::int64_t rep = i % config.reps;
        Engine rng(derive_seed(config.master_seed, {kind_id(config.kind), static_cast<std::uint64_t>(s),
                                                    static_cast<std::uint64_t>(rep)}));
        const auto tree = sample_tree(static_cast<std::int32_t>(config.sizes[static_cast<std::size_t>(s)]), config.p, rng);
        lis[static_cast<std::size_t>(i)] = lis_tree(tree);
    });

    std::vector<std::pair<double, double>> pts;
    for (std::int64_t s = 0; s < sizes; ++s) {
        Moments m;
        for (std::int64_t rep = 0; rep < config.reps; ++rep) {
            const auto v = lis[static_cast<std::size_t>(s * config.reps + rep)];
            if (v >= 0) m.add(static_cast<std::uint64_t>(v));
        }
        report.partial = report.partial || m.count < config.reps;
        const auto n = static_cast<double>(config.sizes[static_cast<std::size_t>(s)]);
        report.rows.push_back({"lis", n, m.mean(), m.sd(), m.count});
        if (m.count > 0) pts.emplace_back(std::log(n), std::log(m.mean()));
    }
    auto rec = fit_series("lis", pts);
    if (report.reference) {
        rec.reference_low = report.reference->alpha_star;
        rec.reference_high = report.reference->beta_star;
    }
    rec.tolerance = 0.03;
    report.regressions.push_back(std::move(rec));
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

namespace {

struct TwoKill {
    std::int64_t first = -1;
    std::int64_t second = -1;
};

// Kill lengths of one or two uniform tagged points in a fresh excursion.
TwoKill excursion_trial(const ExperimentConfig& config, std::int64_t rep, bool two_points) {
    Engine rng(derive_seed(config.master_seed, {kind_id(config.kind), 0, static_cast<std::uint64_t>(rep)}));
    const std::int64_t n = config.sizes.front();
    auto& heights = scratch<std::int32_t>;
    sample_excursion_into(heights, n, rng);
    const std::uint64_t key = rng();
    DiscreteExcursion exc(std::move(heights), config.p, key);
    thread_local ExcursionTree tree;
    tree.rebuild(exc.heights());
    TwoKill out;
    if (two_points) {
        const auto pts = sample_points(n, 2, rng);
        // sample_points sorts; pick the first tagged point by a fair coin so
        // the single-point series sees a uniform position.
        const bool swap = (rng() >> 63) != 0;
        const std::int64_t t1 = swap ? pts[1] : pts[0];
        const std::int64_t t2 = swap ? pts[0] : pts[1];
        out.first = kill_length(fragment_trace(exc, tree, t1));
        out.second = kill_length(fragment_trace(exc, tree, t2));
    } else {
        const std::int64_t t = uniform_int<std::int64_t>(rng, 1, 2 * n - 1);
        out.first = kill_length(fragment_trace(exc, tree, t));
    }
    heights = std::move(exc).release_heights();
    return out;
}

}  // namespace

ExperimentReport run_survival_scaling(const ExperimentConfig& config, const std::atomic<bool>* cancel) {
    require_kind(config, ExperimentKind::Survival);
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentReport report = start_report(config);
    std::vector<std::int64_t> kill(static_cast<std::size_t>(config.reps), -1);
    parallel_for(config.reps, config.threads, [&](std::int64_t rep) {
        if (cancelled(cancel)) return;
        kill[static_cast<std::size_t>(rep)] = excursion_trial(config, rep, false).first;
    });
    report.partial = std::count(kill.begin(), kill.end(), -1) > 0;
    survival_series(report, "single", kill, 2 * config.sizes.front());
    if (report.reference) {
        report.regressions.back().reference_low = report.reference->lambda_lower;
        report.regressions.back().reference_high = report.reference->lambda_lower;
    }
    report.regressions.back().tolerance = 0.05;
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

ExperimentReport run_two_point(const ExperimentConfig& config, const std::atomic<bool>* cancel) {
    require_kind(config, ExperimentKind::TwoPoint);
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentReport report = start_report(config);
    std::vector<TwoKill> kills(static_cast<std::size_t>(config.reps));
    parallel_for(config.reps, config.threads, [&](std::int64_t rep) {
        if (cancelled(cancel)) return;
        kills[static_cast<std::size_t>(rep)] = excursion_trial(config, rep, true);
    });
    // Both fragments survive to eps iff the larger kill length is below the
    // cutoff, so the joint series is the single-point series of the max.
    std::vector<std::int64_t> single(kills.size());
    std::vector<std::int64_t> joint(kills.size());
    for (std::size_t i = 0; i < kills.size(); ++i) {
        single[i] = kills[i].first;
        joint[i] = kills[i].first < 0 ? -1 : std::max(kills[i].first, kills[i].second);
        report.partial = report.partial || kills[i].first < 0;
    }
    const std::int64_t total = 2 * config.sizes.front();
    survival_series(report, "joint", joint, total);
    report.regressions.back().tolerance = 0.10;
    survival_series(report, "single", single, total);
    report.regressions.back().tolerance = 0.05;
    if (report.reference) {
        const double lam = report.reference->lambda_lower;
        report.regressions[0].reference_low = report.regressions[0].reference_high = 2.0 * lam;
        report.regressions[1].reference_low = report.regressions[1].reference_high = lam;
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

namespace {

std::size_t pattern_index(const Permutation& perm) {
    // Lehmer code rank, matching the lexicographic order of exact_pattern_law.
    const auto v = perm.values();
    std::size_t rank = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::size_t smaller = 0;
        for (std::size_t j = i + 1; j < v.size(); ++j) smaller += v[j] < v[i] ? 1 : 0;
        rank = rank * (v.size() - i) + smaller;
    }
    return rank;
}

struct PatternDraw {
    std::uint8_t tree3 = 0xFF;
    std::uint8_t tree4 = 0xFF;
    std::uint8_t exc3 = 0xFF;
    std::uint8_t exc4 = 0xFF;
};

}  // namespace

ExperimentReport run_cross_validate(const ExperimentConfig& config, const std::atomic<bool>* cancel) {
    require_kind(config, ExperimentKind::CrossValidate);
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentReport report = start_report(config);
    const std::int64_t n = config.sizes.front();
    std::vector<PatternDraw> draws(static_cast<std::size_t>(config.reps));
    parallel_for(config.reps, config.threads, [&](std::int64_t rep) {
        if (cancelled(cancel)) return;
        const auto r = static_cast<std::uint64_t>(rep);
        PatternDraw d;
        Engine tree_rng(derive_seed(config.master_seed, {kind_id(config.kind), 0, r}));
        d.tree3 = static_cast<std::uint8_t>(pattern_index(to_permutation(sample_tree(3, config.p, tree_rng))));
        d.tree4 = static_cast<std::uint8_t>(pattern_index(to_permutation(sample_tree(4, config.p, tree_rng))));

        Engine exc_rng(derive_seed(config.master_seed, {kind_id(config.kind), 1, r}));
        auto& heights = scratch<std::int32_t>;
        sample_excursion_into(heights, n, exc_rng);
        const std::uint64_t key = exc_rng();
        DiscreteExcursion exc(std::move(heights), config.p, key);
        d.exc3 = static_cast<std::uint8_t>(pattern_index(perm_from_points(exc, sample_points(n, 3, exc_rng))));
        d.exc4 = static_cast<std::uint8_t>(pattern_index(perm_from_points(exc, sample_points(n, 4, exc_rng))));
        heights = std::move(exc).release_heights();
        draws[static_cast<std::size_t>(rep)] = d;
    });

    for (int size : {3, 4}) {
        PatternSection section;
        section.n = size;
        const auto law = exact_pattern_law(size, config.p);
        std::vector<std::int64_t> tree(law.size(), 0);
        std::vector<std::int64_t> exc(law.size(), 0);
        std::vector<double> expected;
        for (const auto& d : draws) {
            const auto ti = size == 3 ? d.tree3 : d.tree4;
            const auto ei = size == 3 ? d.exc3 : d.exc4;
            if (ti == 0xFF) {
                report.partial = true;
                continue;
            }
            ++tree[ti];
            ++exc[ei];
        }
        for (std::size_t i = 0; i < law.size(); ++i) {
            section.counts.push_back({law[i].first, law[i].second, tree[i], exc[i]});
            expected.push_back(law[i].second);
        }
        auto fit_tree = chi_square_fit(tree, expected);
        fit_tree.comparison = "tree_vs_exact";
        auto fit_exc = chi_square_fit(exc, expected);
        fit_exc.comparison = "excursion_vs_exact";
        auto homog = chi_square_homogeneity(tree, exc);
        homog.comparison = "tree_vs_excursion";
        section.tests = {fit_tree, fit_exc, homog};

        const double total = static_cast<double>(std::accumulate(tree.begin(), tree.end(), std::int64_t{0}));
        for (std::size_t i = 0; i < law.size() && total > 0; ++i) {
            const auto pattern = std::stod(law[i].first);
            for (const auto& [series, counts] : {std::pair{"tree", &tree}, std::pair{"excursion", &exc}}) {
                const double f = static_cast<double>((*counts)[i]) / total;
                const double se = std::sqrt(f * (1.0 - f) / total);
                report.rows.push_back({series, pattern, f, se, (*counts)[i]});
            }
        }
        report.patterns.push_back(std::move(section));
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config, const std::atomic<bool>* cancel) {
    switch (config.kind) {
        case ExperimentKind::LisScaling: return run_lis_scaling(config, cancel);
        case ExperimentKind::Survival: return run_survival_scaling(config, cancel);
        case ExperimentKind::TwoPoint: return run_two_point(config, cancel);
        case ExperimentKind::CrossValidate: return run_cross_validate(config, cancel);
    }
    throw std::invalid_argument("unknown experiment kind");
}

}  // namespace permuton
