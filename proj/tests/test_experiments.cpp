#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>

#include <json.hpp>

#include "permuton/experiments.hpp"
#include "permuton/report_io.hpp"
#include "permuton/signed_tree.hpp"

using namespace permuton;

namespace {

ExperimentConfig small_lis() {
    ExperimentConfig c = default_config(ExperimentKind::LisScaling);
    c.sizes = {64, 128, 256};
    c.reps = 40;
    c.master_seed = 3;
    return c;
}

ExperimentConfig small_survival(ExperimentKind kind) {
    ExperimentConfig c = default_config(kind);
    c.sizes = {1 << 10};
    c.eps_grid = {0.25, 0.125, 0.0625};
    c.reps = 200;
    c.master_seed = 4;
    return c;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("kind names") {
    for (auto k : {ExperimentKind::LisScaling, ExperimentKind::Survival, ExperimentKind::TwoPoint,
                   ExperimentKind::CrossValidate}) {
        CHECK(parse_kind(to_string(k)) == k);
    }
    CHECK(parse_kind("crossval") == ExperimentKind::CrossValidate);
    CHECK_THROWS_AS(parse_kind("bogus"), std::invalid_argument);
}

TEST_CASE("config validation") {
    auto c = small_lis();
    CHECK_NOTHROW(validate(c));
    c.sizes = {128, 64};
    CHECK_THROWS_AS(validate(c), std::invalid_argument);
    c = small_lis();
    c.p = 1.2;
    CHECK_THROWS_AS(validate(c), std::invalid_argument);
    c = small_lis();
    c.reps = 0;
    CHECK_THROWS_AS(validate(c), std::invalid_argument);
    auto s = small_survival(ExperimentKind::Survival);
    CHECK_NOTHROW(validate(s));
    s.eps_grid = {0.1, 0.2};
    CHECK_THROWS_AS(validate(s), std::invalid_argument);
    s = small_survival(ExperimentKind::Survival);
    s.sizes = {16, 32};
    CHECK_THROWS_AS(validate(s), std::invalid_argument);
    s = small_survival(ExperimentKind::Survival);
    s.eps_grid = {0.0};
    CHECK_THROWS_AS(validate(s), std::invalid_argument);
    CHECK_THROWS_AS(run_survival_scaling(small_lis()), std::invalid_argument);
}

TEST_CASE("log-log regression") {
    std::vector<std::pair<double, double>> pts;
    for (double x : {1.0, 2.0, 4.0, 8.0}) pts.emplace_back(std::log(x), std::log(3.0 * std::pow(x, 0.75)));
    const auto r = loglog_regression(pts);
    CHECK(r.slope == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(std::exp(r.intercept) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(r.stderr_slope == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.r2 == doctest::Approx(1.0));

    // Inputs are already logged. Hand-computed OLS for (0, 1), (1, 1), (2, 3).
    const std::vector<std::pair<double, double>> noisy{{0.0, 1.0}, {1.0, 1.0}, {2.0, 3.0}};
    const auto n = loglog_regression(noisy);
    CHECK(n.slope == doctest::Approx(1.0));
    CHECK(n.intercept == doctest::Approx(2.0 / 3.0));
    CHECK(n.stderr_slope == doctest::Approx(std::sqrt((2.0 / 3.0) / 2.0)));
    CHECK(n.r2 == doctest::Approx(0.75));

    CHECK_THROWS_AS(loglog_regression(std::vector<std::pair<double, double>>{{1.0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(loglog_regression(std::vector<std::pair<double, double>>{{2.0, 1.0}, {2.0, 3.0}}),
                    std::invalid_argument);
}

TEST_CASE("chi-square helpers") {
    const std::vector<std::int64_t> obs{50, 30, 20};
    const std::vector<double> exp_ok{0.5, 0.3, 0.2};
    const auto fit = chi_square_fit(obs, exp_ok);
    CHECK(fit.statistic == doctest::Approx(0.0));
    CHECK(fit.dof == 2);
    CHECK(fit.p_value == doctest::Approx(1.0));
    const auto skew = chi_square_fit(std::vector<std::int64_t>{60, 40}, std::vector<double>{0.5, 0.5});
    CHECK(skew.statistic == doctest::Approx(4.0));
    CHECK(skew.p_value == doctest::Approx(0.0455002638963584).epsilon(1e-9));
    const auto impossible = chi_square_fit(std::vector<std::int64_t>{10, 1}, std::vector<double>{1.0, 0.0});
    CHECK(impossible.p_value == 0.0);
    const auto hom = chi_square_homogeneity(std::vector<std::int64_t>{10, 20, 0}, std::vector<std::int64_t>{20, 40, 0});
    CHECK(hom.statistic == doctest::Approx(0.0));
    CHECK(hom.dof == 1);
    CHECK_THROWS_AS(chi_square_fit(obs, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("exact pattern law") {
    const auto law3 = exact_pattern_law(3, 0.3);
    REQUIRE(law3.size() == 6);
    std::map<std::string, double> m(law3.begin(), law3.end());
    CHECK(m["123"] == doctest::Approx(0.09));
    CHECK(m["321"] == doctest::Approx(0.49));
    for (const char* mixed : {"132", "213", "231", "312"}) CHECK(m[mixed] == doctest::Approx(0.3 * 0.7 / 2));
    CHECK(law3.front().first == "123");
    CHECK(law3.back().first == "321");
    for (int n : {1, 2, 4, 5}) {
        const auto law = exact_pattern_law(n, 0.6);
        double total = 0.0;
        for (const auto& [pat, pr] : law) total += pr;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
    std::map<std::string, double> m4;
    for (const auto& [pat, pr] : exact_pattern_law(4, 0.5)) m4[pat] = pr;
    CHECK(m4.size() == 24);
    CHECK(m4["2413"] == 0.0);
    CHECK(m4["3142"] == 0.0);
    CHECK_THROWS_AS(exact_pattern_law(9, 0.5), std::invalid_argument);
}

TEST_CASE("reference exponents") {
    CHECK_FALSE(reference_exponents(1.0).has_value());
    CHECK_FALSE(reference_exponents(0.0).has_value());
}

TEST_CASE("lis scaling report shape") {
    const auto rep = run_lis_scaling(small_lis());
    CHECK_FALSE(rep.partial);
    REQUIRE(rep.rows.size() == 3);
    for (const auto& r : rep.rows) {
        CHECK(r.series == "lis");
        CHECK(r.count == 40);
        CHECK(r.mean > 1.0);
        CHECK(r.sd >= 0.0);
    }
    REQUIRE(rep.regressions.size() == 1);
    REQUIRE(rep.regressions[0].fit.has_value());
    CHECK(rep.regressions[0].fit->slope > 0.5);
    CHECK(rep.regressions[0].fit->slope < 1.0);
    CHECK(rep.reference.has_value());
}

TEST_CASE("lis at p = 1 and p = 0") {
    auto c = small_lis();
    c.p = 1.0;
    auto rep = run_lis_scaling(c);
    for (const auto& r : rep.rows) {
        CHECK(r.mean == r.n_or_eps);
        CHECK(r.sd == 0.0);
    }
    CHECK(rep.regressions[0].fit->slope == doctest::Approx(1.0));
    CHECK_FALSE(rep.reference.has_value());
    c.p = 0.0;
    rep = run_lis_scaling(c);
    for (const auto& r : rep.rows) CHECK(r.mean == 1.0);
    CHECK(rep.regressions[0].fit->slope == doctest::Approx(0.0));
}

TEST_CASE("survival report shape") {
    const auto rep = run_survival_scaling(small_survival(ExperimentKind::Survival));
    REQUIRE(rep.rows.size() == 3);
    double prev = 1.0;
    for (const auto& r : rep.rows) {
        CHECK(r.series == "single");
        CHECK(r.count == 200);
        CHECK(r.mean <= prev);
        prev = r.mean;
    }
    REQUIRE(rep.regressions.size() == 1);

    auto all = small_survival(ExperimentKind::Survival);
    all.p = 1.0;
    const auto trivial = run_survival_scaling(all);
    for (const auto& r : trivial.rows) CHECK(r.mean == 1.0);
    REQUIRE(trivial.regressions.size() == 1);
    if (trivial.regressions[0].fit) CHECK(trivial.regressions[0].fit->slope == doctest::Approx(0.0));
}

TEST_CASE("zero survivors leave the regression undefined") {
    auto c = small_survival(ExperimentKind::Survival);
    c.p = 0.0;
    c.eps_grid = {1e-6};
    c.reps = 20;
    const auto rep = run_survival_scaling(c);
    REQUIRE(rep.regressions.size() == 1);
    CHECK_FALSE(rep.regressions[0].fit.has_value());
    CHECK_FALSE(rep.regressions[0].note.empty());
    const auto j = nlohmann::json::parse(report_json(rep));
    CHECK(j["regressions"][0]["slope"].is_null());
    CHECK(j["regressions"][0]["defined"] == false);
}

TEST_CASE("two-point report shape") {
    const auto rep = run_two_point(small_survival(ExperimentKind::TwoPoint));
    std::map<std::string, int> per_series;
    for (const auto& r : rep.rows) ++per_series[r.series];
    CHECK(per_series["joint"] == 3);
    CHECK(per_series["single"] == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(rep.rows[i].mean <= rep.rows[i + 3].mean);
    CHECK(rep.regressions.size() == 2);
}

TEST_CASE("cross-validation report shape") {
    auto c = default_config(ExperimentKind::CrossValidate);
    c.sizes = {1 << 8};
    c.reps = 500;
    const auto rep = run_cross_validate(c);
    REQUIRE(rep.patterns.size() == 2);
    CHECK(rep.patterns[0].n == 3);
    CHECK(rep.patterns[0].counts.size() == 6);
    CHECK(rep.patterns[1].counts.size() == 24);
    for (const auto& sec : rep.patterns) {
        std::int64_t tree = 0;
        std::int64_t exc = 0;
        for (const auto& pc : sec.counts) {
            tree += pc.tree;
            exc += pc.excursion;
            if (pc.pattern == "2413" || pc.pattern == "3142") {
                CHECK(pc.tree == 0);
                CHECK(pc.excursion == 0);
            }
        }
        CHECK(tree == 500);
        CHECK(exc == 500);
        CHECK(sec.tests.size() == 3);
    }
    const auto csv = report_csv(rep);
    CHECK(csv.find("cross_validate:tree,0.5,123,") != std::string::npos);
    CHECK(csv.find("cross_validate:excursion,0.5,4321,") != std::string::npos);
}

TEST_CASE("determinism across thread counts") {
    for (auto c : {small_lis(), small_survival(ExperimentKind::Survival), small_survival(ExperimentKind::TwoPoint)}) {
        c.threads = 1;
        const auto a = report_json(run_experiment(c));
        const auto b = report_json(run_experiment(c));
        c.threads = 4;
        const auto d = report_json(run_experiment(c));
        CHECK(a == b);
        CHECK(a == d);
        c.master_seed += 1;
        CHECK(report_json(run_experiment(c)) != a);
    }
}

TEST_CASE("cancellation produces a partial report") {
    std::atomic<bool> cancel{true};
    const auto rep = run_lis_scaling(small_lis(), &cancel);
    CHECK(rep.partial);
    const auto j = nlohmann::json::parse(report_json(rep));
    CHECK(j["partial"] == true);
}

TEST_CASE("report serialization") {
    const auto rep = run_lis_scaling(small_lis());
    const auto j = nlohmann::json::parse(report_json(rep));
    CHECK(j["schema_version"] == kSchemaVersion);
    CHECK(j["config"]["kind"] == "lis_scaling");
    CHECK(j["config"]["sizes"].size() == 3);
    CHECK_FALSE(j["config"].contains("threads"));
    CHECK_FALSE(j.contains("wall_seconds"));
    CHECK(j["rows"].size() == 3);
    CHECK(j["reference"]["p"] == 0.5);
    const auto csv = report_csv(rep);
    CHECK(csv.rfind("kind,p,n_or_eps,mean,sd,count\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(csv.find("lis_scaling:lis,0.5,64,") != std::string::npos);
    CHECK(report_filename(rep.config, "json") == "lis_scaling_p0.5_seed3.json");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(NAN).empty());

    const std::vector<ExponentTable> rows{ExponentTable{.p = 0.5, .alpha_star = 0.8}};
    const auto ej = nlohmann::json::parse(exponent_json(rows));
    CHECK(ej["rows"][0]["alpha_star"] == 0.8);
    const auto ec = exponent_csv(rows);
    CHECK(std::count(ec.begin(), ec.end(), ',') == 30);
}

}  // TEST_SUITE
