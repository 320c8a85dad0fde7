#include <doctest.h>

#include <map>

#include "permuton/excursion.hpp"
#include "permuton/experiments.hpp"
#include "permuton/subsequence.hpp"
#include "support/oracles.hpp"

using namespace permuton;

namespace {

// Strict-excursion counts: N = 3 has Catalan(2) = 2 paths, N = 4 has 5.
std::vector<std::vector<std::int32_t>> strict_paths(std::int32_t n) {
    std::vector<std::vector<std::int32_t>> weak;
    std::vector<std::int32_t> cur{0};
    oracle::dyck_paths(cur, n - 1, weak);
    std::vector<std::vector<std::int32_t>> out;
    for (const auto& w : weak) {
        std::vector<std::int32_t> e{0};
        for (auto h : w) e.push_back(h + 1);
        e.push_back(0);
        out.push_back(std::move(e));
    }
    return out;
}

struct BruteEvent {
    std::int64_t index;
    std::int64_t parent;
    std::int64_t kept;
};

// Branchings of t found by scanning every valley directly.
std::vector<BruteEvent> brute_events(const DiscreteExcursion& exc, std::int64_t t) {
    const auto e = exc.heights();
    std::vector<BruteEvent> out;
    for (std::int64_t k = 1; k < exc.length(); ++k) {
        if (k == t || !exc.is_valley(k)) continue;
        std::int64_t l = k - 1;
        while (e[static_cast<std::size_t>(l)] > e[static_cast<std::size_t>(k)]) --l;
        std::int64_t r = k + 1;
        while (e[static_cast<std::size_t>(r)] >= e[static_cast<std::size_t>(k)]) ++r;
        if (l < t && t < r) out.push_back({k, r - l, t < k ? k - l : r - k});
    }
    std::sort(out.begin(), out.end(), [](const BruteEvent& a, const BruteEvent& b) { return a.parent > b.parent; });
    return out;
}

}  // namespace

TEST_SUITE("excursion") {

TEST_CASE("is_dyck_path") {
    CHECK(is_dyck_path(std::vector<std::int32_t>{0, 1, 0}));
    CHECK(is_dyck_path(std::vector<std::int32_t>{0, 1, 2, 1, 2, 1, 0}));
    CHECK_FALSE(is_dyck_path(std::vector<std::int32_t>{0, 1, 0, 1, 0}));  // touches zero inside
    CHECK_FALSE(is_dyck_path(std::vector<std::int32_t>{0, 2, 0}));
    CHECK_FALSE(is_dyck_path(std::vector<std::int32_t>{0, 1, 2}));
    CHECK_FALSE(is_dyck_path(std::vector<std::int32_t>{0}));
    CHECK_THROWS_AS(DiscreteExcursion({0, 1, 0, 1, 0}, 0.5, 1), std::invalid_argument);
    CHECK_THROWS_AS(DiscreteExcursion({0, 1, 0}, 1.5, 1), std::invalid_argument);
}

TEST_CASE("sampled excursions are valid") {
    Engine rng(3);
    for (std::int64_t n : {1, 2, 3, 10, 1000, 1 << 16}) {
        const auto e = sample_excursion(n, rng);
        CHECK(static_cast<std::int64_t>(e.size()) == 2 * n + 1);
        CHECK(is_dyck_path(e));
    }
    CHECK_THROWS_AS(sample_excursion(0, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_excursion(kMaxHalfLength + 1, rng), std::invalid_argument);
}

TEST_CASE("sample_excursion_into reuses storage") {
    Engine a(12);
    Engine b(12);
    std::vector<std::int32_t> buf;
    sample_excursion_into(buf, 500, a);
    const auto* data = buf.data();
    CHECK(buf == sample_excursion(500, b));
    sample_excursion_into(buf, 200, a);
    CHECK(buf.data() == data);
    CHECK(buf == sample_excursion(200, b));
}

TEST_CASE("sampler is uniform over strict excursions") {
    for (std::int32_t n : {3, 4}) {
        const auto paths = strict_paths(n);
        CHECK(paths.size() == (n == 3 ? 2u : 5u));
        std::map<std::vector<std::int32_t>, std::size_t> index;
        for (std::size_t i = 0; i < paths.size(); ++i) index[paths[i]] = i;
        std::vector<std::int64_t> counts(paths.size(), 0);
        Engine rng(static_cast<std::uint64_t>(40 + n));
        for (int r = 0; r < 50000; ++r) {
            const auto it = index.find(sample_excursion(n, rng));
            REQUIRE(it != index.end());
            ++counts[it->second];
        }
        const std::vector<double> expected(paths.size(), 1.0 / static_cast<double>(paths.size()));
        CHECK(chi_square_fit(counts, expected).p_value > 1e-3);
    }
}

TEST_CASE("valleys, signs and coins") {
    const DiscreteExcursion minus({0, 1, 2, 1, 2, 1, 2, 1, 0}, 0.0, 77);
    CHECK(minus.half_length() == 4);
    CHECK(minus.valley_count() == 2);
    CHECK(minus.is_valley(3));
    CHECK(minus.is_valley(5));
    CHECK_FALSE(minus.is_valley(1));
    CHECK_FALSE(minus.is_valley(0));
    CHECK(minus.sign(3) == Sign::Minus);
    CHECK_THROWS_AS((void)minus.sign(2), std::invalid_argument);
    const auto s = minus.signs();
    REQUIRE(s.size() == 2);
    CHECK(s[0].first == 3);
    CHECK(s[1].first == 5);

    const DiscreteExcursion plus({0, 1, 2, 1, 2, 1, 2, 1, 0}, 1.0, 77);
    CHECK(plus.sign(5) == Sign::Plus);

    Engine rng(9);
    const auto exc = assign_signs(sample_excursion(1 << 16, rng), 0.3, rng);
    std::int64_t n_plus = 0;
    for (const auto& [k, sg] : exc.signs()) n_plus += sg == Sign::Plus ? 1 : 0;
    const double freq = static_cast<double>(n_plus) / static_cast<double>(exc.valley_count());
    CHECK(std::abs(freq - 0.3) < 5.0 * std::sqrt(0.21 / static_cast<double>(exc.valley_count())));
    // Coins are a pure function of (key, index).
    const DiscreteExcursion again(std::vector<std::int32_t>(exc.heights().begin(), exc.heights().end()), 0.3, 0);
    const DiscreteExcursion again2(std::vector<std::int32_t>(exc.heights().begin(), exc.heights().end()), 0.3, 0);
    for (std::int64_t k = 1; k < 200; ++k) CHECK(again.coin(k) == again2.coin(k));
}

TEST_CASE("excursion tree boundaries and parents") {
    Engine rng(14);
    for (int r = 0; r < 20; ++r) {
        const auto n = uniform_int<std::int64_t>(rng, 1, 300);
        const auto e = sample_excursion(n, rng);
        const ExcursionTree tree(e);
        for (std::int64_t k = 1; k < 2 * n; ++k) {
            std::int64_t l = k - 1;
            while (e[static_cast<std::size_t>(l)] > e[static_cast<std::size_t>(k)]) --l;
            std::int64_t rr = k + 1;
            while (e[static_cast<std::size_t>(rr)] >= e[static_cast<std::size_t>(k)]) ++rr;
            REQUIRE(tree.left_boundary(k) == l);
            REQUIRE(tree.right_boundary(k) == rr);
            const auto par = tree.parent(k);
            if (k == 1) {
                CHECK(par == -1);
            } else {
                // The parent is whichever boundary is higher; a boundary is never 0 or 2N then.
                REQUIRE(par >= 1);
                CHECK((par == l || par == rr));
                CHECK(tree.left_boundary(par) <= l);
                CHECK(tree.right_boundary(par) >= rr);
            }
        }
        const auto anc = tree.ancestors(2 * n - 1);
        if (!anc.empty()) CHECK(anc.front() == 1);
    }
}

TEST_CASE("fragment trace against brute force and flood fill") {
    Engine rng(15);
    for (int r = 0; r < 60; ++r) {
        const auto n = uniform_int<std::int64_t>(rng, 2, 400);
        const auto exc = assign_signs(sample_excursion(n, rng), 0.5, rng);
        const ExcursionTree tree(exc.heights());
        for (int j = 0; j < 10; ++j) {
            const auto t = uniform_int<std::int64_t>(rng, 1, 2 * n - 1);
            const auto tr = fragment_trace(exc, tree, t);
            const auto brute = brute_events(exc, t);
            REQUIRE(tr.events.size() == brute.size());
            CHECK(tr.total_length == 2 * n);
            for (std::size_t i = 0; i < brute.size(); ++i) {
                const auto& ev = tr.events[i];
                CHECK(ev.index == brute[i].index);
                CHECK(ev.parent_length == brute[i].parent);
                CHECK(ev.kept_length == brute[i].kept);
                CHECK(ev.height == exc.height(ev.index));
                CHECK(ev.sign == exc.sign(ev.index));
                CHECK((ev.kept_side == Side::Left) == (t < ev.index));
                const auto ff = oracle::flood_fill_length(exc.heights(), t, ev.height);
                if (ev.kept_side == Side::Left) {
                    CHECK(ev.kept_length == ff);
                } else {
                    CHECK(ev.kept_length >= ff);
                }
                // Parity makes equal splits impossible.
                CHECK(ev.kept_length != ev.discarded_length());
                if (i > 0) {
                    CHECK(ev.height >= tr.events[i - 1].height);
                    CHECK(ev.parent_length <= tr.events[i - 1].kept_length);
                }
            }
            CHECK(tr.events.size() == fragment_trace(exc, t).events.size());
        }
    }
}

TEST_CASE("kill length on a hand-built path") {
    const std::vector<std::int32_t> e{0, 1, 2, 1, 2, 1, 2, 1, 0};
    const DiscreteExcursion minus(e, 0.0, 5);
    CHECK(kill_length(fragment_trace(minus, 2)) == 7);
    CHECK(kill_length(fragment_trace(minus, 4)) == 5);
    CHECK(kill_length(fragment_trace(minus, 6)) == 0);
    CHECK_FALSE(survives_to_eps(minus, 2, 0.5));
    CHECK(survives_to_eps(minus, 2, 1.0));
    CHECK_FALSE(survives_to_eps(minus, 4, 5.0 / 8.0));
    CHECK(survives_to_eps(minus, 4, 0.7));
    CHECK(survives_to_eps(minus, 6, 1e-9));
    CHECK(two_point_survival(minus, 4, 6, 0.7) == std::pair{true, true});
    CHECK(two_point_survival(minus, 2, 6, 0.7) == std::pair{false, true});
    CHECK_THROWS_AS(survives_to_eps(minus, 2, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(survives_to_eps(minus, 2, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(fragment_trace(minus, 0), std::invalid_argument);
    CHECK_THROWS_AS(two_point_survival(minus, 3, 3, 0.5), std::invalid_argument);

    const DiscreteExcursion plus(e, 1.0, 5);
    for (std::int64_t t = 1; t < 8; ++t) CHECK(kill_length(fragment_trace(plus, t)) == 0);
}

TEST_CASE("survival is monotone in eps") {
    Engine rng(16);
    const auto exc = assign_signs(sample_excursion(1 << 12, rng), 0.5, rng);
    const ExcursionTree tree(exc.heights());
    for (int j = 0; j < 200; ++j) {
        const auto t = uniform_int<std::int64_t>(rng, 1, exc.length() - 1);
        const auto tr = fragment_trace(exc, tree, t);
        bool prev = true;
        for (double eps = 1.0; eps > 1e-4; eps /= 2) {
            const bool s = survives_to_eps(tr, eps);
            CHECK((prev || !s));
            prev = s;
        }
    }
}

TEST_CASE("sample_points") {
    Engine rng(17);
    const auto pts = sample_points(10, 19, rng);
    CHECK(pts.size() == 19);
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(pts[i] == static_cast<std::int64_t>(i) + 1);
    for (int r = 0; r < 100; ++r) {
        const auto q = sample_points(1000, 5, rng);
        CHECK(std::is_sorted(q.begin(), q.end()));
        CHECK(std::adjacent_find(q.begin(), q.end()) == q.end());
        CHECK(q.front() >= 1);
        CHECK(q.back() <= 1999);
    }
    CHECK_THROWS_AS(sample_points(10, 20, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_points(10, 0, rng), std::invalid_argument);
}

TEST_CASE("cartesian tree matches the naive recursive split") {
    Engine rng(18);
    for (int r = 0; r < 300; ++r) {
        const auto n = uniform_int<std::int64_t>(rng, 2, 200);
        const auto exc = assign_signs(sample_excursion(n, rng), 0.5, rng);
        const auto m = uniform_int<std::int32_t>(rng, 1, static_cast<std::int32_t>(std::min<std::int64_t>(12, 2 * n - 1)));
        const auto pts = sample_points(n, m, rng);
        const auto t = cartesian_tree(exc, pts);
        REQUIRE(t.to_string() == oracle::naive_cartesian(exc, pts, 0, pts.size()));
        const auto perm = perm_from_points(exc, pts);
        CHECK(perm == to_permutation(t));
        CHECK(perm == oracle::perm_by_range_minima(exc, pts));
        CHECK(is_separable(perm));
    }
    const DiscreteExcursion exc({0, 1, 2, 1, 0}, 0.5, 1);
    CHECK_THROWS_AS(cartesian_tree(exc, std::vector<std::int64_t>{}), std::invalid_argument);
    CHECK_THROWS_AS(cartesian_tree(exc, std::vector<std::int64_t>{2, 1}), std::invalid_argument);
    CHECK_THROWS_AS(cartesian_tree(exc, std::vector<std::int64_t>{0, 1}), std::invalid_argument);
}

TEST_CASE("large excursions build without deep recursion") {
    Engine rng(19);
    const auto exc = assign_signs(sample_excursion(1 << 20, rng), 0.5, rng);
    const ExcursionTree tree(exc.heights());
    const auto tr = fragment_trace(exc, tree, exc.length() / 2);
    CHECK(tr.total_length == std::int64_t{1} << 21);
    std::int64_t prev = tr.total_length;
    for (const auto& ev : tr.events) {
        CHECK(ev.parent_length <= prev);
        prev = ev.kept_length;
    }
}

}  // TEST_SUITE
