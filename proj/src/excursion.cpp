#include "permuton/excursion.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

namespace permuton {

namespace {

void check_half_length(std::int64_t n) {
    if (n < 1 || n > kMaxHalfLength) {
        throw std::invalid_argument("excursion half-length must lie in [1, 2^29], got " + std::to_string(n));
    }
}

}  // namespace

void sample_excursion_into(std::vector<std::int32_t>& heights, std::int64_t half_length, Engine& rng) {
    check_half_length(half_length);
    // A strictly positive excursion of length 2N is an up-step, a weak Dyck
    // path of length 2M with M = N - 1 lifted by one, and a down-step.
    const std::int64_t m = half_length - 1;
    const std::int64_t steps = 2 * m + 1;
    const auto words = static_cast<std::size_t>((steps + 63) / 64);

    // Uniform bits, then flip uniformly chosen wrong-type bits until exactly
    // M are set. The procedure commutes with permutations of the positions,
    // so the result is uniform over arrangements with M up-steps.
    std::vector<std::uint64_t> bits(words);
    for (auto& w : bits) w = rng();
    if (const auto tail = steps % 64; tail != 0) bits.back() &= (std::uint64_t{1} << tail) - 1;
    std::int64_t ups = 0;
    for (auto w : bits) ups += std::popcount(w);
    std::uniform_int_distribution<std::int64_t> pos(0, steps - 1);
    while (ups != m) {
        const auto j = pos(rng);
        const auto word = static_cast<std::size_t>(j >> 6);
        const std::uint64_t mask = std::uint64_t{1} << (j & 63);
        const bool set = (bits[word] & mask) != 0;
        if (ups > m && set) {
            bits[word] &= ~mask;
            --ups;
        } else if (ups < m && !set) {
            bits[word] |= mask;
            ++ups;
        }
    }
    auto step = [&](std::int64_t j) -> std::int32_t {
        return static_cast<std::int32_t>(((bits[static_cast<std::size_t>(j >> 6)] >> (j & 63)) & 1U) * 2) - 1;
    };

    // Cycle lemma: M ups and M + 1 downs started right after the first global
    // minimum of the partial sums stay >= 0 until the final down-step.
    std::int64_t sum = 0;
    std::int64_t best = 0;
    std::int64_t start = 0;
    for (std::int64_t j = 0; j < steps; ++j) {
        sum += step(j);
        if (sum < best) {
            best = sum;
            start = j + 1;
        }
    }
    if (start == steps) start = 0;

    heights.resize(static_cast<std::size_t>(2 * half_length + 1));
    heights[0] = 0;
    heights[1] = 1;
    std::int64_t j = start;
    for (std::int64_t k = 2; k < 2 * half_length; ++k) {
        heights[static_cast<std::size_t>(k)] = heights[static_cast<std::size_t>(k - 1)] + step(j);
        if (++j == steps) j = 0;
    }
    heights[static_cast<std::size_t>(2 * half_length)] = 0;
}

std::vector<std::int32_t> sample_excursion(std::int64_t half_length, Engine& rng) {
    std::vector<std::int32_t> heights;
    sample_excursion_into(heights, half_length, rng);
    return heights;
}

bool is_dyck_path(std::span<const std::int32_t> e) {
    if (e.size() < 3 || e.size() % 2 == 0) return false;
    if (e.front() != 0 || e.back() != 0) return false;
    for (std::size_t k = 1; k < e.size(); ++k) {
        if (e[k] - e[k - 1] != 1 && e[k] - e[k - 1] != -1) return false;
        if (k + 1 < e.size() && e[k] <= 0) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------

DiscreteExcursion::DiscreteExcursion(std::vector<std::int32_t> heights, double p, std::uint64_t sign_key)
    : heights_(std::move(heights)), p_(p), sign_key_(sign_key) {
    if (!is_dyck_path(heights_)) throw std::invalid_argument("DiscreteExcursion: heights are not a Dyck path");
    if (static_cast<std::int64_t>(heights_.size()) > 2 * kMaxHalfLength + 1) {
        throw std::invalid_argument("DiscreteExcursion: path too long");
    }
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("DiscreteExcursion: p must lie in [0, 1]");
}

bool DiscreteExcursion::is_valley(std::int64_t k) const {
    if (k <= 0 || k >= length()) return false;
    const auto i = static_cast<std::size_t>(k);
    return heights_[i - 1] > heights_[i] && heights_[i] < heights_[i + 1];
}

Sign DiscreteExcursion::coin(std::int64_t k) const {
    if (k <= 0 || k >= length()) throw std::invalid_argument("DiscreteExcursion::coin: index not interior");
    const std::uint64_t h = mix64(sign_key_ ^ mix64(static_cast<std::uint64_t>(k)));
    return to_unit(h) < p_ ? Sign::Plus : Sign::Minus;
}

Sign DiscreteExcursion::sign(std::int64_t k) const {
    if (!is_valley(k)) throw std::invalid_argument("DiscreteExcursion::sign: index is not a valley");
    return coin(k);
}

std::vector<std::pair<std::int64_t, Sign>> DiscreteExcursion::signs() const {
    std::vector<std::pair<std::int64_t, Sign>> out;
    for (std::int64_t k = 1; k < length(); ++k) {
        if (is_valley(k)) out.emplace_back(k, coin(k));
    }
    return out;
}

std::int64_t DiscreteExcursion::valley_count() const {
    std::int64_t c = 0;
    for (std::int64_t k = 1; k < length(); ++k) c += is_valley(k) ? 1 : 0;
    return c;
}

DiscreteExcursion assign_signs(std::vector<std::int32_t> heights, double p, Engine& rng) {
    return DiscreteExcursion(std::move(heights), p, rng());
}

// ---------------------------------------------------------------------------

void ExcursionTree::rebuild(std::span<const std::int32_t> e) {
    heights_ = e;
    const auto size = e.size();
    const auto last = static_cast<std::int32_t>(size) - 1;  // 2N
    left_.assign(size, 0);
    right_.assign(size, last);
    // With unit steps the nearest index at height <= e[k] on the left is the
    // latest visit to e[k] or e[k] - 1, and on the right the next visit to
    // e[k] - 1. One array of last visits per pass.
    const auto top = static_cast<std::size_t>(*std::max_element(e.begin(), e.end())) + 1;
    std::vector<std::int32_t> seen(top, 0);
    for (std::int32_t k = 1; k < last; ++k) {
        const auto h = static_cast<std::size_t>(e[static_cast<std::size_t>(k)]);
        left_[static_cast<std::size_t>(k)] = std::max(seen[h], seen[h - 1]);
        seen[h] = k;
    }
    std::fill(seen.begin(), seen.end(), last);
    for (std::int32_t k = last - 1; k >= 1; --k) {
        const auto h = static_cast<std::size_t>(e[static_cast<std::size_t>(k)]);
        right_[static_cast<std::size_t>(k)] = seen[h - 1];
        seen[h] = k;
    }
}

std::int64_t ExcursionTree::parent(std::int64_t k) const {
    const auto l = left_[static_cast<std::size_t>(k)];
    const auto r = right_[static_cast<std::size_t>(k)];
    const auto last = static_cast<std::int32_t>(heights_.size()) - 1;
    if (l == 0 && r == last) return -1;
    // The higher boundary split later, so it is the closer ancestor; on equal
    // heights the left one is the ancestor of the right one.
    return heights_[static_cast<std::size_t>(l)] > heights_[static_cast<std::size_t>(r)] ? l : r;
}

std::vector<std::int64_t> ExcursionTree::ancestors(std::int64_t k) const {
    std::vector<std::int64_t> out;
    for (auto a = parent(k); a != -1; a = parent(a)) out.push_back(a);
    std::reverse(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------

FragmentTrace fragment_trace(const DiscreteExcursion& exc, const ExcursionTree& tree, std::int64_t t) {
    if (t <= 0 || t >= exc.length()) throw std::invalid_argument("fragment_trace: t must be interior");
    FragmentTrace trace;
    trace.tagged = t;
    trace.total_length = exc.length();
    for (const auto k : tree.ancestors(t)) {
        if (!exc.is_valley(k)) continue;  // boundary shrinkage, not a branching
        const auto l = tree.left_boundary(k);
        const auto r = tree.right_boundary(k);
        BranchEvent ev;
        ev.index = k;
        ev.height = exc.height(k);
        ev.parent_length = r - l;
        ev.kept_side = t < k ? Side::Left : Side::Right;
        ev.kept_length = t < k ? k - l : r - k;
        ev.sign = exc.sign(k);
        trace.events.push_back(ev);
    }
    return trace;
}

FragmentTrace fragment_trace(const DiscreteExcursion& exc, std::int64_t t) {
    const ExcursionTree tree(exc.heights());
    return fragment_trace(exc, tree, t);
}

std::int64_t kill_length(const FragmentTrace& trace) {
    for (const auto& ev : trace.events) {
        if (ev.kills()) return ev.parent_length;
    }
    return 0;
}

bool survives_to_eps(const FragmentTrace& trace, double eps) {
    if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("survives_to_eps: eps must lie in (0, 1]");
    return static_cast<double>(kill_length(trace)) < eps * static_cast<double>(trace.total_length);
}

bool survives_to_eps(const DiscreteExcursion& exc, std::int64_t t, double eps) {
    return survives_to_eps(fragment_trace(exc, t), eps);
}

std::pair<bool, bool> two_point_survival(const DiscreteExcursion& exc, std::int64_t t1, std::int64_t t2,
                                         double eps) {
    if (t1 == t2) throw std::invalid_argument("two_point_survival: positions must be distinct");
    const ExcursionTree tree(exc.heights());
    return {survives_to_eps(fragment_trace(exc, tree, t1), eps), survives_to_eps(fragment_trace(exc, tree, t2), eps)};
}

std::vector<std::int64_t> sample_points(std::int64_t half_length, std::int32_t count, Engine& rng) {
    check_half_length(half_length);
    if (count < 1 || count > 2 * half_length - 1) {
        throw std::invalid_argument("sample_points: count must lie in [1, 2N - 1]");
    }
    std::vector<std::int64_t> pts;
    pts.reserve(static_cast<std::size_t>(count));
    std::uniform_int_distribution<std::int64_t> pos(1, 2 * half_length - 1);
    while (static_cast<std::int32_t>(pts.size()) < count) {
        const auto x = pos(rng);
        if (std::find(pts.begin(), pts.end(), x) == pts.end()) pts.push_back(x);
    }
    std::sort(pts.begin(), pts.end());
    return pts;
}

SignedBinaryTree cartesian_tree(const DiscreteExcursion& exc, std::span<const std::int64_t> points) {
    if (points.empty()) throw std::invalid_argument("cartesian_tree: need at least one point");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i] <= 0 || points[i] >= exc.length()) {
            throw std::invalid_argument("cartesian_tree: points must be interior positions");
        }
        if (i > 0 && points[i] <= points[i - 1]) {
            throw std::invalid_argument("cartesian_tree: points must be strictly increasing");
        }
    }
    const auto m = static_cast<std::int32_t>(points.size());
    if (m == 1) return SignedBinaryTree{};

    const auto e = exc.heights();
    const auto gaps = m - 1;
    std::vector<std::int32_t> gap_min(static_cast<std::size_t>(gaps));
    std::vector<std::int64_t> gap_arg(static_cast<std::size_t>(gaps));
    for (std::int32_t g = 0; g < gaps; ++g) {
        auto best = points[static_cast<std::size_t>(g)];
        for (auto k = best + 1; k <= points[static_cast<std::size_t>(g) + 1]; ++k) {
            if (e[static_cast<std::size_t>(k)] < e[static_cast<std::size_t>(best)]) best = k;
        }
        gap_arg[static_cast<std::size_t>(g)] = best;
        gap_min[static_cast<std::size_t>(g)] = e[static_cast<std::size_t>(best)];
    }

    // Leaves are ids 0..m-1, gap g is internal node m + g. Equal minima keep
    // the earlier gap on the stack, so the leftmost minimum becomes the ancestor.
    using Raw = SignedBinaryTree::RawNode;
    std::vector<Raw> raw(static_cast<std::size_t>(m + gaps));
    for (std::int32_t g = 0; g < gaps; ++g) {
        raw[static_cast<std::size_t>(m + g)] = Raw{g, g + 1, exc.coin(gap_arg[static_cast<std::size_t>(g)])};
    }
    std::vector<std::int32_t> stack;
    for (std::int32_t g = 0; g < gaps; ++g) {
        std::int32_t last = -1;
        while (!stack.empty() && gap_min[static_cast<std::size_t>(stack.back())] > gap_min[static_cast<std::size_t>(g)]) {
            last = stack.back();
            stack.pop_back();
        }
        if (last != -1) raw[static_cast<std::size_t>(m + g)].left = m + last;
        if (!stack.empty()) raw[static_cast<std::size_t>(m + stack.back())].right = m + g;
        stack.push_back(g);
    }
    return SignedBinaryTree::from_arena(raw, m + stack.front());
}

Permutation perm_from_points(const DiscreteExcursion& exc, std::span<const std::int64_t> points) {
    return to_permutation(cartesian_tree(exc, points));
}

}  // namespace permuton
