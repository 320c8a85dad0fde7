#include "permuton/subsequence.hpp"

#include <algorithm>
#include <string>

namespace permuton {

LisResult lis_patience(const Permutation& perm) {
    const auto values = perm.values();
    const auto n = values.size();
    // tops[k]: position (0-based) of the smallest value ending a run of length k + 1.
    std::vector<std::int32_t> tops;
    std::vector<std::int32_t> top_values;
    std::vector<std::int32_t> pred(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = values[i];
        // Leftmost pile whose top is >= v.
        const auto it = std::lower_bound(top_values.begin(), top_values.end(), v);
        const auto k = static_cast<std::size_t>(it - top_values.begin());
        if (k > 0) pred[i] = tops[k - 1];
        if (k == tops.size()) {
            tops.push_back(static_cast<std::int32_t>(i));
            top_values.push_back(v);
        } else {
            tops[k] = static_cast<std::int32_t>(i);
            top_values[k] = v;
        }
    }
    LisResult out;
    out.length = static_cast<std::int32_t>(tops.size());
    out.witness.resize(tops.size());
    std::int32_t cur = tops.empty() ? -1 : tops.back();
    for (auto k = tops.size(); k-- > 0;) {
        out.witness[k] = cur + 1;
        cur = pred[static_cast<std::size_t>(cur)];
    }
    return out;
}

std::int32_t lis_bruteforce(const Permutation& perm) {
    if (perm.size() > kBruteForceCap) {
        throw SizeError("lis_bruteforce: n = " + std::to_string(perm.size()) + " exceeds cap " +
                        std::to_string(kBruteForceCap));
    }
    const auto v = perm.values();
    std::vector<std::int32_t> best(v.size(), 1);
    std::int32_t out = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
        for (std::size_t i = 0; i < j; ++i) {
            if (v[i] < v[j]) best[j] = std::max(best[j], best[i] + 1);
        }
        out = std::max(out, best[j]);
    }
    return out;
}

bool is_increasing(const Permutation& perm, std::span<const std::int32_t> positions) {
    for (std::size_t k = 0; k < positions.size(); ++k) {
        if (positions[k] < 1 || positions[k] > perm.size()) {
            throw std::invalid_argument("is_increasing: position out of range");
        }
        if (k > 0 && positions[k] <= positions[k - 1]) {
            throw std::invalid_argument("is_increasing: positions must be strictly increasing");
        }
    }
    for (std::size_t k = 1; k < positions.size(); ++k) {
        if (perm.at(positions[k]) <= perm.at(positions[k - 1])) return false;
    }
    return true;
}

bool is_separable(const Permutation& perm) {
    struct Block {
        std::int32_t lo;
        std::int32_t hi;
    };
    std::vector<Block> stack;
    for (const std::int32_t v : perm.values()) {
        Block cur{v, v};
        while (!stack.empty() && (stack.back().hi + 1 == cur.lo || cur.hi + 1 == stack.back().lo)) {
            cur = {std::min(cur.lo, stack.back().lo), std::max(cur.hi, stack.back().hi)};
            stack.pop_back();
        }
        stack.push_back(cur);
    }
    return stack.size() <= 1;
}

namespace {

bool extend_pattern(std::span<const std::int32_t> text, std::span<const std::int32_t> pat, std::size_t from,
                    std::vector<std::int32_t>& chosen) {
    const std::size_t k = chosen.size();
    if (k == pat.size()) return true;
    for (std::size_t i = from; i + (pat.size() - k) <= text.size(); ++i) {
        bool ok = true;
        for (std::size_t j = 0; j < k && ok; ++j) {
            ok = (chosen[j] < text[i]) == (pat[j] < pat[k]);
        }
        if (!ok) continue;
        chosen.push_back(text[i]);
        if (extend_pattern(text, pat, i + 1, chosen)) return true;
        chosen.pop_back();
    }
    return false;
}

}  // namespace

bool contains_pattern(const Permutation& perm, const Permutation& pattern) {
    std::vector<std::int32_t> chosen;
    chosen.reserve(static_cast<std::size_t>(pattern.size()));
    return extend_pattern(perm.values(), pattern.values(), 0, chosen);
}

}  // namespace permuton
