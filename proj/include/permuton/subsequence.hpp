#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "permuton/signed_tree.hpp"

namespace permuton {

struct LisResult {
    std::int32_t length = 0;
    /// 1-based positions of one longest increasing subsequence, increasing.
    std::vector<std::int32_t> witness;
};

/// Patience sorting, O(n log n), with predecessor links for the witness.
LisResult lis_patience(const Permutation& perm);

inline constexpr std::int32_t kBruteForceCap = 20;

/// Independent quadratic longest-chain DP; test oracle. Throws SizeError
/// above kBruteForceCap.
std::int32_t lis_bruteforce(const Permutation& perm);

/// True iff the values at the given 1-based positions strictly increase.
/// Throws std::invalid_argument if positions are unsorted or out of range.
bool is_increasing(const Permutation& perm, std::span<const std::int32_t> positions);

/// Avoids 2413 and 3142. Linear stack reduction: adjacent blocks whose value
/// ranges abut are merged; the permutation is separable iff one block remains.
bool is_separable(const Permutation& perm);

/// Brute-force containment of `pattern` in `perm`; test oracle for small n.
bool contains_pattern(const Permutation& perm, const Permutation& pattern);

}  // namespace permuton
