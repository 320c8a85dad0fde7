#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "permuton/rng.hpp"
#include "permuton/signed_tree.hpp"

namespace permuton {

/// Largest supported half-length; indices are stored as 32-bit integers.
inline constexpr std::int64_t kMaxHalfLength = std::int64_t{1} << 29;

/// Uniform strictly positive excursion of length 2N (heights e[0..2N],
/// Catalan(N - 1) outcomes): a weak Dyck path of length 2N - 2 from the cycle
/// lemma (N - 1 up-steps and N down-steps rotated past their first global
/// minimum, final down-step dropped), raised by one between an initial
/// up-step and a final down-step.
std::vector<std::int32_t> sample_excursion(std::int64_t half_length, Engine& rng);

/// Same as sample_excursion, reusing the storage of `heights`.
void sample_excursion_into(std::vector<std::int32_t>& heights, std::int64_t half_length, Engine& rng);

/// e[0] = e[2N] = 0, e[k] > 0 inside, unit steps.
bool is_dyck_path(std::span<const std::int32_t> heights);

/// Dyck path with a p-coin on every interior index. The coins at valleys
/// (strict local minima) are the excursion's signs; coins elsewhere are only
/// consulted when a sample point itself is the minimum between two points.
/// Coins are derived from a 64-bit key with a counter-based mixer, so any
/// index can be queried in O(1) without storing 2N signs.
class DiscreteExcursion {
public:
    DiscreteExcursion(std::vector<std::int32_t> heights, double p, std::uint64_t sign_key);

    [[nodiscard]] std::int64_t half_length() const noexcept { return length() / 2; }
    /// 2N, the number of steps.
    [[nodiscard]] std::int64_t length() const noexcept { return static_cast<std::int64_t>(heights_.size()) - 1; }
    [[nodiscard]] std::span<const std::int32_t> heights() const noexcept { return heights_; }
    [[nodiscard]] std::int32_t height(std::int64_t k) const { return heights_.at(static_cast<std::size_t>(k)); }
    [[nodiscard]] double p() const noexcept { return p_; }

    [[nodiscard]] bool is_valley(std::int64_t k) const;
    /// Sign at a valley; throws std::invalid_argument elsewhere.
    [[nodiscard]] Sign sign(std::int64_t k) const;
    /// The p-coin attached to interior index k.
    [[nodiscard]] Sign coin(std::int64_t k) const;

    /// (index, sign) for every valley, increasing index.
    [[nodiscard]] std::vector<std::pair<std::int64_t, Sign>> signs() const;
    [[nodiscard]] std::int64_t valley_count() const;

    /// Hands the height buffer back for reuse; leaves the excursion empty.
    std::vector<std::int32_t> release_heights() && { return std::move(heights_); }

private:
    std::vector<std::int32_t> heights_;
    double p_;
    std::uint64_t sign_key_;
};

/// Attaches i.i.d. p-coins to a validated Dyck path.
DiscreteExcursion assign_signs(std::vector<std::int32_t> heights, double p, Engine& rng);

/// Cartesian tree of the interior indices 1..2N-1 under the heights, with
/// leftmost-minimum tie-breaking. Node k covers the open interval
/// (left_boundary(k), right_boundary(k)), where the left boundary is the
/// nearest index to the left with height <= e[k] and the right boundary the
/// nearest index to the right with height < e[k]. Built in O(N) from the
/// last visit to each height; `heights` must be a Dyck path.
class ExcursionTree {
public:
    ExcursionTree() = default;
    explicit ExcursionTree(std::span<const std::int32_t> heights) { rebuild(heights); }

    void rebuild(std::span<const std::int32_t> heights);

    [[nodiscard]] std::int64_t left_boundary(std::int64_t k) const { return left_[static_cast<std::size_t>(k)]; }
    [[nodiscard]] std::int64_t right_boundary(std::int64_t k) const { return right_[static_cast<std::size_t>(k)]; }
    /// Parent node, or -1 at the root (index 1).
    [[nodiscard]] std::int64_t parent(std::int64_t k) const;
    /// Strict ancestors of k, root first.
    [[nodiscard]] std::vector<std::int64_t> ancestors(std::int64_t k) const;

private:
    std::span<const std::int32_t> heights_;
    std::vector<std::int32_t> left_;
    std::vector<std::int32_t> right_;
};

enum class Side : std::uint8_t { Left, Right };

/// One branching of the fragment containing the tagged position. Lengths
/// are integer step counts; divide by 2N for the fraction of the excursion.
struct BranchEvent {
    std::int64_t index = 0;  // valley position of the branching
    std::int32_t height = 0;
    std::int64_t parent_length = 0;
    std::int64_t kept_length = 0;
    Side kept_side = Side::Left;
    Sign sign = Sign::Plus;

    [[nodiscard]] std::int64_t discarded_length() const noexcept { return parent_length - kept_length; }
    /// MINUS branching whose other side is at least as long as the tagged side.
    [[nodiscard]] bool kills() const noexcept {
        return sign == Sign::Minus && discarded_length() >= kept_length;
    }
};

struct FragmentTrace {
    std::int64_t tagged = 0;
    std::int64_t total_length = 0;  // 2N
    std::vector<BranchEvent> events;  // increasing branch height

    [[nodiscard]] double fraction(std::int64_t len) const noexcept {
        return static_cast<double>(len) / static_cast<double>(total_length);
    }
};

FragmentTrace fragment_trace(const DiscreteExcursion& exc, const ExcursionTree& tree, std::int64_t t);
FragmentTrace fragment_trace(const DiscreteExcursion& exc, std::int64_t t);

/// Fragment length (in steps) just before the first killing branching, or 0
/// if the tagged fragment is never killed. The tagged fragment survives to
/// scale eps iff this is below eps * 2N.
std::int64_t kill_length(const FragmentTrace& trace);

/// Whether the tagged fragment drops below eps before the selection rule
/// discards it. eps must lie in (0, 1].
bool survives_to_eps(const FragmentTrace& trace, double eps);
bool survives_to_eps(const DiscreteExcursion& exc, std::int64_t t, double eps);

std::pair<bool, bool> two_point_survival(const DiscreteExcursion& exc, std::int64_t t1, std::int64_t t2,
                                         double eps);

/// `count` distinct uniform positions in [1, 2N - 1], sorted.
std::vector<std::int64_t> sample_points(std::int64_t half_length, std::int32_t count, Engine& rng);

/// Signed tree of the points: split at the minimum of the heights over the
/// spanned range (leftmost on ties), sign read from the coin at the minimum.
SignedBinaryTree cartesian_tree(const DiscreteExcursion& exc, std::span<const std::int64_t> points);

Permutation perm_from_points(const DiscreteExcursion& exc, std::span<const std::int64_t> points);

}  // namespace permuton
