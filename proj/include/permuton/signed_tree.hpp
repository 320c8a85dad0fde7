#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "permuton/rng.hpp"

namespace permuton {

enum class Sign : std::uint8_t { Plus, Minus };

constexpr Sign flip(Sign s) noexcept { return s == Sign::Plus ? Sign::Minus : Sign::Plus; }
constexpr char to_char(Sign s) noexcept { return s == Sign::Plus ? '+' : '-'; }

/// Raised when an output would exceed a configured size cap.
class SizeError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// One-line notation of a bijection of {1..n}. Positions are 1-based
/// throughout the library, matching leaf ranks.
class Permutation {
public:
    Permutation() = default;
    /// Validates that `values` is a bijection of {1..n}.
    explicit Permutation(std::vector<std::int32_t> values);

    static Permutation identity(std::int32_t n);

    [[nodiscard]] std::int32_t size() const noexcept { return static_cast<std::int32_t>(values_.size()); }
    /// Value at 1-based position i.
    [[nodiscard]] std::int32_t at(std::int32_t i) const { return values_.at(static_cast<std::size_t>(i - 1)); }
    [[nodiscard]] std::span<const std::int32_t> values() const noexcept { return values_; }

    /// i -> n + 1 - sigma(n + 1 - i), the half-turn of the diagram; preserves LIS.
    [[nodiscard]] Permutation reverse_complement() const;
    /// i -> sigma(n + 1 - i); maps increasing subsequences to decreasing ones.
    [[nodiscard]] Permutation reverse() const;

    friend bool operator==(const Permutation&, const Permutation&) = default;

private:
    std::vector<std::int32_t> values_;
};

/// Plane binary tree with ordered leaves and a sign on each internal node.
///
/// Nodes live in an arena laid out in post-order: children always precede
/// their parent and the root is the last node. Leaves carry their
/// left-to-right rank 1..n. Every subtree covers a contiguous block of leaf
/// ranks [first_leaf, first_leaf + leaf_count).
class SignedBinaryTree {
public:
    static constexpr std::int32_t kNone = -1;

    struct Node {
        std::int32_t left = kNone;
        std::int32_t right = kNone;
        std::int32_t leaf_count = 1;
        std::int32_t first_leaf = 1;
        Sign sign = Sign::Plus;  // meaningful on internal nodes only

        [[nodiscard]] bool is_leaf() const noexcept { return left == kNone; }

        friend bool operator==(const Node&, const Node&) = default;
    };

    /// Input record for `from_arena`: arbitrary ids, children or kNone.
    struct RawNode {
        std::int32_t left = kNone;
        std::int32_t right = kNone;
        Sign sign = Sign::Plus;
    };

    /// Single-leaf tree.
    SignedBinaryTree();

    /// Validates the structure (binary, acyclic, single root, every node
    /// reachable) and canonicalizes it into the post-order layout.
    static SignedBinaryTree from_arena(std::span<const RawNode> nodes, std::int32_t root);

    static SignedBinaryTree join(Sign sign, const SignedBinaryTree& left, const SignedBinaryTree& right);

    /// Parses the nested text form, e.g. `((1,2)-,3)+`. Leaf labels must read
    /// 1..n from left to right.
    static SignedBinaryTree parse(std::string_view text);

    [[nodiscard]] std::string to_string() const;

    [[nodiscard]] std::int32_t leaf_count() const noexcept { return nodes_.back().leaf_count; }
    [[nodiscard]] std::int32_t node_count() const noexcept { return static_cast<std::int32_t>(nodes_.size()); }
    [[nodiscard]] std::int32_t root() const noexcept { return node_count() - 1; }
    [[nodiscard]] const Node& node(std::int32_t id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    [[nodiscard]] std::span<const Node> nodes() const noexcept { return nodes_; }

    friend bool operator==(const SignedBinaryTree&, const SignedBinaryTree&) = default;

private:
    explicit SignedBinaryTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

    std::vector<Node> nodes_;
};

/// Uniform plane binary tree with n leaves (Remy leaf insertion) and i.i.d.
/// signs, PLUS with probability p.
SignedBinaryTree sample_tree(std::int32_t n, double p, Engine& rng);

inline constexpr std::int32_t kEnumerateCap = 9;

/// Every plane binary tree with n leaves under every sign assignment:
/// Catalan(n - 1) * 2^(n - 1) trees. Throws SizeError above kEnumerateCap.
std::vector<SignedBinaryTree> enumerate_trees(std::int32_t n);

/// Separable permutation read off the tree: at PLUS nodes the left block
/// lies below the right block, at MINUS nodes above.
Permutation to_permutation(const SignedBinaryTree& tree);

std::int32_t lis_tree(const SignedBinaryTree& tree);
std::int32_t lds_tree(const SignedBinaryTree& tree);

/// Largest clique of the cograph whose cotree is `tree` (PLUS = join, MINUS = union).
std::int32_t clique_tree(const SignedBinaryTree& tree);
/// Largest independent set of the same cograph.
std::int32_t independent_tree(const SignedBinaryTree& tree);

using Edge = std::pair<std::int32_t, std::int32_t>;

inline constexpr std::int32_t kDefaultEdgeCap = 1 << 12;

/// Edges (i, j), i < j, such that the sign at LCA(leaf i, leaf j) is PLUS,
/// sorted lexicographically. Throws SizeError when n exceeds `cap`.
std::vector<Edge> cograph_edges(const SignedBinaryTree& tree, std::int32_t cap = kDefaultEdgeCap);

/// Selection rule S: keep both children at PLUS nodes; at MINUS nodes keep
/// the child with strictly more leaves (left on a tie). Returns the surviving
/// leaf ranks in increasing order.
std::vector<std::int32_t> selection_rule_tree(const SignedBinaryTree& tree);

enum class RuleChoice : std::uint8_t {
    NotApplicable,  // PLUS nodes and leaves
    DiscardRight,   // keep left
    DiscardLeft,    // keep right
    Diamond,        // inside a subtree already discarded higher up
};

/// Per-node discarding choices; only MINUS nodes carry a choice.
struct DiscardingRule {
    std::vector<RuleChoice> choice;  // indexed by node id

    friend bool operator==(const DiscardingRule&, const DiscardingRule&) = default;
};

/// Rule induced by a set of marked leaves (strictly increasing ranks): at each
/// live MINUS node, discard the side without marks, or the left side when
/// neither side is marked. Throws std::invalid_argument when both sides of a
/// MINUS node are marked, i.e. the marks are not an increasing subsequence.
DiscardingRule discarding_rule_from_marked(const SignedBinaryTree& tree,
                                           std::span<const std::int32_t> marked);

/// Leaves outside every discarded subtree, increasing. Throws
/// std::invalid_argument when the rule does not fit the tree.
std::vector<std::int32_t> survivors(const SignedBinaryTree& tree, const DiscardingRule& rule);

}  // namespace permuton
