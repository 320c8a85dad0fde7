#include "permuton/signed_tree.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <numeric>

namespace permuton {

// ---------------------------------------------------------------------------
// Permutation

Permutation::Permutation(std::vector<std::int32_t> values) : values_(std::move(values)) {
    const auto n = values_.size();
    std::vector<bool> seen(n + 1, false);
    for (std::int32_t v : values_) {
        if (v < 1 || static_cast<std::size_t>(v) > n || seen[static_cast<std::size_t>(v)]) {
            throw std::invalid_argument("Permutation: values are not a bijection of {1..n}");
        }
        seen[static_cast<std::size_t>(v)] = true;
    }
}

Permutation Permutation::identity(std::int32_t n) {
    if (n < 0) throw std::invalid_argument("Permutation::identity: negative size");
    std::vector<std::int32_t> v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), 1);
    return Permutation(std::move(v));
}

Permutation Permutation::reverse_complement() const {
    const auto n = size();
    std::vector<std::int32_t> v(values_.rbegin(), values_.rend());
    for (auto& x : v) x = n + 1 - x;
    return Permutation(std::move(v));
}

Permutation Permutation::reverse() const {
    return Permutation(std::vector<std::int32_t>(values_.rbegin(), values_.rend()));
}

// ---------------------------------------------------------------------------
// SignedBinaryTree construction

SignedBinaryTree::SignedBinaryTree() : nodes_{Node{}} {}

SignedBinaryTree SignedBinaryTree::from_arena(std::span<const RawNode> raw, std::int32_t root) {
    const auto m = static_cast<std::int32_t>(raw.size());
    if (m == 0) throw std::invalid_argument("SignedBinaryTree: empty arena");
    if (root < 0 || root >= m) throw std::invalid_argument("SignedBinaryTree: root out of range");

    std::vector<std::uint8_t> visited(raw.size(), 0);
    std::vector<std::int32_t> new_id(raw.size(), kNone);
    std::vector<Node> out;
    out.reserve(raw.size());
    std::int32_t next_rank = 1;

    struct Frame {
        std::int32_t id;
        bool expanded;
    };
    std::vector<Frame> stack{{root, false}};
    while (!stack.empty()) {
        const Frame f = stack.back();
        stack.pop_back();
        const RawNode& r = raw[static_cast<std::size_t>(f.id)];
        if (!f.expanded) {
            if (visited[static_cast<std::size_t>(f.id)]) {
                throw std::invalid_argument("SignedBinaryTree: node reached twice (cycle or shared child)");
            }
            visited[static_cast<std::size_t>(f.id)] = 1;
            const bool has_l = r.left != kNone;
            const bool has_r = r.right != kNone;
            if (has_l != has_r) throw std::invalid_argument("SignedBinaryTree: internal node needs two children");
            if (!has_l) {
                new_id[static_cast<std::size_t>(f.id)] = static_cast<std::int32_t>(out.size());
                out.push_back(Node{kNone, kNone, 1, next_rank++, Sign::Plus});
                continue;
            }
            if (r.left < 0 || r.left >= m || r.right < 0 || r.right >= m) {
                throw std::invalid_argument("SignedBinaryTree: child id out of range");
            }
            stack.push_back({f.id, true});
            stack.push_back({r.right, false});
            stack.push_back({r.left, false});
        } else {
            const std::int32_t l = new_id[static_cast<std::size_t>(r.left)];
            const std::int32_t rr = new_id[static_cast<std::size_t>(r.right)];
            const Node& ln = out[static_cast<std::size_t>(l)];
            const Node& rn = out[static_cast<std::size_t>(rr)];
            Node n{l, rr, ln.leaf_count + rn.leaf_count, ln.first_leaf, r.sign};
            new_id[static_cast<std::size_t>(f.id)] = static_cast<std::int32_t>(out.size());
            out.push_back(n);
        }
    }
    if (static_cast<std::int32_t>(out.size()) != m) {
        throw std::invalid_argument("SignedBinaryTree: arena has nodes unreachable from the root");
    }
    return SignedBinaryTree(std::move(out));
}

SignedBinaryTree SignedBinaryTree::join(Sign sign, const SignedBinaryTree& left, const SignedBinaryTree& right) {
    std::vector<RawNode> raw;
    raw.reserve(left.nodes_.size() + right.nodes_.size() + 1);
    const auto offset = static_cast<std::int32_t>(left.nodes_.size());
    for (const Node& n : left.nodes_) raw.push_back({n.left, n.right, n.sign});
    for (const Node& n : right.nodes_) {
        raw.push_back({n.is_leaf() ? kNone : n.left + offset, n.is_leaf() ? kNone : n.right + offset, n.sign});
    }
    raw.push_back({left.root(), right.root() + offset, sign});
    return from_arena(raw, static_cast<std::int32_t>(raw.size()) - 1);
}

SignedBinaryTree SignedBinaryTree::parse(std::string_view text) {
    std::vector<Node> nodes;
    std::vector<std::int32_t> pending;  // roots of completed subtrees
    std::int32_t next_rank = 1;
    std::int32_t depth = 0;
    std::size_t i = 0;

    auto fail = [&](const char* what) {
        throw std::invalid_argument(std::string("SignedBinaryTree::parse: ") + what + " at offset " +
                                    std::to_string(i));
    };
    auto skip_ws = [&] {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    };

    while (true) {
        skip_ws();
        if (i >= text.size()) break;
        const char c = text[i];
        if (c == '(') {
            ++depth;
            ++i;
        } else if (c == ',') {
            ++i;
        } else if (c == ')') {
            ++i;
            skip_ws();
            if (i >= text.size() || (text[i] != '+' && text[i] != '-')) fail("expected sign after ')'");
            const Sign s = text[i] == '+' ? Sign::Plus : Sign::Minus;
            ++i;
            if (pending.size() < 2 || depth == 0) fail("unbalanced parentheses");
            const std::int32_t r = pending.back();
            pending.pop_back();
            const std::int32_t l = pending.back();
            pending.pop_back();
            const Node& ln = nodes[static_cast<std::size_t>(l)];
            const Node& rn = nodes[static_cast<std::size_t>(r)];
            nodes.push_back(Node{l, r, ln.leaf_count + rn.leaf_count, ln.first_leaf, s});
            pending.push_back(static_cast<std::int32_t>(nodes.size()) - 1);
            --depth;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::int32_t label = 0;
            auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + text.size(), label);
            if (ec != std::errc{}) fail("bad leaf label");
            i = static_cast<std::size_t>(ptr - text.data());
            if (label != next_rank) fail("leaf labels must read 1..n left to right");
            nodes.push_back(Node{kNone, kNone, 1, next_rank++, Sign::Plus});
            pending.push_back(static_cast<std::int32_t>(nodes.size()) - 1);
        } else {
            fail("unexpected character");
        }
    }
    if (depth != 0 || pending.size() != 1 || pending.front() != static_cast<std::int32_t>(nodes.size()) - 1) {
        fail("malformed tree");
    }
    return SignedBinaryTree(std::move(nodes));
}

std::string SignedBinaryTree::to_string() const {
    std::string out;
    struct Frame {
        std::int32_t id;
        std::uint8_t phase;
    };
    std::vector<Frame> stack{{root(), 0}};
    while (!stack.empty()) {
        Frame& f = stack.back();
        const Node& n = nodes_[static_cast<std::size_t>(f.id)];
        if (n.is_leaf()) {
            out += std::to_string(n.first_leaf);
            stack.pop_back();
            continue;
        }
        switch (f.phase++) {
            case 0:
                out += '(';
                stack.push_back({n.left, 0});
                break;
            case 1:
                out += ',';
                stack.push_back({n.right, 0});
                break;
            default:
                out += ')';
                out += to_char(n.sign);
                stack.pop_back();
                break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sampling

SignedBinaryTree sample_tree(std::int32_t n, double p, Engine& rng) {
    if (n < 1) throw std::invalid_argument("sample_tree: n must be >= 1");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sample_tree: p must lie in [0, 1]");

    using Raw = SignedBinaryTree::RawNode;
    constexpr auto kNone = SignedBinaryTree::kNone;
    const auto total = static_cast<std::size_t>(2 * n - 1);
    std::vector<Raw> raw;
    raw.reserve(total);
    std::vector<std::int32_t> parent;
    parent.reserve(total);
    raw.push_back(Raw{});
    parent.push_back(kNone);
    std::int32_t root = 0;

    // Remy: pick a uniform node among the 2k - 1 present, splice a new internal
    // node above it, and hang the new leaf on a uniform side.
    for (std::int32_t k = 1; k < n; ++k) {
        const auto x = uniform_int<std::int32_t>(rng, 0, 2 * k - 2);
        const bool leaf_on_right = (rng() >> 63) != 0;
        const Sign s = bernoulli(rng, p) ? Sign::Plus : Sign::Minus;

        const auto internal = static_cast<std::int32_t>(raw.size());
        const auto leaf = internal + 1;
        const std::int32_t up = parent[static_cast<std::size_t>(x)];
        raw.push_back(leaf_on_right ? Raw{x, leaf, s} : Raw{leaf, x, s});
        parent.push_back(up);
        raw.push_back(Raw{});
        parent.push_back(internal);
        parent[static_cast<std::size_t>(x)] = internal;
        if (up == kNone) {
            root = internal;
        } else {
            Raw& pu = raw[static_cast<std::size_t>(up)];
            (pu.left == x ? pu.left : pu.right) = internal;
        }
    }
    return SignedBinaryTree::from_arena(raw, root);
}

// ---------------------------------------------------------------------------
// Exact tree functionals

Permutation to_permutation(const SignedBinaryTree& tree) {
    const auto nodes = tree.nodes();
    std::vector<std::int32_t> base(nodes.size(), 0);
    std::vector<std::int32_t> values(static_cast<std::size_t>(tree.leaf_count()));
    for (auto id = static_cast<std::int32_t>(nodes.size()) - 1; id >= 0; --id) {
        const auto& n = nodes[static_cast<std::size_t>(id)];
        const std::int32_t b = base[static_cast<std::size_t>(id)];
        if (n.is_leaf()) {
            values[static_cast<std::size_t>(n.first_leaf - 1)] = b + 1;
            continue;
        }
        const auto l = static_cast<std::size_t>(n.left);
        const auto r = static_cast<std::size_t>(n.right);
        if (n.sign == Sign::Plus) {
            base[l] = b;
            base[r] = b + nodes[l].leaf_count;
        } else {
            base[r] = b;
            base[l] = b + nodes[r].leaf_count;
        }
    }
    return Permutation(std::move(values));
}

namespace {

// Bottom-up fold: leaves are 1, the `sum_on` sign adds children, the other takes the max.
std::int32_t fold_sum_max(const SignedBinaryTree& tree, Sign sum_on) {
    const auto nodes = tree.nodes();
    std::vector<std::int32_t> v(nodes.size());
    for (std::size_t id = 0; id < nodes.size(); ++id) {
        const auto& n = nodes[id];
        if (n.is_leaf()) {
            v[id] = 1;
        } else {
            const auto a = v[static_cast<std::size_t>(n.left)];
            const auto b = v[static_cast<std::size_t>(n.right)];
            v[id] = n.sign == sum_on ? a + b : std::max(a, b);
        }
    }
    return v.back();
}

}  // namespace

std::int32_t lis_tree(const SignedBinaryTree& tree) { return fold_sum_max(tree, Sign::Plus); }
std::int32_t lds_tree(const SignedBinaryTree& tree) { return fold_sum_max(tree, Sign::Minus); }

// The cotree reading (PLUS = join adds cliques, MINUS = disjoint union keeps the
// larger) is the same fold as the permutation reading; kept as separate entry
// points because they are different questions about different objects.
std::int32_t clique_tree(const SignedBinaryTree& tree) { return fold_sum_max(tree, Sign::Plus); }
std::int32_t independent_tree(const SignedBinaryTree& tree) { return fold_sum_max(tree, Sign::Minus); }

std::vector<Edge> cograph_edges(const SignedBinaryTree& tree, std::int32_t cap) {
    if (tree.leaf_count() > cap) {
        throw SizeError("cograph_edges: n = " + std::to_string(tree.leaf_count()) + " exceeds cap " +
                        std::to_string(cap));
    }
    std::vector<Edge> edges;
    for (const auto& n : tree.nodes()) {
        if (n.is_leaf() || n.sign != Sign::Plus) continue;
        const auto& l = tree.node(n.left);
        const auto& r = tree.node(n.right);
        for (std::int32_t i = l.first_leaf; i < l.first_leaf + l.leaf_count; ++i) {
            for (std::int32_t j = r.first_leaf; j < r.first_leaf + r.leaf_count; ++j) edges.emplace_back(i, j);
        }
    }
    std::sort(edges.begin(), edges.end());
    return edges;
}

// ---------------------------------------------------------------------------
// Selection and discarding rules

std::vector<std::int32_t> selection_rule_tree(const SignedBinaryTree& tree) {
    std::vector<std::int32_t> kept;
    std::vector<std::int32_t> stack{tree.root()};
    while (!stack.empty()) {
        const auto& n = tree.node(stack.back());
        stack.pop_back();
        if (n.is_leaf()) {
            kept.push_back(n.first_leaf);
        } else if (n.sign == Sign::Plus) {
            stack.push_back(n.right);
            stack.push_back(n.left);
        } else {
            const bool keep_right = tree.node(n.right).leaf_count > tree.node(n.left).leaf_count;
            stack.push_back(keep_right ? n.right : n.left);
        }
    }
    // Right children are pushed first, so leaves pop in increasing rank.
    return kept;
}

DiscardingRule discarding_rule_from_marked(const SignedBinaryTree& tree, std::span<const std::int32_t> marked) {
    const auto n = tree.leaf_count();
    for (std::size_t i = 0; i < marked.size(); ++i) {
        if (marked[i] < 1 || marked[i] > n) throw std::invalid_argument("discarding_rule_from_marked: rank out of range");
        if (i > 0 && marked[i] <= marked[i - 1]) {
            throw std::invalid_argument("discarding_rule_from_marked: marked ranks must be strictly increasing");
        }
    }
    const auto nodes = tree.nodes();
    std::vector<std::uint8_t> is_marked(static_cast<std::size_t>(n) + 1, 0);
    for (auto r : marked) is_marked[static_cast<std::size_t>(r)] = 1;

    std::vector<std::int32_t> marks(nodes.size(), 0);
    for (std::size_t id = 0; id < nodes.size(); ++id) {
        const auto& nd = nodes[id];
        if (nd.is_leaf()) {
            marks[id] = is_marked[static_cast<std::size_t>(nd.first_leaf)];
            continue;
        }
        const auto ml = marks[static_cast<std::size_t>(nd.left)];
        const auto mr = marks[static_cast<std::size_t>(nd.right)];
        if (nd.sign == Sign::Minus && ml > 0 && mr > 0) {
            throw std::invalid_argument(
                "discarding_rule_from_marked: marked leaves on both sides of a MINUS node do not form an "
                "increasing subsequence");
        }
        marks[id] = ml + mr;
    }

    DiscardingRule rule{std::vector<RuleChoice>(nodes.size(), RuleChoice::NotApplicable)};
    struct Frame {
        std::int32_t id;
        bool dead;
    };
    std::vector<Frame> stack{{tree.root(), false}};
    while (!stack.empty()) {
        const Frame f = stack.back();
        stack.pop_back();
        const auto& nd = nodes[static_cast<std::size_t>(f.id)];
        if (nd.is_leaf()) continue;
        auto& c = rule.choice[static_cast<std::size_t>(f.id)];
        if (nd.sign == Sign::Plus) {
            stack.push_back({nd.left, f.dead});
            stack.push_back({nd.right, f.dead});
            continue;
        }
        if (f.dead) {
            c = RuleChoice::Diamond;
            stack.push_back({nd.left, true});
            stack.push_back({nd.right, true});
            continue;
        }
        const bool left_marked = marks[static_cast<std::size_t>(nd.left)] > 0;
        c = left_marked ? RuleChoice::DiscardRight : RuleChoice::DiscardLeft;
        stack.push_back({nd.left, !left_marked});
        stack.push_back({nd.right, left_marked});
    }
    return rule;
}

std::vector<std::int32_t> survivors(const SignedBinaryTree& tree, const DiscardingRule& rule) {
    const auto nodes = tree.nodes();
    if (rule.choice.size() != nodes.size()) {
        throw std::invalid_argument("survivors: rule size does not match the tree");
    }
    std::vector<std::int32_t> kept;
    struct Frame {
        std::int32_t id;
        bool dead;
    };
    std::vector<Frame> stack{{tree.root(), false}};
    while (!stack.empty()) {
        const Frame f = stack.back();
        stack.pop_back();
        const auto& nd = nodes[static_cast<std::size_t>(f.id)];
        const RuleChoice c = rule.choice[static_cast<std::size_t>(f.id)];
        if (nd.is_leaf() || nd.sign == Sign::Plus) {
            if (c != RuleChoice::NotApplicable) {
                throw std::invalid_argument("survivors: rule assigns a choice to a leaf or PLUS node");
            }
            if (nd.is_leaf()) {
                if (!f.dead) kept.push_back(nd.first_leaf);
            } else {
                stack.push_back({nd.right, f.dead});
                stack.push_back({nd.left, f.dead});
            }
            continue;
        }
        if (c == RuleChoice::NotApplicable) throw std::invalid_argument("survivors: MINUS node without a choice");
        if ((c == RuleChoice::Diamond) != f.dead) {
            throw std::invalid_argument("survivors: diamond marks must be exactly the MINUS nodes inside discarded subtrees");
        }
        const bool kill_left = f.dead || c == RuleChoice::DiscardLeft;
        const bool kill_right = f.dead || c == RuleChoice::DiscardRight;
        stack.push_back({nd.right, kill_right});
        stack.push_back({nd.left, kill_left});
    }
    return kept;
}

std::vector<SignedBinaryTree> enumerate_trees(std::int32_t n) {
    if (n < 1) throw std::invalid_argument("enumerate_trees: n must be >= 1");
    if (n > kEnumerateCap) {
        throw SizeError("enumerate_trees: n = " + std::to_string(n) + " exceeds cap " + std::to_string(kEnumerateCap));
    }
    std::vector<std::vector<SignedBinaryTree>> by_size(static_cast<std::size_t>(n) + 1);
    by_size[1].emplace_back();
    for (std::int32_t m = 2; m <= n; ++m) {
        auto& out = by_size[static_cast<std::size_t>(m)];
        for (std::int32_t k = 1; k < m; ++k) {
            for (const auto& l : by_size[static_cast<std::size_t>(k)]) {
                for (const auto& r : by_size[static_cast<std::size_t>(m - k)]) {
                    out.push_back(SignedBinaryTree::join(Sign::Plus, l, r));
                    out.push_back(SignedBinaryTree::join(Sign::Minus, l, r));
                }
            }
        }
    }
    return std::move(by_size[static_cast<std::size_t>(n)]);
}

}  // namespace permuton
