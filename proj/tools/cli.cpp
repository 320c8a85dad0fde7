#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "permuton/excursion.hpp"
#include "permuton/experiments.hpp"
#include "permuton/exponents.hpp"
#include "permuton/report_io.hpp"
#include "permuton/signed_tree.hpp"
#include "permuton/subsequence.hpp"

namespace permuton::cli {

namespace {

using nlohmann::ordered_json;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr std::int32_t kDiagramCap = std::int32_t{1} << 18;
constexpr std::int32_t kSampleCap = std::int32_t{1} << 26;

struct Globals {
    std::uint64_t seed = 0;
    std::string out;
    std::string format = "json";
    int threads = 0;
};

// Per-subcommand stream tags so that equal seeds give unrelated draws.
enum class Tag : std::uint64_t { Sample = 101, Lis, Selection, Cograph, Diagram };

Engine engine_for(const Globals& g, Tag tag) { return Engine(derive_seed(g.seed, {static_cast<std::uint64_t>(tag)})); }

void require_open_p(double p) {
    if (!(p > 0.0 && p < 1.0)) throw UsageError("--p must lie in (0, 1), got " + format_double(p));
}

void require_closed_p(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw UsageError("--p must lie in [0, 1], got " + format_double(p));
}

void require_n(std::int64_t n, std::int64_t cap) {
    if (n < 1 || n > cap) throw UsageError("--n must lie in [1, " + std::to_string(cap) + "], got " + std::to_string(n));
}

void emit(const Globals& g, std::ostream& out, const std::string& text) {
    if (g.out.empty()) {
        out << text;
        return;
    }
    std::ofstream f(g.out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file '" + g.out + "'");
    f << text;
    if (!f) throw std::runtime_error("write failed for '" + g.out + "'");
}

std::string join_values(std::span<const std::int32_t> v, char sep) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) s += sep;
        s += std::to_string(v[i]);
    }
    return s;
}

// exponents ---------------------------------------------------------------

struct ExponentArgs {
    std::vector<double> ps;
    int grid = 0;
};

int cmd_exponents(const Globals& g, const ExponentArgs& a, std::ostream& out) {
    std::vector<double> ps = a.ps;
    if (a.grid > 0) {
        for (int i = 1; i <= a.grid; ++i) ps.push_back(static_cast<double>(i) / (a.grid + 1));
    }
    if (ps.empty()) throw UsageError("exponents: give --p or --grid");
    for (double p : ps) require_open_p(p);
    const auto rows = exponent_table(ps, {}, g.threads);
    emit(g, out, g.format == "csv" ? exponent_csv(rows) : exponent_json(rows));
    return kExitOk;
}

// tree-level commands -----------------------------------------------------

struct TreeArgs {
    double p = 0.5;
    std::int64_t n = 16;
    bool tree = false;
    std::int32_t max_edges = kDefaultEdgeCap;
};

int cmd_sample(const Globals& g, const TreeArgs& a, std::ostream& out) {
    require_closed_p(a.p);
    require_n(a.n, kSampleCap);
    Engine rng = engine_for(g, Tag::Sample);
    const auto tree = sample_tree(static_cast<std::int32_t>(a.n), a.p, rng);
    const auto perm = to_permutation(tree);
    if (g.format == "csv") {
        std::string text = join_values(perm.values(), ' ') + "\n";
        if (a.tree) text += tree.to_string() + "\n";
        emit(g, out, text);
    } else {
        ordered_json j{{"schema_version", kSchemaVersion}, {"n", a.n}, {"p", a.p}, {"seed", g.seed}};
        j["permutation"] = std::vector<std::int32_t>(perm.values().begin(), perm.values().end());
        if (a.tree) j["tree"] = tree.to_string();
        emit(g, out, j.dump() + "\n");
    }
    return kExitOk;
}

int cmd_lis(const Globals& g, const TreeArgs& a, std::ostream& out) {
    require_closed_p(a.p);
    require_n(a.n, kSampleCap);
    Engine rng = engine_for(g, Tag::Lis);
    const auto tree = sample_tree(static_cast<std::int32_t>(a.n), a.p, rng);
    const auto lis = lis_patience(to_permutation(tree));
    const auto lds = lds_tree(tree);
    if (g.format == "csv") {
        std::ostringstream s;
        s << "n,p,seed,lis,lds,clique,independent\n"
          << a.n << ',' << format_double(a.p) << ',' << g.seed << ',' << lis.length << ',' << lds << ','
          << clique_tree(tree) << ',' << independent_tree(tree) << '\n';
        emit(g, out, s.str());
    } else {
        ordered_json j{{"schema_version", kSchemaVersion}, {"n", a.n}, {"p", a.p}, {"seed", g.seed},
                       {"lis", lis_tree(tree)}, {"lds", lds}, {"clique", clique_tree(tree)},
                       {"independent", independent_tree(tree)}};
        j["witness"] = lis.witness;
        emit(g, out, j.dump() + "\n");
    }
    return kExitOk;
}

int cmd_selection(const Globals& g, const TreeArgs& a, std::ostream& out) {
    require_closed_p(a.p);
    require_n(a.n, kSampleCap);
    Engine rng = engine_for(g, Tag::Selection);
    const auto tree = sample_tree(static_cast<std::int32_t>(a.n), a.p, rng);
    const auto sel = selection_rule_tree(tree);
    const auto lis = lis_tree(tree);
    if (g.format == "csv") {
        std::ostringstream s;
        s << "n,p,seed,selection,lis\n"
          << a.n << ',' << format_double(a.p) << ',' << g.seed << ',' << sel.size() << ',' << lis << '\n';
        emit(g, out, s.str());
    } else {
        ordered_json j{{"schema_version", kSchemaVersion}, {"n", a.n}, {"p", a.p}, {"seed", g.seed},
                       {"selection_length", sel.size()}, {"lis", lis}};
        j["positions"] = sel;
        emit(g, out, j.dump() + "\n");
    }
    return kExitOk;
}

int cmd_cograph(const Globals& g, const TreeArgs& a, std::ostream& out) {
    require_closed_p(a.p);
    require_n(a.n, kSampleCap);
    Engine rng = engine_for(g, Tag::Cograph);
    const auto tree = sample_tree(static_cast<std::int32_t>(a.n), a.p, rng);
    std::vector<Edge> edges;
    try {
        edges = cograph_edges(tree, a.max_edges);
    } catch (const SizeError& e) {
        throw UsageError(std::string(e.what()) + " (raise --max-edges or lower --n)");
    }
    if (g.format == "csv") {
        std::ostringstream s;
        s << "u,v\n";
        for (const auto& [u, v] : edges) s << u << ',' << v << '\n';
        emit(g, out, s.str());
    } else {
        ordered_json j{{"schema_version", kSchemaVersion}, {"n", a.n}, {"p", a.p}, {"seed", g.seed},
                       {"clique", clique_tree(tree)}, {"independent", independent_tree(tree)}};
        auto& arr = j["edges"] = ordered_json::array();
        for (const auto& [u, v] : edges) arr.push_back({u, v});
        emit(g, out, j.dump() + "\n");
    }
    return kExitOk;
}

int cmd_diagram(const Globals& g, const TreeArgs& a, std::ostream& out) {
    require_closed_p(a.p);
    require_n(a.n, kDiagramCap);
    Engine rng = engine_for(g, Tag::Diagram);
    const auto tree = sample_tree(static_cast<std::int32_t>(a.n), a.p, rng);
    const auto perm = to_permutation(tree);
    const auto lis = lis_patience(perm);
    const auto sel = selection_rule_tree(tree);
    const auto n = static_cast<std::size_t>(a.n);
    std::vector<char> in_lis(n + 1, 0);
    std::vector<char> in_sel(n + 1, 0);
    for (auto i : lis.witness) in_lis[static_cast<std::size_t>(i)] = 1;
    for (auto i : sel) in_sel[static_cast<std::size_t>(i)] = 1;
    const double dn = static_cast<double>(a.n);
    if (g.format == "json") {
        ordered_json j{{"schema_version", kSchemaVersion}, {"n", a.n}, {"p", a.p}, {"seed", g.seed},
                       {"lis_length", lis.length}, {"selection_length", sel.size()}};
        auto& pts = j["points"] = ordered_json::array();
        for (std::int32_t i = 1; i <= perm.size(); ++i) {
            pts.push_back({i / dn, perm.at(i) / dn, in_lis[static_cast<std::size_t>(i)] != 0,
                           in_sel[static_cast<std::size_t>(i)] != 0});
        }
        emit(g, out, j.dump() + "\n");
        return kExitOk;
    }
    std::string text = "x,y,lis,selection\n";
    for (std::int32_t i = 1; i <= perm.size(); ++i) {
        text += format_double(i / dn) + ',' + format_double(perm.at(i) / dn) + ',' +
                (in_lis[static_cast<std::size_t>(i)] != 0 ? '1' : '0') + ',' +
                (in_sel[static_cast<std::size_t>(i)] != 0 ? '1' : '0') + '\n';
    }
    emit(g, out, text);
    return kExitOk;
}

// experiments -------------------------------------------------------------

struct ExperimentArgs {
    std::string kind;
    double p = 0.5;
    std::vector<std::int64_t> sizes;
    std::vector<double> eps;
    std::int64_t reps = 0;
    bool two_point = false;
};

std::string summary_line(const ExperimentReport& r) {
    std::ostringstream s;
    s << to_string(r.config.kind) << " p=" << format_double(r.config.p);
    for (const auto& g : r.regressions) {
        s << "  [" << g.series << "] slope=";
        s << (g.fit ? format_double(g.fit->slope) : std::string("undefined"));
        if (g.fit) s << " stderr=" << format_double(g.fit->stderr_slope);
        if (g.reference_low) {
            s << " reference=";
            if (g.reference_high && *g.reference_high != *g.reference_low) {
                s << '[' << format_double(*g.reference_low) << ", " << format_double(*g.reference_high) << ']';
            } else {
                s << format_double(*g.reference_low);
            }
        }
    }
    for (const auto& sec : r.patterns) {
        s << "  [n=" << sec.n << "]";
        for (const auto& t : sec.tests) s << ' ' << t.comparison << " p=" << format_double(t.p_value);
    }
    if (r.partial) s << "  (partial: interrupted)";
    return s.str();
}

int cmd_experiment(const Globals& g, ExperimentArgs a, std::ostream& out, std::ostream& err,
                   const std::atomic<bool>* cancel) {
    ExperimentKind kind;
    try {
        kind = parse_kind(a.kind);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (kind == ExperimentKind::Survival && a.two_point) kind = ExperimentKind::TwoPoint;
    ExperimentConfig c = default_config(kind);
    c.p = a.p;
    if (!a.sizes.empty()) c.sizes = a.sizes;
    if (!a.eps.empty()) c.eps_grid = a.eps;
    if (a.reps != 0) c.reps = a.reps;
    c.master_seed = g.seed;
    c.threads = g.threads;
    try {
        validate(c);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (!(c.p > 0.0 && c.p < 1.0)) {
        err << "note: p outside (0, 1); reference exponents omitted\n";
    }

    const ExperimentReport report = run_experiment(c, cancel);
    const std::string body = g.format == "csv" ? report_csv(report) : report_json(report);
    if (g.out.empty()) {
        out << body;
        err << summary_line(report) << '\n';
    } else {
        std::filesystem::create_directories(g.out);
        const auto path = std::filesystem::path(g.out) / report_filename(c, g.format);
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open output file '" + path.string() + "'");
        f << body;
        out << summary_line(report) << '\n';
        err << "wrote " << path.string() << '\n';
    }
    err << "wall-clock " << format_double(report.wall_seconds) << " s\n";
    if (report.partial) {
        err << "interrupted: partial report written\n";
        return kExitFailure;
    }
    return kExitOk;
}

void add_tree_options(CLI::App* sub, TreeArgs& a, std::int64_t default_n) {
    a.n = default_n;
    sub->add_option("--p", a.p, "PLUS probability")->capture_default_str();
    sub->add_option("--n", a.n, "number of points")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const std::atomic<bool>* cancel) {
    CLI::App app{"Signed-tree permutations, excursion survival and exponent bounds", "permuton"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "master seed")->capture_default_str();
    app.add_option("--out", g.out, "output file (directory for experiment reports)");
    app.add_option("--format", g.format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads, 0 = all cores")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();

    ExponentArgs ea;
    auto* exps = app.add_subcommand("exponents", "alpha*(p) and beta*(p) table");
    auto* p_opt = exps->add_option("--p", ea.ps, "probabilities in (0, 1)")->delimiter(',');
    auto* grid_opt = exps->add_option("--grid", ea.grid, "p = i / (k + 1), i = 1..k")->check(CLI::PositiveNumber);
    p_opt->excludes(grid_opt);

    TreeArgs sample_args;
    TreeArgs lis_args;
    TreeArgs sel_args;
    TreeArgs cog_args;
    TreeArgs diag_args;
    auto* sample = app.add_subcommand("sample", "one permutation from the signed-tree sampler");
    add_tree_options(sample, sample_args, 16);
    sample->add_flag("--tree", sample_args.tree, "also print the signed tree");
    auto* lis = app.add_subcommand("lis", "LIS, LDS, clique and independence numbers of one sample");
    add_tree_options(lis, lis_args, 1024);
    auto* sel = app.add_subcommand("selection", "selection-rule subsequence of one sample");
    add_tree_options(sel, sel_args, 1024);
    auto* cog = app.add_subcommand("cograph", "edge list of one sampled cograph");
    add_tree_options(cog, cog_args, 16);
    cog->add_option("--max-edges", cog_args.max_edges, "edge cap")->capture_default_str();
    auto* diag = app.add_subcommand("diagram", "scatter data with LIS and selection marks");
    add_tree_options(diag, diag_args, 1024);

    ExperimentArgs xa;
    auto* exp = app.add_subcommand("experiment", "Monte-Carlo experiment");
    exp->add_option("--kind", xa.kind, "lis_scaling, survival, two_point, cross_validate")->required();
    exp->add_option("--p", xa.p)->capture_default_str();
    exp->add_option("--sizes", xa.sizes, "n values, or one half-length N")->delimiter(',');
    exp->add_option("--eps", xa.eps, "survival scales, decreasing")->delimiter(',');
    exp->add_option("--reps", xa.reps, "repetitions per size")->check(CLI::PositiveNumber);

    ExperimentArgs sa;
    sa.kind = "survival";
    auto* surv = app.add_subcommand("survival", "tagged-fragment survival experiment");
    surv->add_option("--p", sa.p)->capture_default_str();
    surv->add_option("--N", sa.sizes, "excursion half-length")->expected(1);
    surv->add_option("--eps", sa.eps, "survival scales, decreasing")->delimiter(',');
    surv->add_option("--reps", sa.reps)->check(CLI::PositiveNumber);
    surv->add_flag("--two-point", sa.two_point, "joint survival of two tagged points");

    ExperimentArgs ca;
    ca.kind = "cross_validate";
    auto* cross = app.add_subcommand("crossval", "pattern laws of both samplers");
    cross->add_option("--p", ca.p)->capture_default_str();
    cross->add_option("--N", ca.sizes, "excursion half-length")->expected(1);
    cross->add_option("--reps", ca.reps)->check(CLI::PositiveNumber);

    std::vector<std::string> argv_store{"permuton"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_store) argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        if (!app.get_subcommands().empty()) err << app.get_subcommands().front()->help();
        return kExitUsage;
    }

    try {
        if (exps->parsed()) return cmd_exponents(g, ea, out);
        if (sample->parsed()) return cmd_sample(g, sample_args, out);
        if (lis->parsed()) return cmd_lis(g, lis_args, out);
        if (sel->parsed()) return cmd_selection(g, sel_args, out);
        if (cog->parsed()) return cmd_cograph(g, cog_args, out);
        if (diag->parsed()) return cmd_diagram(g, diag_args, out);
        if (exp->parsed()) return cmd_experiment(g, xa, out, err, cancel);
        if (surv->parsed()) return cmd_experiment(g, sa, out, err, cancel);
        if (cross->parsed()) return cmd_experiment(g, ca, out, err, cancel);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    err << "usage error: no subcommand\n";
    return kExitUsage;
}

}  // namespace permuton::cli
