#include "permuton/report_io.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace permuton {

namespace {

using nlohmann::ordered_json;

ordered_json number_or_null(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr); }

ordered_json optional_number(const std::optional<double>& x) {
    return x ? number_or_null(*x) : ordered_json(nullptr);
}

}  // namespace

std::string format_double(double x) {
    if (!std::isfinite(x)) return "";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return {buf, res.ptr};
}

ordered_json to_json(const ExponentTable& r) {
    ordered_json j;
    j["p"] = r.p;
    j["lambda_kill"] = r.lambda_kill;
    j["lambda_lower"] = r.lambda_lower;
    j["alpha_star"] = r.alpha_star;
    j["lambda_upper"] = r.lambda_upper;
    j["beta_star"] = r.beta_star;
    j["beta_hat"] = r.beta_hat;
    j["delta_hat"] = r.delta_hat;
    j["gamma_hat"] = r.gamma_hat;
    j["residual_lower"] = r.residual_lower;
    j["residual_kappa"] = r.residual_kappa;
    j["lower_iterations"] = r.lower_iterations;
    j["upper_inner_evaluations"] = r.upper_inner_evaluations;
    j["quadrature_error"] = r.quadrature_error;
    j["upper_grid_value"] = r.upper_grid_value;
    j["upper_doubling_rel_change"] = r.upper_doubling_rel_change;
    return j;
}

ordered_json to_json(const ExperimentConfig& c) {
    ordered_json j;
    j["kind"] = std::string(to_string(c.kind));
    j["p"] = c.p;
    j["sizes"] = c.sizes;
    j["eps_grid"] = c.eps_grid;
    j["reps"] = c.reps;
    j["master_seed"] = c.master_seed;
    return j;
}

ordered_json to_json(const ExperimentReport& r) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["config"] = to_json(r.config);
    j["partial"] = r.partial;
    auto& rows = j["rows"] = ordered_json::array();
    for (const auto& s : r.rows) {
        rows.push_back({{"series", s.series},
                        {"n_or_eps", s.n_or_eps},
                        {"mean", number_or_null(s.mean)},
                        {"sd", number_or_null(s.sd)},
                        {"count", s.count}});
    }
    auto& regs = j["regressions"] = ordered_json::array();
    for (const auto& g : r.regressions) {
        ordered_json e;
        e["series"] = g.series;
        if (g.fit) {
            e["slope"] = number_or_null(g.fit->slope);
            e["intercept"] = number_or_null(g.fit->intercept);
            e["stderr"] = number_or_null(g.fit->stderr_slope);
            e["r2"] = number_or_null(g.fit->r2);
        } else {
            e["slope"] = e["intercept"] = e["stderr"] = e["r2"] = nullptr;
        }
        e["defined"] = g.fit.has_value();
        e["note"] = g.note;
        e["reference_low"] = optional_number(g.reference_low);
        e["reference_high"] = optional_number(g.reference_high);
        e["tolerance"] = g.tolerance;
        regs.push_back(std::move(e));
    }
    if (!r.patterns.empty()) {
        auto& pats = j["patterns"] = ordered_json::array();
        for (const auto& sec : r.patterns) {
            ordered_json s;
            s["n"] = sec.n;
            auto& counts = s["counts"] = ordered_json::array();
            for (const auto& c : sec.counts) {
                counts.push_back(
                    {{"pattern", c.pattern}, {"exact", c.exact}, {"tree", c.tree}, {"excursion", c.excursion}});
            }
            auto& tests = s["chi_square"] = ordered_json::array();
            for (const auto& t : sec.tests) {
                tests.push_back({{"comparison", t.comparison},
                                 {"statistic", number_or_null(t.statistic)},
                                 {"dof", t.dof},
                                 {"p_value", t.p_value}});
            }
            pats.push_back(std::move(s));
        }
    }
    j["reference"] = r.reference ? to_json(*r.reference) : ordered_json(nullptr);
    return j;
}

std::string report_json(const ExperimentReport& report) { return to_json(report).dump(2) + "\n"; }

std::string report_csv(const ExperimentReport& report) {
    std::ostringstream out;
    out << "kind,p,n_or_eps,mean,sd,count\n";
    const std::string kind(to_string(report.config.kind));
    for (const auto& s : report.rows) {
        out << kind << ':' << s.series << ',' << format_double(report.config.p) << ',' << format_double(s.n_or_eps)
            << ',' << format_double(s.mean) << ',' << format_double(s.sd) << ',' << s.count << '\n';
    }
    return out.str();
}

std::string exponent_json(std::span<const ExponentTable> rows) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    auto& arr = j["rows"] = ordered_json::array();
    for (const auto& r : rows) arr.push_back(to_json(r));
    return j.dump(2) + "\n";
}

std::string exponent_csv(std::span<const ExponentTable> rows) {
    std::ostringstream out;
    out << "p,lambda_kill,lambda_lower,alpha_star,lambda_upper,beta_star,beta_hat,delta_hat,gamma_hat,"
           "residual_lower,residual_kappa,lower_iterations,upper_inner_evaluations,quadrature_error,"
           "upper_grid_value,upper_doubling_rel_change\n";
    for (const auto& r : rows) {
        out << format_double(r.p) << ',' << format_double(r.lambda_kill) << ',' << format_double(r.lambda_lower)
            << ',' << format_double(r.alpha_star) << ',' << format_double(r.lambda_upper) << ','
            << format_double(r.beta_star) << ',' << format_double(r.beta_hat) << ',' << format_double(r.delta_hat)
            << ',' << format_double(r.gamma_hat) << ',' << format_double(r.residual_lower) << ','
            << format_double(r.residual_kappa) << ',' << r.lower_iterations << ',' << r.upper_inner_evaluations
            << ',' << format_double(r.quadrature_error) << ',' << format_double(r.upper_grid_value) << ','
            << format_double(r.upper_doubling_rel_change) << '\n';
    }
    return out.str();
}

std::string report_filename(const ExperimentConfig& config, std::string_view extension) {
    return std::string(to_string(config.kind)) + "_p" + format_double(config.p) + "_seed" +
           std::to_string(config.master_seed) + "." + std::string(extension);
}

}  // namespace permuton
