#pragma once

#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "permuton/experiments.hpp"
#include "permuton/exponents.hpp"

namespace permuton {

inline constexpr int kSchemaVersion = 1;

nlohmann::ordered_json to_json(const ExponentTable& row);
nlohmann::ordered_json to_json(const ExperimentConfig& config);
/// Full report; excludes wall-clock so identical configs give identical bytes.
nlohmann::ordered_json to_json(const ExperimentReport& report);

/// Serialized report followed by a newline.
std::string report_json(const ExperimentReport& report);
/// Header `kind,p,n_or_eps,mean,sd,count`; kind is `<kind>:<series>`.
/// Undefined values are left empty.
std::string report_csv(const ExperimentReport& report);

std::string exponent_json(std::span<const ExponentTable> rows);
std::string exponent_csv(std::span<const ExponentTable> rows);

/// `<kind>_p<p>_seed<seed>.<ext>`, e.g. `survival_p0.5_seed42.json`.
std::string report_filename(const ExperimentConfig& config, std::string_view extension);

/// Shortest decimal form that round-trips.
std::string format_double(double x);

}  // namespace permuton
