#pragma once

#include "coneflow/certify.hpp"
#include "coneflow/integrate.hpp"
#include "coneflow/limitsets.hpp"
#include "coneflow/slowfast.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace coneflow::report {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Shortest-free round-trip formatting: printf "%.17g"; non-finite values
/// are spelled inf, -inf, nan.
std::string format_double(double v);

/// Finite values as JSON numbers, others as "Infinity", "-Infinity", "NaN".
Json number(double v);
Json to_json(const Vec& v);
Json to_json(const CVec& v);  // [[re, im], ...]
Json to_json(const Mat& m);   // row-major nested arrays

Json to_json(const CooperativityReport& r);
Json to_json(const Equilibrium& e);
Json to_json(const PeriodicOrbit& po);  // without the sampled orbit
Json to_json(const OmegaClassification& c);
Json to_json(const SweepReport& r);
Json to_json(const ManifoldCertification& m);
Json to_json(const ContractionFit& f);
Json to_json(const MonotonicityResult& m);

/// ISO-8601 UTC time, e.g. 2026-10-18T12:00:00Z.
std::string utc_timestamp();

/// {"schema_version", "report": kind, "generated_at", <body fields>}.
/// Without a timestamp the field is omitted, which makes output
/// byte-comparable.
Json envelope(const std::string& kind, const Json& body,
              const std::optional<std::string>& generated_at = utc_timestamp());

/// Two-space indented JSON followed by a newline; keys sorted.
std::string dump(const Json& j);

void write_csv_row(std::ostream& os, const std::vector<double>& row);
void write_csv_header(std::ostream& os, const std::vector<std::string>& names);

/// Header `t,<names...>` then one row per trajectory sample.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const std::vector<std::string>& names);

/// Header `t,<names[i] for i in columns>`.
void write_projection_csv(std::ostream& os, const Trajectory& traj, const std::vector<std::string>& names,
                          const std::vector<std::size_t>& columns);

/// Writes `content` to `path`, creating parent directories; throws Error.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace coneflow::report
