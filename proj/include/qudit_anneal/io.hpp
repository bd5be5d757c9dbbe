#pragma once

// File formats: instance JSON, schedule CSV, sweep / comparison outputs,
// device configs and squid diagnostics.

#include "qudit_anneal/ensemble.hpp"
#include "qudit_anneal/model.hpp"
#include "qudit_anneal/spectrum.hpp"
#include "qudit_anneal/squid.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace qudit::io {

using Json = nlohmann::ordered_json;

// Shortest round-trip decimal form.
std::string format_double(double v);

std::string read_text(const std::filesystem::path& path);
// Writes to a sibling temporary and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

// { "n", "h", "couplings": [[i, j, J], ...], "seed"? }
Json instance_to_json(const IsingProblem& problem);
IsingProblem instance_from_json(const Json& j);
IsingProblem read_instance(const std::filesystem::path& path);
std::string instance_text(const IsingProblem& problem);

inline constexpr const char* kScheduleHeader = "s,delta_ghz,e_ghz,omega_p_ghz,kappa_xz_ghz,kappa_xx_ghz";

// Parses rows without checking schedule invariants.
std::vector<SchedulePoint> parse_schedule_points(const std::string& csv);
std::vector<SchedulePoint> read_schedule_points(const std::filesystem::path& path);
AnnealSchedule read_schedule(const std::filesystem::path& path);
std::string schedule_csv(const AnnealSchedule& schedule);

// `qubit,omega_p_scale,kappa_xz_scale,kappa_xx_scale`; unlisted qubits keep scale 1.
std::vector<QuditOverride> parse_overrides(const std::string& csv, unsigned n);

std::string sweep_csv(const GapSweepResult& result);
Json sweep_sidecar(const GapSweepResult& result, ModelKind model, std::uint64_t instance_id, std::uint64_t seed);

inline constexpr const char* kComparisonHeader = "instance_id,g_min_two,s_star_two,g_min_four,s_star_four,rel_change";
std::string comparison_csv(const std::vector<ComparisonRecord>& records);
Json comparison_summary_json(const ComparisonReport& report);

// { "L1_pH", "L2_pH", "C1_fF", "C2_fF", "Ic_uA", "phi1x"?, "bias_unit_phi0"?,
//   "waveform": { "phi2x_start", "phi2x_end", "samples" }, "notes"? }
squid::DeviceConfig device_config_from_json(const Json& j);
squid::DeviceConfig read_device_config(const std::filesystem::path& path);

Json diagnostics_json(const std::vector<squid::SampleDiagnostics>& samples);
std::string diagnostics_csv(const std::vector<squid::SampleDiagnostics>& samples);
Json extraction_json(const std::vector<squid::SampleExtraction>& samples);

}  // namespace qudit::io
