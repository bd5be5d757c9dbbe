#include "qudit_anneal/io.hpp"

#include "qudit_anneal/errors.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace qudit::io {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw Error("number formatting failed");
    return std::string(buf, end);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw ConfigError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

namespace {

Json parse_json(const std::string& text, const std::string& what) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(what + ": invalid JSON (" + e.what() + ")");
    }
}

template <typename T>
T field(const Json& j, const char* key, const std::string& what) {
    if (!j.contains(key)) throw ConfigError(what + ": missing \"" + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(what + ": \"" + key + "\" has the wrong type");
    }
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& text, const std::string& where) {
    const std::string t = trim(text);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw ConfigError(where + ": \"" + t + "\" is not a number");
    return v;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& csv, const std::string& header,
                                               const std::string& what) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || trim(line) != header)
        throw ConfigError(what + ": expected header \"" + header + "\"");
    const std::size_t width = split(header, ',').size();
    std::vector<std::vector<std::string>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto cells = split(trim(line), ',');
        if (cells.size() != width)
            throw ConfigError(what + " line " + std::to_string(lineno) + ": expected " + std::to_string(width) +
                              " fields");
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace

Json instance_to_json(const IsingProblem& problem) {
    Json j;
    j["n"] = problem.n();
    j["h"] = problem.h();
    Json cs = Json::array();
    for (const auto& c : problem.couplings()) cs.push_back(Json::array({c.i, c.j, c.value}));
    j["couplings"] = cs;
    if (problem.seed()) j["seed"] = *problem.seed();
    return j;
}

IsingProblem instance_from_json(const Json& j) {
    const std::string what = "instance";
    if (!j.is_object()) throw ConfigError("instance: expected a JSON object");
    const auto n = field<unsigned>(j, "n", what);
    const auto h = field<std::vector<double>>(j, "h", what);
    if (h.size() != n) throw ConfigError("instance: h has " + std::to_string(h.size()) + " entries, n = " +
                                         std::to_string(n));
    std::vector<Coupling> couplings;
    const Json& cs = j.contains("couplings") ? j.at("couplings") : Json::array();
    if (!cs.is_array()) throw ConfigError("instance: couplings must be an array");
    for (const auto& c : cs) {
        if (!c.is_array() || c.size() != 3 || !c[0].is_number_unsigned() || !c[1].is_number_unsigned() ||
            !c[2].is_number())
            throw ConfigError("instance: each coupling must be [i, j, J]");
        couplings.push_back({c[0].get<unsigned>(), c[1].get<unsigned>(), c[2].get<double>()});
    }
    std::optional<std::uint64_t> seed;
    if (j.contains("seed")) seed = field<std::uint64_t>(j, "seed", what);
    return IsingProblem(n, h, std::move(couplings), seed);
}

IsingProblem read_instance(const fs::path& path) {
    try {
        return instance_from_json(parse_json(read_text(path), path.string()));
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string instance_text(const IsingProblem& problem) { return instance_to_json(problem).dump(2) + "\n"; }

std::vector<SchedulePoint> parse_schedule_points(const std::string& csv) {
    std::vector<SchedulePoint> points;
    std::size_t row = 0;
    for (const auto& cells : csv_rows(csv, kScheduleHeader, "schedule")) {
        const std::string where = "schedule row " + std::to_string(++row);
        points.push_back({parse_number(cells[0], where), parse_number(cells[1], where), parse_number(cells[2], where),
                          parse_number(cells[3], where), parse_number(cells[4], where),
                          parse_number(cells[5], where)});
    }
    return points;
}

std::vector<SchedulePoint> read_schedule_points(const fs::path& path) {
    return parse_schedule_points(read_text(path));
}

AnnealSchedule read_schedule(const fs::path& path) {
    try {
        return AnnealSchedule(read_schedule_points(path));
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string schedule_csv(const AnnealSchedule& schedule) {
    std::string out = std::string(kScheduleHeader) + "\n";
    for (const auto& p : schedule.knots())
        out += format_double(p.s) + "," + format_double(p.delta) + "," + format_double(p.e) + "," +
               format_double(p.omega_p) + "," + format_double(p.kappa_xz) + "," + format_double(p.kappa_xx) + "\n";
    return out;
}

std::vector<QuditOverride> parse_overrides(const std::string& csv, unsigned n) {
    std::vector<QuditOverride> out(n);
    std::set<unsigned> seen;
    std::size_t row = 0;
    for (const auto& cells : csv_rows(csv, "qubit,omega_p_scale,kappa_xz_scale,kappa_xx_scale", "overrides")) {
        const std::string where = "overrides row " + std::to_string(++row);
        const double q = parse_number(cells[0], where);
        if (q < 0 || q != static_cast<double>(static_cast<unsigned>(q)) || q >= n)
            throw ConfigError(where + ": qubit index out of range");
        const auto qi = static_cast<unsigned>(q);
        if (!seen.insert(qi).second) throw ConfigError(where + ": qubit listed twice");
        out[qi] = {parse_number(cells[1], where), parse_number(cells[2], where), parse_number(cells[3], where)};
    }
    return out;
}

std::string sweep_csv(const GapSweepResult& result) {
    std::string out = "s,gap_ghz\n";
    for (const auto& g : result.samples) out += format_double(g.s) + "," + format_double(g.gap) + "\n";
    return out;
}

Json sweep_sidecar(const GapSweepResult& result, ModelKind model, std::uint64_t instance_id, std::uint64_t seed) {
    Json j;
    j["s_star"] = result.s_star;
    j["g_min_ghz"] = result.g_min;
    j["model"] = std::string(to_string(model));
    j["instance_id"] = instance_id;
    j["seed"] = seed;
    j["refine_iterations"] = result.refine_iterations;
    j["bracket_width"] = result.bracket_width;
    return j;
}

std::string comparison_csv(const std::vector<ComparisonRecord>& records) {
    std::string out = std::string(kComparisonHeader) + "\n";
    for (const auto& r : records)
        out += std::to_string(r.instance_id) + "," + format_double(r.g_min_two) + "," + format_double(r.s_star_two) +
               "," + format_double(r.g_min_four) + "," + format_double(r.s_star_four) + "," +
               format_double(r.rel_change) + "\n";
    return out;
}

Json comparison_summary_json(const ComparisonReport& report) {
    const auto& s = report.summary;
    Json j;
    j["compared"] = s.compared;
    j["excluded"] = report.excluded;
    j["failed"] = s.failed;
    Json failures = Json::array();
    for (const auto& f : report.failures) failures.push_back({{"instance_id", f.instance_id}, {"reason", f.reason}});
    j["failures"] = failures;
    j["mean_abs_rel_change"] = s.mean_abs_rel_change;
    j["median_abs_rel_change"] = s.median_abs_rel_change;
    j["mean_rel_change"] = s.mean_rel_change;
    j["median_rel_change"] = s.median_rel_change;
    j["max_reduction"] = s.max_reduction;
    j["max_increase"] = s.max_increase;
    j["small_gap"] = {{"instance_ids", s.small_gap_ids},
                      {"mean_rel_change", s.small_gap_mean_rel_change},
                      {"mean_abs_rel_change", s.small_gap_mean_abs_rel_change},
                      {"max_reduction", s.small_gap_max_reduction}};
    return j;
}

squid::DeviceConfig device_config_from_json(const Json& j) {
    const std::string what = "device config";
    if (!j.is_object()) throw ConfigError("device config: expected a JSON object");
    static const std::set<std::string> known = {"L1_pH", "L2_pH", "C1_fF", "C2_fF", "Ic_uA",
                                                "phi1x", "bias_unit_phi0", "waveform", "notes"};
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) throw ConfigError("device config: unknown key \"" + key + "\"");
    squid::DeviceConfig c;
    c.device.l1_ph = field<double>(j, "L1_pH", what);
    c.device.l2_ph = field<double>(j, "L2_pH", what);
    c.device.c1_ff = field<double>(j, "C1_fF", what);
    c.device.c2_ff = field<double>(j, "C2_fF", what);
    c.device.ic_ua = field<double>(j, "Ic_uA", what);
    if (j.contains("phi1x")) c.device.phi1x = field<double>(j, "phi1x", what);
    if (j.contains("bias_unit_phi0")) c.bias_unit_phi0 = field<double>(j, "bias_unit_phi0", what);
    const Json w = field<Json>(j, "waveform", what);
    c.waveform.phi2x_start = field<double>(w, "phi2x_start", "waveform");
    c.waveform.phi2x_end = field<double>(w, "phi2x_end", "waveform");
    c.waveform.samples = field<std::size_t>(w, "samples", "waveform");
    c.validate();
    return c;
}

squid::DeviceConfig read_device_config(const fs::path& path) {
    try {
        return device_config_from_json(parse_json(read_text(path), path.string()));
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

namespace {

Json matrix_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

Json grid_json(const squid::FluxGrid& g) {
    return {{"phi1", {g.phi1.min, g.phi1.max, g.phi1.count}}, {"phi2", {g.phi2.min, g.phi2.max, g.phi2.count}}};
}

}  // namespace

Json diagnostics_json(const std::vector<squid::SampleDiagnostics>& samples) {
    Json arr = Json::array();
    for (const auto& d : samples) {
        Json j;
        j["s"] = d.s;
        j["phi2x"] = d.phi2x;
        j["grid"] = grid_json(d.grid);
        j["grid_energies_ghz"] = d.grid_energies;
        j["level_energies_ghz"] = d.level_energies;
        j["tunneling_ghz"] = matrix_json(d.tunneling);
        j["epsilon_ghz"] = d.qudit.epsilon;
        j["delta_ghz"] = d.qudit.delta;
        j["omega_p_ghz"] = d.qudit.omega_p;
        j["kappa_xz_ghz"] = d.qudit.kappa_xz;
        j["kappa_xx_ghz"] = d.qudit.kappa_xx;
        j["epsilon_plus_ghz"] = d.epsilon_plus;
        j["epsilon_minus_ghz"] = d.epsilon_minus;
        j["depsilon_dphi_ghz_per_phi0"] = d.depsilon_dphi;
        j["e_ghz"] = d.e_scale;
        j["induced_flux_phi0"] = d.induced_flux;
        j["reconstruction_error_ghz"] = d.reconstruction_error;
        j["intra_well_max_ghz"] = d.intra_well_max;
        j["max_residual_ghz"] = d.max_residual;
        j["boundary_weight"] = d.boundary_weight;
        if (d.grid_shift) j["grid_doubling_shift"] = *d.grid_shift;
        arr.push_back(j);
    }
    return {{"samples", arr}};
}

std::string diagnostics_csv(const std::vector<squid::SampleDiagnostics>& samples) {
    std::string out = "s,phi2x,epsilon_ghz,reconstruction_error_ghz,max_residual_ghz\n";
    for (const auto& d : samples)
        out += format_double(d.s) + "," + format_double(d.phi2x) + "," + format_double(d.qudit.epsilon) + "," +
               format_double(d.reconstruction_error) + "," + format_double(d.max_residual) + "\n";
    return out;
}

Json extraction_json(const std::vector<squid::SampleExtraction>& samples) {
    Json arr = Json::array();
    for (const auto& x : samples) {
        Json j;
        j["s"] = x.s;
        j["phi2x"] = x.phi2x;
        j["grid_energies_ghz"] = x.grid_states.energies;
        j["residuals_ghz"] = x.grid_states.residuals;
        j["induced_flux_phi0"] = x.basis.induced;
        j["left_count"] = x.basis.left_count;
        j["right_count"] = x.basis.right_count;
        j["left_energies_ghz"] = x.extraction.left_energies;
        j["right_energies_ghz"] = x.extraction.right_energies;
        j["cross_ghz"] = matrix_json(x.extraction.cross);
        j["intra_well_max_ghz"] = x.extraction.intra_well_max;
        j["reconstruction_error_ghz"] = x.extraction.reconstruction_error;
        arr.push_back(j);
    }
    return {{"samples", arr}};
}

}  // namespace qudit::io
