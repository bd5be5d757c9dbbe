#include "cli.hpp"

#include "qudit_anneal/ensemble.hpp"
#include "qudit_anneal/errors.hpp"
#include "qudit_anneal/io.hpp"
#include "qudit_anneal/parallel.hpp"
#include "qudit_anneal/spectrum.hpp"
#include "qudit_anneal/squid.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <regex>

#ifndef QUDIT_VERSION
#define QUDIT_VERSION "dev"
#endif

namespace qudit::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("SHA-256 computation failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Collects inputs and outputs of one command and writes the run manifest.
class Run {
public:
    Run(std::string command, std::vector<std::string> args)
        : command_(std::move(command)), args_(std::move(args)), started_(utc_now()) {}

    void input(const fs::path& path) {
        inputs_.push_back({{"path", path.string()}, {"sha256", sha256_hex(io::read_text(path))}});
    }
    void builtin_input(const std::string& name) { inputs_.push_back({{"builtin", name}}); }
    void seed(std::uint64_t s) { seed_ = s; }

    void write(const fs::path& path, const std::string& content) {
        io::write_text_atomic(path, content);
        outputs_.push_back({path, sha256_hex(content)});
    }

    // Removes everything written so far.
    void discard() noexcept {
        std::error_code ec;
        for (const auto& o : outputs_) fs::remove(o.path, ec);
        outputs_.clear();
    }

    void verify_against(const fs::path& manifest_path) {
        const Json m = Json::parse(io::read_text(manifest_path), nullptr, false);
        if (m.is_discarded() || !m.contains("inputs")) throw ConfigError(manifest_path.string() + ": not a run manifest");
        for (const auto& in : m["inputs"]) {
            if (!in.contains("path")) continue;
            const fs::path p = in["path"].get<std::string>();
            if (!fs::exists(p)) throw ConfigError("verify: input " + p.string() + " is missing");
            if (sha256_hex(io::read_text(p)) != in["sha256"].get<std::string>())
                throw ConfigError("verify: input " + p.string() + " changed since the recorded run");
        }
        if (m.contains("outputs"))
            for (const auto& out : m["outputs"]) expected_outputs_[out["path"].get<std::string>()] = out["sha256"];
        std::cerr << "verify: " << m["inputs"].size() << " recorded inputs match\n";
    }

    void finish(const fs::path& manifest_path, int exit_code) {
        Json j;
        j["command"] = command_;
        j["args"] = args_;
        j["tool_version"] = QUDIT_VERSION;
        if (seed_) j["seed"] = *seed_;
        j["inputs"] = inputs_;
        Json outs = Json::array();
        for (const auto& o : outputs_) {
            outs.push_back({{"path", o.path.string()}, {"sha256", o.hash}});
            auto it = expected_outputs_.find(o.path.string());
            if (it != expected_outputs_.end() && it->second != o.hash)
                std::cerr << "verify: output " << o.path.string() << " differs from the recorded run\n";
        }
        j["outputs"] = outs;
        j["exit_code"] = exit_code;
        j["started_at"] = started_;
        j["finished_at"] = utc_now();
        io::write_text_atomic(manifest_path, j.dump(2) + "\n");
    }

private:
    struct Output {
        fs::path path;
        std::string hash;
    };
    std::string command_;
    std::vector<std::string> args_;
    std::string started_;
    std::optional<std::uint64_t> seed_;
    Json inputs_ = Json::array();
    std::vector<Output> outputs_;
    std::map<std::string, std::string> expected_outputs_;
};

unsigned thread_count(int flag) {
    if (flag >= 0) return static_cast<unsigned>(flag);
    if (const char* env = std::getenv("QUDIT_ANNEAL_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 0) throw ConfigError("QUDIT_ANNEAL_THREADS must be a non-negative integer");
        return static_cast<unsigned>(v);
    }
    return 0;
}

Graph parse_graph(const std::string& spec) {
    std::smatch m;
    static const std::regex compact("k([0-9])([0-9])"), separated("k([0-9]+)_([0-9]+)");
    if (std::regex_match(spec, m, compact) || std::regex_match(spec, m, separated))
        return Graph::complete_bipartite(static_cast<unsigned>(std::stoul(m[1])), static_cast<unsigned>(std::stoul(m[2])));
    throw ConfigError("unknown graph \"" + spec + "\" (expected kAB or kA_B)");
}

Graph read_edge_file(const fs::path& path) {
    const Json j = Json::parse(io::read_text(path), nullptr, false);
    if (j.is_discarded() || !j.contains("n") || !j.contains("edges"))
        throw ConfigError(path.string() + ": expected {\"n\", \"edges\"}");
    std::vector<std::pair<unsigned, unsigned>> edges;
    for (const auto& e : j["edges"]) {
        if (!e.is_array() || e.size() != 2) throw ConfigError(path.string() + ": each edge must be [i, j]");
        edges.emplace_back(e[0].get<unsigned>(), e[1].get<unsigned>());
    }
    return Graph::from_edges(j["n"].get<unsigned>(), std::move(edges));
}

AnnealSchedule load_schedule(const std::string& spec, Run& run) {
    if (spec == "builtin:synthetic") {
        run.builtin_input(spec);
        return AnnealSchedule::synthetic();
    }
    if (spec == "builtin:linear") {
        run.builtin_input(spec);
        return AnnealSchedule::linear();
    }
    run.input(spec);
    return io::read_schedule(spec);
}

struct SweepFlags {
    std::size_t grid = 201;
    double refine_tol = 1e-5;
    std::string solver = "auto";
    int threads = -1;
    std::uint64_t seed = SolverSettings{}.seed;
    double omega_p_scale = 1.0;

    void add(CLI::App* app) {
        app->add_option("--grid", grid, "Coarse grid points in s")->check(CLI::Range(3, 1000000));
        app->add_option("--refine-tol", refine_tol, "Golden-section bracket tolerance in s")
            ->check(CLI::PositiveNumber);
        app->add_option("--solver", solver, "dense | lanczos | auto");
        app->add_option("--threads", threads, "Worker threads (0: all cores; default $QUDIT_ANNEAL_THREADS)");
        app->add_option("--seed", seed, "Seed for the iterative solver's start vectors");
        app->add_option("--omega-p-scale", omega_p_scale, "Multiply omega_p of the schedule")
            ->check(CLI::PositiveNumber);
    }
    SolverSettings solver_settings() const {
        SolverSettings s;
        s.kind = parse_solver_kind(solver);
        s.seed = seed;
        return s;
    }
};

struct ManifestFlags {
    std::string verify;
    void add(CLI::App* app) { app->add_option("--verify", verify, "Check inputs against a previous run manifest"); }
    void apply(Run& run) const {
        if (!verify.empty()) run.verify_against(verify);
    }
};

int cmd_generate(Run& run, const std::string& graph_spec, const std::string& edges_file, std::size_t count,
                 std::uint64_t seed, bool filter, const fs::path& out) {
    EnsembleConfig config;
    config.graph = edges_file.empty() ? parse_graph(graph_spec) : read_edge_file(edges_file);
    if (!edges_file.empty()) run.input(edges_file);
    config.instance_count = count;
    config.seed = seed;
    config.validate();
    run.seed(seed);

    Json manifest;
    manifest["graph"] = {{"label", config.graph.label()}, {"n", config.graph.vertices()}, {"edges", config.graph.edges()}};
    manifest["count"] = count;
    manifest["seed"] = seed;
    manifest["value_numerators"] = value_numerators();
    manifest["value_denominator"] = 7;
    Json instances = Json::array();
    std::vector<IsingProblem> problems;
    for (std::size_t i = 0; i < count; ++i) {
        problems.push_back(generate_instance(config, i));
        char name[48];
        std::snprintf(name, sizeof name, "instance_%06zu.json", i);
        run.write(out / name, io::instance_text(problems.back()));
        instances.push_back({{"id", i}, {"file", name}});
    }
    manifest["instances"] = instances;
    if (filter) {
        const FilterResult f = filter_degenerate(problems);
        manifest["filter"] = {{"kept", f.kept}, {"rejected", f.rejected}, {"kept_fraction", f.kept_fraction()}};
        std::cout << "kept " << f.kept.size() << " of " << count << " (fraction " << io::format_double(f.kept_fraction())
                  << ")\n";
    }
    run.write(out / "ensemble.json", manifest.dump(2) + "\n");
    return kExitOk;
}

int cmd_gap(Run& run, const fs::path& instance_path, const std::string& schedule_spec, const std::string& model_name,
            std::uint64_t instance_id, const SweepFlags& flags, const fs::path& out) {
    run.input(instance_path);
    const IsingProblem problem = io::read_instance(instance_path);
    const AnnealSchedule schedule = load_schedule(schedule_spec, run).with_omega_scale(flags.omega_p_scale);
    const ModelKind model = parse_model_kind(model_name);
    const SolverSettings solver = flags.solver_settings();
    run.seed(solver.seed);
    SweepSettings sweep{flags.grid, flags.refine_tol, thread_count(flags.threads)};
    const SweepContext ctx{&schedule, &problem, model, {}};
    fs::path csv = out, sidecar = out;
    csv += ".csv";
    sidecar += ".json";
    try {
        const GapSweepResult r = min_gap_sweep(ctx, sweep, solver);
        run.write(csv, io::sweep_csv(r));
        run.write(sidecar, io::sweep_sidecar(r, model, instance_id, solver.seed).dump(2) + "\n");
        std::cout << "s_star " << io::format_double(r.s_star) << " g_min_ghz " << io::format_double(r.g_min) << "\n";
        return kExitOk;
    } catch (const NumericalError& e) {
        Json j;
        j["error"] = e.what();
        j["residuals"] = e.residuals();
        j["model"] = std::string(to_string(model));
        j["instance_id"] = instance_id;
        j["seed"] = solver.seed;
        run.write(sidecar, j.dump(2) + "\n");
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}

int cmd_compare(Run& run, const fs::path& manifest_path, const std::string& schedule_spec,
                const std::string& overrides_path, const SweepFlags& flags, const fs::path& out) {
    run.input(manifest_path);
    const Json manifest = Json::parse(io::read_text(manifest_path), nullptr, false);
    if (manifest.is_discarded() || !manifest.contains("instances"))
        throw ConfigError(manifest_path.string() + ": not an ensemble manifest");
    std::vector<InstanceEntry> entries;
    for (const auto& item : manifest["instances"]) {
        const fs::path file = manifest_path.parent_path() / item["file"].get<std::string>();
        run.input(file);
        entries.push_back({item["id"].get<std::uint64_t>(), io::read_instance(file)});
    }
    const AnnealSchedule schedule = load_schedule(schedule_spec, run).with_omega_scale(flags.omega_p_scale);

    ComparisonSettings settings;
    settings.sweep = {flags.grid, flags.refine_tol, 1};
    settings.solver = flags.solver_settings();
    settings.threads = thread_count(flags.threads);
    run.seed(settings.solver.seed);
    if (!overrides_path.empty()) {
        if (entries.empty()) throw ConfigError("overrides given for an empty ensemble");
        run.input(overrides_path);
        settings.overrides = io::parse_overrides(io::read_text(overrides_path), entries.front().problem.n());
        for (const auto& e : entries)
            if (e.problem.n() != entries.front().problem.n())
                throw ConfigError("overrides need every instance to have the same qubit count");
    }
    std::size_t kept = 0;
    for (const auto& e : entries) kept += classical_ground(e.problem).degeneracy() == 1;
    if (kept == 0) throw ConfigError("no instance has a non-degenerate classical ground state; nothing to compare");

    const ComparisonReport report = run_comparison(entries, schedule, settings);
    fs::path csv = out, summary = out;
    csv += ".csv";
    summary += "_summary.json";
    run.write(csv, io::comparison_csv(report.records));
    run.write(summary, io::comparison_summary_json(report).dump(2) + "\n");
    for (const auto& f : report.failures) std::cerr << "instance " << f.instance_id << " failed: " << f.reason << "\n";
    const auto& s = report.summary;
    std::cout << "compared " << s.compared << ", excluded " << report.excluded.size() << ", failed " << s.failed
              << "; median |rel change| " << io::format_double(s.median_abs_rel_change) << "\n";
    const double ok = 1.0 - static_cast<double>(report.failures.size()) / static_cast<double>(kept);
    return ok >= 0.9 ? kExitOk : kExitNumerical;
}

int cmd_squid_extract(Run& run, const fs::path& config_path, int samples, int levels, int grid_points,
                      bool check_convergence, int threads, const fs::path& out) {
    if (levels < 2 || levels % 2 != 0) throw ConfigError("--levels must be even and at least 2");
    run.input(config_path);
    squid::DeviceConfig config = io::read_device_config(config_path);
    if (samples > 0) config.waveform.samples = static_cast<std::size_t>(samples);
    config.validate();
    squid::ScheduleOptions options;
    options.grid_points1 = options.grid_points2 = static_cast<std::size_t>(grid_points);
    options.check_convergence = check_convergence;
    options.threads = thread_count(threads);
    run.seed(options.solve.seed);

    fs::path csv = out, diag_json = out, diag_csv = out;
    csv += ".csv";
    diag_json += "_diagnostics.json";
    diag_csv += "_diagnostics.csv";
    if (levels != 4) {
        const std::size_t n = config.waveform.samples;
        std::vector<squid::SampleExtraction> results(n);
        parallel_for(n, options.threads, [&](std::size_t k) {
            const double s = k + 1 == n ? 1.0 : static_cast<double>(k) / static_cast<double>(n - 1);
            results[k] = squid::extract_sample(config, s, static_cast<std::size_t>(levels), options);
        });
        run.write(diag_json, io::extraction_json(results).dump(2) + "\n");
        std::cout << "M = " << levels << ": wrote tunneling diagnostics only (the qudit schedule needs M = 4)\n";
        return kExitOk;
    }
    const squid::ScheduleBuild build = squid::build_schedule(config, options);
    run.write(csv, io::schedule_csv(build.schedule));
    run.write(diag_json, io::diagnostics_json(build.samples).dump(2) + "\n");
    run.write(diag_csv, io::diagnostics_csv(build.samples));
    std::cout << "wrote " << build.schedule.knots().size() << " schedule knots\n";
    return kExitOk;
}

int cmd_validate_schedule(Run& run, const fs::path& path) {
    run.input(path);
    const auto points = io::read_schedule_points(path);
    if (auto why = schedule_violation(points)) throw ConfigError(path.string() + ": " + *why);
    std::cout << "ok: " << points.size() << " knots\n";
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Spectral simulator for adiabatic optimization with qubit and qudit devices"};
    app.set_version_flag("--version", QUDIT_VERSION);
    app.require_subcommand(1);

    std::string out;
    ManifestFlags manifest_flags;

    auto* gen = app.add_subcommand("generate", "Generate random Ising instances");
    std::string graph = "k44", edges_file;
    std::size_t count = 800;
    std::uint64_t seed = 7;
    bool filter = false;
    gen->add_option("--graph", graph, "Complete bipartite graph, e.g. k44");
    gen->add_option("--edges", edges_file, "JSON edge list {\"n\", \"edges\"} instead of --graph");
    gen->add_option("--count", count, "Number of instances");
    gen->add_option("--seed", seed, "Ensemble seed");
    gen->add_flag("--filter-degenerate", filter, "Record the non-degenerate split in the manifest");
    gen->add_option("--out", out, "Output directory")->required();

    auto* gap = app.add_subcommand("gap", "Minimum-gap sweep for one instance");
    std::string instance, schedule = "builtin:synthetic", model = "two";
    std::uint64_t instance_id = 0;
    SweepFlags sweep_flags;
    gap->add_option("--instance", instance, "Instance JSON")->required();
    gap->add_option("--schedule", schedule, "Schedule CSV, or builtin:synthetic / builtin:linear");
    gap->add_option("--model", model, "two | four");
    gap->add_option("--instance-id", instance_id, "Identifier echoed in the sidecar");
    sweep_flags.add(gap);
    gap->add_option("--out", out, "Output prefix (writes PREFIX.csv and PREFIX.json)")->required();

    auto* cmp = app.add_subcommand("compare", "Two-state vs four-state comparison over an ensemble");
    std::string ensemble, overrides;
    cmp->add_option("--manifest", ensemble, "Ensemble manifest written by generate")->required();
    cmp->add_option("--schedule", schedule, "Schedule CSV, or builtin:synthetic / builtin:linear");
    cmp->add_option("--overrides", overrides, "Per-qubit CSV qubit,omega_p_scale,kappa_xz_scale,kappa_xx_scale");
    sweep_flags.add(cmp);
    cmp->add_option("--out", out, "Output prefix (writes PREFIX.csv and PREFIX_summary.json)")->required();

    auto* sq = app.add_subcommand("squid-extract", "Qudit schedule from the rf-SQUID Hamiltonian");
    std::string config;
    int samples = 0, levels = 4, grid_points = 128, threads = -1;
    bool check = false;
    sq->add_option("--config", config, "Device config JSON")->required();
    sq->add_option("--samples", samples, "Override the waveform sample count");
    sq->add_option("--levels", levels, "Number of levels M (even)");
    sq->add_option("--grid-points", grid_points, "Grid points per axis")->check(CLI::Range(32, 4096));
    sq->add_option("--threads", threads, "Worker threads (0: all cores; default $QUDIT_ANNEAL_THREADS)");
    sq->add_flag("--check-convergence", check, "Grid-doubling check at the first and last sample");
    sq->add_option("--out", out, "Output prefix")->required();

    auto* val = app.add_subcommand("validate-schedule", "Check a schedule CSV against the schedule invariants");
    std::string schedule_file;
    val->add_option("schedule", schedule_file, "Schedule CSV")->required();

    for (auto* sub : {gen, gap, cmp, sq, val}) manifest_flags.add(sub);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    CLI::App* active = app.get_subcommands().front();
    Run run(active->get_name(), std::vector<std::string>(args.begin() + 1, args.end()));
    fs::path manifest_path;
    int code = kExitOk;
    try {
        manifest_flags.apply(run);
        if (active == gen) {
            manifest_path = fs::path(out) / "run_manifest.json";
            code = cmd_generate(run, graph, edges_file, count, seed, filter, out);
        } else if (active == gap) {
            manifest_path = out + ".manifest.json";
            code = cmd_gap(run, instance, schedule, model, instance_id, sweep_flags, out);
        } else if (active == cmp) {
            manifest_path = out + ".manifest.json";
            code = cmd_compare(run, ensemble, schedule, overrides, sweep_flags, out);
        } else if (active == sq) {
            manifest_path = out + ".manifest.json";
            code = cmd_squid_extract(run, config, samples, levels, grid_points, check, threads, out);
        } else {
            return cmd_validate_schedule(run, schedule_file);
        }
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        code = kExitNumerical;
    } catch (const ConsistencyError& e) {
        std::cerr << "error: " << e.what() << "\n";
        code = kExitNumerical;
    } catch (const ConfigError& e) {
        run.discard();
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        run.discard();
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const fs::filesystem_error& e) {
        run.discard();
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    run.finish(manifest_path, code);
    return code;
}

}  // namespace qudit::cli
