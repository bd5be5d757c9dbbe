#include "qudit_anneal/ensemble.hpp"
#include "qudit_anneal/errors.hpp"
#include "qudit_anneal/io.hpp"
#include "qudit_anneal/spectrum.hpp"
#include "qudit_anneal/squid.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace qudit;

namespace {

IsingProblem make_problem(unsigned n, std::vector<double> h, const std::vector<std::tuple<unsigned, unsigned, double>>& c) {
    std::vector<Coupling> couplings;
    for (const auto& [i, j, v] : c) couplings.push_back({i, j, v});
    return IsingProblem(n, std::move(h), std::move(couplings));
}

py::dict sweep_dict(const GapSweepResult& r) {
    py::list s, g;
    for (const auto& x : r.samples) {
        s.append(x.s);
        g.append(x.gap);
    }
    py::dict d;
    d["s_star"] = r.s_star;
    d["g_min"] = r.g_min;
    d["s"] = s;
    d["gap"] = g;
    d["refine_iterations"] = r.refine_iterations;
    return d;
}

py::dict summary_dict(const ComparisonSummary& s) {
    py::dict d;
    d["compared"] = s.compared;
    d["excluded_degenerate"] = s.excluded_degenerate;
    d["failed"] = s.failed;
    d["mean_abs_rel_change"] = s.mean_abs_rel_change;
    d["median_abs_rel_change"] = s.median_abs_rel_change;
    d["mean_rel_change"] = s.mean_rel_change;
    d["median_rel_change"] = s.median_rel_change;
    d["max_reduction"] = s.max_reduction;
    d["max_increase"] = s.max_increase;
    d["small_gap_ids"] = s.small_gap_ids;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Spectral simulator for adiabatic optimization with qubits and four-level qudits";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
    py::register_exception<ConsistencyError>(m, "ConsistencyError", base.ptr());

    py::class_<IsingProblem>(m, "IsingProblem")
        .def(py::init(&make_problem), py::arg("n"), py::arg("h"), py::arg("couplings") = std::vector<std::tuple<unsigned, unsigned, double>>{})
        .def_property_readonly("n", &IsingProblem::n)
        .def_property_readonly("h", &IsingProblem::h)
        .def_property_readonly("couplings",
                               [](const IsingProblem& p) {
                                   std::vector<std::tuple<unsigned, unsigned, double>> out;
                                   for (const auto& c : p.couplings()) out.emplace_back(c.i, c.j, c.value);
                                   return out;
                               })
        .def("negated_biases", &IsingProblem::negated_biases)
        .def("to_json", [](const IsingProblem& p) { return io::instance_text(p); })
        .def_static("from_json", [](const std::string& text) { return io::instance_from_json(io::Json::parse(text)); })
        .def("__eq__", [](const IsingProblem& a, const IsingProblem& b) { return a == b; });

    py::class_<SchedulePoint>(m, "SchedulePoint")
        .def(py::init<>())
        .def_readwrite("s", &SchedulePoint::s)
        .def_readwrite("delta", &SchedulePoint::delta)
        .def_readwrite("e", &SchedulePoint::e)
        .def_readwrite("omega_p", &SchedulePoint::omega_p)
        .def_readwrite("kappa_xz", &SchedulePoint::kappa_xz)
        .def_readwrite("kappa_xx", &SchedulePoint::kappa_xx);

    py::class_<AnnealSchedule>(m, "AnnealSchedule")
        .def(py::init<std::vector<SchedulePoint>>(), py::arg("knots"))
        .def_static("synthetic", &AnnealSchedule::synthetic, py::arg("knots") = 101)
        .def_static("linear", &AnnealSchedule::linear, py::arg("omega_p") = 3.0)
        .def_static("read_csv", [](const std::string& path) { return io::read_schedule(path); })
        .def("to_csv", [](const AnnealSchedule& s) { return io::schedule_csv(s); })
        .def_property_readonly("knots", &AnnealSchedule::knots)
        .def("evaluate", &AnnealSchedule::evaluate, py::arg("s"))
        .def("with_omega_scale", &AnnealSchedule::with_omega_scale, py::arg("factor"));

    m.def("schedule_violation", &schedule_violation, py::arg("knots"));

    m.def(
        "lowest_eigenvalues",
        [](const IsingProblem& p, const AnnealSchedule& schedule, double s, const std::string& model, std::size_t k,
           const std::string& solver) {
            SolverSettings settings;
            settings.kind = parse_solver_kind(solver);
            const auto ctx = SweepContext{&schedule, &p, parse_model_kind(model), {}};
            return lowest_eigenpairs(build_model(ctx, s), k, settings).values;
        },
        py::arg("problem"), py::arg("schedule"), py::arg("s"), py::arg("model") = "two", py::arg("k") = 2,
        py::arg("solver") = "auto");

    m.def(
        "gap_at",
        [](const IsingProblem& p, const AnnealSchedule& schedule, double s, const std::string& model) {
            return gap_at({&schedule, &p, parse_model_kind(model), {}}, s);
        },
        py::arg("problem"), py::arg("schedule"), py::arg("s"), py::arg("model") = "two");

    m.def(
        "min_gap_sweep",
        [](const IsingProblem& p, const AnnealSchedule& schedule, const std::string& model, std::size_t grid_points,
           double refine_tol, unsigned threads) {
            const SweepContext ctx{&schedule, &p, parse_model_kind(model), {}};
            GapSweepResult r;
            {
                py::gil_scoped_release release;
                r = min_gap_sweep(ctx, {grid_points, refine_tol, threads});
            }
            return sweep_dict(r);
        },
        py::arg("problem"), py::arg("schedule"), py::arg("model") = "two", py::arg("grid_points") = 201,
        py::arg("refine_tol") = 1e-5, py::arg("threads") = 1);

    m.def(
        "classical_ground",
        [](const IsingProblem& p) {
            const auto g = classical_ground(p);
            py::dict d;
            d["energy"] = g.energy();
            d["minimizers"] = g.minimizers;
            d["degeneracy"] = g.degeneracy();
            d["first_gap"] = g.first_gap();
            return d;
        },
        py::arg("problem"));

    m.def(
        "generate_instance",
        [](unsigned a, unsigned b, std::uint64_t seed, std::uint64_t index) {
            EnsembleConfig c;
            c.graph = Graph::complete_bipartite(a, b);
            c.seed = seed;
            return generate_instance(c, index);
        },
        py::arg("a") = 4, py::arg("b") = 4, py::arg("seed") = 7, py::arg("index") = 0);

    m.def(
        "filter_degenerate",
        [](const std::vector<IsingProblem>& problems) {
            const auto f = filter_degenerate(problems);
            return py::make_tuple(f.kept, f.rejected);
        },
        py::arg("problems"));

    m.def(
        "run_comparison",
        [](const std::vector<IsingProblem>& problems, const AnnealSchedule& schedule, std::size_t grid_points,
           double refine_tol, unsigned threads) {
            std::vector<InstanceEntry> entries;
            for (std::size_t i = 0; i < problems.size(); ++i) entries.push_back({i, problems[i]});
            ComparisonSettings settings;
            settings.sweep = {grid_points, refine_tol, 1};
            settings.threads = threads;
            ComparisonReport report;
            {
                py::gil_scoped_release release;
                report = run_comparison(entries, schedule, settings);
            }
            py::list records;
            for (const auto& r : report.records) {
                py::dict d;
                d["instance_id"] = r.instance_id;
                d["g_min_two"] = r.g_min_two;
                d["s_star_two"] = r.s_star_two;
                d["g_min_four"] = r.g_min_four;
                d["s_star_four"] = r.s_star_four;
                d["rel_change"] = r.rel_change;
                records.append(d);
            }
            py::dict out;
            out["records"] = records;
            out["excluded"] = report.excluded;
            out["summary"] = summary_dict(report.summary);
            return out;
        },
        py::arg("problems"), py::arg("schedule"), py::arg("grid_points") = 201, py::arg("refine_tol") = 1e-5,
        py::arg("threads") = 1);

    py::class_<SingleQuditParams>(m, "SingleQuditParams")
        .def(py::init<>())
        .def_readwrite("epsilon", &SingleQuditParams::epsilon)
        .def_readwrite("delta", &SingleQuditParams::delta)
        .def_readwrite("omega_p", &SingleQuditParams::omega_p)
        .def_readwrite("kappa_xz", &SingleQuditParams::kappa_xz)
        .def_readwrite("kappa_xx", &SingleQuditParams::kappa_xx);

    m.def(
        "tunneling_matrix",
        [](std::vector<double> energies, Eigen::MatrixXd tunneling) {
            return TunnelingHamiltonian{std::move(energies), std::move(tunneling)}.to_matrix();
        },
        py::arg("energies"), py::arg("tunneling"));
    m.def(
        "tunneling_to_qudit",
        [](std::vector<double> energies, Eigen::MatrixXd tunneling, double tolerance) {
            return tunneling_to_qudit({std::move(energies), std::move(tunneling)}, tolerance);
        },
        py::arg("energies"), py::arg("tunneling"), py::arg("tolerance") = 1e-6);
    m.def("qudit_to_effective_matrix", &qudit_to_effective_matrix, py::arg("params"));

    auto sq = m.def_submodule("squid", "Two-loop rf-SQUID numerics");
    py::class_<squid::SquidParams>(sq, "SquidParams")
        .def(py::init<>())
        .def_readwrite("l1_ph", &squid::SquidParams::l1_ph)
        .def_readwrite("l2_ph", &squid::SquidParams::l2_ph)
        .def_readwrite("c1_ff", &squid::SquidParams::c1_ff)
        .def_readwrite("c2_ff", &squid::SquidParams::c2_ff)
        .def_readwrite("ic_ua", &squid::SquidParams::ic_ua)
        .def_readwrite("phi1x", &squid::SquidParams::phi1x)
        .def_readwrite("phi2x", &squid::SquidParams::phi2x)
        .def("beta", &squid::SquidParams::beta);
    sq.def("potential", &squid::potential, py::arg("phi1"), py::arg("phi2"), py::arg("params"));
    sq.def(
        "classical_minima",
        [](const squid::SquidParams& p) {
            std::vector<std::tuple<double, double, double>> out;
            for (const auto& mn : squid::classical_minima(p)) out.emplace_back(mn.phi1, mn.phi2, mn.energy);
            return out;
        },
        py::arg("params"));
    sq.def(
        "grid_energies",
        [](const squid::SquidParams& p, std::size_t levels, std::size_t points) {
            py::gil_scoped_release release;
            return squid::solve_grid(p, squid::auto_grid(p, points, points), levels).energies;
        },
        py::arg("params"), py::arg("levels") = 4, py::arg("points") = 128);
    sq.def(
        "build_schedule",
        [](const std::string& config_path, std::size_t samples, std::size_t grid_points, unsigned threads) {
            auto config = io::read_device_config(config_path);
            if (samples > 0) config.waveform.samples = samples;
            squid::ScheduleOptions options;
            options.grid_points1 = options.grid_points2 = grid_points;
            options.threads = threads;
            std::optional<squid::ScheduleBuild> result;
            {
                py::gil_scoped_release release;
                result = squid::build_schedule(config, options);
            }
            const auto& build = *result;
            py::list eps, recon;
            for (const auto& s : build.samples) {
                eps.append(s.qudit.epsilon);
                recon.append(s.reconstruction_error);
            }
            py::dict diag;
            diag["epsilon"] = eps;
            diag["reconstruction_error"] = recon;
            return py::make_tuple(build.schedule, diag);
        },
        py::arg("config_path"), py::arg("samples") = 0, py::arg("grid_points") = 128, py::arg("threads") = 1);
}
