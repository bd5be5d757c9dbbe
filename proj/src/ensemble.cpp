#include "qudit_anneal/ensemble.hpp"

#include "qudit_anneal/errors.hpp"
#include "qudit_anneal/parallel.hpp"
#include "qudit_anneal/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace qudit {

Graph Graph::complete_bipartite(unsigned a, unsigned b) {
    if (a == 0 || b == 0) throw ConfigError("complete bipartite graph needs both sides non-empty");
    Graph g;
    g.n_ = a + b;
    for (unsigned i = 0; i < a; ++i)
        for (unsigned j = a; j < a + b; ++j) g.edges_.emplace_back(i, j);
    g.label_ = "k" + std::to_string(a) + std::to_string(b);
    if (a >= 10 || b >= 10) g.label_ = "k" + std::to_string(a) + "_" + std::to_string(b);
    return g;
}

Graph Graph::from_edges(unsigned n, std::vector<std::pair<unsigned, unsigned>> edges) {
    Graph g;
    g.n_ = n;
    std::set<std::pair<unsigned, unsigned>> seen;
    for (auto& [i, j] : edges) {
        if (i == j) throw ConfigError("self-loop on vertex " + std::to_string(i));
        if (i > j) std::swap(i, j);
        if (j >= n) throw ConfigError("edge vertex " + std::to_string(j) + " out of range");
        if (!seen.emplace(i, j).second)
            throw ConfigError("repeated edge (" + std::to_string(i) + ", " + std::to_string(j) + ")");
    }
    g.edges_ = std::move(edges);
    g.label_ = "edges";
    return g;
}

std::vector<int> value_numerators() {
    std::vector<int> v(15);
    std::iota(v.begin(), v.end(), -7);
    return v;
}

void EnsembleConfig::validate() const {
    if (instance_count == 0) throw ConfigError("instance count must be at least 1");
    if (graph.vertices() == 0) throw ConfigError("graph has no vertices");
}

IsingProblem generate_instance(const EnsembleConfig& config, std::uint64_t index) {
    config.validate();
    CounterRng rng(config.seed, index);
    const auto values = value_numerators();
    auto draw = [&] { return static_cast<double>(values[rng.uniform_below(values.size())]) / 7.0; };
    std::vector<double> h(config.graph.vertices());
    for (auto& v : h) v = draw();
    std::vector<Coupling> couplings;
    couplings.reserve(config.graph.edges().size());
    for (const auto& [i, j] : config.graph.edges()) couplings.push_back({i, j, draw()});
    return IsingProblem(config.graph.vertices(), std::move(h), std::move(couplings), config.seed);
}

FilterResult filter_degenerate(const std::vector<IsingProblem>& problems) {
    FilterResult r;
    for (std::size_t i = 0; i < problems.size(); ++i)
        (classical_ground(problems[i]).degeneracy() == 1 ? r.kept : r.rejected).push_back(i);
    return r;
}

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

ComparisonSummary summarize(const std::vector<ComparisonRecord>& records, std::size_t small_gap_count) {
    ComparisonSummary s;
    s.compared = records.size();
    std::vector<double> rel, abs_rel;
    for (const auto& r : records) {
        rel.push_back(r.rel_change);
        abs_rel.push_back(std::abs(r.rel_change));
        s.max_reduction = std::max(s.max_reduction, -r.rel_change);
        s.max_increase = std::max(s.max_increase, r.rel_change);
    }
    s.mean_rel_change = mean(rel);
    s.median_rel_change = median(rel);
    s.mean_abs_rel_change = mean(abs_rel);
    s.median_abs_rel_change = median(abs_rel);

    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return records[a].g_min_two < records[b].g_min_two; });
    order.resize(std::min(order.size(), small_gap_count));
    std::vector<double> sub, sub_abs;
    for (std::size_t i : order) {
        s.small_gap_ids.push_back(records[i].instance_id);
        sub.push_back(records[i].rel_change);
        sub_abs.push_back(std::abs(records[i].rel_change));
        s.small_gap_max_reduction = std::max(s.small_gap_max_reduction, -records[i].rel_change);
    }
    s.small_gap_mean_rel_change = mean(sub);
    s.small_gap_mean_abs_rel_change = mean(sub_abs);
    return s;
}

ComparisonReport run_comparison(const std::vector<InstanceEntry>& instances, const AnnealSchedule& schedule,
                                const ComparisonSettings& settings) {
    ComparisonReport report;
    std::vector<const InstanceEntry*> kept;
    for (const auto& e : instances) {
        if (classical_ground(e.problem).degeneracy() == 1)
            kept.push_back(&e);
        else
            report.excluded.push_back(e.id);
    }

    struct JobResult {
        std::optional<GapSweepResult> sweep;
        std::string error;
    };
    std::vector<JobResult> results(2 * kept.size());
    parallel_for(results.size(), settings.threads, [&](std::size_t job) {
        const InstanceEntry& e = *kept[job / 2];
        const ModelKind model = job % 2 == 0 ? ModelKind::TwoState : ModelKind::FourState;
        SweepContext ctx{&schedule, &e.problem, model, model == ModelKind::FourState ? settings.overrides
                                                                                       : std::vector<QuditOverride>{}};
        SolverSettings solver = settings.solver;
        solver.seed = CounterRng::mix(settings.solver.seed ^ CounterRng::mix(2 * e.id + job % 2));
        SweepSettings sweep = settings.sweep;
        sweep.threads = 1;
        try {
            results[job].sweep = min_gap_sweep(ctx, sweep, solver);
        } catch (const Error& err) {
            results[job].error = std::string(to_string(model)) + ": " + err.what();
        }
    });

    const double e_end = schedule.evaluate(1.0).e;
    for (std::size_t k = 0; k < kept.size(); ++k) {
        const InstanceEntry& e = *kept[k];
        const auto& two = results[2 * k];
        const auto& four = results[2 * k + 1];
        if (!two.sweep || !four.sweep) {
            report.failures.push_back({e.id, two.sweep ? four.error : two.error});
            continue;
        }
        auto leaked = [&](const GapSweepResult& r) { return r.s_star == 1.0 && r.g_min < 1e-9 * e_end; };
        if (leaked(*two.sweep) || leaked(*four.sweep) || two.sweep->g_min <= 0.0) {
            report.excluded.push_back(e.id);
            continue;
        }
        ComparisonRecord rec;
        rec.instance_id = e.id;
        rec.problem = e.problem;
        rec.g_min_two = two.sweep->g_min;
        rec.s_star_two = two.sweep->s_star;
        rec.g_min_four = four.sweep->g_min;
        rec.s_star_four = four.sweep->s_star;
        rec.rel_change = (rec.g_min_four - rec.g_min_two) / rec.g_min_two;
        report.records.push_back(std::move(rec));
    }
    std::sort(report.excluded.begin(), report.excluded.end());
    report.summary = summarize(report.records, settings.small_gap_count);
    report.summary.excluded_degenerate = report.excluded.size();
    report.summary.failed = report.failures.size();
    return report;
}

ComparisonReport run_comparison(const EnsembleConfig& config, const AnnealSchedule& schedule,
                                const ComparisonSettings& settings) {
    config.validate();
    std::vector<InstanceEntry> entries;
    entries.reserve(config.instance_count);
    for (std::uint64_t i = 0; i < config.instance_count; ++i) entries.push_back({i, generate_instance(config, i)});
    return run_comparison(entries, schedule, settings);
}

}  // namespace qudit
