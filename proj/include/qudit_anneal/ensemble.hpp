#pragma once

// Random spin-glass ensembles and the two-state vs four-state gap comparison.

#include "qudit_anneal/model.hpp"
#include "qudit_anneal/spectrum.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qudit {

class Graph {
public:
    // Vertices 0..a-1 on one side, a..a+b-1 on the other; edges in (i, j) lexicographic order.
    static Graph complete_bipartite(unsigned a, unsigned b);
    // Throws ConfigError on self-loops, out-of-range or repeated edges. Edges are
    // normalized to i < j and kept in the given order.
    static Graph from_edges(unsigned n, std::vector<std::pair<unsigned, unsigned>> edges);

    unsigned vertices() const noexcept { return n_; }
    const std::vector<std::pair<unsigned, unsigned>>& edges() const noexcept { return edges_; }
    // "k44" style label for complete bipartite graphs, "edges" otherwise.
    const std::string& label() const noexcept { return label_; }

private:
    unsigned n_ = 0;
    std::vector<std::pair<unsigned, unsigned>> edges_;
    std::string label_;
};

// Numerators k of the values k/7, k = -7..7.
std::vector<int> value_numerators();

struct EnsembleConfig {
    Graph graph = Graph::complete_bipartite(4, 4);
    std::size_t instance_count = 800;
    std::uint64_t seed = 7;

    // Throws ConfigError when instance_count is zero or the graph is empty.
    void validate() const;
};

// Biases for every vertex and couplings for every edge, drawn i.i.d. uniformly
// from {0, +-1/7, ..., +-1} with a generator keyed by (seed, index).
IsingProblem generate_instance(const EnsembleConfig& config, std::uint64_t index);

struct FilterResult {
    std::vector<std::size_t> kept;      // indices into the input
    std::vector<std::size_t> rejected;
    double kept_fraction() const noexcept {
        const auto total = kept.size() + rejected.size();
        return total == 0 ? 0.0 : static_cast<double>(kept.size()) / static_cast<double>(total);
    }
};

// Keeps exactly the problems whose classical ground state is unique.
FilterResult filter_degenerate(const std::vector<IsingProblem>& problems);

struct ComparisonRecord {
    std::uint64_t instance_id = 0;
    IsingProblem problem;
    double g_min_two = 0.0;
    double s_star_two = 0.0;
    double g_min_four = 0.0;
    double s_star_four = 0.0;
    double rel_change = 0.0;  // (four - two) / two
};

struct InstanceFailure {
    std::uint64_t instance_id;
    std::string reason;
};

struct ComparisonSummary {
    std::size_t compared = 0;
    std::size_t excluded_degenerate = 0;
    std::size_t failed = 0;
    double mean_abs_rel_change = 0.0;
    double median_abs_rel_change = 0.0;
    double mean_rel_change = 0.0;
    double median_rel_change = 0.0;
    double max_reduction = 0.0;   // max over instances of -(rel_change), floored at 0
    double max_increase = 0.0;
    // Subset: the `small_gap_count` instances with the smallest g_min_two.
    std::vector<std::uint64_t> small_gap_ids;
    double small_gap_mean_rel_change = 0.0;
    double small_gap_mean_abs_rel_change = 0.0;
    double small_gap_max_reduction = 0.0;
};

struct ComparisonSettings {
    SweepSettings sweep;
    SolverSettings solver;
    std::vector<QuditOverride> overrides;  // applied to the four-state model
    unsigned threads = 1;                  // job pool over (instance, model) pairs
    std::size_t small_gap_count = 5;
};

struct ComparisonReport {
    std::vector<ComparisonRecord> records;          // ascending instance_id
    std::vector<std::uint64_t> excluded;            // degenerate instances
    std::vector<InstanceFailure> failures;
    ComparisonSummary summary;
};

struct InstanceEntry {
    std::uint64_t id;
    IsingProblem problem;
};

// Runs both sweeps on identical grids for every non-degenerate instance.
// Per-instance numerical failures are recorded and do not stop the run.
ComparisonReport run_comparison(const std::vector<InstanceEntry>& instances, const AnnealSchedule& schedule,
                                const ComparisonSettings& settings = {});

// Generates config.instance_count instances and compares them.
ComparisonReport run_comparison(const EnsembleConfig& config, const AnnealSchedule& schedule,
                                const ComparisonSettings& settings = {});

ComparisonSummary summarize(const std::vector<ComparisonRecord>& records, std::size_t small_gap_count);

}  // namespace qudit
