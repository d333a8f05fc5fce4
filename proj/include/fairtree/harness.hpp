#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairtree/builder.hpp"
#include "fairtree/dataset.hpp"
#include "fairtree/solver.hpp"

namespace fairtree {

// What a sweep runs on: a CSV with a (builtin or inline) spec, a synthetic
// fixture, or a dataset already in memory (tests).
struct DatasetRef {
    enum class Kind { csv, synth, inline_data };
    Kind kind = Kind::synth;
    std::string name;           // builtin spec name or label
    std::string path;           // csv
    std::optional<DatasetSpec> spec;
    SynthKind synth_kind = SynthKind::biased;
    long synth_n = 1000;
    std::uint64_t synth_seed = 0;
    std::optional<Dataset> data;  // inline_data
};

struct ExperimentConfig {
    DatasetRef dataset;
    std::vector<double> c_grid{0.001, 0.005, 0.01, 0.05, 0.1, 0.5,
                               std::numeric_limits<double>::infinity()};
    int repetitions = 30;
    double train_fraction = 0.7;
    std::uint64_t base_seed = 0;
    GrowthConfig growth;
    SolverOptions solver;
    int workers = 1;

    void validate() const;
};

inline constexpr std::array<const char*, 7> kMetricNames = {"accuracy", "ba",     "bpa", "bnpa",
                                                            "sp",       "p_rule", "n_rule"};

struct MetricAggregate {
    std::optional<double> mean;
    std::optional<double> ci_halfwidth;  // 1.96 * sample sd / sqrt(n_defined)
    int n_defined = 0;
    std::vector<std::optional<double>> raw;  // one slot per repetition
};

struct SweepCell {
    double c = 0.0;  // +inf = the LRT column
    std::array<MetricAggregate, kMetricNames.size()> metrics;
    int constant_tree_count = 0;
    int unconverged_repetitions = 0;  // repetitions whose tree used an unconverged fit
};

struct SweepResult {
    std::string dataset;
    std::string config_json;
    std::vector<SweepCell> cells;  // one per c, grid order
    int repetitions = 0;
    // Soft observation, not a hard invariant: documented when it fails.
    bool constant_tree_monotone = true;
    std::vector<std::string> notes;
};

Dataset resolve_dataset(const DatasetRef& ref, LoadReport* report = nullptr);

SweepResult run_sweep(const ExperimentConfig& config);

// Writes metrics.<fmt> and constant_trees.<fmt> into out_dir; format is
// "json" or "csv". CSV columns: dataset, c, metric, mean, ci_halfwidth,
// n_defined; c = +inf is emitted as the literal "inf"; floats at 17
// significant digits.
void emit(const SweepResult& result, const std::string& format, const std::string& out_dir);

std::string sweep_result_to_json(const SweepResult& result);
SweepResult sweep_result_from_json(const std::string& text);

std::string experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const std::string& text);

// "inf" <-> +infinity helper shared by configs and emitters.
double parse_c_value(const std::string& s);
std::string format_c_value(double c);

}  // namespace fairtree
