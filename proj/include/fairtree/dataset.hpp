#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fairtree {

enum class ColumnKind { numeric, categorical };

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
};

// Row filter applied before any encoding; `op` is one of eq, ne, ge, le
// (numeric comparison when both sides parse as numbers, string otherwise).
struct FilterSpec {
    std::string column;
    std::string op;
    std::string value;
};

struct DatasetSpec {
    std::string name;
    std::string source_url;

    std::string target_column;
    std::vector<std::string> positive_values;  // target values mapped to y = +1

    std::string protected_column;
    // Exactly one of the two lists is non-empty; the other side is the
    // complement. a = 0 encodes the historically discriminated group.
    std::vector<std::string> protected_zero_values;
    std::vector<std::string> protected_one_values;
    // When non-empty, rows whose protected value is not listed are dropped
    // (e.g. the two-race restriction implied by the benchmark tables).
    std::vector<std::string> protected_restrict;

    std::vector<ColumnSpec> feature_columns;
    std::vector<FilterSpec> filters;
    std::vector<std::string> missing_tokens{"?", ""};

    long rows_expected = -1;
    // Expected (a, y) contingency in the order a0/y-1, a0/y+1, a1/y-1, a1/y+1;
    // -1 disables the check.
    std::array<long, 4> contingency_expected{-1, -1, -1, -1};
};

struct Dataset {
    long n = 0;
    int p = 0;
    std::vector<double> x;  // row-major n*p
    std::vector<int> a;     // 0/1
    std::vector<int> y;     // -1/+1
    std::vector<std::string> feature_names;

    double at(long row, int col) const { return x[static_cast<std::size_t>(row) * p + col]; }
    std::pair<const double*, const double*> row(long i) const {
        const double* base = x.data() + static_cast<std::size_t>(i) * p;
        return {base, base + p};
    }
};

struct LoadReport {
    std::string dataset;
    std::string path;
    std::string sha256;
    long raw_rows = 0;
    long filtered_out = 0;   // spec filters
    long restricted_out = 0; // protected_restrict
    long missing_dropped = 0;
    long final_rows = 0;
    std::array<long, 4> contingency{0, 0, 0, 0};
    std::array<long, 4> contingency_expected{-1, -1, -1, -1};
    bool contingency_match = false;
    long rows_expected = -1;
    std::vector<std::string> warnings;

    std::string to_json() const;
};

// Registered benchmark specs: adult, compas, ricci, lawschool.
DatasetSpec builtin_spec(const std::string& name);
std::vector<std::string> builtin_spec_names();

std::string spec_to_json(const DatasetSpec& spec);
DatasetSpec spec_from_json(const std::string& text);

// CSV ingestion per spec: filters, protected restriction, listwise deletion
// on missing values, one-hot (drop-first) encoding of categoricals, +-1
// target and 0/1 protected mapping. Populates `report` when given.
Dataset load(const DatasetSpec& spec, const std::string& csv_path, LoadReport* report = nullptr);

// (a, y) counts in the order a0/y-1, a0/y+1, a1/y-1, a1/y+1.
std::array<long, 4> contingency(const Dataset& data);
// Column percentages (by a group), same cell order.
std::array<double, 4> contingency_column_percent(const std::array<long, 4>& counts);

// Seeded uniform permutation; first floor(train_fraction * n) rows train.
std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed);

enum class SynthKind { independent, biased };
SynthKind synth_kind_from_string(const std::string& s);
std::string to_string(SynthKind kind);

// Reproducible two-feature fixtures. `independent` draws X independent of A;
// `biased` correlates feature 0 with A at rho = 0.8. Both classes and both
// groups are present for every n >= 4.
Dataset synthesize(SynthKind kind, long n, std::uint64_t seed);

void write_csv(const Dataset& data, const std::string& path);

}  // namespace fairtree
