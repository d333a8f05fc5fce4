#include "fairtree/capi.h"

#include <cstring>
#include <memory>
#include <new>
#include <span>
#include <string>

#include "fairtree/builder.hpp"
#include "fairtree/dataset.hpp"
#include "fairtree/error.hpp"
#include "fairtree/harness.hpp"
#include "fairtree/metrics.hpp"
#include "fairtree/oracle.hpp"
#include "fairtree/replica.hpp"
#include "fairtree/tree.hpp"

using namespace fairtree;

struct ft_dataset {
    Dataset data;
};

struct ft_tree {
    DecisionTree tree;

    ft_tree() : tree(DecisionTree::single_leaf(1)) {}
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

ft_status to_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::contract: return FT_ERR_CONTRACT;
        case ErrorCode::schema: return FT_ERR_SCHEMA;
        case ErrorCode::structure: return FT_ERR_STRUCTURE;
        case ErrorCode::domain: return FT_ERR_DOMAIN;
        case ErrorCode::parse: return FT_ERR_PARSE;
        case ErrorCode::io: return FT_ERR_IO;
        case ErrorCode::internal: return FT_ERR_INTERNAL;
    }
    return FT_ERR_INTERNAL;
}

template <typename Fn>
ft_status guarded(Fn&& fn) {
    try {
        fn();
        return FT_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return FT_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return FT_ERR_INTERNAL;
    }
}

ft_status require(bool cond, const char* msg) {
    if (cond) return FT_OK;
    g_last_error = msg;
    return FT_ERR_CONTRACT;
}

bool has_text(const char* s) { return s != nullptr && s[0] != '\0'; }

}  // namespace

extern "C" {

const char* ft_version(void) { return "0.1.0"; }

const char* ft_last_error(void) { return g_last_error.c_str(); }

void ft_string_free(char* s) { delete[] s; }

ft_status ft_dataset_load_csv(const char* csv_path, const char* builtin_name, const char* spec_json,
                              ft_dataset** out, char** report_json) {
    if (ft_status st = require(csv_path && out, "csv_path and out are required"); st != FT_OK)
        return st;
    return guarded([&] {
        DatasetSpec spec = has_text(spec_json) ? spec_from_json(spec_json)
                                               : builtin_spec(has_text(builtin_name) ? builtin_name : "");
        LoadReport rep;
        auto handle = std::make_unique<ft_dataset>();
        handle->data = load(spec, csv_path, &rep);
        if (report_json) *report_json = dup_string(rep.to_json());
        *out = handle.release();
    });
}

ft_status ft_dataset_synthesize(const char* kind, int64_t n, uint64_t seed, ft_dataset** out) {
    if (ft_status st = require(kind && out, "kind and out are required"); st != FT_OK) return st;
    return guarded([&] {
        auto handle = std::make_unique<ft_dataset>();
        handle->data = synthesize(synth_kind_from_string(kind), n, seed);
        *out = handle.release();
    });
}

ft_status ft_dataset_split(const ft_dataset* data, double train_fraction, uint64_t seed,
                           ft_dataset** train_out, ft_dataset** test_out) {
    if (ft_status st = require(data && train_out && test_out, "data and outputs are required");
        st != FT_OK)
        return st;
    return guarded([&] {
        auto [train, test] = split(data->data, train_fraction, seed);
        auto t1 = std::make_unique<ft_dataset>();
        auto t2 = std::make_unique<ft_dataset>();
        t1->data = std::move(train);
        t2->data = std::move(test);
        *train_out = t1.release();
        *test_out = t2.release();
    });
}

ft_status ft_dataset_contingency(const ft_dataset* data, int64_t counts[4]) {
    if (ft_status st = require(data && counts, "data and counts are required"); st != FT_OK)
        return st;
    return guarded([&] {
        auto c = contingency(data->data);
        for (int i = 0; i < 4; ++i) counts[i] = c[i];
    });
}

int64_t ft_dataset_num_rows(const ft_dataset* data) { return data ? data->data.n : -1; }

int64_t ft_dataset_num_features(const ft_dataset* data) { return data ? data->data.p : -1; }

void ft_dataset_free(ft_dataset* data) { delete data; }

ft_status ft_builtin_spec_json(const char* name, char** spec_json_out) {
    if (ft_status st = require(name && spec_json_out, "name and out are required"); st != FT_OK)
        return st;
    return guarded([&] { *spec_json_out = dup_string(spec_to_json(builtin_spec(name))); });
}

ft_status ft_replica_write(const char* name, const char* out_dir, uint64_t seed, char** path_out) {
    if (ft_status st = require(name && out_dir, "name and out_dir are required"); st != FT_OK)
        return st;
    return guarded([&] {
        std::string path = write_replica(name, out_dir, seed);
        if (path_out) *path_out = dup_string(path);
    });
}

ft_status ft_tree_grow(const ft_dataset* data, const char* growth_json, const char* solver_json,
                       ft_tree** out) {
    if (ft_status st = require(data && out, "data and out are required"); st != FT_OK) return st;
    return guarded([&] {
        GrowthConfig g = has_text(growth_json) ? growth_from_json(growth_json) : GrowthConfig{};
        SolverOptions s = has_text(solver_json) ? solver_options_from_json(solver_json) : SolverOptions{};
        auto handle = std::make_unique<ft_tree>();
        handle->tree = grow(data->data, g, s);
        *out = handle.release();
    });
}

ft_status ft_tree_predict(const ft_tree* tree, const double* row, int64_t p, int* label_out) {
    if (ft_status st = require(tree && row && label_out && p >= 0, "tree, row, label_out required");
        st != FT_OK)
        return st;
    return guarded([&] {
        *label_out = tree->tree.evaluate(std::span<const double>(row, static_cast<std::size_t>(p)));
    });
}

ft_status ft_tree_is_constant(const ft_tree* tree, int* out) {
    if (ft_status st = require(tree && out, "tree and out are required"); st != FT_OK) return st;
    return guarded([&] { *out = is_constant_tree(tree->tree) ? 1 : 0; });
}

ft_status ft_tree_to_json(const ft_tree* tree, char** json_out) {
    if (ft_status st = require(tree && json_out, "tree and out are required"); st != FT_OK) return st;
    return guarded([&] { *json_out = dup_string(tree->tree.to_json()); });
}

ft_status ft_tree_from_json(const char* json, ft_tree** out) {
    if (ft_status st = require(json && out, "json and out are required"); st != FT_OK) return st;
    return guarded([&] {
        auto handle = std::make_unique<ft_tree>();
        handle->tree = DecisionTree::from_json(json);
        *out = handle.release();
    });
}

void ft_tree_free(ft_tree* tree) { delete tree; }

ft_status ft_tree_evaluate(const ft_tree* tree, const ft_dataset* data, char** metrics_json) {
    if (ft_status st = require(tree && data && metrics_json, "tree, data, out required"); st != FT_OK)
        return st;
    return guarded([&] {
        const Dataset& d = data->data;
        std::vector<int> preds(d.n);
        for (long i = 0; i < d.n; ++i) {
            auto [b, e] = d.row(i);
            preds[i] = tree->tree.evaluate(std::span<const double>(b, e));
        }
        *metrics_json = dup_string(metrics_to_json(compute_metrics(preds, d.y, d.a)));
    });
}

ft_status ft_sweep_run(const char* config_json, char** result_json) {
    if (ft_status st = require(config_json && result_json, "config and out are required"); st != FT_OK)
        return st;
    return guarded([&] {
        ExperimentConfig cfg = experiment_config_from_json(config_json);
        SweepResult result = run_sweep(cfg);
        *result_json = dup_string(sweep_result_to_json(result));
    });
}

ft_status ft_sweep_emit(const char* result_json, const char* format, const char* out_dir) {
    if (ft_status st = require(result_json && format && out_dir, "result, format, out_dir required");
        st != FT_OK)
        return st;
    return guarded([&] { emit(sweep_result_from_json(result_json), format, out_dir); });
}

ft_status ft_verify_theory(int64_t instances, uint64_t seed, char** report_json) {
    if (ft_status st = require(report_json != nullptr, "report_json is required"); st != FT_OK)
        return st;
    return guarded([&] {
        TheoryReport rep = run_theory_verification(instances, seed);
        *report_json = dup_string(rep.to_json());
    });
}

}  // extern "C"
