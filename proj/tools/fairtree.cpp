// fairtree command line. Talks to the library exclusively through the C API.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairtree/capi.h"

using json = nlohmann::json;

namespace {

struct StringGuard {
    char* s = nullptr;
    ~StringGuard() { ft_string_free(s); }
    std::string str() const { return s ? s : ""; }
};

struct DatasetGuard {
    ft_dataset* d = nullptr;
    ~DatasetGuard() { ft_dataset_free(d); }
};

struct TreeGuard {
    ft_tree* t = nullptr;
    ~TreeGuard() { ft_tree_free(t); }
};

[[noreturn]] void fail(ft_status status, const std::string& context) {
    json err;
    err["error"] = std::string(ft_last_error());
    err["context"] = context;
    err["code"] = static_cast<int>(status);
    std::cerr << err.dump() << "\n";
    std::exit(status == FT_OK ? 1 : static_cast<int>(status));
}

void check(ft_status status, const std::string& context) {
    if (status != FT_OK) fail(status, context);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        json err;
        err["error"] = "cannot open " + path;
        err["code"] = static_cast<int>(FT_ERR_IO);
        std::cerr << err.dump() << "\n";
        std::exit(FT_ERR_IO);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        json err;
        err["error"] = "cannot write " + path;
        err["code"] = static_cast<int>(FT_ERR_IO);
        std::cerr << err.dump() << "\n";
        std::exit(FT_ERR_IO);
    }
    out << text;
}

// Flat TOML subset for the sweep config: `key = value` lines where value is
// a quoted string, number, true/false, or an array of quoted strings /
// numbers. Comments start with '#'. Keys mirror the experiment config.
struct TomlValue {
    std::string scalar;
    std::vector<std::string> array;
    bool is_array = false;
};

std::string toml_trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string toml_unquote(const std::string& raw, const std::string& context) {
    std::string v = toml_trim(raw);
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    if (!v.empty() && v.find('"') == std::string::npos) return v;
    fail(FT_ERR_PARSE, "config: bad value near '" + context + "'");
}

std::map<std::string, TomlValue> parse_flat_toml(const std::string& text) {
    std::map<std::string, TomlValue> out;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        // strip comments outside quotes
        bool quoted = false;
        std::string clean;
        for (char ch : line) {
            if (ch == '"') quoted = !quoted;
            if (ch == '#' && !quoted) break;
            clean.push_back(ch);
        }
        clean = toml_trim(clean);
        if (clean.empty()) continue;
        if (clean.front() == '[') fail(FT_ERR_PARSE, "config: flat keys only, no [sections]");
        std::size_t eq = clean.find('=');
        if (eq == std::string::npos) fail(FT_ERR_PARSE, "config: expected key = value: " + clean);
        std::string key = toml_trim(clean.substr(0, eq));
        std::string value = toml_trim(clean.substr(eq + 1));
        TomlValue tv;
        if (!value.empty() && value.front() == '[') {
            if (value.back() != ']') fail(FT_ERR_PARSE, "config: unterminated array for " + key);
            tv.is_array = true;
            std::string inner = value.substr(1, value.size() - 2);
            std::string item;
            bool in_quotes = false;
            for (char ch : inner) {
                if (ch == '"') in_quotes = !in_quotes;
                if (ch == ',' && !in_quotes) {
                    if (!toml_trim(item).empty()) tv.array.push_back(toml_unquote(item, key));
                    item.clear();
                } else {
                    item.push_back(ch);
                }
            }
            if (!toml_trim(item).empty()) tv.array.push_back(toml_unquote(item, key));
        } else {
            tv.scalar = toml_unquote(value, key);
        }
        out[key] = std::move(tv);
    }
    return out;
}

// Dataset selection shared by train/eval/validate-data.
struct DatasetArgs {
    std::string dataset;    // builtin spec name (csv mode) or label
    std::string data_path;  // csv file
    std::string spec_file;  // inline spec json
    std::string synth_kind;
    long long synth_n = 1000;
    unsigned long long synth_seed = 0;

    void attach(CLI::App* cmd, bool synth_allowed = true) {
        cmd->add_option("--dataset", dataset, "builtin dataset spec: adult|compas|ricci|lawschool");
        cmd->add_option("--data", data_path, "path to the dataset CSV");
        cmd->add_option("--spec-file,--spec_file", spec_file, "dataset spec JSON file (overrides --dataset)");
        if (synth_allowed) {
            cmd->add_option("--synth-kind,--synth_kind", synth_kind,
                            "synthetic fixture instead of a CSV: independent|biased");
            cmd->add_option("--synth-n,--synth_n", synth_n, "synthetic fixture rows")
                ->default_val(1000);
            cmd->add_option("--synth-seed,--synth_seed", synth_seed, "synthetic fixture seed")
                ->default_val(0);
        }
    }

    ft_dataset* open(std::string* report_out = nullptr) const {
        ft_dataset* d = nullptr;
        if (!synth_kind.empty()) {
            check(ft_dataset_synthesize(synth_kind.c_str(), synth_n, synth_seed, &d), "synthesize");
            return d;
        }
        if (data_path.empty()) fail(FT_ERR_CONTRACT, "--data (or --synth-kind) is required");
        std::string spec;
        if (!spec_file.empty()) spec = read_file(spec_file);
        StringGuard report;
        check(ft_dataset_load_csv(data_path.c_str(), dataset.c_str(), spec.c_str(), &d,
                                  report_out ? &report.s : nullptr),
              "load " + data_path);
        if (report_out) *report_out = report.str();
        return d;
    }
};

json growth_json_from_flags(const std::string& c, int max_depth, int min_split, int min_leaf,
                            bool reject_unconverged) {
    json g;
    if (c == "inf")
        g["c"] = "inf";
    else
        g["c"] = std::stod(c);
    g["max_depth"] = max_depth;
    g["min_samples_split"] = min_split;
    g["min_samples_leaf"] = min_leaf;
    g["reject_unconverged"] = reject_unconverged;
    return g;
}

json solver_json_from_flags(int max_iter, double kkt_tol, double feas_tol, unsigned long long seed) {
    json s;
    s["max_iter"] = max_iter;
    s["kkt_tol"] = kkt_tol;
    s["feas_tol"] = feas_tol;
    s["seed"] = seed;
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fairness-constrained logistic regression trees"};
    app.require_subcommand(1);

    // ------------------------------------------------------------- train --
    auto* train = app.add_subcommand("train", "grow a tree and write it as JSON");
    DatasetArgs train_data;
    train_data.attach(train);
    std::string train_c = "inf";
    int train_depth = 5, train_min_split = 20, train_min_leaf = 10;
    bool train_reject = false;
    int train_max_iter = 5000;
    double train_kkt = 1e-6, train_feas = 1e-9;
    unsigned long long train_solver_seed = 0;
    std::string train_out = "tree.json";
    train->add_option("--c", train_c, "covariance bound; \"inf\" = unconstrained (LRT)")
        ->default_val("inf");
    train->add_option("--max-depth,--max_depth", train_depth)->default_val(5);
    train->add_option("--min-samples-split,--min_samples_split", train_min_split)->default_val(20);
    train->add_option("--min-samples-leaf,--min_samples_leaf", train_min_leaf)->default_val(10);
    train->add_flag("--reject-unconverged,--reject_unconverged", train_reject);
    train->add_option("--max-iter,--max_iter", train_max_iter)->default_val(5000);
    train->add_option("--kkt-tol,--kkt_tol", train_kkt)->default_val(1e-6);
    train->add_option("--feas-tol,--feas_tol", train_feas)->default_val(1e-9);
    train->add_option("--solver-seed,--solver_seed", train_solver_seed)->default_val(0);
    train->add_option("--out", train_out, "output tree file")->default_val("tree.json");

    // -------------------------------------------------------------- eval --
    auto* eval = app.add_subcommand("eval", "evaluate a tree JSON on a dataset");
    DatasetArgs eval_data;
    eval_data.attach(eval);
    std::string eval_tree, eval_out;
    eval->add_option("--tree", eval_tree, "tree JSON file")->required();
    eval->add_option("--out", eval_out, "metrics JSON output (default stdout)");

    // ------------------------------------------------------------- sweep --
    auto* sweep = app.add_subcommand("sweep", "c-sweep experiment with repetitions");
    std::string sweep_config;
    sweep->add_option("--config", sweep_config,
                      "TOML config with flat keys mirroring the experiment config; explicit "
                      "command-line flags win");
    DatasetArgs sweep_data;
    sweep_data.attach(sweep);
    std::vector<std::string> c_grid = {"0.001", "0.005", "0.01", "0.05", "0.1", "0.5", "inf"};
    int repetitions = 30;
    double train_fraction = 0.7;
    unsigned long long base_seed = 0;
    int sweep_depth = 5, sweep_min_split = 20, sweep_min_leaf = 10;
    bool sweep_reject = false;
    int sweep_max_iter = 5000;
    double sweep_kkt = 1e-6, sweep_feas = 1e-9;
    unsigned long long sweep_solver_seed = 0;
    int workers = 1;
    std::string sweep_out = "sweep-out";
    std::string format = "json";
    sweep->add_option("--c-grid,--c_grid", c_grid, "c values, ascending, \"inf\" for the LRT column");
    sweep->add_option("--repetitions", repetitions)->default_val(30);
    sweep->add_option("--train-fraction,--train_fraction", train_fraction)->default_val(0.7);
    sweep->add_option("--base-seed,--base_seed", base_seed)->default_val(0);
    sweep->add_option("--max-depth,--max_depth", sweep_depth)->default_val(5);
    sweep->add_option("--min-samples-split,--min_samples_split", sweep_min_split)->default_val(20);
    sweep->add_option("--min-samples-leaf,--min_samples_leaf", sweep_min_leaf)->default_val(10);
    sweep->add_flag("--reject-unconverged,--reject_unconverged", sweep_reject);
    sweep->add_option("--max-iter,--max_iter", sweep_max_iter)->default_val(5000);
    sweep->add_option("--kkt-tol,--kkt_tol", sweep_kkt)->default_val(1e-6);
    sweep->add_option("--feas-tol,--feas_tol", sweep_feas)->default_val(1e-9);
    sweep->add_option("--solver-seed,--solver_seed", sweep_solver_seed)->default_val(0);
    sweep->add_option("--workers", workers, "parallel repetitions")->default_val(1);
    sweep->add_option("--out", sweep_out, "output directory")->default_val("sweep-out");
    sweep->add_option("--format", format, "json|csv|both")->default_val("json");

    // ----------------------------------------------------- verify-theory --
    auto* verify = app.add_subcommand("verify-theory", "exhaustive parity-theory check");
    long long instances = 1000;
    unsigned long long verify_seed = 0;
    verify->add_option("--instances", instances)->default_val(1000);
    verify->add_option("--seed", verify_seed)->default_val(0);

    // ------------------------------------------------------ validate-data --
    auto* validate = app.add_subcommand("validate-data", "load a benchmark CSV and check its counts");
    DatasetArgs validate_data;
    validate_data.attach(validate, /*synth_allowed=*/false);
    std::string validate_out;
    validate->add_option("--out", validate_out, "write the load report JSON here");

    // ------------------------------------------------------ make-replicas --
    auto* replicas = app.add_subcommand(
        "make-replicas", "write synthetic benchmark stand-ins (NOT the real datasets)");
    std::string replica_out = "replica-data";
    unsigned long long replica_seed = 20240501;
    std::vector<std::string> replica_only;
    replicas->add_option("--out", replica_out)->default_val("replica-data");
    replicas->add_option("--seed", replica_seed)->default_val(20240501);
    replicas->add_option("--only", replica_only, "subset: adult compas ricci lawschool");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        json err;
        err["error"] = std::string(e.what());
        err["context"] = "argument parsing";
        err["code"] = static_cast<int>(FT_ERR_CONTRACT);
        std::cerr << err.dump() << "\n";
        return FT_ERR_CONTRACT;
    }

    if (train->parsed()) {
        DatasetGuard d;
        d.d = train_data.open();
        json g = growth_json_from_flags(train_c, train_depth, train_min_split, train_min_leaf,
                                        train_reject);
        json s = solver_json_from_flags(train_max_iter, train_kkt, train_feas, train_solver_seed);
        TreeGuard t;
        check(ft_tree_grow(d.d, g.dump().c_str(), s.dump().c_str(), &t.t), "train");
        StringGuard tree_json;
        check(ft_tree_to_json(t.t, &tree_json.s), "serialize tree");
        write_file(train_out, tree_json.str() + "\n");
        int constant = 0;
        check(ft_tree_is_constant(t.t, &constant), "inspect tree");
        json summary;
        summary["out"] = train_out;
        summary["constant_tree"] = constant != 0;
        std::cout << summary.dump() << "\n";
        return 0;
    }

    if (eval->parsed()) {
        DatasetGuard d;
        d.d = eval_data.open();
        TreeGuard t;
        std::string tree_text = read_file(eval_tree);
        check(ft_tree_from_json(tree_text.c_str(), &t.t), "parse tree");
        StringGuard metrics;
        check(ft_tree_evaluate(t.t, d.d, &metrics.s), "evaluate");
        if (eval_out.empty())
            std::cout << metrics.str() << "\n";
        else
            write_file(eval_out, metrics.str() + "\n");
        return 0;
    }

    if (sweep->parsed()) {
        if (!sweep_config.empty()) {
            auto toml = parse_flat_toml(read_file(sweep_config));
            auto given = [&](const char* flag) { return sweep->count(flag) > 0; };
            auto str = [&](const char* key, std::string& dst, const char* flag) {
                if (toml.count(key) && !given(flag)) dst = toml[key].scalar;
            };
            auto num = [&](const char* key, auto& dst, const char* flag) {
                if (toml.count(key) && !given(flag))
                    dst = static_cast<std::decay_t<decltype(dst)>>(std::stod(toml[key].scalar));
            };
            static const std::set<std::string> known = {
                "dataset", "data", "spec_file", "synth_kind", "synth_n", "synth_seed", "c_grid",
                "repetitions", "train_fraction", "base_seed", "max_depth", "min_samples_split",
                "min_samples_leaf", "reject_unconverged", "max_iter", "kkt_tol", "feas_tol",
                "seed", "workers", "out", "format"};
            for (const auto& [key, value] : toml)
                if (!known.count(key)) fail(FT_ERR_PARSE, "config: unknown key '" + key + "'");
            str("dataset", sweep_data.dataset, "--dataset");
            str("data", sweep_data.data_path, "--data");
            str("spec_file", sweep_data.spec_file, "--spec-file");
            str("synth_kind", sweep_data.synth_kind, "--synth-kind");
            num("synth_n", sweep_data.synth_n, "--synth-n");
            num("synth_seed", sweep_data.synth_seed, "--synth-seed");
            if (toml.count("c_grid") && !given("--c-grid")) {
                if (!toml["c_grid"].is_array) fail(FT_ERR_PARSE, "config: c_grid must be an array");
                c_grid = toml["c_grid"].array;
            }
            num("repetitions", repetitions, "--repetitions");
            num("train_fraction", train_fraction, "--train-fraction");
            num("base_seed", base_seed, "--base-seed");
            num("max_depth", sweep_depth, "--max-depth");
            num("min_samples_split", sweep_min_split, "--min-samples-split");
            num("min_samples_leaf", sweep_min_leaf, "--min-samples-leaf");
            if (toml.count("reject_unconverged") && !given("--reject-unconverged"))
                sweep_reject = toml["reject_unconverged"].scalar == "true";
            num("max_iter", sweep_max_iter, "--max-iter");
            num("kkt_tol", sweep_kkt, "--kkt-tol");
            num("feas_tol", sweep_feas, "--feas-tol");
            num("seed", sweep_solver_seed, "--solver-seed");
            num("workers", workers, "--workers");
            str("out", sweep_out, "--out");
            str("format", format, "--format");
        }
        json dataset;
        if (!sweep_data.synth_kind.empty()) {
            dataset["kind"] = "synth";
            dataset["name"] = sweep_data.dataset.empty() ? ("synth-" + sweep_data.synth_kind)
                                                         : sweep_data.dataset;
            dataset["synth_kind"] = sweep_data.synth_kind;
            dataset["synth_n"] = sweep_data.synth_n;
            dataset["synth_seed"] = sweep_data.synth_seed;
        } else {
            if (sweep_data.data_path.empty())
                fail(FT_ERR_CONTRACT, "sweep needs --data or --synth-kind (flag or config)");
            dataset["kind"] = "csv";
            dataset["name"] = sweep_data.dataset;
            dataset["path"] = sweep_data.data_path;
            if (!sweep_data.spec_file.empty())
                dataset["spec"] = json::parse(read_file(sweep_data.spec_file));
        }
        json cfg;
        cfg["dataset"] = dataset;
        json grid = json::array();
        for (const auto& c : c_grid) {
            if (c == "inf")
                grid.push_back("inf");
            else
                grid.push_back(std::stod(c));
        }
        cfg["c_grid"] = grid;
        cfg["repetitions"] = repetitions;
        cfg["train_fraction"] = train_fraction;
        cfg["base_seed"] = base_seed;
        cfg["growth"] = growth_json_from_flags("inf", sweep_depth, sweep_min_split, sweep_min_leaf,
                                               sweep_reject);
        cfg["growth"].erase("c");  // per-cell c comes from the grid
        cfg["solver"] =
            solver_json_from_flags(sweep_max_iter, sweep_kkt, sweep_feas, sweep_solver_seed);
        cfg["workers"] = workers;

        StringGuard result;
        check(ft_sweep_run(cfg.dump().c_str(), &result.s), "sweep");
        if (format != "json" && format != "csv" && format != "both")
            fail(FT_ERR_CONTRACT, "--format must be json|csv|both");
        if (format == "json" || format == "both")
            check(ft_sweep_emit(result.s, "json", sweep_out.c_str()), "emit json");
        if (format == "csv" || format == "both")
            check(ft_sweep_emit(result.s, "csv", sweep_out.c_str()), "emit csv");
        json summary;
        summary["out"] = sweep_out;
        summary["format"] = format;
        std::cout << summary.dump() << "\n";
        return 0;
    }

    if (verify->parsed()) {
        StringGuard report;
        check(ft_verify_theory(instances, verify_seed, &report.s), "verify-theory");
        std::cout << report.str() << "\n";
        json parsed = json::parse(report.str());
        return parsed.value("all_passed", false) ? 0 : 1;
    }

    if (validate->parsed()) {
        std::string report;
        DatasetGuard d;
        d.d = validate_data.open(&report);
        if (!validate_out.empty()) write_file(validate_out, report + "\n");
        std::cout << report << "\n";
        json parsed = json::parse(report);
        return parsed.value("contingency_match", false) ? 0 : 1;
    }

    if (replicas->parsed()) {
        std::vector<std::string> names =
            replica_only.empty() ? std::vector<std::string>{"adult", "compas", "lawschool", "ricci"}
                                 : replica_only;
        json written = json::array();
        for (const auto& name : names) {
            StringGuard path;
            check(ft_replica_write(name.c_str(), replica_out.c_str(), replica_seed, &path.s),
                  "make-replicas " + name);
            written.push_back(path.str());
        }
        json summary;
        summary["written"] = written;
        summary["note"] = "synthetic stand-ins for offline testing; fetch the real CSVs for "
                          "benchmark-grade numbers";
        std::cout << summary.dump() << "\n";
        return 0;
    }

    return 0;
}
