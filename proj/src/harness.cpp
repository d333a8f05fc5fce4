#include "fairtree/harness.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "fairtree/error.hpp"
#include "fairtree/metrics.hpp"

namespace fairtree {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::optional<double> metric_by_index(const MetricsReport& r, std::size_t idx) {
    switch (idx) {
        case 0: return r.accuracy;
        case 1: return r.ba;
        case 2: return r.bpa;
        case 3: return r.bnpa;
        case 4: return r.sp;
        case 5: return r.p_rule;
        case 6: return r.n_rule;
        default: return std::nullopt;
    }
}

json opt_json(const std::optional<double>& v) {
    if (!v) return nullptr;
    return *v;
}

std::optional<double> opt_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

}  // namespace

double parse_c_value(const std::string& s) {
    if (s == "inf" || s == "INF" || s == "Inf") return std::numeric_limits<double>::infinity();
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw parse_error("bad c value '" + s + "'");
        return v;
    } catch (const std::exception&) {
        throw parse_error("bad c value '" + s + "'");
    }
}

std::string format_c_value(double c) {
    if (std::isinf(c)) return "inf";
    return fmt17(c);
}

void ExperimentConfig::validate() const {
    if (c_grid.empty()) throw contract_error("config: c_grid must be nonempty");
    double prev = 0.0;
    bool first = true;
    for (double c : c_grid) {
        if (std::isnan(c) || c <= 0.0) throw contract_error("config: c values must be positive");
        if (std::isfinite(c)) {
            if (!first && c <= prev)
                throw contract_error("config: finite c values must be strictly increasing");
            prev = c;
            first = false;
        }
    }
    if (repetitions < 1) throw contract_error("config: repetitions must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw contract_error("config: train_fraction must be in (0, 1)");
    if (workers < 1) throw contract_error("config: workers must be >= 1");
}

Dataset resolve_dataset(const DatasetRef& ref, LoadReport* report) {
    switch (ref.kind) {
        case DatasetRef::Kind::csv: {
            DatasetSpec spec = ref.spec ? *ref.spec : builtin_spec(ref.name);
            return load(spec, ref.path, report);
        }
        case DatasetRef::Kind::synth:
            return synthesize(ref.synth_kind, ref.synth_n, ref.synth_seed);
        case DatasetRef::Kind::inline_data:
            if (!ref.data) throw contract_error("inline dataset reference without data");
            return *ref.data;
    }
    throw contract_error("unreachable dataset kind");
}

namespace {

struct RepetitionOutcome {
    std::vector<MetricsReport> reports;      // one per c
    std::vector<char> constant_tree;         // one per c
    std::vector<char> unconverged;           // one per c
};

RepetitionOutcome run_repetition(const Dataset& data, const ExperimentConfig& cfg, int repetition) {
    auto [train, test] = split(data, cfg.train_fraction, cfg.base_seed + static_cast<std::uint64_t>(repetition));
    RepetitionOutcome out;
    out.reports.reserve(cfg.c_grid.size());
    for (double c : cfg.c_grid) {
        GrowthConfig g = cfg.growth;
        g.c = c;
        GrowthStats stats;
        DecisionTree tree = grow(train, g, cfg.solver, &stats);
        std::vector<int> preds(test.n);
        for (long i = 0; i < test.n; ++i) {
            auto [b, e] = test.row(i);
            preds[i] = tree.evaluate(std::span<const double>(b, e));
        }
        out.reports.push_back(compute_metrics(preds, test.y, test.a));
        out.constant_tree.push_back(is_constant_tree(tree) ? 1 : 0);
        out.unconverged.push_back(stats.unconverged_chosen > 0 ? 1 : 0);
    }
    return out;
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    Dataset data = resolve_dataset(cfg.dataset);

    std::vector<RepetitionOutcome> outcomes(cfg.repetitions);
    int workers = std::max(1, std::min(cfg.workers, cfg.repetitions));
    if (workers == 1) {
        for (int r = 0; r < cfg.repetitions; ++r) outcomes[r] = run_repetition(data, cfg, r);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        std::mutex error_mutex;
        std::exception_ptr first_error;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&]() {
                for (;;) {
                    int r = next.fetch_add(1);
                    if (r >= cfg.repetitions) return;
                    try {
                        outcomes[r] = run_repetition(data, cfg, r);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(error_mutex);
                        if (!first_error) first_error = std::current_exception();
                        return;
                    }
                }
            });
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    SweepResult result;
    result.dataset = cfg.dataset.name.empty()
                         ? (cfg.dataset.kind == DatasetRef::Kind::synth
                                ? "synth-" + to_string(cfg.dataset.synth_kind)
                                : "dataset")
                         : cfg.dataset.name;
    result.config_json = experiment_config_to_json(cfg);
    result.repetitions = cfg.repetitions;
    result.cells.resize(cfg.c_grid.size());

    for (std::size_t ci = 0; ci < cfg.c_grid.size(); ++ci) {
        SweepCell& cell = result.cells[ci];
        cell.c = cfg.c_grid[ci];
        for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
            MetricAggregate& agg = cell.metrics[m];
            agg.raw.resize(cfg.repetitions);
            double sum = 0.0;
            int n = 0;
            for (int r = 0; r < cfg.repetitions; ++r) {
                std::optional<double> v = metric_by_index(outcomes[r].reports[ci], m);
                agg.raw[r] = v;
                if (v) {
                    sum += *v;
                    ++n;
                }
            }
            agg.n_defined = n;
            if (n > 0) {
                double mean = sum / n;
                agg.mean = mean;
                if (n > 1) {
                    double ss = 0.0;
                    for (const auto& v : agg.raw)
                        if (v) ss += (*v - mean) * (*v - mean);
                    double sd = std::sqrt(ss / (n - 1));
                    agg.ci_halfwidth = 1.96 * sd / std::sqrt(static_cast<double>(n));
                }
            }
        }
        for (int r = 0; r < cfg.repetitions; ++r) {
            cell.constant_tree_count += outcomes[r].constant_tree[ci];
            cell.unconverged_repetitions += outcomes[r].unconverged[ci];
        }
    }

    // Soft expectation, reported but never enforced: stronger constraints
    // produce constant trees more often.
    for (std::size_t ci = 1; ci < result.cells.size(); ++ci) {
        if (result.cells[ci].constant_tree_count > result.cells[ci - 1].constant_tree_count) {
            result.constant_tree_monotone = false;
            result.notes.push_back("constant-tree count rose from c=" +
                                   format_c_value(result.cells[ci - 1].c) + " to c=" +
                                   format_c_value(result.cells[ci].c));
        }
    }
    return result;
}

std::string sweep_result_to_json(const SweepResult& result) {
    json cells = json::array();
    for (const SweepCell& cell : result.cells) {
        json metrics;
        for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
            const MetricAggregate& agg = cell.metrics[m];
            json raw = json::array();
            for (const auto& v : agg.raw) raw.push_back(opt_json(v));
            metrics[kMetricNames[m]] = {{"mean", opt_json(agg.mean)},
                                        {"ci_halfwidth", opt_json(agg.ci_halfwidth)},
                                        {"n_defined", agg.n_defined},
                                        {"raw", std::move(raw)}};
        }
        cells.push_back(json{{"c", format_c_value(cell.c)},
                             {"metrics", std::move(metrics)},
                             {"constant_tree_count", cell.constant_tree_count},
                             {"unconverged_repetitions", cell.unconverged_repetitions}});
    }
    json j;
    j["dataset"] = result.dataset;
    j["repetitions"] = result.repetitions;
    j["ci_method"] = "normal approximation, mean +- 1.96 * sd / sqrt(n_defined)";
    j["config"] = json::parse(result.config_json.empty() ? "{}" : result.config_json);
    j["cells"] = std::move(cells);
    j["constant_tree_monotone"] = result.constant_tree_monotone;
    j["notes"] = result.notes;
    return j.dump(2);
}

SweepResult sweep_result_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw parse_error(std::string("sweep result JSON: ") + e.what());
    }
    SweepResult r;
    try {
        r.dataset = j.at("dataset").get<std::string>();
        r.repetitions = j.at("repetitions").get<int>();
        r.config_json = j.contains("config") ? j["config"].dump() : "{}";
        r.constant_tree_monotone = j.value("constant_tree_monotone", true);
        if (j.contains("notes")) r.notes = j["notes"].get<std::vector<std::string>>();
        for (const json& cj : j.at("cells")) {
            SweepCell cell;
            cell.c = parse_c_value(cj.at("c").get<std::string>());
            cell.constant_tree_count = cj.at("constant_tree_count").get<int>();
            cell.unconverged_repetitions = cj.value("unconverged_repetitions", 0);
            const json& metrics = cj.at("metrics");
            for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
                const json& mj = metrics.at(kMetricNames[m]);
                MetricAggregate& agg = cell.metrics[m];
                agg.mean = opt_from_json(mj.at("mean"));
                agg.ci_halfwidth = opt_from_json(mj.at("ci_halfwidth"));
                agg.n_defined = mj.at("n_defined").get<int>();
                for (const json& v : mj.at("raw")) agg.raw.push_back(opt_from_json(v));
            }
            r.cells.push_back(std::move(cell));
        }
    } catch (const json::exception& e) {
        throw parse_error(std::string("sweep result JSON: ") + e.what());
    }
    return r;
}

void emit(const SweepResult& result, const std::string& format, const std::string& out_dir) {
    if (format != "json" && format != "csv") throw contract_error("emit: format must be json|csv");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    auto open = [&](const std::string& name) {
        std::ofstream out(fs::path(out_dir) / name, std::ios::binary);
        if (!out) throw io_error("cannot write " + (fs::path(out_dir) / name).string());
        return out;
    };

    if (format == "json") {
        {
            auto out = open("metrics.json");
            out << sweep_result_to_json(result) << "\n";
        }
        json ct = json::array();
        for (const SweepCell& cell : result.cells)
            ct.push_back(json{{"dataset", result.dataset},
                              {"c", format_c_value(cell.c)},
                              {"constant_tree_count", cell.constant_tree_count},
                              {"repetitions", result.repetitions}});
        auto out = open("constant_trees.json");
        out << ct.dump(2) << "\n";
        return;
    }

    {
        auto out = open("metrics.csv");
        out << "dataset,c,metric,mean,ci_halfwidth,n_defined\n";
        for (const SweepCell& cell : result.cells)
            for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
                const MetricAggregate& agg = cell.metrics[m];
                out << result.dataset << "," << format_c_value(cell.c) << "," << kMetricNames[m] << ","
                    << (agg.mean ? fmt17(*agg.mean) : "") << ","
                    << (agg.ci_halfwidth ? fmt17(*agg.ci_halfwidth) : "") << "," << agg.n_defined
                    << "\n";
            }
    }
    auto out = open("constant_trees.csv");
    out << "dataset,c,constant_tree_count,repetitions\n";
    for (const SweepCell& cell : result.cells)
        out << result.dataset << "," << format_c_value(cell.c) << "," << cell.constant_tree_count << ","
            << result.repetitions << "\n";
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
    json d;
    switch (cfg.dataset.kind) {
        case DatasetRef::Kind::csv:
            d["kind"] = "csv";
            d["name"] = cfg.dataset.name;
            d["path"] = cfg.dataset.path;
            if (cfg.dataset.spec) d["spec"] = json::parse(spec_to_json(*cfg.dataset.spec));
            break;
        case DatasetRef::Kind::synth:
            d["kind"] = "synth";
            d["name"] = cfg.dataset.name;
            d["synth_kind"] = to_string(cfg.dataset.synth_kind);
            d["synth_n"] = cfg.dataset.synth_n;
            d["synth_seed"] = cfg.dataset.synth_seed;
            break;
        case DatasetRef::Kind::inline_data:
            d["kind"] = "inline";
            d["name"] = cfg.dataset.name;
            break;
    }
    json grid = json::array();
    for (double c : cfg.c_grid) {
        if (std::isinf(c))
            grid.push_back("inf");
        else
            grid.push_back(c);
    }
    json j;
    j["dataset"] = std::move(d);
    j["c_grid"] = std::move(grid);
    j["repetitions"] = cfg.repetitions;
    j["train_fraction"] = cfg.train_fraction;
    j["base_seed"] = cfg.base_seed;
    j["growth"] = json::parse(growth_to_json(cfg.growth));
    j["solver"] = json::parse(solver_options_to_json(cfg.solver));
    j["workers"] = cfg.workers;
    return j.dump();
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw parse_error(std::string("experiment config JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    try {
        const json& d = j.at("dataset");
        std::string kind = d.value("kind", "synth");
        if (kind == "csv") {
            cfg.dataset.kind = DatasetRef::Kind::csv;
            cfg.dataset.name = d.value("name", "");
            cfg.dataset.path = d.at("path").get<std::string>();
            if (d.contains("spec") && !d["spec"].is_null())
                cfg.dataset.spec = spec_from_json(d["spec"].dump());
        } else if (kind == "synth") {
            cfg.dataset.kind = DatasetRef::Kind::synth;
            cfg.dataset.name = d.value("name", "");
            cfg.dataset.synth_kind = synth_kind_from_string(d.value("synth_kind", "biased"));
            cfg.dataset.synth_n = d.value("synth_n", 1000L);
            cfg.dataset.synth_seed = d.value("synth_seed", 0UL);
        } else {
            throw parse_error("experiment config: dataset.kind must be csv|synth");
        }
        if (j.contains("c_grid")) {
            cfg.c_grid.clear();
            for (const json& c : j["c_grid"]) {
                if (c.is_string())
                    cfg.c_grid.push_back(parse_c_value(c.get<std::string>()));
                else
                    cfg.c_grid.push_back(c.get<double>());
            }
        }
        if (j.contains("repetitions")) cfg.repetitions = j["repetitions"].get<int>();
        if (j.contains("train_fraction")) cfg.train_fraction = j["train_fraction"].get<double>();
        if (j.contains("base_seed")) cfg.base_seed = j["base_seed"].get<std::uint64_t>();
        if (j.contains("growth")) cfg.growth = growth_from_json(j["growth"].dump());
        if (j.contains("solver")) cfg.solver = solver_options_from_json(j["solver"].dump());
        if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
    } catch (const json::exception& e) {
        throw parse_error(std::string("experiment config JSON: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

}  // namespace fairtree
