#include "fairtree/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fairtree/error.hpp"
#include "fairtree/sha256.hpp"

namespace fairtree {

using json = nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// RFC-4180-ish: quoted fields, "" escapes, CR/LF line ends. Unquoted fields
// are trimmed (the UCI adult file separates with ", ").
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_was_quoted = false;
    auto push_field = [&]() {
        row.push_back(field_was_quoted ? field : trim(field));
        field.clear();
        field_was_quoted = false;
    };
    auto push_row = [&]() {
        push_field();
        bool blank = row.size() == 1 && row[0].empty();
        if (!blank) rows.push_back(std::move(row));
        row.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        char ch = text[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(ch);
            }
        } else if (ch == '"' && trim(field).empty()) {
            quoted = true;
            field_was_quoted = true;
            field.clear();
        } else if (ch == ',') {
            push_field();
        } else if (ch == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            push_row();
        } else {
            field.push_back(ch);
        }
    }
    if (!field.empty() || !row.empty()) {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        push_row();
    }
    return rows;
}

std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    const char* begin = s.data();
    const char* end = begin + s.size();
    double value = 0.0;
    auto res = std::from_chars(begin, end, value);
    // from_chars accepts "inf"/"nan"; the dataset invariant bans them.
    if (res.ec != std::errc() || res.ptr != end || !std::isfinite(value)) return std::nullopt;
    return value;
}

bool filter_passes(const FilterSpec& f, const std::string& cell) {
    auto lhs = parse_number(cell);
    auto rhs = parse_number(f.value);
    if (f.op == "eq") {
        if (lhs && rhs) return *lhs == *rhs;
        return cell == f.value;
    }
    if (f.op == "ne") {
        if (lhs && rhs) return *lhs != *rhs;
        return cell != f.value;
    }
    if (f.op == "ge") {
        if (!lhs || !rhs) return false;
        return *lhs >= *rhs;
    }
    if (f.op == "le") {
        if (!lhs || !rhs) return false;
        return *lhs <= *rhs;
    }
    throw schema_error("unknown filter op '" + f.op + "'");
}

bool in_list(const std::vector<std::string>& list, const std::string& v) {
    return std::find(list.begin(), list.end(), v) != list.end();
}

std::uint64_t bounded_uint(std::mt19937_64& rng, std::uint64_t bound) {
    std::uint64_t threshold = (-bound) % bound;
    for (;;) {
        std::uint64_t r = rng();
        if (r >= threshold) return r % bound;
    }
}

// Box-Muller; keeps the draw sequence implementation-independent.
class NormalDraw {
public:
    explicit NormalDraw(std::mt19937_64& rng) : rng_(rng) {}
    double operator()() {
        if (have_) {
            have_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        have_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }
    double uniform() {
        // (0, 1]: log() stays finite.
        return (static_cast<double>(rng_() >> 11) + 1.0) * (1.0 / 9007199254740992.0);
    }

private:
    std::mt19937_64& rng_;
    bool have_ = false;
    double spare_ = 0.0;
};

ColumnKind kind_from_string(const std::string& s) {
    if (s == "numeric") return ColumnKind::numeric;
    if (s == "categorical") return ColumnKind::categorical;
    throw parse_error("column kind must be numeric|categorical, got '" + s + "'");
}

std::string kind_to_string(ColumnKind k) {
    return k == ColumnKind::numeric ? "numeric" : "categorical";
}

}  // namespace

DatasetSpec builtin_spec(const std::string& name) {
    DatasetSpec s;
    s.name = name;
    if (name == "adult") {
        s.source_url = "https://archive.ics.uci.edu/ml/datasets/adult";
        s.target_column = "income";
        s.positive_values = {">50K", ">50K."};
        s.protected_column = "sex";
        s.protected_zero_values = {"Female"};
        s.feature_columns = {
            {"age", ColumnKind::numeric},          {"workclass", ColumnKind::categorical},
            {"fnlwgt", ColumnKind::numeric},       {"education", ColumnKind::categorical},
            {"education-num", ColumnKind::numeric},{"marital-status", ColumnKind::categorical},
            {"occupation", ColumnKind::categorical},{"relationship", ColumnKind::categorical},
            {"race", ColumnKind::categorical},     {"capital-gain", ColumnKind::numeric},
            {"capital-loss", ColumnKind::numeric}, {"hours-per-week", ColumnKind::numeric},
            {"native-country", ColumnKind::categorical}};
        s.rows_expected = 45222;
        s.contingency_expected = {13026, 1669, 20988, 9539};
    } else if (name == "compas") {
        s.source_url = "https://github.com/propublica/compas-analysis";
        s.target_column = "two_year_recid";
        s.positive_values = {"1"};
        s.protected_column = "race";
        s.protected_zero_values = {"African-American"};
        s.protected_restrict = {"African-American", "Caucasian"};
        s.feature_columns = {
            {"sex", ColumnKind::categorical},        {"age", ColumnKind::numeric},
            {"age_cat", ColumnKind::categorical},    {"juv_fel_count", ColumnKind::numeric},
            {"juv_misd_count", ColumnKind::numeric}, {"juv_other_count", ColumnKind::numeric},
            {"priors_count", ColumnKind::numeric},   {"c_charge_degree", ColumnKind::categorical},
            {"decile_score", ColumnKind::numeric},   {"score_text", ColumnKind::categorical}};
        s.filters = {{"days_b_screening_arrest", "ge", "-30"},
                     {"days_b_screening_arrest", "le", "30"},
                     {"is_recid", "ne", "-1"},
                     {"c_charge_degree", "ne", "O"},
                     {"score_text", "ne", "N/A"}};
        s.rows_expected = 5278;
        s.contingency_expected = {1514, 1661, 1281, 822};
    } else if (name == "ricci") {
        s.source_url = "https://www.key2stats.com/data-set/view/690";
        s.target_column = "Promoted";
        s.positive_values = {"1", "Yes", "True", "TRUE", "true"};
        s.protected_column = "Race";
        s.protected_zero_values = {"B", "H", "Black", "Hispanic", "Non-White"};
        s.feature_columns = {{"Position", ColumnKind::categorical},
                             {"Oral", ColumnKind::numeric},
                             {"Written", ColumnKind::numeric},
                             {"Combine", ColumnKind::numeric}};
        s.rows_expected = 118;
        s.contingency_expected = {35, 15, 27, 41};
    } else if (name == "lawschool") {
        s.source_url = "https://github.com/tailequy/fairness_dataset/tree/main/Law_school";
        s.target_column = "pass_bar";
        s.positive_values = {"1"};
        s.protected_column = "race";
        s.protected_one_values = {"White", "white"};
        s.feature_columns = {
            {"decile1b", ColumnKind::numeric}, {"decile3", ColumnKind::numeric},
            {"lsat", ColumnKind::numeric},     {"ugpa", ColumnKind::numeric},
            {"zfygpa", ColumnKind::numeric},   {"zgpa", ColumnKind::numeric},
            {"fulltime", ColumnKind::numeric}, {"fam_inc", ColumnKind::numeric},
            {"male", ColumnKind::numeric},     {"tier", ColumnKind::numeric}};
        s.rows_expected = 20798;
        s.contingency_expected = {916, 2391, 1377, 16114};
    } else {
        throw schema_error("unknown builtin dataset spec '" + name + "'");
    }
    return s;
}

std::vector<std::string> builtin_spec_names() { return {"adult", "compas", "lawschool", "ricci"}; }

std::string spec_to_json(const DatasetSpec& s) {
    json j;
    j["name"] = s.name;
    j["source_url"] = s.source_url;
    j["target_column"] = s.target_column;
    j["positive_values"] = s.positive_values;
    j["protected_column"] = s.protected_column;
    j["protected_zero_values"] = s.protected_zero_values;
    j["protected_one_values"] = s.protected_one_values;
    j["protected_restrict"] = s.protected_restrict;
    json cols = json::array();
    for (const auto& c : s.feature_columns)
        cols.push_back(json{{"name", c.name}, {"kind", kind_to_string(c.kind)}});
    j["feature_columns"] = std::move(cols);
    json filters = json::array();
    for (const auto& f : s.filters)
        filters.push_back(json{{"column", f.column}, {"op", f.op}, {"value", f.value}});
    j["filters"] = std::move(filters);
    j["missing_tokens"] = s.missing_tokens;
    j["rows_expected"] = s.rows_expected;
    j["contingency_expected"] = s.contingency_expected;
    return j.dump();
}

DatasetSpec spec_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw parse_error(std::string("dataset spec JSON: ") + e.what());
    }
    DatasetSpec s;
    try {
        s.name = j.value("name", "");
        s.source_url = j.value("source_url", "");
        s.target_column = j.at("target_column").get<std::string>();
        s.positive_values = j.at("positive_values").get<std::vector<std::string>>();
        s.protected_column = j.at("protected_column").get<std::string>();
        if (j.contains("protected_zero_values"))
            s.protected_zero_values = j["protected_zero_values"].get<std::vector<std::string>>();
        if (j.contains("protected_one_values"))
            s.protected_one_values = j["protected_one_values"].get<std::vector<std::string>>();
        if (j.contains("protected_restrict"))
            s.protected_restrict = j["protected_restrict"].get<std::vector<std::string>>();
        for (const json& c : j.at("feature_columns"))
            s.feature_columns.push_back(
                {c.at("name").get<std::string>(), kind_from_string(c.at("kind").get<std::string>())});
        if (j.contains("filters"))
            for (const json& f : j["filters"])
                s.filters.push_back({f.at("column").get<std::string>(), f.at("op").get<std::string>(),
                                     f.at("value").get<std::string>()});
        if (j.contains("missing_tokens"))
            s.missing_tokens = j["missing_tokens"].get<std::vector<std::string>>();
        s.rows_expected = j.value("rows_expected", -1L);
        if (j.contains("contingency_expected")) {
            auto v = j["contingency_expected"].get<std::vector<long>>();
            if (v.size() != 4) throw parse_error("contingency_expected must have 4 cells");
            std::copy(v.begin(), v.end(), s.contingency_expected.begin());
        }
    } catch (const json::exception& e) {
        throw parse_error(std::string("dataset spec JSON: ") + e.what());
    }
    if (s.target_column.empty() || s.protected_column.empty() || s.feature_columns.empty())
        throw schema_error("dataset spec: target, protected and feature columns are required");
    if (s.protected_zero_values.empty() == s.protected_one_values.empty())
        throw schema_error("dataset spec: exactly one of protected_zero_values / protected_one_values");
    for (const auto& c : s.feature_columns)
        if (c.name == s.target_column || c.name == s.protected_column)
            throw schema_error("dataset spec: protected/target column may not be a feature");
    return s;
}

std::string LoadReport::to_json() const {
    json j;
    j["dataset"] = dataset;
    j["path"] = path;
    j["sha256"] = sha256;
    j["raw_rows"] = raw_rows;
    j["filtered_out"] = filtered_out;
    j["restricted_out"] = restricted_out;
    j["missing_dropped"] = missing_dropped;
    j["final_rows"] = final_rows;
    j["rows_expected"] = rows_expected;
    j["contingency"] = contingency;
    j["contingency_expected"] = contingency_expected;
    j["contingency_match"] = contingency_match;
    auto pct = contingency_column_percent(contingency);
    j["contingency_column_percent"] = pct;
    j["warnings"] = warnings;
    return j.dump();
}

Dataset load(const DatasetSpec& spec, const std::string& csv_path, LoadReport* report) {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) throw io_error("cannot open " + csv_path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();

    LoadReport rep;
    rep.dataset = spec.name;
    rep.path = csv_path;
    rep.sha256 = sha256_hex(text);
    rep.rows_expected = spec.rows_expected;
    rep.contingency_expected = spec.contingency_expected;

    auto rows = parse_csv(text);
    if (rows.size() < 2) throw schema_error(csv_path + ": no data rows");
    const auto& header = rows.front();

    auto column_index = [&](const std::string& name) -> int {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw schema_error(csv_path + ": missing column '" + name + "'");
    };

    int target_idx = column_index(spec.target_column);
    int prot_idx = column_index(spec.protected_column);
    std::vector<int> feat_idx;
    for (const auto& c : spec.feature_columns) feat_idx.push_back(column_index(c.name));
    std::vector<int> filter_idx;
    for (const auto& f : spec.filters) filter_idx.push_back(column_index(f.column));

    auto is_missing = [&](const std::string& v) { return in_list(spec.missing_tokens, v); };

    struct RawRow {
        std::vector<std::string> feats;
        int a;
        int y;
    };
    std::vector<RawRow> kept;
    long numeric_bad = 0;

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        ++rep.raw_rows;
        if (row.size() != header.size()) {
            ++rep.missing_dropped;
            if (rep.warnings.size() < 8)
                rep.warnings.push_back("row " + std::to_string(r) + ": field count mismatch, dropped");
            continue;
        }
        bool pass = true;
        for (std::size_t f = 0; f < spec.filters.size(); ++f)
            if (!filter_passes(spec.filters[f], row[filter_idx[f]])) {
                pass = false;
                break;
            }
        if (!pass) {
            ++rep.filtered_out;
            continue;
        }
        const std::string& pval = row[prot_idx];
        if (!spec.protected_restrict.empty() && !in_list(spec.protected_restrict, pval)) {
            ++rep.restricted_out;
            continue;
        }
        bool missing = is_missing(row[target_idx]) || is_missing(pval);
        for (int fi : feat_idx)
            if (is_missing(row[fi])) {
                missing = true;
                break;
            }
        if (missing) {
            ++rep.missing_dropped;
            continue;
        }
        RawRow rr;
        rr.y = in_list(spec.positive_values, row[target_idx]) ? 1 : -1;
        if (!spec.protected_zero_values.empty())
            rr.a = in_list(spec.protected_zero_values, pval) ? 0 : 1;
        else
            rr.a = in_list(spec.protected_one_values, pval) ? 1 : 0;
        rr.feats.reserve(feat_idx.size());
        for (int fi : feat_idx) rr.feats.push_back(row[fi]);
        kept.push_back(std::move(rr));
    }

    // Unparseable numerics count as missing values.
    std::vector<char> drop(kept.size(), 0);
    for (std::size_t i = 0; i < kept.size(); ++i)
        for (std::size_t c = 0; c < spec.feature_columns.size(); ++c)
            if (spec.feature_columns[c].kind == ColumnKind::numeric &&
                !parse_number(kept[i].feats[c])) {
                drop[i] = 1;
                ++numeric_bad;
                break;
            }
    if (numeric_bad > 0) {
        rep.missing_dropped += numeric_bad;
        rep.warnings.push_back(std::to_string(numeric_bad) + " rows dropped: unparseable numeric cells");
        std::vector<RawRow> filtered;
        filtered.reserve(kept.size() - numeric_bad);
        for (std::size_t i = 0; i < kept.size(); ++i)
            if (!drop[i]) filtered.push_back(std::move(kept[i]));
        kept = std::move(filtered);
    }
    if (kept.empty()) throw schema_error(csv_path + ": no usable rows after preprocessing");

    // One-hot layout: sorted levels, first level dropped.
    struct Encoded {
        bool numeric;
        std::vector<std::string> levels;  // categorical: levels[1..] get a column
    };
    std::vector<Encoded> enc(spec.feature_columns.size());
    std::vector<std::string> names;
    for (std::size_t c = 0; c < spec.feature_columns.size(); ++c) {
        if (spec.feature_columns[c].kind == ColumnKind::numeric) {
            enc[c].numeric = true;
            names.push_back(spec.feature_columns[c].name);
        } else {
            enc[c].numeric = false;
            std::set<std::string> levels;
            for (const auto& rr : kept) levels.insert(rr.feats[c]);
            enc[c].levels.assign(levels.begin(), levels.end());
            for (std::size_t l = 1; l < enc[c].levels.size(); ++l)
                names.push_back(spec.feature_columns[c].name + "=" + enc[c].levels[l]);
        }
    }

    Dataset out;
    out.n = static_cast<long>(kept.size());
    out.p = static_cast<int>(names.size());
    out.feature_names = names;
    out.x.assign(static_cast<std::size_t>(out.n) * out.p, 0.0);
    out.a.resize(out.n);
    out.y.resize(out.n);
    for (long i = 0; i < out.n; ++i) {
        const RawRow& rr = kept[i];
        out.a[i] = rr.a;
        out.y[i] = rr.y;
        std::size_t col = 0;
        for (std::size_t c = 0; c < spec.feature_columns.size(); ++c) {
            if (enc[c].numeric) {
                out.x[static_cast<std::size_t>(i) * out.p + col++] = *parse_number(rr.feats[c]);
            } else {
                const auto& levels = enc[c].levels;
                for (std::size_t l = 1; l < levels.size(); ++l)
                    out.x[static_cast<std::size_t>(i) * out.p + col++] =
                        rr.feats[c] == levels[l] ? 1.0 : 0.0;
            }
        }
    }

    rep.final_rows = out.n;
    if (spec.rows_expected > 0) {
        double dev = std::abs(static_cast<double>(out.n - spec.rows_expected)) /
                     static_cast<double>(spec.rows_expected);
        if (dev > 0.01)
            rep.warnings.push_back("row count " + std::to_string(out.n) + " deviates >1% from expected " +
                                   std::to_string(spec.rows_expected));
    }
    rep.contingency = contingency(out);
    rep.contingency_match = spec.contingency_expected[0] < 0 ||
                            rep.contingency == spec.contingency_expected;
    if (spec.contingency_expected[0] >= 0 && !rep.contingency_match)
        rep.warnings.push_back("contingency table deviates from the published counts");
    if (report) *report = rep;
    return out;
}

std::array<long, 4> contingency(const Dataset& data) {
    if (data.n == 0) throw contract_error("contingency: empty dataset");
    std::array<long, 4> counts{0, 0, 0, 0};
    for (long i = 0; i < data.n; ++i) {
        int idx = data.a[i] * 2 + (data.y[i] == 1 ? 1 : 0);
        ++counts[idx];
    }
    return counts;
}

std::array<double, 4> contingency_column_percent(const std::array<long, 4>& c) {
    std::array<double, 4> pct{0.0, 0.0, 0.0, 0.0};
    long col0 = c[0] + c[1], col1 = c[2] + c[3];
    if (col0 > 0) {
        pct[0] = 100.0 * c[0] / col0;
        pct[1] = 100.0 * c[1] / col0;
    }
    if (col1 > 0) {
        pct[2] = 100.0 * c[2] / col1;
        pct[3] = 100.0 * c[3] / col1;
    }
    return pct;
}

std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw contract_error("split: train_fraction must be in (0, 1)");
    long n_train = static_cast<long>(std::floor(train_fraction * data.n));
    if (n_train <= 0 || n_train >= data.n)
        throw contract_error("split: a side would be empty");

    std::vector<long> perm(data.n);
    for (long i = 0; i < data.n; ++i) perm[i] = i;
    std::mt19937_64 rng(seed);
    for (long i = data.n - 1; i > 0; --i) {
        std::uint64_t j = bounded_uint(rng, static_cast<std::uint64_t>(i) + 1);
        std::swap(perm[i], perm[static_cast<long>(j)]);
    }

    auto take = [&](long begin, long end) {
        Dataset d;
        d.n = end - begin;
        d.p = data.p;
        d.feature_names = data.feature_names;
        d.x.resize(static_cast<std::size_t>(d.n) * d.p);
        d.a.resize(d.n);
        d.y.resize(d.n);
        for (long i = begin; i < end; ++i) {
            long src = perm[i];
            long dst = i - begin;
            std::copy_n(data.x.begin() + static_cast<std::size_t>(src) * data.p, data.p,
                        d.x.begin() + static_cast<std::size_t>(dst) * data.p);
            d.a[dst] = data.a[src];
            d.y[dst] = data.y[src];
        }
        return d;
    };
    return {take(0, n_train), take(n_train, data.n)};
}

SynthKind synth_kind_from_string(const std::string& s) {
    if (s == "independent") return SynthKind::independent;
    if (s == "biased") return SynthKind::biased;
    throw contract_error("synth kind must be independent|biased, got '" + s + "'");
}

std::string to_string(SynthKind kind) {
    return kind == SynthKind::independent ? "independent" : "biased";
}

Dataset synthesize(SynthKind kind, long n, std::uint64_t seed) {
    if (n < 4) throw contract_error("synthesize: n must be >= 4");
    Dataset d;
    d.n = n;
    d.p = 2;
    d.feature_names = {"x0", "x1"};
    d.x.resize(static_cast<std::size_t>(n) * 2);
    d.a.resize(n);
    d.y.resize(n);

    std::mt19937_64 rng(seed ^ (kind == SynthKind::biased ? 0x9e3779b97f4a7c15ULL : 0));
    NormalDraw normal(rng);

    // Group-shift strength giving corr(x0, a) = 0.8 when x0 = 2.2 y + lam s + z.
    const double lam = std::sqrt((0.64 * (1.0 + 2.2 * 2.2)) / 0.36);

    static const int first_y[4] = {1, -1, 1, -1};
    static const int first_a[4] = {0, 1, 1, 0};
    for (long i = 0; i < n; ++i) {
        int yi = i < 4 ? first_y[i] : (normal.uniform() < 0.5 ? 1 : -1);
        int ai = i < 4 ? first_a[i] : (normal.uniform() < 0.5 ? 0 : 1);
        double s = 2.0 * ai - 1.0;
        double x0, x1;
        if (kind == SynthKind::independent) {
            x0 = 1.3 * yi + normal();
            x1 = 0.5 * yi + normal();
        } else {
            x0 = 2.2 * yi + lam * s + normal();
            x1 = 0.5 * yi + normal();
        }
        d.x[static_cast<std::size_t>(i) * 2] = x0;
        d.x[static_cast<std::size_t>(i) * 2 + 1] = x1;
        d.a[i] = ai;
        d.y[i] = yi;
    }
    return d;
}

void write_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    auto quote = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += "\"\"";
            else q.push_back(c);
        }
        q += "\"";
        return q;
    };
    for (int j = 0; j < data.p; ++j) out << quote(data.feature_names[j]) << ",";
    out << "a,y\n";
    char buf[64];
    for (long i = 0; i < data.n; ++i) {
        for (int j = 0; j < data.p; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", data.at(i, j));
            out << buf << ",";
        }
        out << data.a[i] << "," << data.y[i] << "\n";
    }
}

}  // namespace fairtree
