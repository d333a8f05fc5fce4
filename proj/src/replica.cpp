#include "fairtree/replica.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "fairtree/error.hpp"

namespace fairtree {

namespace fs = std::filesystem;

namespace {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return (static_cast<double>(gen_() >> 11) + 1.0) * (1.0 / 9007199254740992.0); }

    double normal() {
        if (have_) {
            have_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        have_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

    long below(long bound) {
        std::uint64_t threshold = (-static_cast<std::uint64_t>(bound)) % static_cast<std::uint64_t>(bound);
        for (;;) {
            std::uint64_t r = gen_();
            if (r >= threshold) return static_cast<long>(r % static_cast<std::uint64_t>(bound));
        }
    }

    // Weighted categorical pick.
    std::size_t weighted(const std::vector<double>& w) {
        double total = 0.0;
        for (double v : w) total += v;
        double u = uniform() * total;
        for (std::size_t i = 0; i < w.size(); ++i) {
            u -= w[i];
            if (u <= 0.0) return i;
        }
        return w.size() - 1;
    }

private:
    std::mt19937_64 gen_;
    bool have_ = false;
    double spare_ = 0.0;
};

double clampd(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }
long clampl(long v, long lo, long hi) { return std::min(hi, std::max(lo, v)); }

std::string num(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

void shuffle_rows(std::vector<std::string>& rows, Rng& rng) {
    for (long i = static_cast<long>(rows.size()) - 1; i > 0; --i)
        std::swap(rows[i], rows[rng.below(i + 1)]);
}

void write_file(const std::string& path, const std::string& header, std::vector<std::string>& rows,
                Rng& rng) {
    shuffle_rows(rows, rng);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    out << header << "\n";
    for (const auto& r : rows) out << r << "\n";
}

// ---------------------------------------------------------------- adult ---

const char* kEducation[17] = {"",          "Preschool", "1st-4th",  "5th-6th",      "7th-8th",
                              "9th",        "10th",      "11th",     "12th",         "HS-grad",
                              "Some-college", "Assoc-voc", "Assoc-acdm", "Bachelors", "Masters",
                              "Prof-school", "Doctorate"};

std::string adult_row(Rng& rng, int a, int y, bool spoil) {
    bool male = a == 1;
    bool high = y == 1;
    long age = clampl(std::lround(33.0 + 8.5 * high + 2.0 * male + rng.normal() * 11.0), 17, 90);
    long edu = clampl(std::lround(9.2 + 1.9 * high + rng.normal() * 2.4), 1, 16);
    long hours = clampl(std::lround(38.0 + 4.5 * high + 2.5 * male + rng.normal() * 9.5), 1, 99);
    long fnlwgt = clampl(std::lround(std::exp(12.0 + rng.normal() * 0.45)), 13000, 1400000);

    static const std::vector<std::string> workclasses = {
        "Private", "Self-emp-not-inc", "Local-gov", "State-gov", "Self-emp-inc", "Federal-gov",
        "Without-pay"};
    std::string workclass =
        workclasses[rng.weighted({0.72, 0.08, 0.07, 0.05, high ? 0.07 : 0.03, 0.03, 0.005})];

    bool married = rng.uniform() < (high ? 0.85 : 0.42);
    static const std::vector<std::string> unmarried_status = {"Never-married", "Divorced",
                                                              "Separated", "Widowed"};
    std::string marital = married ? "Married-civ-spouse"
                                  : unmarried_status[rng.weighted({0.55, 0.3, 0.08, 0.07})];

    static const std::vector<std::string> occupations = {
        "Exec-managerial", "Prof-specialty", "Craft-repair",   "Adm-clerical",  "Sales",
        "Other-service",   "Machine-op-inspct", "Transport-moving", "Handlers-cleaners",
        "Tech-support",    "Farming-fishing", "Protective-serv", "Priv-house-serv", "Armed-Forces"};
    std::vector<double> occ_w = {high ? 2.2 : 0.9, high ? 2.0 : 0.9, male ? 1.6 : 0.4,
                                 male ? 0.6 : 1.9, 1.1,  high ? 0.4 : 1.4,
                                 0.8,              male ? 0.9 : 0.3, high ? 0.3 : 0.9,
                                 0.4,              0.35, 0.3,
                                 male ? 0.02 : 0.15, 0.01};
    std::string occupation = occupations[rng.weighted(occ_w)];

    std::string relationship;
    if (married)
        relationship = male ? "Husband" : "Wife";
    else {
        static const std::vector<std::string> rels = {"Not-in-family", "Own-child", "Unmarried",
                                                      "Other-relative"};
        relationship = rels[rng.weighted({0.5, 0.25, 0.2, 0.05})];
    }

    static const std::vector<std::string> races = {"White", "Black", "Asian-Pac-Islander",
                                                   "Amer-Indian-Eskimo", "Other"};
    std::string race = races[rng.weighted({0.855, 0.096, 0.031, 0.010, 0.008})];

    long cap_gain = 0;
    double gain_p = high ? 0.14 : 0.04;
    if (rng.uniform() < gain_p)
        cap_gain = clampl(std::lround(std::exp(8.2 + 0.8 * high + rng.normal() * 1.0)), 114, 99999);
    long cap_loss = rng.uniform() < (high ? 0.08 : 0.03)
                        ? clampl(std::lround(1870.0 + rng.normal() * 320.0), 155, 4356)
                        : 0;

    static const std::vector<std::string> countries = {"United-States", "Mexico", "Philippines",
                                                       "Germany", "Canada", "India", "England",
                                                       "Cuba", "Jamaica", "China"};
    std::string country = countries[rng.weighted({0.897, 0.03, 0.012, 0.009, 0.008, 0.008, 0.008,
                                                  0.008, 0.007, 0.013})];

    if (spoil) {
        // Missing values cluster in workclass/occupation (together) or country.
        if (rng.uniform() < 0.8) {
            workclass = "?";
            occupation = "?";
        } else {
            country = "?";
        }
    }

    std::string row;
    row += std::to_string(age) + ",";
    row += workclass + ",";
    row += std::to_string(fnlwgt) + ",";
    row += std::string(kEducation[edu]) + ",";
    row += std::to_string(edu) + ",";
    row += marital + ",";
    row += occupation + ",";
    row += relationship + ",";
    row += race + ",";
    row += (male ? "Male" : "Female") + std::string(",");
    row += std::to_string(cap_gain) + ",";
    row += std::to_string(cap_loss) + ",";
    row += std::to_string(hours) + ",";
    row += country + ",";
    row += high ? ">50K" : "<=50K";
    return row;
}

std::string make_adult(const std::string& out_dir, Rng& rng) {
    // Kept cells (sex, income) follow the published contingency; 3620 extra
    // rows carry '?' cells and fall to listwise deletion.
    const long cells[4][3] = {{0, -1, 13026}, {0, 1, 1669}, {1, -1, 20988}, {1, 1, 9539}};
    std::vector<std::string> rows;
    rows.reserve(48842);
    for (const auto& cell : cells)
        for (long i = 0; i < cell[2]; ++i)
            rows.push_back(adult_row(rng, static_cast<int>(cell[0]), static_cast<int>(cell[1]), false));
    for (long i = 0; i < 3620; ++i) {
        int a = rng.uniform() < 0.33 ? 0 : 1;
        int y = rng.uniform() < 0.24 ? 1 : -1;
        rows.push_back(adult_row(rng, a, y, true));
    }
    std::string path = (fs::path(out_dir) / "adult-replica.csv").string();
    write_file(path,
               "age,workclass,fnlwgt,education,education-num,marital-status,occupation,relationship,"
               "race,sex,capital-gain,capital-loss,hours-per-week,native-country,income",
               rows, rng);
    return path;
}

// --------------------------------------------------------------- compas ---

std::string compas_row(Rng& rng, const std::string& race, int y, int spoil_filter) {
    bool recid = y == 1;
    bool black = race == "African-American";

    long age = clampl(std::lround(23.5 + (recid ? 0.0 : 8.0) + std::abs(rng.normal()) * 7.5), 18, 83);
    std::string age_cat = age < 25 ? "Less than 25" : (age > 45 ? "Greater than 45" : "25 - 45");
    std::string sex = rng.uniform() < 0.81 ? "Male" : "Female";

    auto small_count = [&](double tilt) {
        double u = rng.uniform();
        if (u < 0.90 - tilt) return 0L;
        if (u < 0.97) return 1L;
        if (u < 0.995) return 2L;
        return 3L;
    };
    long juv_fel = small_count(recid ? 0.04 : 0.0);
    long juv_misd = small_count(recid ? 0.05 : 0.0);
    long juv_other = small_count(recid ? 0.06 : 0.0);

    long priors = clampl(
        std::lround(std::exp(0.35 + 0.95 * recid + 0.18 * black + rng.normal() * 0.8)) - 1, 0, 38);
    long decile = clampl(std::lround(3.0 + 2.3 * recid + 2.8 * black + rng.normal() * 1.7), 1, 10);
    std::string score_text = decile <= 4 ? "Low" : (decile <= 7 ? "Medium" : "High");
    std::string charge = rng.uniform() < 0.64 ? "F" : "M";
    long days = clampl(std::lround(rng.normal() * 7.0), -30, 30);
    long is_recid = recid ? 1 : (rng.uniform() < 0.06 ? 1 : 0);
    long two_year = recid ? 1 : 0;

    // spoil_filter: 1 = screening-days window, 2 = is_recid sentinel,
    // 3 = ordinary-traffic charge, 4 = missing score.
    if (spoil_filter == 1) days = rng.uniform() < 0.5 ? -(31 + rng.below(300)) : 31 + rng.below(300);
    if (spoil_filter == 2) is_recid = -1;
    if (spoil_filter == 3) charge = "O";
    if (spoil_filter == 4) score_text = "N/A";

    std::string row;
    row += sex + ",";
    row += std::to_string(age) + ",";
    row += age_cat + ",";
    row += race + ",";
    row += std::to_string(juv_fel) + ",";
    row += std::to_string(juv_misd) + ",";
    row += std::to_string(juv_other) + ",";
    row += std::to_string(priors) + ",";
    row += std::to_string(days) + ",";
    row += charge + ",";
    row += std::to_string(is_recid) + ",";
    row += std::to_string(decile) + ",";
    row += score_text + ",";
    row += std::to_string(two_year);
    return row;
}

std::string make_compas(const std::string& out_dir, Rng& rng) {
    // 5278 two-race rows with the published (race, recid) cells, 894 rows of
    // other races passing every filter, 1042 rows knocked out by the filters:
    // 7214 in total.
    struct Cell { const char* race; int y; long count; };
    const Cell cells[4] = {{"African-American", -1, 1514},
                           {"African-American", 1, 1661},
                           {"Caucasian", -1, 1281},
                           {"Caucasian", 1, 822}};
    std::vector<std::string> rows;
    rows.reserve(7214);
    for (const auto& cell : cells)
        for (long i = 0; i < cell.count; ++i) rows.push_back(compas_row(rng, cell.race, cell.y, 0));

    static const std::vector<std::string> other_races = {"Hispanic", "Other", "Asian",
                                                         "Native American"};
    for (long i = 0; i < 894; ++i) {
        const std::string& race = other_races[rng.weighted({0.58, 0.28, 0.08, 0.06})];
        rows.push_back(compas_row(rng, race, rng.uniform() < 0.42 ? 1 : -1, 0));
    }
    static const std::vector<std::string> any_race = {"African-American", "Caucasian", "Hispanic",
                                                      "Other"};
    const long spoil_counts[4] = {620, 230, 100, 92};
    for (int kind = 1; kind <= 4; ++kind)
        for (long i = 0; i < spoil_counts[kind - 1]; ++i) {
            const std::string& race = any_race[rng.weighted({0.45, 0.33, 0.15, 0.07})];
            rows.push_back(compas_row(rng, race, rng.uniform() < 0.45 ? 1 : -1, kind));
        }

    std::string path = (fs::path(out_dir) / "compas-replica.csv").string();
    write_file(path,
               "sex,age,age_cat,race,juv_fel_count,juv_misd_count,juv_other_count,priors_count,"
               "days_b_screening_arrest,c_charge_degree,is_recid,decile_score,score_text,"
               "two_year_recid",
               rows, rng);
    return path;
}

// ---------------------------------------------------------------- ricci ---

std::string ricci_row(Rng& rng, const std::string& race, int y) {
    bool promoted = y == 1;
    bool white = race == "W";
    double combine;
    if (promoted) {
        combine = 70.5 + std::min(19.0, std::abs(rng.normal()) * 6.0) + (white ? 2.4 : 0.0);
    } else if (rng.uniform() < (white ? 0.26 : 0.05)) {
        // Passed the 70 bar but lost out to the vacancy cap; in the source
        // data this happened mostly on the white side of the roster.
        combine = 70.2 + rng.uniform() * 4.3;
    } else {
        combine = 68.8 - std::min(21.0, std::abs(rng.normal()) * 6.5) + (white ? 3.2 : 0.0);
    }
    combine = clampd(combine, 46.0, 93.5);
    // The oral exam is race-balanced and carries its own signal; the written
    // one absorbs the remaining gap so combine = 0.6 written + 0.4 oral
    // holds exactly.
    double oral = 71.0 + (promoted ? 4.2 : -4.2) + rng.normal() * 3.1;
    oral = std::stod(num(clampd(oral, 40.0, 99.5), 2));
    double written = std::stod(num((combine - 0.4 * oral) / 0.6, 2));
    combine = 0.6 * written + 0.4 * oral;

    std::string position = rng.uniform() < (41.0 / 118.0) ? "Captain" : "Lieutenant";
    std::string row;
    row += position + ",";
    row += num(oral, 2) + ",";
    row += num(written, 2) + ",";
    row += race + ",";
    row += num(combine, 2) + ",";
    row += promoted ? "1" : "0";
    return row;
}

std::string make_ricci(const std::string& out_dir, Rng& rng) {
    std::vector<std::string> rows;
    rows.reserve(118);
    // Non-white split 27 B / 23 H as in the source data.
    long nw_black_left = 27;
    auto nw_race = [&]() {
        if (nw_black_left > 0) {
            --nw_black_left;
            return std::string("B");
        }
        return std::string("H");
    };
    for (long i = 0; i < 35; ++i) rows.push_back(ricci_row(rng, nw_race(), -1));
    for (long i = 0; i < 15; ++i) rows.push_back(ricci_row(rng, nw_race(), 1));
    for (long i = 0; i < 27; ++i) rows.push_back(ricci_row(rng, "W", -1));
    for (long i = 0; i < 41; ++i) rows.push_back(ricci_row(rng, "W", 1));

    std::string path = (fs::path(out_dir) / "ricci-replica.csv").string();
    write_file(path, "Position,Oral,Written,Race,Combine,Promoted", rows, rng);
    return path;
}

// ------------------------------------------------------------ lawschool ---

std::string lawschool_row(Rng& rng, int a, int y) {
    bool pass = y == 1;
    bool white = a == 1;
    double lsat = clampd(30.2 + 3.6 * pass + 3.1 * white + rng.normal() * 4.2, 11.0, 48.0);
    double ugpa = clampd(2.75 + 0.28 * pass + 0.14 * white + rng.normal() * 0.4, 1.5, 4.0);
    double zfygpa = clampd(-0.95 + 0.85 * pass + 0.28 * white + rng.normal() * 0.82, -3.35, 3.2);
    double zgpa = clampd(-0.9 + 0.8 * pass + 0.26 * white + rng.normal() * 0.9, -6.44, 4.0);
    long decile1b = clampl(std::lround(5.5 + 1.9 * zfygpa + rng.normal() * 1.7), 1, 10);
    long decile3 = clampl(std::lround(5.5 + 1.8 * zgpa + rng.normal() * 1.8), 1, 10);
    long fulltime = rng.uniform() < 0.885 ? 1 : 2;
    long fam_inc = 1 + static_cast<long>(rng.weighted({0.08, 0.21, 0.38, 0.25, 0.08}));
    long male = rng.uniform() < 0.56 ? 1 : 0;
    long tier = 1 + static_cast<long>(rng.weighted({0.05, 0.12, 0.25, 0.3, 0.2, 0.08}));

    std::string row;
    row += std::to_string(decile1b) + ",";
    row += std::to_string(decile3) + ",";
    row += num(lsat, 1) + ",";
    row += num(ugpa, 1) + ",";
    row += num(zfygpa, 2) + ",";
    row += num(zgpa, 2) + ",";
    row += std::to_string(fulltime) + ",";
    row += std::to_string(fam_inc) + ",";
    row += std::to_string(male) + ",";
    row += std::to_string(tier) + ",";
    row += white ? "White" : "Non-White";
    row += ",";
    row += pass ? "1" : "0";
    return row;
}

std::string make_lawschool(const std::string& out_dir, Rng& rng) {
    const long cells[4][3] = {{0, -1, 916}, {0, 1, 2391}, {1, -1, 1377}, {1, 1, 16114}};
    std::vector<std::string> rows;
    rows.reserve(20798);
    for (const auto& cell : cells)
        for (long i = 0; i < cell[2]; ++i)
            rows.push_back(lawschool_row(rng, static_cast<int>(cell[0]), static_cast<int>(cell[1])));
    std::string path = (fs::path(out_dir) / "lawschool-replica.csv").string();
    write_file(path, "decile1b,decile3,lsat,ugpa,zfygpa,zgpa,fulltime,fam_inc,male,tier,race,pass_bar",
               rows, rng);
    return path;
}

}  // namespace

std::vector<std::string> replica_names() { return {"adult", "compas", "lawschool", "ricci"}; }

std::string write_replica(const std::string& name, const std::string& out_dir, std::uint64_t seed) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    Rng rng(seed ^ std::hash<std::string>{}(name));
    if (name == "adult") return make_adult(out_dir, rng);
    if (name == "compas") return make_compas(out_dir, rng);
    if (name == "ricci") return make_ricci(out_dir, rng);
    if (name == "lawschool") return make_lawschool(out_dir, rng);
    throw contract_error("unknown replica '" + name + "'");
}

}  // namespace fairtree
