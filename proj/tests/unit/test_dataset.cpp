#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fairtree/dataset.hpp"
#include "fairtree/error.hpp"
#include "fairtree/replica.hpp"
#include "test_util.hpp"

using namespace fairtree;

namespace {

std::string write_temp_csv(const std::string& name, const std::string& text) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path, std::ios::binary);
    out << text;
    return path.string();
}

DatasetSpec tiny_spec() {
    DatasetSpec s;
    s.name = "tiny";
    s.target_column = "label";
    s.positive_values = {"yes"};
    s.protected_column = "grp";
    s.protected_zero_values = {"b"};
    s.feature_columns = {{"score", ColumnKind::numeric}, {"color", ColumnKind::categorical}};
    return s;
}

}  // namespace

TEST_CASE("load: parsing, one-hot encoding and label mapping") {
    std::string path = write_temp_csv("fairtree_tiny.csv",
                                      "score,color,grp,label\n"
                                      "1.5,red,a,yes\n"
                                      "2.5, blue ,b,no\n"
                                      "\"3.5\",\"green, dark\",b,yes\n"
                                      "4.5,red,a,no\n");
    LoadReport rep;
    Dataset d = load(tiny_spec(), path, &rep);
    CHECK(d.n == 4);
    // color levels sorted: {"blue", "green, dark", "red"}; first dropped.
    CHECK(d.p == 3);
    CHECK(d.feature_names[0] == "score");
    CHECK(d.feature_names[1] == "color=green, dark");
    CHECK(d.feature_names[2] == "color=red");
    CHECK(d.at(0, 0) == 1.5);
    CHECK(d.at(0, 2) == 1.0);  // red
    CHECK(d.at(2, 1) == 1.0);  // quoted green, dark
    CHECK(d.y == std::vector<int>{1, -1, 1, -1});
    CHECK(d.a == std::vector<int>{1, 0, 0, 1});
    CHECK(rep.raw_rows == 4);
    CHECK(rep.final_rows == 4);
    CHECK(rep.sha256.size() == 64);
}

TEST_CASE("load: missing values are dropped and counted; filters apply first") {
    DatasetSpec s = tiny_spec();
    s.filters = {{"score", "ge", "0"}};
    std::string path = write_temp_csv("fairtree_missing.csv",
                                      "score,color,grp,label\n"
                                      "1.0,red,a,yes\n"
                                      "?,red,b,no\n"
                                      "2.0,?,b,yes\n"
                                      "-5.0,red,a,yes\n"
                                      "3.0,blue,b,no\n");
    LoadReport rep;
    Dataset d = load(s, path, &rep);
    CHECK(d.n == 2);
    // The -5 row and the '?' score row both fail the ge filter (a missing
    // value in a filter column cannot satisfy a numeric predicate).
    CHECK(rep.filtered_out == 2);
    CHECK(rep.missing_dropped == 1);  // the '?' color row
    CHECK(rep.raw_rows == 5);
}

TEST_CASE("load: non-finite numeric cells count as missing") {
    std::string path = write_temp_csv("fairtree_nonfinite.csv",
                                      "score,color,grp,label\n"
                                      "1.0,red,a,yes\n"
                                      "inf,red,b,no\n"
                                      "nan,blue,b,yes\n"
                                      "2.0,blue,b,no\n");
    LoadReport rep;
    Dataset d = load(tiny_spec(), path, &rep);
    CHECK(d.n == 2);
    CHECK(rep.missing_dropped == 2);
    for (double v : d.x) CHECK(std::isfinite(v));
}

TEST_CASE("write_csv round-trips through the loader") {
    Dataset d = synthesize(SynthKind::biased, 50, 13);
    auto path = std::filesystem::temp_directory_path() / "fairtree_roundtrip.csv";
    write_csv(d, path.string());

    DatasetSpec s;
    s.name = "roundtrip";
    s.target_column = "y";
    s.positive_values = {"1"};
    s.protected_column = "a";
    s.protected_zero_values = {"0"};
    s.feature_columns = {{"x0", ColumnKind::numeric}, {"x1", ColumnKind::numeric}};
    Dataset back = load(s, path.string());
    CHECK(back.n == d.n);
    CHECK(back.p == d.p);
    CHECK(back.y == d.y);
    CHECK(back.a == d.a);
    CHECK(back.x == d.x);  // 17 significant digits reproduce doubles exactly
}

TEST_CASE("load: schema errors") {
    DatasetSpec s = tiny_spec();
    std::string path = write_temp_csv("fairtree_badheader.csv", "score,color,grp\n1,red,a\n");
    CHECK_THROWS_AS(load(s, path), Error);
    CHECK_THROWS_AS(load(s, "/nonexistent/nope.csv"), Error);
}

TEST_CASE("load: row-count and contingency expectations produce warnings") {
    DatasetSpec s = tiny_spec();
    s.rows_expected = 100;
    s.contingency_expected = {1, 1, 1, 1};
    std::string path = write_temp_csv("fairtree_warn.csv",
                                      "score,color,grp,label\n"
                                      "1,red,a,yes\n"
                                      "2,red,b,no\n");
    LoadReport rep;
    load(s, path, &rep);
    CHECK_FALSE(rep.contingency_match);
    CHECK(rep.warnings.size() >= 2);
}

TEST_CASE("contingency: one row per cell and partition property") {
    std::string path = write_temp_csv("fairtree_cells.csv",
                                      "score,color,grp,label\n"
                                      "1,red,b,no\n"
                                      "2,red,b,yes\n"
                                      "3,red,a,no\n"
                                      "4,red,a,yes\n");
    Dataset d = load(tiny_spec(), path);
    auto c = contingency(d);
    CHECK(c == std::array<long, 4>{1, 1, 1, 1});
    auto pct = contingency_column_percent(c);
    for (double v : pct) CHECK(v == doctest::Approx(50.0));
    CHECK(c[0] + c[1] + c[2] + c[3] == d.n);
}

TEST_CASE("split: sizes, determinism, distinctness") {
    Dataset d = synthesize(SynthKind::independent, 10, 5);
    auto [train, test] = split(d, 0.7, 123);
    CHECK(train.n == 7);
    CHECK(test.n == 3);

    auto [train2, test2] = split(d, 0.7, 123);
    CHECK(train.x == train2.x);
    CHECK(train.y == train2.y);
    CHECK(test.a == test2.a);

    auto [train3, test3] = split(d, 0.7, 124);
    CHECK(train.x != train3.x);  // overwhelmingly likely under a new seed

    CHECK_THROWS_AS(split(d, 0.05, 1), Error);  // empty train side
    CHECK_THROWS_AS(split(d, 1.0, 1), Error);
}

TEST_CASE("split: each row lands in train with frequency ~0.7 over 1000 seeds") {
    Dataset d = synthesize(SynthKind::independent, 100, 77);
    std::vector<int> in_train(100, 0);
    for (int seed = 0; seed < 1000; ++seed) {
        auto [train, test] = split(d, 0.7, seed);
        (void)test;
        // Identify original rows by their unique x0 values.
        for (long i = 0; i < train.n; ++i) {
            double x0 = train.at(i, 0);
            for (long j = 0; j < d.n; ++j)
                if (d.at(j, 0) == x0) {
                    ++in_train[j];
                    break;
                }
        }
    }
    for (int j = 0; j < 100; ++j) {
        double freq = in_train[j] / 1000.0;
        CHECK(freq == doctest::Approx(0.7).epsilon(0.072));
    }
}

TEST_CASE("synthesize: independent kind decorrelates features from the group") {
    Dataset d = synthesize(SynthKind::independent, 10000, 99);
    std::vector<double> a(d.n), x0(d.n), x1(d.n);
    for (long i = 0; i < d.n; ++i) {
        a[i] = d.a[i];
        x0[i] = d.at(i, 0);
        x1[i] = d.at(i, 1);
    }
    CHECK(std::abs(testutil::pearson_corr(x0, a)) < 0.1);
    CHECK(std::abs(testutil::pearson_corr(x1, a)) < 0.1);
}

TEST_CASE("synthesize: biased kind hits corr(x0, a) = 0.8") {
    Dataset d = synthesize(SynthKind::biased, 10000, 7);
    std::vector<double> a(d.n), x0(d.n);
    for (long i = 0; i < d.n; ++i) {
        a[i] = d.a[i];
        x0[i] = d.at(i, 0);
    }
    CHECK(testutil::pearson_corr(x0, a) == doctest::Approx(0.8).epsilon(0.0625));
}

TEST_CASE("synthesize: n=4 keeps both classes and both groups") {
    for (auto kind : {SynthKind::independent, SynthKind::biased}) {
        Dataset d = synthesize(kind, 4, 3);
        CHECK(d.n == 4);
        CHECK(d.p == 2);
        CHECK(std::count(d.y.begin(), d.y.end(), 1) >= 1);
        CHECK(std::count(d.y.begin(), d.y.end(), -1) >= 1);
        CHECK(std::count(d.a.begin(), d.a.end(), 0) >= 1);
        CHECK(std::count(d.a.begin(), d.a.end(), 1) >= 1);
    }
    CHECK_THROWS_AS(synthesize(SynthKind::biased, 3, 1), Error);
}

TEST_CASE("compas replica reproduces every pipeline stage count") {
    auto dir = std::filesystem::temp_directory_path() / "fairtree_replica_stage";
    std::filesystem::remove_all(dir);
    std::string path = write_replica("compas", dir.string(), 20240501);
    LoadReport rep;
    Dataset d = load(builtin_spec("compas"), path, &rep);
    CHECK(rep.raw_rows == 7214);
    CHECK(rep.filtered_out == 1042);
    CHECK(rep.restricted_out == 894);
    CHECK(rep.missing_dropped == 0);
    CHECK(d.n == 5278);
    CHECK(contingency(d) == std::array<long, 4>{1514, 1661, 1281, 822});
    CHECK(rep.contingency_match);
}

TEST_CASE("dataset spec validation rejects inconsistent definitions") {
    DatasetSpec s = tiny_spec();
    std::string good = spec_to_json(s);
    CHECK_NOTHROW(spec_from_json(good));

    DatasetSpec both = tiny_spec();
    both.protected_one_values = {"a"};  // both sides named
    CHECK_THROWS_AS(spec_from_json(spec_to_json(both)), Error);

    DatasetSpec overlap = tiny_spec();
    overlap.feature_columns.push_back({"label", ColumnKind::numeric});
    CHECK_THROWS_AS(spec_from_json(spec_to_json(overlap)), Error);

    CHECK_THROWS_AS(spec_from_json("{"), Error);
    CHECK_THROWS_AS(spec_from_json("{}"), Error);
}

TEST_CASE("builtin specs parse, serialize and round-trip") {
    for (const auto& name : builtin_spec_names()) {
        DatasetSpec s = builtin_spec(name);
        DatasetSpec back = spec_from_json(spec_to_json(s));
        CHECK(back.name == s.name);
        CHECK(back.target_column == s.target_column);
        CHECK(back.feature_columns.size() == s.feature_columns.size());
        CHECK(back.contingency_expected == s.contingency_expected);
    }
    CHECK_THROWS_AS(builtin_spec("nope"), Error);
    // Adult: 13 predictors with the protected column excluded.
    CHECK(builtin_spec("adult").feature_columns.size() == 13);
}
