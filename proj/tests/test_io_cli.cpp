#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cfpred/cli.hpp"
#include "cfpred/experiments.hpp"
#include "cfpred/format.hpp"
#include "cfpred/io.hpp"
#include "fixtures.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cfpred;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

Dataset parse(const std::string& text, const std::optional<Schema>& schema = std::nullopt) {
  std::istringstream in(text);
  return read_csv(in, schema, "test.csv");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("cfpred_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("well-formed CSV") {
  const Dataset d = parse("exposure,outcome,x,b\n1,2.5,3,0\n0,-1,4.25,1\n1,7,1e2,1\n");
  CHECK(d.size() == 3);
  CHECK(d.dimension() == 2);
  CHECK(d.exposure == std::vector<int>{1, 0, 1});
  CHECK(d.outcome(2) == 7.0);
  CHECK(d.covariates(2, 0) == 100.0);
  CHECK(d.schema[0].kind == ColumnKind::continuous);
  CHECK(d.schema[1].kind == ColumnKind::binary);
}

TEST_CASE("exposure labels are re-indexed in increasing order") {
  const Dataset d = parse("exposure,outcome\n7,1\n-3,2\n7,3\n12,4\n");
  CHECK(d.exposure_labels == std::vector<std::int64_t>{-3, 7, 12});
  CHECK(d.exposure == std::vector<int>{1, 0, 1, 2});
}

TEST_CASE("CSV errors carry diagnostics") {
  CHECK_THROWS_WITH_AS(parse("exposure,x\n0,1\n"), doctest::Contains("outcome"), ValidationError);
  CHECK_THROWS_WITH_AS(parse("outcome,x\n0,1\n"), doctest::Contains("exposure"), ValidationError);
  CHECK_THROWS_WITH_AS(parse(""), doctest::Contains("empty"), ValidationError);
  CHECK_THROWS_WITH_AS(parse("exposure,outcome\n"), doctest::Contains("no data rows"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(parse("exposure,outcome,x\n0,1,2\n0,abc,2\n"),
                       doctest::Contains("outcome"), ValidationError);
  CHECK_THROWS_WITH_AS(parse("exposure,outcome,x\n0,1,2\n0,1,zz\n"), doctest::Contains("test.csv:3, column 'x'"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(parse("exposure,outcome,x\n0,1,2\n0,1\n"), doctest::Contains("expected"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(parse("exposure,outcome\n0.5,1\n"), doctest::Contains("integer"),
                       ValidationError);

  const Schema schema{ColumnSchema::categorical("c", 3)};
  CHECK(parse("exposure,outcome,c\n0,1,2\n", schema).covariates(0, 0) == 2.0);
  CHECK_THROWS_WITH_AS(parse("exposure,outcome,c\n0,1,3\n", schema), doctest::Contains("'c'"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(parse("exposure,outcome\n0,1\n", schema), doctest::Contains("'c'"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(parse("exposure,outcome,c,extra\n0,1,1,5\n", schema),
                       doctest::Contains("extra"), ValidationError);
}

TEST_CASE("schema JSON") {
  const json doc = json::parse(R"({"columns":[{"name":"x1","type":"continuous"},
      {"name":"x2","type":"categorical","categories":3},{"name":"x3","type":"binary"}]})");
  const Schema s = parse_schema(doc);
  REQUIRE(s.size() == 3);
  CHECK(s[1].kind == ColumnKind::categorical);
  CHECK(s[1].categories == 3);
  CHECK(s[2].kind == ColumnKind::binary);
  const Schema again = parse_schema(schema_to_json(s));
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(again[j].name == s[j].name);
    CHECK(again[j].kind == s[j].kind);
    CHECK(again[j].categories == s[j].categories);
  }
  CHECK_THROWS_AS(parse_schema(json::parse(R"({"columns":[{"name":"outcome","type":"binary"}]})")),
                  ValidationError);
  CHECK_THROWS_AS(parse_schema(json::parse(
                      R"({"columns":[{"name":"a","type":"binary"},{"name":"a","type":"binary"}]})")),
                  ValidationError);
  CHECK_THROWS_AS(parse_schema(json::parse(R"({"columns":[{"name":"a","type":"ordinal"}]})")),
                  ValidationError);
  CHECK_THROWS_AS(
      parse_schema(json::parse(R"({"columns":[{"name":"a","type":"categorical","categories":1}]})")),
      ValidationError);
}

TEST_CASE("numbers round-trip through their shortest form") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.125, 1e22, 0.0}) {
    double back = 1.0;
    CHECK(parse_number(format_number(v), back));
    CHECK(back == v);
  }
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(3.0) == "3");
  double out = 0.0;
  CHECK_FALSE(parse_number("1.5x", out));
  CHECK_FALSE(parse_number("", out));
}

TEST_CASE("CSV round trip is exact") {
  for (const auto& d : {gen_nonlinear(200, 4).data, gen_highdim(50, 30, 10, 4).data,
                        cfpred::testing::binary_standin(100, 4)}) {
    std::ostringstream out;
    write_csv(out, d);
    const Dataset back = parse(out.str(), d.schema);
    CHECK(back.outcome == d.outcome);
    CHECK(back.covariates == d.covariates);
    CHECK(back.exposure == d.exposure);
    CHECK(back.exposure_labels == d.exposure_labels);
  }
}

TEST_CASE("unit covariates") {
  const Schema schema{ColumnSchema::continuous("x"), ColumnSchema::binary("b"),
                      ColumnSchema::categorical("c", 3)};
  std::vector<std::string> warnings;
  Eigen::VectorXd x = parse_unit(json::parse(R"({"x": 2.5, "c": 2})"), schema, &warnings);
  CHECK(x == Eigen::Vector3d(2.5, 0, 2));
  CHECK(warnings.size() == 1);
  x = parse_unit(json::parse(R"({"__all__": 1, "x": 7})"), schema);
  CHECK(x == Eigen::Vector3d(7, 1, 1));
  CHECK_THROWS_AS(parse_unit(json::parse(R"({"b": 1})"), schema), ValidationError);
  CHECK_THROWS_AS(parse_unit(json::parse(R"({"x": 1, "c": 5})"), schema), ValidationError);
  CHECK_THROWS_AS(parse_unit(json::parse(R"({"x": 1, "zz": 5})"), schema), ValidationError);
  CHECK_THROWS_AS(parse_unit(json::parse(R"([1, 2])"), schema), ValidationError);
}

TEST_CASE("synth output is byte-identical for the same seed") {
  TempDir dir;
  CHECK(cli({"synth", "--experiment", "nonlinear", "--n", "80", "--seed", "5", "--out",
             dir / "a.csv"}).code == 0);
  CHECK(cli({"synth", "--experiment", "nonlinear", "--n", "80", "--seed", "5", "--out",
             dir / "b.csv"}).code == 0);
  CHECK(cli({"synth", "--experiment", "nonlinear", "--n", "80", "--seed", "6", "--out",
             dir / "c.csv"}).code == 0);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(slurp(dir / "a.csv") != slurp(dir / "c.csv"));
  CHECK(slurp(dir / "a.csv").rfind("exposure,outcome,x1\n", 0) == 0);

  CHECK(cli({"synth", "--experiment", "highdim", "--n", "40", "--d", "30", "--rank", "10",
             "--seed", "5", "--out", dir / "h.csv", "--schema-out", dir / "h.json"}).code == 0);
  const Dataset h = load_csv(dir / "h.csv", load_schema(dir / "h.json"));
  CHECK(h.size() == 40);
  CHECK(h.dimension() == 30);
}

TEST_CASE("analyze produces intervals and a confidence entry") {
  TempDir dir;
  REQUIRE(cli({"synth", "--experiment", "nonlinear", "--seed", "2", "--out", dir / "d.csv"})
              .code == 0);
  const Run r = cli({"analyze", "--data", dir / "d.csv", "--unit", R"({"x1": 30})", "--beta",
                     "0.9", "--scores-csv", dir / "s.csv"});
  REQUIRE(r.code == 0);
  const json doc = json::parse(r.out);
  REQUIRE(doc["exposures"].size() == 2);
  for (const auto& e : doc["exposures"]) {
    CHECK(e["intervals"].size() >= 1);
    CHECK(e["weights"].size() == 11);
    CHECK(e["beta"] == 0.9);
    for (const auto& iv : e["intervals"]) CHECK(iv[0].get<double>() <= iv[1].get<double>());
  }
  CHECK(doc["confidence_table"][1][0].is_number());
  CHECK(doc["confidence_table"][0][0].is_null());
  CHECK(doc["confidence_table"][0][1].is_null());
  CHECK(doc["grid"]["size"] == 200);
  CHECK(doc["knots"]["columns"]["x1"]["knots"].size() == 10);
  CHECK(doc["effects"][1][0].get<double>() ==
        doc["exposures"][1]["point"].get<double>() - doc["exposures"][0]["point"].get<double>());

  const std::string scores = slurp(dir / "s.csv");
  CHECK(scores.rfind("exposure,y_grid,pi,prediction_at\n", 0) == 0);
  CHECK(std::count(scores.begin(), scores.end(), '\n') == 401);

  const Run to_file = cli({"analyze", "--data", dir / "d.csv", "--unit", R"({"x1": 30})",
                           "--out", dir / "a.json"});
  CHECK(to_file.code == 0);
  CHECK(json::parse(slurp(dir / "a.json")) == doc);
  CHECK(to_file.out.find('%') != std::string::npos);
}

TEST_CASE("twenty-six binary covariates end to end") {
  TempDir dir;
  const Dataset d = cfpred::testing::binary_standin(3000, 11);
  save_csv(dir / "b.csv", d);
  {
    std::ofstream f(dir / "unit.json");
    f << R"({"b1": 1, "b5": 0, "b8": 1})";
  }
  const Run r = cli({"analyze", "--data", dir / "b.csv", "--unit", dir / "unit.json",
                     "--grid-size", "100"});
  REQUIRE(r.code == 0);
  const json doc = json::parse(r.out);
  CHECK(doc["exposures"].size() == 3);
  CHECK(doc["exposures"][2]["z"] == 3);
  CHECK(doc["exposures"][0]["weights"].size() == 27);
  CHECK(doc["knots"]["p"] == 26);
  CHECK(doc["warnings"].size() == 23);
  int entries = 0;
  for (const auto& row : doc["confidence_table"]) {
    for (const auto& v : row) entries += v.is_number();
  }
  CHECK(entries == 3);
}

TEST_CASE("exit codes") {
  TempDir dir;
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({}).code == 2);
  CHECK(cli({"synth", "--experiment", "nonlinear", "--out", dir / "x.csv", "--bogus"}).code == 2);
  CHECK(cli({"synth", "--experiment", "quadratic", "--out", dir / "x.csv"}).code == 2);
  const Run missing = cli({"analyze", "--data", dir / "nope.csv", "--unit", "{}"});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("nope.csv") != std::string::npos);
  REQUIRE(cli({"synth", "--experiment", "nonlinear", "--out", dir / "d.csv"}).code == 0);
  CHECK(cli({"analyze", "--data", dir / "d.csv", "--unit", R"({"x1": 1})", "--beta", "1.5"})
            .code == 2);
  CHECK(cli({"analyze", "--data", dir / "d.csv", "--unit", "{}"}).code == 2);
  CHECK(cli({"coverage", "--experiment", "nonlinear", "--runs", "0"}).code == 2);

  const std::string cmd = std::string(CFPRED_CLI_PATH) + " synth --nope > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 2);
}

TEST_CASE("coverage output does not depend on threads") {
  const std::vector<std::string> base{"coverage", "--experiment", "nonlinear", "--runs", "12",
                                      "--grid-size", "50", "--seed", "3"};
  auto with_threads = base;
  with_threads.insert(with_threads.end(), {"--threads", "3"});
  const Run one = cli(base);
  const Run three = cli(with_threads);
  REQUIRE(one.code == 0);
  CHECK(one.out == three.out);

  ::setenv("CF_THREADS", "2", 1);
  const Run env = cli(base);
  ::setenv("CF_THREADS", "zero", 1);
  const Run bad = cli(base);
  ::unsetenv("CF_THREADS");
  CHECK(env.out == one.out);
  CHECK(bad.code == 2);
}
