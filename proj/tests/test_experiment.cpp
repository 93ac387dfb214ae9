#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "mmangle/experiment.hpp"

using namespace mmangle;

namespace {

const double kPi = std::acos(-1.0);

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config: defaults, round trip, and strict key checking") {
  ExperimentConfig cfg = config_from_json(
      R"({"kind":"euclidean_cloud","n":100,"methods":["three_points"]})");
  CHECK(cfg.kind == "euclidean_cloud");
  CHECK(cfg.n == 100);
  CHECK(cfg.dim == 2);
  CHECK(cfg.triple_count == 10);
  CHECK(cfg.probe_C == 4.0);
  CHECK(cfg.tolerance == 0.25);
  REQUIRE(cfg.eps_list.size() == 3);
  CHECK(cfg.eps_list[0] == 0.4);
  CHECK(cfg.methods == std::vector<std::string>{"three_points"});

  ExperimentConfig rt = config_from_json(config_to_json(cfg));
  CHECK(rt.kind == cfg.kind);
  CHECK(rt.n == cfg.n);
  CHECK(rt.methods == cfg.methods);
  CHECK(rt.eps_list == cfg.eps_list);
  CHECK(rt.triple_seed == cfg.triple_seed);

  auto bad = [](const char* text) {
    CHECK_THROWS_AS(config_from_json(text), ConfigError);
  };
  bad(R"({"kind":"euclidean_cloud","n":100,"methods":["three_points"],"bogus":1})");
  bad(R"({"kind":"euclidean_cloud","n":100,"methods":[]})");
  bad(R"({"kind":"euclidean_cloud","n":100,"methods":["warp_drive"]})");
  bad(R"({"n":100,"methods":["cosine"]})");
  bad(R"({"kind":"mystery","n":100,"methods":["cosine"]})");
  bad(R"({"kind":"euclidean_cloud","n":100,"methods":["cosine"],"triple_count":0})");
  bad(R"({"kind":"euclidean_cloud","n":100,"methods":["cosine"],"probe_C":0.5})");
  bad(R"({"kind":"euclidean_cloud","n":100,"methods":["cosine"],"tolerance":0})");
  bad(R"({"kind":"euclidean_cloud","n":100,"methods":["cosine"],"eps_list":[0.1,0.2]})");
  bad(R"({"kind":"euclidean_cloud","n":100,"methods":["cosine"],"radii":[0.2,0.2]})");
  bad("{\"kind\":");
}

TEST_CASE("result rows survive CSV quoting and reject schema drift") {
  std::vector<ResultRow> rows(2);
  rows[0] = {"cloud-1", 3, 7, 9, "three_points", 1.5707963267948966, 1.4, 1.7, 0.0, ""};
  rows[1] = {"cloud-1", 1, 2, 4, "cosine", -0.125, -0.5, 0.25, 1e-3,
             "skipped:needs \"quotes\", commas,\nand newlines"};
  std::string csv = rows_to_csv(rows);
  CHECK(csv.substr(0, std::string(kCsvHeader).size()) == kCsvHeader);

  std::vector<ResultRow> back = rows_from_csv(csv);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].space_id == rows[i].space_id);
    CHECK(back[i].p == rows[i].p);
    CHECK(back[i].x == rows[i].x);
    CHECK(back[i].q == rows[i].q);
    CHECK(back[i].method == rows[i].method);
    CHECK(back[i].value == rows[i].value);  // shortest round-trip formatting
    CHECK(back[i].lower == rows[i].lower);
    CHECK(back[i].upper == rows[i].upper);
    CHECK(back[i].clamp == rows[i].clamp);
    CHECK(back[i].flags == rows[i].flags);
  }

  auto bad = [](const std::string& text) {
    CHECK_THROWS_AS(rows_from_csv(text), SchemaMismatch);
  };
  bad("");
  bad("space_id,p,x,q,method,value,lower,upper,flags,clamp\n");  // shuffled
  bad(std::string(kCsvHeader) + "\nc,1,2,3,m,0.5,0.4,0.6,0\n");  // nine fields
  bad(std::string(kCsvHeader) + "\nc,1,2,3,m,zero,0.4,0.6,0,\n");
  bad(std::string(kCsvHeader) + "\nc,-1,2,3,m,0.5,0.4,0.6,0,\n");
}

TEST_CASE("triple sampling: separated, oracle-defined, reproducible") {
  OracleSpace os = euclidean_cloud(300, 2, 5);
  auto ts = sample_triples(os, 12, 0.25, 9);
  REQUIRE(ts.size() == 12);
  for (const TripleSample& t : ts) {
    CHECK(t.p != t.x);
    CHECK(t.q != t.x);
    CHECK(t.p != t.q);
    CHECK(os.space.dist(t.p, t.x) >= 0.25);
    CHECK(os.space.dist(t.q, t.x) >= 0.25);
    CHECK(os.space.dist(t.p, t.q) >= 0.25);
    CHECK(t.oracle >= 0.1);
    CHECK(t.oracle <= kPi - 0.1);
    CHECK(t.oracle == os.oracle_angle(t.p, t.x, t.q));
  }
  auto again = sample_triples(os, 12, 0.25, 9);
  auto moved = sample_triples(os, 12, 0.25, 10);
  bool same = true, different = false;
  for (std::size_t i = 0; i < 12; ++i) {
    same = same && ts[i].p == again[i].p && ts[i].x == again[i].x && ts[i].q == again[i].q;
    different = different || ts[i].p != moved[i].p || ts[i].x != moved[i].x;
  }
  CHECK(same);
  CHECK(different);
  CHECK_THROWS_AS(sample_triples(os, 50, 2.5, 1), ConfigError);
}

TEST_CASE("experiment runs are byte-stable and write what they report") {
  ExperimentConfig cfg;
  cfg.kind = "euclidean_cloud";
  cfg.n = 200;
  cfg.seed = 3;
  cfg.methods = {"three_points", "cosine"};
  cfg.triple_count = 4;
  cfg.min_separation = 0.3;
  cfg.eps_list = {0.4, 0.2};
  cfg.out_csv = "exp_test_rows.csv";
  cfg.out_summary = "exp_test_summary.json";
  cfg.out_svg = "exp_test_scatter.svg";

  RunOutput a = run_experiment(cfg);
  RunOutput b = run_experiment(cfg);
  CHECK(a.invariants_ok);
  CHECK(a.csv == b.csv);
  CHECK(a.summary_json == b.summary_json);
  CHECK(a.svg == b.svg);
  REQUIRE(a.rows.size() == 8);  // 4 triples x 2 methods
  for (const ResultRow& r : a.rows) CHECK(r.flags.find("error") == std::string::npos);

  CHECK(slurp(cfg.out_csv) == a.csv);
  CHECK(slurp(cfg.out_summary) == a.summary_json);
  CHECK(slurp(cfg.out_svg) == a.svg);
  std::remove(cfg.out_csv.c_str());
  std::remove(cfg.out_summary.c_str());
  std::remove(cfg.out_svg.c_str());

  std::vector<ResultRow> parsed = rows_from_csv(a.csv);
  REQUIRE(parsed.size() == a.rows.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].method == a.rows[i].method);
    CHECK(parsed[i].value == a.rows[i].value);
  }
  CHECK(a.summary_json.find("\"methods\"") != std::string::npos);
  CHECK(a.svg.find("<svg") != std::string::npos);

  // loading the space from a file reproduces the generated run
  std::string space_path = "exp_test_space.json";
  {
    std::ofstream out(space_path, std::ios::binary);
    out << oracle_space_to_json(a.space);
  }
  ExperimentConfig fromfile;
  fromfile.space_file = space_path;
  fromfile.methods = cfg.methods;
  fromfile.triple_count = cfg.triple_count;
  fromfile.min_separation = cfg.min_separation;
  fromfile.eps_list = cfg.eps_list;
  RunOutput c = run_experiment(fromfile);
  CHECK(c.space.id == a.space.id);
  CHECK(c.csv == a.csv);
  std::remove(space_path.c_str());
}

TEST_CASE("comparison stats: exact match, constant offset, skipped exclusion") {
  OracleSpace os = euclidean_cloud(50, 2, 2);
  auto ts = sample_triples(os, 2, 0.2, 4);
  std::vector<ResultRow> rows;
  for (const TripleSample& t : ts) {
    rows.push_back({os.id, t.p, t.x, t.q, "three_points", t.oracle + 0.05, 0, 0, 0, ""});
    rows.push_back({os.id, t.p, t.x, t.q, "alpha", t.oracle, 0, 0, 0, ""});
    rows.push_back({os.id, t.p, t.x, t.q, "beta", t.oracle + 0.1, 0, 0, 0.2, ""});
  }
  rows.push_back({os.id, ts[0].p, ts[0].x, ts[0].q, "beta", 99.0, 0, 0, 0, "skipped:off"});

  CompareSummary cs = compare_results(rows, os);
  REQUIRE(cs.methods.size() == 3);  // alphabetical: alpha, beta, three_points
  CHECK(cs.methods[0].method == "alpha");
  CHECK(cs.methods[0].median_abs_err == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(cs.methods[1].method == "beta");
  CHECK(cs.methods[1].count == 3);
  CHECK(cs.methods[1].skipped == 1);
  CHECK(cs.methods[1].with_oracle == 2);  // the skipped row never scores
  CHECK(cs.methods[1].clamped == 2);
  CHECK(cs.methods[1].median_abs_err == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(cs.methods[2].method == "three_points");
  CHECK(cs.methods[2].median_abs_err == doctest::Approx(0.05).epsilon(1e-12));

  REQUIRE(cs.pairs.size() == 2);
  CHECK(cs.pairs[0].a == "three_points");
  CHECK(cs.pairs[0].b == "alpha");
  CHECK(cs.pairs[0].count == 2);
  CHECK(cs.pairs[0].median_abs == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(cs.pairs[1].b == "beta");
  CHECK(cs.pairs[1].median_abs == doctest::Approx(0.05).epsilon(1e-12));

  std::string sj = summary_to_json(cs);
  CHECK(sj.find("three_points") != std::string::npos);
  CHECK(sj.find("median_abs") != std::string::npos);

  std::string svg = render_scatter_svg(rows, os);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("circle") != std::string::npos);
  CHECK(render_scatter_svg(rows, os) == svg);
}

TEST_CASE("the representing-function demo separates the two readings by pi") {
  FDependenceDemo demo = run_f_dependence_demo();
  CHECK(demo.star.kind == "metric_tree");
  CHECK(std::fabs(demo.defect_f1) <= 0.05);
  CHECK(std::fabs(demo.defect_f2) <= 0.05);
  CHECK(demo.angle_f1 == doctest::Approx(kPi).epsilon(1e-9));
  CHECK(demo.angle_f2 == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(demo.separation == doctest::Approx(kPi).epsilon(1e-9));
}
