#pragma once

#include "mmangle/spaces.hpp"

namespace mmangle {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SchemaMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Batch run description. Either space_file points at a serialized oracle
// space, or kind plus the generator parameters describe one to build.
struct ExperimentConfig {
  std::string space_file;
  std::string kind;
  std::size_t n = 0, dim = 2, nx = 0, ny = 0;
  double spacing = 0.0, alpha = 0.0, sigma = 0.0, h = 0.0;
  std::uint64_t seed = 1;

  std::vector<std::string> methods;

  std::size_t triple_count = 10;
  double min_separation = 0.0;
  std::uint64_t triple_seed = 7;

  double scale_mult = 0.0;  // lip neighborhood = scale_mult * h; 0 = default
  std::vector<double> eps_list = {0.4, 0.2, 0.1};
  std::vector<double> radii = {0.4, 0.2, 0.1};         // shrinking-ball sweep
  std::vector<double> blowup_radii;                    // defaults to radii
  double probe_C = 4.0;
  double tolerance = 0.25;

  std::string out_csv, out_summary, out_svg;
};

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);

// Random generic triples: pairwise separation >= min_sep, oracle defined,
// and the oracle angle away from the degenerate 0 / pi ends (those regimes
// get their own dedicated exact tests).
struct TripleSample {
  PointId p, x, q;
  double oracle = 0.0;
};
std::vector<TripleSample> sample_triples(const OracleSpace& os, std::size_t count, double min_sep,
                                         std::uint64_t seed);

// One measurement. value/lower/upper are radians for angle methods; flags
// is a semicolon-joined token list (nonconverged, unreliable, skipped:...,
// error:..., plus per-method diagnostics).
struct ResultRow {
  std::string space_id;
  PointId p = 0, x = 0, q = 0;
  std::string method;
  double value = 0.0, lower = 0.0, upper = 0.0, clamp = 0.0;
  std::string flags;
};

inline const char* kCsvHeader = "space_id,p,x,q,method,value,lower,upper,clamp,flags";

std::string rows_to_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> rows_from_csv(const std::string& text);  // SchemaMismatch

struct RunOutput {
  OracleSpace space;
  std::vector<TripleSample> triples;
  std::vector<ResultRow> rows;
  std::string csv;
  std::string summary_json;
  std::string svg;
  bool invariants_ok = true;
};

// Runs every configured method on every sampled triple, deterministically
// (fixed seeds, stable ordering, shortest round-trip number formatting).
// Writes the configured output files. Domain-level degeneracies become row
// flags; contract breaches (solver certificates, internal invariants)
// clear invariants_ok.
RunOutput run_experiment(const ExperimentConfig& cfg);

struct MethodStats {
  std::string method;
  std::size_t count = 0, with_oracle = 0, clamped = 0, nonconverged = 0, skipped = 0, errors = 0;
  double median_abs_err = 0.0, max_abs_err = 0.0;
};
struct CompareSummary {
  std::vector<MethodStats> methods;
  // agreement between method pairs matched per triple: method a, method b,
  // count, median |a-b|, max |a-b|
  struct Pair {
    std::string a, b;
    std::size_t count = 0;
    double median_abs = 0.0, max_abs = 0.0;
  };
  std::vector<Pair> pairs;
};

CompareSummary compare_results(const std::vector<ResultRow>& rows, const OracleSpace& os);
std::string summary_to_json(const CompareSummary& cs);

// Self-contained method-vs-oracle scatter.
std::string render_scatter_svg(const std::vector<ResultRow>& rows, const OracleSpace& os);

// The tree demonstration that the geodesic angle can depend on the choice
// of representing function: two fields, both representing the gradient of
// the same edge geodesic within slack, whose angle readings along a second
// edge differ by pi.
struct FDependenceDemo {
  OracleSpace star;
  double defect_f1 = 0.0, defect_f2 = 0.0;  // both must be small
  double angle_f1 = 0.0, angle_f2 = 0.0;    // pi vs 0
  double separation = 0.0;                  // |angle_f1 - angle_f2|
};
FDependenceDemo run_f_dependence_demo();

}  // namespace mmangle
