#include "mmangle/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mmangle/angles.hpp"
#include "mmangle/blowup.hpp"
#include "mmangle/geodesics.hpp"
#include "mmangle/harmonic.hpp"
#include "mmangle/util.hpp"
#include "mmangle/wasserstein.hpp"

namespace mmangle {

namespace {

using nlohmann::json;

constexpr double kPi = 3.14159265358979323846;

const std::set<std::string>& known_methods() {
  static const std::set<std::string> k = {"three_points",  "two_geodesics",
                                          "cosine",        "wasserstein_shrinking",
                                          "harmonic",      "blowup",
                                          "two_variable_probe"};
  return k;
}

const std::set<std::string>& known_kinds() {
  static const std::set<std::string> k = {"euclidean_cloud", "euclidean_grid", "sphere_cloud",
                                          "cone_cloud", "gaussian_cloud"};
  return k;
}

double clamp_unit(double c) { return std::min(1.0, std::max(-1.0, c)); }
double rad_of_cos(double c) { return std::acos(clamp_unit(c)); }

void append_flag(std::string& flags, const std::string& tok) {
  if (!flags.empty()) flags.push_back(';');
  flags += tok;
}

// Flag tokens are semicolon separated, so exception text loses its
// separators here (csv quoting handles the rest).
std::string sanitize_token(const std::string& msg) {
  std::string out;
  out.reserve(std::min<std::size_t>(msg.size(), 120));
  for (char c : msg) {
    if (out.size() >= 120) break;
    out.push_back((c == ';' || c == '\n' || c == '\r') ? ' ' : c);
  }
  return out;
}

// acos is decreasing, so a cosine-unit bracket maps to radians reversed.
void fill_from_cosine_units(ResultRow& r, const AngleValue& a) {
  r.value = a.radians;
  r.lower = rad_of_cos(a.estimate.upper);
  r.upper = rad_of_cos(a.estimate.lower);
  r.clamp = a.clamp;
  if (!a.estimate.converged) append_flag(r.flags, "nonconverged");
  if (a.unreliable) append_flag(r.flags, "unreliable");
}

void fill_from_radian_units(ResultRow& r, const AngleValue& a) {
  r.value = a.radians;
  r.lower = a.estimate.lower;
  r.upper = a.estimate.upper;
  r.clamp = a.clamp;
  if (!a.estimate.converged) append_flag(r.flags, "nonconverged");
  if (a.unreliable) append_flag(r.flags, "unreliable");
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

std::vector<double> decreasing_list(const json& v, const char* key) {
  if (!v.is_array() || v.empty()) throw ConfigError(std::string("config: ") + key + " must be a nonempty array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(std::string("config: ") + key + " entries must be numbers");
    out.push_back(e.get<double>());
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out[i] > 0.0)) throw ConfigError(std::string("config: ") + key + " entries must be positive");
    if (i && !(out[i] < out[i - 1]))
      throw ConfigError(std::string("config: ") + key + " must be strictly decreasing");
  }
  return out;
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");

  static const std::set<std::string> keys = {
      "space_file", "kind",        "n",          "dim",        "nx",
      "ny",         "spacing",     "alpha",      "sigma",      "h",
      "seed",       "methods",     "triple_count", "min_separation", "triple_seed",
      "scale_mult", "eps_list",    "radii",      "blowup_radii", "probe_C",
      "tolerance",  "out_csv",     "out_summary", "out_svg"};
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (!keys.count(k)) throw ConfigError("config: unknown key \"" + k + "\"");
  }

  ExperimentConfig cfg;
  auto str = [&](const char* k, std::string dflt) {
    if (!j.contains(k)) return dflt;
    if (!j.at(k).is_string()) throw ConfigError(std::string("config: ") + k + " must be a string");
    return j.at(k).get<std::string>();
  };
  auto num = [&](const char* k, double dflt) {
    if (!j.contains(k)) return dflt;
    if (!j.at(k).is_number()) throw ConfigError(std::string("config: ") + k + " must be a number");
    return j.at(k).get<double>();
  };
  auto idx = [&](const char* k, std::size_t dflt) {
    if (!j.contains(k)) return dflt;
    const auto& v = j.at(k);
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw ConfigError(std::string("config: ") + k + " must be a nonnegative integer");
    return std::size_t(v.get<long long>());
  };

  cfg.space_file = str("space_file", "");
  cfg.kind = str("kind", "");
  cfg.n = idx("n", cfg.n);
  cfg.dim = idx("dim", cfg.dim);
  cfg.nx = idx("nx", cfg.nx);
  cfg.ny = idx("ny", cfg.ny);
  cfg.spacing = num("spacing", cfg.spacing);
  cfg.alpha = num("alpha", cfg.alpha);
  cfg.sigma = num("sigma", cfg.sigma);
  cfg.h = num("h", cfg.h);
  cfg.seed = std::uint64_t(idx("seed", std::size_t(cfg.seed)));
  cfg.triple_count = idx("triple_count", cfg.triple_count);
  cfg.min_separation = num("min_separation", cfg.min_separation);
  cfg.triple_seed = std::uint64_t(idx("triple_seed", std::size_t(cfg.triple_seed)));
  cfg.scale_mult = num("scale_mult", cfg.scale_mult);
  cfg.probe_C = num("probe_C", cfg.probe_C);
  cfg.tolerance = num("tolerance", cfg.tolerance);
  cfg.out_csv = str("out_csv", "");
  cfg.out_summary = str("out_summary", "");
  cfg.out_svg = str("out_svg", "");

  if (j.contains("methods")) {
    if (!j.at("methods").is_array()) throw ConfigError("config: methods must be an array");
    cfg.methods.clear();
    for (const auto& e : j.at("methods")) {
      if (!e.is_string()) throw ConfigError("config: methods entries must be strings");
      cfg.methods.push_back(e.get<std::string>());
    }
  }
  if (j.contains("eps_list")) cfg.eps_list = decreasing_list(j.at("eps_list"), "eps_list");
  if (j.contains("radii")) cfg.radii = decreasing_list(j.at("radii"), "radii");
  if (j.contains("blowup_radii")) cfg.blowup_radii = decreasing_list(j.at("blowup_radii"), "blowup_radii");

  require(!cfg.space_file.empty() || !cfg.kind.empty(), "config: need kind or space_file");
  if (!cfg.kind.empty())
    require(known_kinds().count(cfg.kind) != 0, "config: unknown kind \"" + cfg.kind + "\"");
  for (const auto& m : cfg.methods)
    require(known_methods().count(m) != 0, "config: unknown method \"" + m + "\"");
  require(!cfg.methods.empty(), "config: methods must not be empty");
  require(cfg.triple_count >= 1, "config: triple_count must be at least 1");
  require(cfg.probe_C >= 1.0, "config: probe_C must be >= 1");
  require(cfg.tolerance > 0.0, "config: tolerance must be positive");
  require(cfg.scale_mult >= 0.0, "config: scale_mult must be nonnegative");
  require(cfg.min_separation >= 0.0, "config: min_separation must be nonnegative");
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  if (!cfg.space_file.empty()) j["space_file"] = cfg.space_file;
  if (!cfg.kind.empty()) j["kind"] = cfg.kind;
  j["n"] = cfg.n;
  j["dim"] = cfg.dim;
  if (cfg.nx) j["nx"] = cfg.nx;
  if (cfg.ny) j["ny"] = cfg.ny;
  if (cfg.spacing > 0.0) j["spacing"] = cfg.spacing;
  if (cfg.alpha > 0.0) j["alpha"] = cfg.alpha;
  if (cfg.sigma > 0.0) j["sigma"] = cfg.sigma;
  if (cfg.h > 0.0) j["h"] = cfg.h;
  j["seed"] = cfg.seed;
  j["methods"] = cfg.methods;
  j["triple_count"] = cfg.triple_count;
  j["min_separation"] = cfg.min_separation;
  j["triple_seed"] = cfg.triple_seed;
  j["scale_mult"] = cfg.scale_mult;
  j["eps_list"] = cfg.eps_list;
  j["radii"] = cfg.radii;
  if (!cfg.blowup_radii.empty()) j["blowup_radii"] = cfg.blowup_radii;
  j["probe_C"] = cfg.probe_C;
  j["tolerance"] = cfg.tolerance;
  if (!cfg.out_csv.empty()) j["out_csv"] = cfg.out_csv;
  if (!cfg.out_summary.empty()) j["out_summary"] = cfg.out_summary;
  if (!cfg.out_svg.empty()) j["out_svg"] = cfg.out_svg;
  return j.dump(2);
}

std::vector<TripleSample> sample_triples(const OracleSpace& os, std::size_t count, double min_sep,
                                         std::uint64_t seed) {
  const DiscreteMMSpace& s = os.space;
  if (s.size() < 3) throw ConfigError("sample_triples: space has fewer than 3 points");
  Rng rng(seed);
  std::vector<TripleSample> out;
  std::set<std::tuple<PointId, PointId, PointId>> seen;
  const std::size_t max_attempts = 500 * count + 1000;
  for (std::size_t att = 0; att < max_attempts && out.size() < count; ++att) {
    const PointId p = PointId(rng.next_below(s.size()));
    const PointId x = PointId(rng.next_below(s.size()));
    const PointId q = PointId(rng.next_below(s.size()));
    if (p == x || x == q || p == q) continue;
    if (s.dist(p, x) < min_sep || s.dist(x, q) < min_sep || s.dist(p, q) < min_sep) continue;
    if (!os.oracle_defined(p, x, q)) continue;
    const double ang = os.oracle_angle(p, x, q);
    // degenerate 0 / pi readings have their own exact tests; keep the batch generic
    if (ang < 0.1 || ang > kPi - 0.1) continue;
    if (!seen.insert({p, x, q}).second) continue;
    out.push_back(TripleSample{p, x, q, ang});
  }
  if (out.size() < count)
    throw ConfigError("sample_triples: not enough admissible triples under the given separation");
  return out;
}

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
  std::string out = kCsvHeader;
  out.push_back('\n');
  for (const auto& r : rows) {
    out += csv_field(r.space_id);
    out.push_back(',');
    out += std::to_string(r.p);
    out.push_back(',');
    out += std::to_string(r.x);
    out.push_back(',');
    out += std::to_string(r.q);
    out.push_back(',');
    out += csv_field(r.method);
    out.push_back(',');
    out += format_double(r.value);
    out.push_back(',');
    out += format_double(r.lower);
    out.push_back(',');
    out += format_double(r.upper);
    out.push_back(',');
    out += format_double(r.clamp);
    out.push_back(',');
    out += csv_field(r.flags);
    out.push_back('\n');
  }
  return out;
}

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> recs;
  std::vector<std::string> cur;
  std::string field;
  bool in_quotes = false;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < n && text[i + 1] == '"') {
          field.push_back('"');
          i += 2;
        } else {
          in_quotes = false;
          ++i;
        }
      } else {
        field.push_back(c);
        ++i;
      }
    } else if (c == '"') {
      in_quotes = true;
      ++i;
    } else if (c == ',') {
      cur.push_back(field);
      field.clear();
      ++i;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < n && text[i + 1] == '\n') ++i;
      ++i;
      cur.push_back(field);
      field.clear();
      if (cur.size() > 1 || !cur.front().empty()) recs.push_back(cur);
      cur.clear();
    } else {
      field.push_back(c);
      ++i;
    }
  }
  if (in_quotes) throw SchemaMismatch("csv: unterminated quoted field");
  if (!field.empty() || !cur.empty()) {
    cur.push_back(field);
    if (cur.size() > 1 || !cur.front().empty()) recs.push_back(cur);
  }
  return recs;
}

std::vector<std::string> split_header() {
  std::vector<std::string> out;
  std::stringstream ss(kCsvHeader);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

PointId parse_point(const std::string& f) {
  if (f.empty()) throw SchemaMismatch("csv: empty point id");
  std::uint64_t v = 0;
  for (char c : f) {
    if (c < '0' || c > '9') throw SchemaMismatch("csv: bad point id \"" + f + "\"");
    v = v * 10 + std::uint64_t(c - '0');
    if (v > std::numeric_limits<PointId>::max()) throw SchemaMismatch("csv: point id overflow");
  }
  return PointId(v);
}

double parse_number(const std::string& f) {
  if (f.empty()) throw SchemaMismatch("csv: empty numeric field");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(f, &used);
  } catch (const std::exception&) {
    throw SchemaMismatch("csv: bad number \"" + f + "\"");
  }
  if (used != f.size()) throw SchemaMismatch("csv: bad number \"" + f + "\"");
  return v;
}

}  // namespace

std::vector<ResultRow> rows_from_csv(const std::string& text) {
  const auto recs = parse_csv(text);
  if (recs.empty()) throw SchemaMismatch("csv: no header record");
  const auto header = split_header();
  if (recs.front() != header) throw SchemaMismatch("csv: header does not match the result schema");
  std::vector<ResultRow> rows;
  for (std::size_t i = 1; i < recs.size(); ++i) {
    const auto& rec = recs[i];
    if (rec.size() != header.size())
      throw SchemaMismatch("csv: record " + std::to_string(i) + " has " +
                           std::to_string(rec.size()) + " fields");
    ResultRow r;
    r.space_id = rec[0];
    r.p = parse_point(rec[1]);
    r.x = parse_point(rec[2]);
    r.q = parse_point(rec[3]);
    r.method = rec[4];
    r.value = parse_number(rec[5]);
    r.lower = parse_number(rec[6]);
    r.upper = parse_number(rec[7]);
    r.clamp = parse_number(rec[8]);
    r.flags = rec[9];
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

OracleSpace build_space_from_config(const ExperimentConfig& cfg) {
  if (cfg.kind == "euclidean_cloud") {
    require(cfg.n >= 3, "config: euclidean_cloud needs n");
    require(cfg.dim >= 1, "config: euclidean_cloud needs dim");
    return euclidean_cloud(cfg.n, cfg.dim, cfg.seed, cfg.h);
  }
  if (cfg.kind == "euclidean_grid") {
    require(cfg.nx >= 2 && cfg.ny >= 2, "config: euclidean_grid needs nx, ny");
    require(cfg.spacing > 0.0, "config: euclidean_grid needs spacing");
    return euclidean_grid(cfg.nx, cfg.ny, cfg.spacing);
  }
  if (cfg.kind == "sphere_cloud") {
    require(cfg.n >= 3, "config: sphere_cloud needs n");
    return sphere_cloud(cfg.n, cfg.seed, cfg.h);
  }
  if (cfg.kind == "cone_cloud") {
    require(cfg.n >= 3, "config: cone_cloud needs n");
    require(cfg.alpha > 0.0, "config: cone_cloud needs alpha");
    return cone_cloud(cfg.alpha, cfg.n, cfg.seed, cfg.h);
  }
  if (cfg.kind == "gaussian_cloud") {
    require(cfg.n >= 3, "config: gaussian_cloud needs n");
    require(cfg.dim >= 1, "config: gaussian_cloud needs dim");
    require(cfg.sigma > 0.0, "config: gaussian_cloud needs sigma");
    return gaussian_weighted_cloud(cfg.n, cfg.dim, cfg.seed, cfg.sigma, cfg.h);
  }
  throw ConfigError("config: unknown kind \"" + cfg.kind + "\"");
}

struct RowSink {
  std::vector<ResultRow>& rows;
  std::atomic<bool>& ok;
};

void mark_fatal(ResultRow& r, std::atomic<bool>& ok, const char* kind, const std::string& what) {
  append_flag(r.flags, std::string("error:") + kind + " " + sanitize_token(what));
  ok.store(false, std::memory_order_relaxed);
}

void mark_skipped(ResultRow& r, const std::string& what) {
  append_flag(r.flags, "skipped:" + sanitize_token(what));
}

// One method on one triple. Domain degeneracies (no neighbor, unreachable
// geometry, short geodesics, poles inside the probe ball) become skip
// flags; certificate and invariant failures poison the whole run.
template <typename Fn>
void guarded(ResultRow& r, std::atomic<bool>& ok, Fn&& fn) {
  try {
    fn();
  } catch (const SolverFailure& e) {
    mark_fatal(r, ok, "solver", e.what());
  } catch (const CompressionViolation& e) {
    mark_fatal(r, ok, "compression", e.what());
  } catch (const SingularSystem& e) {
    mark_fatal(r, ok, "singular", e.what());
  } catch (const NoConvergence& e) {
    mark_fatal(r, ok, "noconvergence", e.what());
  } catch (const std::invalid_argument& e) {
    mark_skipped(r, e.what());
  } catch (const std::logic_error& e) {
    mark_fatal(r, ok, "invariant", e.what());
  } catch (const std::exception& e) {
    mark_skipped(r, e.what());
  }
}

ResultRow base_row(const OracleSpace& os, const TripleSample& tr, const std::string& method) {
  ResultRow r;
  r.space_id = os.id;
  r.p = tr.p;
  r.x = tr.x;
  r.q = tr.q;
  r.method = method;
  return r;
}

void run_three_points(const OracleSpace& os, const ExperimentConfig& cfg, double scale,
                      const TripleSample& tr, RowSink sink) {
  ResultRow r = base_row(os, tr, "three_points");
  guarded(r, sink.ok, [&] {
    const AngleValue a =
        angle_three_points(os.space, tr.p, tr.x, tr.q, cfg.eps_list, scale, cfg.tolerance);
    fill_from_cosine_units(r, a);
  });
  sink.rows.push_back(std::move(r));
}

void run_two_geodesics(const OracleSpace& os, const ExperimentConfig& cfg, double scale,
                       const TripleSample& tr, RowSink sink) {
  ResultRow r = base_row(os, tr, "two_geodesics");
  guarded(r, sink.ok, [&] {
    const DiscreteMMSpace& s = os.space;
    const DiscreteGeodesic gam = shortest_geodesic(s, tr.x, tr.p);
    const DiscreteGeodesic eta = shortest_geodesic(s, tr.x, tr.q);
    const auto grid = make_t_grid(std::min(gam.speed, eta.speed), s.h);
    const AngleValue a = angle_two_geodesics(s, gam, eta, nullptr, grid, scale, 0.0, cfg.tolerance);
    fill_from_cosine_units(r, a);
  });
  sink.rows.push_back(std::move(r));
}

void run_cosine(const OracleSpace& os, const ExperimentConfig& cfg, const TripleSample& tr,
                RowSink sink) {
  ResultRow r = base_row(os, tr, "cosine");
  guarded(r, sink.ok, [&] {
    const DiscreteMMSpace& s = os.space;
    const DiscreteGeodesic gam = shortest_geodesic(s, tr.x, tr.p);
    const DiscreteGeodesic eta = shortest_geodesic(s, tr.x, tr.q);
    const auto arcs = make_arc_grid(gam.speed, eta.speed, s.h);
    const AngleValue a = cosine_formula_angle(s, gam, eta, arcs, cfg.tolerance);
    fill_from_radian_units(r, a);
  });
  sink.rows.push_back(std::move(r));
}

void run_probe(const OracleSpace& os, const ExperimentConfig& cfg, const TripleSample& tr,
               RowSink sink) {
  ResultRow r = base_row(os, tr, "two_variable_probe");
  guarded(r, sink.ok, [&] {
    const DiscreteMMSpace& s = os.space;
    const DiscreteGeodesic gam = shortest_geodesic(s, tr.x, tr.p);
    const DiscreteGeodesic eta = shortest_geodesic(s, tr.x, tr.q);
    const auto arcs = make_arc_grid(gam.speed, eta.speed, s.h);
    std::vector<std::pair<double, double>> st;
    for (double a : arcs)
      for (double b : arcs) {
        const double ratio = a / b;
        if (ratio >= 1.0 / cfg.probe_C && ratio <= cfg.probe_C) st.emplace_back(a, b);
      }
    const ProbeReport rep = two_variable_cosine_probe(s, gam, eta, st, cfg.probe_C);
    r.value = rep.median_radians;
    r.lower = rep.min_radians;
    r.upper = rep.max_radians;
  });
  sink.rows.push_back(std::move(r));
}

void run_wasserstein(const OracleSpace& os, const ExperimentConfig& cfg, double scale,
                     const TripleSample& tr, RowSink sink) {
  std::vector<ShrinkingBallReading> reads;
  ResultRow probe = base_row(os, tr, "wasserstein_shrinking");
  bool failed = false;
  guarded(probe, sink.ok, [&] {
    try {
      reads = shrinking_ball_angle(os.space, tr.p, tr.q, tr.x, cfg.radii, cfg.eps_list.back(),
                                   scale);
    } catch (...) {
      failed = true;
      throw;
    }
  });
  if (failed || reads.empty()) {
    if (probe.flags.empty()) mark_skipped(probe, "no usable radius");
    sink.rows.push_back(std::move(probe));
    return;
  }
  for (const auto& rd : reads) {
    ResultRow r = base_row(os, tr, "wasserstein_shrinking:" + format_double(rd.radius));
    fill_from_cosine_units(r, rd.angle);
    sink.rows.push_back(std::move(r));
  }
}

void run_harmonic(const OracleSpace& os, const ExperimentConfig& cfg, double scale,
                  const TripleSample& tr, RowSink sink) {
  ResultRow r = base_row(os, tr, "harmonic");
  guarded(r, sink.ok, [&] {
    const DiscreteMMSpace& s = os.space;
    if (!(os.N < std::numeric_limits<double>::infinity())) {
      mark_skipped(r, "model dimension unbounded");
      return;
    }
    const double dxp = s.dist(tr.x, tr.p);
    const double dxq = s.dist(tr.x, tr.q);
    const double R = std::min(1.0, 0.45 * std::min(dxp, dxq));
    if (R < 4.0 * s.h) {
      mark_skipped(r, "ball too small for a harmonic replacement");
      return;
    }
    const HarmonicApproxReport hp = harmonic_approximation(s, tr.x, tr.p, os.N, R);
    const HarmonicApproxReport hq = harmonic_approximation(s, tr.x, tr.q, os.N, R);
    // keep the slope probe inside the replaced region
    const double eff = scale > 0.0 ? scale : default_scale(s);
    const double sc = std::min(eff, 0.5 * R);
    const auto [mid, width] =
        inner_product_at(s, hp.harmonic_b_p, hq.harmonic_b_p, tr.x, cfg.eps_list.back(), sc);
    const double lp = lip(s, hp.harmonic_b_p, tr.x, sc);
    const double lq = lip(s, hq.harmonic_b_p, tr.x, sc);
    const double den = lp * lq;
    if (den <= 1e-12) {
      mark_skipped(r, "degenerate replacement slope");
      return;
    }
    const double c = mid / den;
    r.value = rad_of_cos(c);
    r.lower = rad_of_cos((mid + 0.5 * width) / den);
    r.upper = rad_of_cos((mid - 0.5 * width) / den);
    r.clamp = std::max(0.0, std::abs(c) - 1.0);
    if (r.clamp > 0.05) append_flag(r.flags, "unreliable");
  });
  sink.rows.push_back(std::move(r));
}

void run_blowup(const OracleSpace& os, const ExperimentConfig& cfg, const TripleSample& tr,
                RowSink sink) {
  ResultRow r = base_row(os, tr, "blowup");
  guarded(r, sink.ok, [&] {
    const DiscreteMMSpace& s = os.space;
    const std::vector<double>& radii = cfg.blowup_radii.empty() ? cfg.radii : cfg.blowup_radii;
    const DiscreteGeodesic gp = shortest_geodesic(s, tr.x, tr.p);
    const DiscreteGeodesic gq = shortest_geodesic(s, tr.x, tr.q);
    const ExtensionCertificate cp = is_interior_extendable(s, gp, radii.front());
    const ExtensionCertificate cq = is_interior_extendable(s, gq, radii.front());
    if (!cp.found || !cq.found) {
      mark_skipped(r, "no antipodal extension witness");
      return;
    }
    const BlowupSequence seq =
        build_blowup(s, tr.x, tr.p, tr.q, cp.witness, cq.witness, radii);
    const BlowupAngleReport rep = angle_stability_across_scales(seq, cfg.eps_list.back());
    double lo = kPi, hi = 0.0;
    bool any = false, dropped = false;
    for (const auto& row : rep.rows) {
      if (row.dropped) {
        dropped = true;
        continue;
      }
      lo = std::min(lo, row.radians);
      hi = std::max(hi, row.radians);
      any = true;
    }
    if (!any) {
      mark_skipped(r, "every stage dropped");
      return;
    }
    r.value = rep.final_radians;
    r.lower = lo;
    r.upper = hi;
    if (dropped) append_flag(r.flags, "dropped_stage");
  });
  sink.rows.push_back(std::move(r));
}

std::vector<ResultRow> rows_for_triple(const OracleSpace& os, const ExperimentConfig& cfg,
                                       double scale, const TripleSample& tr,
                                       std::atomic<bool>& ok) {
  std::vector<ResultRow> rows;
  RowSink sink{rows, ok};
  for (const std::string& m : cfg.methods) {
    if (m == "three_points")
      run_three_points(os, cfg, scale, tr, sink);
    else if (m == "two_geodesics")
      run_two_geodesics(os, cfg, scale, tr, sink);
    else if (m == "cosine")
      run_cosine(os, cfg, tr, sink);
    else if (m == "two_variable_probe")
      run_probe(os, cfg, tr, sink);
    else if (m == "wasserstein_shrinking")
      run_wasserstein(os, cfg, scale, tr, sink);
    else if (m == "harmonic")
      run_harmonic(os, cfg, scale, tr, sink);
    else if (m == "blowup")
      run_blowup(os, cfg, tr, sink);
    else
      throw ConfigError("config: unknown method \"" + m + "\"");
  }
  return rows;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file " + path);
  out.write(content.data(), std::streamsize(content.size()));
  if (!out) throw ConfigError("short write to " + path);
}

}  // namespace

RunOutput run_experiment(const ExperimentConfig& cfg) {
  RunOutput out;
  if (!cfg.space_file.empty()) {
    std::ifstream in(cfg.space_file, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open space_file " + cfg.space_file);
    std::stringstream ss;
    ss << in.rdbuf();
    out.space = oracle_space_from_json(ss.str());
  } else {
    out.space = build_space_from_config(cfg);
  }
  for (const auto& m : cfg.methods)
    if (!known_methods().count(m)) throw ConfigError("config: unknown method \"" + m + "\"");
  if (cfg.methods.empty()) throw ConfigError("config: methods must not be empty");

  const DiscreteMMSpace& s = out.space.space;
  const double scale = cfg.scale_mult > 0.0 ? cfg.scale_mult * s.h : 0.0;

  out.triples = sample_triples(out.space, cfg.triple_count, cfg.min_separation, cfg.triple_seed);

  std::vector<std::vector<ResultRow>> slots(out.triples.size());
  std::atomic<bool> ok{true};
  parallel_for(out.triples.size(),
               [&](std::size_t i) { slots[i] = rows_for_triple(out.space, cfg, scale, out.triples[i], ok); });
  out.invariants_ok = ok.load();
  for (auto& slot : slots)
    for (auto& r : slot) out.rows.push_back(std::move(r));

  out.csv = rows_to_csv(out.rows);
  out.summary_json = summary_to_json(compare_results(out.rows, out.space));
  out.svg = render_scatter_svg(out.rows, out.space);

  if (!cfg.out_csv.empty()) write_file(cfg.out_csv, out.csv);
  if (!cfg.out_summary.empty()) write_file(cfg.out_summary, out.summary_json);
  if (!cfg.out_svg.empty()) write_file(cfg.out_svg, out.svg);
  return out;
}

namespace {

bool row_usable(const ResultRow& r) {
  return r.flags.find("skipped") == std::string::npos &&
         r.flags.find("error") == std::string::npos;
}

}  // namespace

CompareSummary compare_results(const std::vector<ResultRow>& rows, const OracleSpace& os) {
  CompareSummary cs;
  std::map<std::string, std::vector<const ResultRow*>> by_method;
  for (const auto& r : rows) by_method[r.method].push_back(&r);

  for (const auto& [m, rs] : by_method) {
    MethodStats st;
    st.method = m;
    st.count = rs.size();
    std::vector<double> errs;
    for (const ResultRow* r : rs) {
      if (r->flags.find("skipped") != std::string::npos) ++st.skipped;
      if (r->flags.find("error") != std::string::npos) ++st.errors;
      if (r->flags.find("nonconverged") != std::string::npos) ++st.nonconverged;
      if (std::abs(r->clamp) > 1e-12) ++st.clamped;
      if (!row_usable(*r)) continue;
      if (!os.oracle_defined(r->p, r->x, r->q)) continue;
      ++st.with_oracle;
      errs.push_back(std::abs(r->value - os.oracle_angle(r->p, r->x, r->q)));
    }
    if (!errs.empty()) {
      st.max_abs_err = *std::max_element(errs.begin(), errs.end());
      st.median_abs_err = median_of(std::move(errs));
    }
    cs.methods.push_back(std::move(st));
  }

  // per-triple agreement against the three-point baseline
  const auto base_it = by_method.find("three_points");
  if (base_it != by_method.end()) {
    std::map<std::tuple<PointId, PointId, PointId>, double> base_vals;
    for (const ResultRow* r : base_it->second)
      if (row_usable(*r)) base_vals[{r->p, r->x, r->q}] = r->value;
    for (const auto& [m, rs] : by_method) {
      if (m == "three_points") continue;
      std::vector<double> diffs;
      for (const ResultRow* r : rs) {
        if (!row_usable(*r)) continue;
        const auto it = base_vals.find({r->p, r->x, r->q});
        if (it == base_vals.end()) continue;
        diffs.push_back(std::abs(r->value - it->second));
      }
      if (diffs.empty()) continue;
      CompareSummary::Pair pr;
      pr.a = "three_points";
      pr.b = m;
      pr.count = diffs.size();
      pr.max_abs = *std::max_element(diffs.begin(), diffs.end());
      pr.median_abs = median_of(std::move(diffs));
      cs.pairs.push_back(std::move(pr));
    }
  }
  return cs;
}

std::string summary_to_json(const CompareSummary& cs) {
  json j;
  j["methods"] = json::array();
  for (const auto& m : cs.methods) {
    json e;
    e["method"] = m.method;
    e["count"] = m.count;
    e["with_oracle"] = m.with_oracle;
    e["clamped"] = m.clamped;
    e["nonconverged"] = m.nonconverged;
    e["skipped"] = m.skipped;
    e["errors"] = m.errors;
    e["median_abs_err"] = m.median_abs_err;
    e["max_abs_err"] = m.max_abs_err;
    j["methods"].push_back(std::move(e));
  }
  j["pairs"] = json::array();
  for (const auto& p : cs.pairs) {
    json e;
    e["a"] = p.a;
    e["b"] = p.b;
    e["count"] = p.count;
    e["median_abs"] = p.median_abs;
    e["max_abs"] = p.max_abs;
    j["pairs"].push_back(std::move(e));
  }
  return j.dump(2);
}

namespace {

const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                 "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"};
  return colors[i % 10];
}

// two-decimal label that format_double renders shortest ("1.57", not a
// 17-digit tail)
std::string short_label(double v) { return format_double(std::round(v * 100.0) / 100.0); }

}  // namespace

std::string render_scatter_svg(const std::vector<ResultRow>& rows, const OracleSpace& os) {
  constexpr double W = 640.0, Hh = 640.0, M = 70.0;
  const double span = W - 2.0 * M;
  auto px = [&](double v) { return M + span * (v / kPi); };
  auto py = [&](double v) { return Hh - M - span * (v / kPi); };

  std::map<std::string, std::vector<std::pair<double, double>>> pts;
  for (const auto& r : rows) {
    if (!row_usable(r)) continue;
    if (!os.oracle_defined(r.p, r.x, r.q)) continue;
    pts[r.method].emplace_back(os.oracle_angle(r.p, r.x, r.q), r.value);
  }

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"640\" "
         "viewBox=\"0 0 640 640\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"640\" fill=\"#ffffff\"/>\n";
  svg += "<rect x=\"" + format_double(M) + "\" y=\"" + format_double(M) + "\" width=\"" +
         format_double(span) + "\" height=\"" + format_double(span) +
         "\" fill=\"none\" stroke=\"#444444\"/>\n";
  svg += "<line x1=\"" + format_double(px(0.0)) + "\" y1=\"" + format_double(py(0.0)) +
         "\" x2=\"" + format_double(px(kPi)) + "\" y2=\"" + format_double(py(kPi)) +
         "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 3\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = kPi * double(k) / 4.0;
    svg += "<text x=\"" + format_double(px(v)) + "\" y=\"" + format_double(Hh - M + 22.0) +
           "\" font-size=\"13\" text-anchor=\"middle\" fill=\"#333333\">" + short_label(v) +
           "</text>\n";
    svg += "<text x=\"" + format_double(M - 10.0) + "\" y=\"" + format_double(py(v) + 4.0) +
           "\" font-size=\"13\" text-anchor=\"end\" fill=\"#333333\">" + short_label(v) +
           "</text>\n";
  }
  svg += "<text x=\"320\" y=\"625\" font-size=\"14\" text-anchor=\"middle\" "
         "fill=\"#333333\">oracle angle (rad)</text>\n";
  svg += "<text x=\"18\" y=\"320\" font-size=\"14\" text-anchor=\"middle\" fill=\"#333333\" "
         "transform=\"rotate(-90 18 320)\">measured angle (rad)</text>\n";

  std::size_t ci = 0;
  double ly = M + 6.0;
  for (const auto& [m, ps] : pts) {
    const char* col = palette(ci++);
    for (const auto& [ox, vy] : ps) {
      svg += "<circle cx=\"" + format_double(px(ox)) + "\" cy=\"" +
             format_double(py(std::min(kPi, std::max(0.0, vy)))) +
             "\" r=\"3.5\" fill=\"" + col + "\" fill-opacity=\"0.75\"/>\n";
    }
    svg += "<rect x=\"" + format_double(M + 8.0) + "\" y=\"" + format_double(ly) +
           "\" width=\"10\" height=\"10\" fill=\"" + std::string(col) + "\"/>\n";
    svg += "<text x=\"" + format_double(M + 24.0) + "\" y=\"" + format_double(ly + 9.0) +
           "\" font-size=\"12\" fill=\"#333333\">" + m + "</text>\n";
    ly += 16.0;
  }
  svg += "</svg>\n";
  return svg;
}

FDependenceDemo run_f_dependence_demo() {
  FDependenceDemo out;
  // unit tripod: center 0, leaves 1, 2, 3
  out.star = metric_tree({TreeEdge{0, 1, 1.0}, TreeEdge{0, 2, 1.0}, TreeEdge{0, 3, 1.0}}, 0.25);
  const DiscreteMMSpace& s = out.star.space;
  const PointId center = 0, leaf_a = 1, leaf_b = 2;

  const DiscreteGeodesic gam = shortest_geodesic(s, center, leaf_a);
  const DiscreteGeodesic eta = shortest_geodesic(s, center, leaf_b);

  // f1 is the canonical representative -d(leaf_a, .); f2 = d(center, .) - 1
  // agrees with it along gamma but climbs instead of falling on every other
  // branch. Both have unit slope at the center, so both represent gamma's
  // gradient there.
  ScalarField f1 = distance_field(s, leaf_a);
  for (double& v : f1) v = -v;
  ScalarField f2 = distance_field(s, center);
  for (double& v : f2) v -= 1.0;

  const auto grid = make_t_grid(std::min(gam.speed, eta.speed), s.h);
  out.defect_f1 = represents_gradient_defect(s, f1, gam, grid);
  out.defect_f2 = represents_gradient_defect(s, f2, gam, grid);

  const double slack = 0.05;
  out.angle_f1 = angle_two_geodesics(s, gam, eta, &f1, grid, 0.0, slack).radians;
  out.angle_f2 = angle_two_geodesics(s, gam, eta, &f2, grid, 0.0, slack).radians;
  out.separation = std::abs(out.angle_f1 - out.angle_f2);
  return out;
}

}  // namespace mmangle
