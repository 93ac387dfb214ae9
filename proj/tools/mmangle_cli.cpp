#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mmangle/blowup.hpp"
#include "mmangle/experiment.hpp"
#include "mmangle/geodesics.hpp"
#include "mmangle/harmonic.hpp"
#include "mmangle/spaces.hpp"
#include "mmangle/util.hpp"

using namespace mmangle;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file " + path);
  out.write(content.data(), std::streamsize(content.size()));
  if (!out) throw ConfigError("short write to " + path);
}

struct GenArgs {
  std::string kind, out;
  std::size_t n = 2000, dim = 2, nx = 0, ny = 0;
  double spacing = 0.0, alpha = 0.0, sigma = 0.0, h = 0.0;
  std::uint64_t seed = 1;
};

int cmd_gen_space(const GenArgs& a) {
  OracleSpace os;
  if (a.kind == "euclidean_cloud") {
    os = euclidean_cloud(a.n, a.dim, a.seed, a.h);
  } else if (a.kind == "euclidean_grid") {
    if (a.nx < 2 || a.ny < 2 || !(a.spacing > 0.0))
      throw ConfigError("euclidean_grid needs --nx, --ny and --spacing");
    os = euclidean_grid(a.nx, a.ny, a.spacing);
  } else if (a.kind == "sphere_cloud") {
    os = sphere_cloud(a.n, a.seed, a.h);
  } else if (a.kind == "cone_cloud") {
    if (!(a.alpha > 0.0)) throw ConfigError("cone_cloud needs --alpha");
    os = cone_cloud(a.alpha, a.n, a.seed, a.h);
  } else if (a.kind == "gaussian_cloud") {
    if (!(a.sigma > 0.0)) throw ConfigError("gaussian_cloud needs --sigma");
    os = gaussian_weighted_cloud(a.n, a.dim, a.seed, a.sigma, a.h);
  } else {
    throw ConfigError("unknown kind \"" + a.kind + "\"");
  }
  spit(a.out, oracle_space_to_json(os));
  std::cout << os.id << ": " << os.space.size() << " points, h = " << format_double(os.space.h)
            << ", wrote " << a.out << "\n";
  return 0;
}

int cmd_run(const std::string& config_path) {
  const ExperimentConfig cfg = config_from_json(slurp(config_path));
  const RunOutput out = run_experiment(cfg);
  std::cout << "space " << out.space.id << ": " << out.space.space.size()
            << " points, h = " << format_double(out.space.space.h) << "\n";
  std::cout << out.triples.size() << " triples, " << out.rows.size() << " result rows\n";
  if (!cfg.out_csv.empty()) std::cout << "wrote " << cfg.out_csv << "\n";
  if (!cfg.out_summary.empty()) std::cout << "wrote " << cfg.out_summary << "\n";
  if (!cfg.out_svg.empty()) std::cout << "wrote " << cfg.out_svg << "\n";
  if (!out.invariants_ok) {
    std::cout << "INVARIANT VIOLATION: see error flags in the results\n";
    return 1;
  }
  std::cout << "all invariants held\n";
  return 0;
}

int cmd_compare(const std::string& csv_path, const std::string& space_path,
                const std::string& out_path) {
  const auto rows = rows_from_csv(slurp(csv_path));
  const OracleSpace os = oracle_space_from_json(slurp(space_path));
  const std::string js = summary_to_json(compare_results(rows, os));
  if (out_path.empty()) {
    std::cout << js << "\n";
  } else {
    spit(out_path, js);
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

int cmd_demo_tree() {
  const FDependenceDemo d = run_f_dependence_demo();
  std::cout << "tripod with " << d.star.space.size() << " points\n";
  std::cout << "gradient defects along the first edge: f1 = " << format_double(d.defect_f1)
            << ", f2 = " << format_double(d.defect_f2) << "\n";
  std::cout << "angle read along the second edge: f1 -> " << format_double(d.angle_f1)
            << " rad, f2 -> " << format_double(d.angle_f2) << " rad\n";
  std::cout << "separation = " << format_double(d.separation) << " rad\n";
  const bool ok = d.separation >= 0.5 && std::abs(d.defect_f1) <= 0.05 &&
                  std::abs(d.defect_f2) <= 0.05;
  std::cout << (ok ? "the geodesic angle depends on the representing function\n"
                   : "DEMO FAILED\n");
  return ok ? 0 : 1;
}

struct HarmonicArgs {
  std::string space, out;
  PointId center = 0, pole = 0;
  double model_n = 0.0;
  std::vector<double> radii;
};

int cmd_sweep_harmonic(const HarmonicArgs& a) {
  const OracleSpace os = oracle_space_from_json(slurp(a.space));
  const DiscreteMMSpace& s = os.space;
  s.check_point(a.center, "sweep-harmonic center");
  s.check_point(a.pole, "sweep-harmonic pole");
  const double N = a.model_n > 0.0 ? a.model_n : os.N;
  if (!(N > 0.0) || !(N < std::numeric_limits<double>::infinity()))
    throw ConfigError("model dimension is unbounded here; pass --model-N");

  std::string csv = "R,sup_dev,energy_dev,C_of_G,residual\n";
  std::size_t produced = 0;
  for (double R : a.radii) {
    try {
      const HarmonicApproxReport rep = harmonic_approximation(s, a.center, a.pole, N, R);
      const Ball B = ball(s, a.center, R);
      const GraphLaplacian L = build_laplacian(s, B, N);
      const PoissonG G = bounded_poisson_G(s, L);
      csv += format_double(R) + "," + format_double(rep.sup_dev) + "," +
             format_double(rep.energy_dev) + "," + format_double(G.C) + "," +
             format_double(std::max(rep.residual, G.residual)) + "\n";
      ++produced;
    } catch (const std::exception& e) {
      std::cerr << "radius " << format_double(R) << " skipped: " << e.what() << "\n";
    }
  }
  if (!produced) throw ConfigError("no radius produced a usable Dirichlet system");
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    spit(a.out, csv);
    std::cout << "wrote " << a.out << "\n";
  }
  return 0;
}

struct BlowupArgs {
  std::string space, out;
  PointId x = 0, p = 0, q = 0, phat = 0, qhat = 0;
  bool phat_set = false, qhat_set = false;
  std::vector<double> radii;
  std::size_t min_stage = 200;
};

int cmd_sweep_blowup(const BlowupArgs& a) {
  const OracleSpace os = oracle_space_from_json(slurp(a.space));
  const DiscreteMMSpace& s = os.space;
  for (PointId v : {a.x, a.p, a.q}) s.check_point(v, "sweep-blowup point");
  if (a.radii.empty()) throw ConfigError("need --radii");

  PointId phat = a.phat, qhat = a.qhat;
  if (!a.phat_set) {
    const auto cert = is_interior_extendable(s, shortest_geodesic(s, a.x, a.p), a.radii.front());
    if (!cert.found) throw ConfigError("no antipodal witness for p; pass --phat");
    phat = cert.witness;
  }
  if (!a.qhat_set) {
    const auto cert = is_interior_extendable(s, shortest_geodesic(s, a.x, a.q), a.radii.front());
    if (!cert.found) throw ConfigError("no antipodal witness for q; pass --qhat");
    qhat = cert.witness;
  }

  const BlowupSequence seq = build_blowup(s, a.x, a.p, a.q, phat, qhat, a.radii, a.min_stage);
  for (const auto& w : seq.warnings) std::cerr << w << "\n";
  const BlowupAngleReport rep = angle_stability_across_scales(seq);
  std::cerr << "phat = " << phat << ", qhat = " << qhat
            << ", base angle = " << format_double(rep.base_angle)
            << " rad, final = " << format_double(rep.final_radians) << " rad\n";

  std::string csv = "r,pair_defect_p,pair_defect_q,avg_cosine,n_points\n";
  for (std::size_t i = 0; i < seq.stages.size(); ++i) {
    csv += format_double(seq.stages[i].r) + "," +
           format_double(busemann_pair_defect(seq, i, false)) + "," +
           format_double(busemann_pair_defect(seq, i, true)) + "," +
           format_double(rep.rows[i].cosine) + "," + std::to_string(rep.rows[i].n_avg) + "\n";
  }
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    spit(a.out, csv);
    std::cout << "wrote " << a.out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"angle estimators on finite metric measure spaces"};
  app.require_subcommand(1);
  int code = 0;

  GenArgs gen;
  auto* sc_gen = app.add_subcommand("gen-space", "generate a space with its analytic oracle");
  sc_gen->set_help_flag("--help", "print help");  // frees -h/--h for the radius below
  sc_gen->add_option("--kind", gen.kind,
                     "euclidean_cloud | euclidean_grid | sphere_cloud | cone_cloud | gaussian_cloud")
      ->required();
  sc_gen->add_option("--n", gen.n, "sample size");
  sc_gen->add_option("--dim", gen.dim, "ambient dimension");
  sc_gen->add_option("--nx", gen.nx, "grid width");
  sc_gen->add_option("--ny", gen.ny, "grid height");
  sc_gen->add_option("--spacing", gen.spacing, "grid spacing");
  sc_gen->add_option("--alpha", gen.alpha, "cone opening angle");
  sc_gen->add_option("--sigma", gen.sigma, "gaussian weight width");
  sc_gen->add_option("--h", gen.h, "neighborhood radius (0 = automatic)");
  sc_gen->add_option("--seed", gen.seed, "sampling seed");
  sc_gen->add_option("--out", gen.out, "output JSON path")->required();
  sc_gen->callback([&] { code = cmd_gen_space(gen); });

  std::string run_config;
  auto* sc_run = app.add_subcommand("run", "run a batch experiment from a JSON config");
  sc_run->add_option("--config", run_config, "config JSON path")->required();
  sc_run->callback([&] { code = cmd_run(run_config); });

  std::string cmp_csv, cmp_space, cmp_out;
  auto* sc_cmp = app.add_subcommand("compare", "summarize a results CSV against a space oracle");
  sc_cmp->add_option("--csv", cmp_csv, "results CSV path")->required();
  sc_cmp->add_option("--space", cmp_space, "space JSON path")->required();
  sc_cmp->add_option("--out", cmp_out, "summary JSON path (default stdout)");
  sc_cmp->callback([&] { code = cmd_compare(cmp_csv, cmp_space, cmp_out); });

  auto* sc_demo = app.add_subcommand(
      "demo-tree", "show that the geodesic angle depends on the representing function");
  sc_demo->callback([&] { code = cmd_demo_tree(); });

  HarmonicArgs ha;
  auto* sc_h = app.add_subcommand("sweep-harmonic",
                                  "harmonic replacement deviations across ball radii");
  sc_h->add_option("--space", ha.space, "space JSON path")->required();
  sc_h->add_option("--center", ha.center, "ball center id")->required();
  sc_h->add_option("--pole", ha.pole, "distance pole id")->required();
  sc_h->add_option("--model-N", ha.model_n, "model dimension (default: the space's)");
  sc_h->add_option("--radii", ha.radii, "ball radii")->required()->delimiter(',');
  sc_h->add_option("--out", ha.out, "CSV path (default stdout)");
  sc_h->callback([&] { code = cmd_sweep_harmonic(ha); });

  BlowupArgs ba;
  auto* sc_b = app.add_subcommand("sweep-blowup", "blow-up diagnostics across scales");
  sc_b->add_option("--space", ba.space, "space JSON path")->required();
  sc_b->add_option("--x", ba.x, "center id")->required();
  sc_b->add_option("--p", ba.p, "first pole id")->required();
  sc_b->add_option("--q", ba.q, "second pole id")->required();
  auto* oph = sc_b->add_option("--phat", ba.phat, "antipode of p (default: searched)");
  auto* oqh = sc_b->add_option("--qhat", ba.qhat, "antipode of q (default: searched)");
  sc_b->add_option("--radii", ba.radii, "stage scales, decreasing")->required()->delimiter(',');
  sc_b->add_option("--min-stage", ba.min_stage, "minimum unit-ball points per stage");
  sc_b->callback([&] {
    ba.phat_set = oph->count() > 0;
    ba.qhat_set = oqh->count() > 0;
    code = cmd_sweep_blowup(ba);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int c = app.exit(e);
    return c == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const SchemaMismatch& e) {
    std::cerr << "schema mismatch: " << e.what() << "\n";
    return 2;
  } catch (const NotExtendable& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 1;
  }
  return code;
}
