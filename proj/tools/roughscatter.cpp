// roughscatter: command-line front end.
//
//   roughscatter trace --spec H.json --xi X --phi P [--out DIR]
//   roughscatter measure --spec H.json --seed S [--samples N] [--bins B] [--out DIR] [--check]
//   roughscatter body --spec B.json --seed S [--samples N] [--bins B] [--lemma1] [--out DIR] [--check]
//   roughscatter synthesize --permutation "1 5;2 4" --m 5 --epsilon 0.05 --seed S [--out DIR]
//   roughscatter synthesize --family eta0 --k 8 [--out DIR]
//   roughscatter transport --density uniform --bins 180 [--out DIR]
//
// Exit status: 0 ok, 2 usage or validation, 3 numeric or solver failure,
// 4 a --check threshold failed.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "roughscatter/io.hpp"

namespace fs = std::filesystem;
using namespace roughscatter;

namespace {

struct RunConfig {
  std::string spec;
  std::uint64_t samples = 1000000;
  int bins = 32;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string out;
  bool check = false;
  std::optional<double> tol;
};

/// Output files are staged in memory and written together at the end, so
/// a failed run leaves nothing behind.
class Outputs {
 public:
  void add(std::string name, std::string content) { files_.emplace_back(std::move(name), std::move(content)); }
  void add(std::string name, const json& j) { add(std::move(name), j.dump(2) + "\n"); }

  void commit(const std::string& dir) const {
    if (dir.empty()) return;
    fs::create_directories(dir);
    std::vector<fs::path> written;
    try {
      for (const auto& [name, content] : files_) {
        const fs::path p = fs::path(dir) / name;
        const fs::path tmp = p.string() + ".part";
        {
          std::ofstream os(tmp, std::ios::binary);
          os << content;
          if (!os) throw Error(ErrorCode::kInvalidArgument, "cannot write '" + tmp.string() + "'");
        }
        written.push_back(tmp);
      }
      for (const auto& [name, content] : files_) {
        const fs::path p = fs::path(dir) / name;
        fs::rename(p.string() + ".part", p);
      }
    } catch (...) {
      std::error_code ec;
      for (const fs::path& p : written) fs::remove(p, ec);
      throw;
    }
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

json header(const std::string& command, const RunConfig& c, bool stochastic) {
  json h = {{"tool", "roughscatter"}, {"version", version()}, {"command", command}};
  if (!c.spec.empty()) h["spec"] = c.spec;
  if (stochastic) {
    h["seed"] = *c.seed;
    h["samples"] = c.samples;
  }
  return h;
}

std::uint64_t require_seed(const RunConfig& c) {
  if (!c.seed) throw Error(ErrorCode::kInvalidArgument, "--seed is required for stochastic runs");
  return *c.seed;
}

json load_spec(const RunConfig& c) {
  if (c.spec.empty()) throw Error(ErrorCode::kInvalidArgument, "--spec is required");
  return io::read_file(c.spec);
}

fs::path spec_dir(const RunConfig& c) { return fs::path(c.spec).parent_path(); }

std::optional<AnalyticFamily> parse_family(const std::string& s) {
  if (s.empty()) return std::nullopt;
  for (AnalyticFamily f : {AnalyticFamily::kEta0, AnalyticFamily::kEtaTriangular, AnalyticFamily::kEtaRectLimit,
                           AnalyticFamily::kEtaStar}) {
    if (s == family_name(f)) return f;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown family '" + s + "'");
}

BinningKind parse_binning(const std::string& s) {
  if (s == binning_name(BinningKind::kEqualLambda)) return BinningKind::kEqualLambda;
  if (s == binning_name(BinningKind::kUniform)) return BinningKind::kUniform;
  throw Error(ErrorCode::kInvalidArgument, "unknown binning '" + s + "'");
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// --- trace ----------------------------------------------------------------

int cmd_trace(const RunConfig& c, double xi, double phi) {
  const Hollow h = io::hollow_from_json(load_spec(c), spec_dir(c));
  if (!(std::abs(phi) < kHalfPi)) throw Error(ErrorCode::kInvalidArgument, "phi must lie in (-pi/2, pi/2)");
  if (!(std::abs(xi) < h.half_width())) throw Error(ErrorCode::kInvalidArgument, "xi must lie inside the opening");
  TraceOptions opt;
  opt.record_path = true;
  opt.record_curves = true;
  const TraceResult r = trace(h, {xi, phi}, opt);
  json res = header("trace", c, false);
  res["xi"] = xi;
  res["phi"] = phi;
  res["status"] = status_name(r.status);
  res["bounces"] = r.bounces;
  res["length"] = r.length;
  res["curves"] = r.curves;
  if (r.ok()) {
    res["xi_out"] = r.out.xi + 0.0;  // no negative zero
    res["phi_out"] = r.out.phi + 0.0;
  }
  std::cout << res.dump(2) << "\n";
  if (!r.ok()) {
    std::cerr << "trace failed: " << status_name(r.status) << "\n";
    return 3;
  }
  std::ostringstream path;
  path << "x,y\n";
  for (Point2 p : r.path) path << fmt(p.x) << "," << fmt(p.y) << "\n";
  Outputs out;
  out.add("path.csv", path.str());
  out.add("result.json", res);
  out.commit(c.out);
  return 0;
}

// --- measure --------------------------------------------------------------

int cmd_measure(const RunConfig& c, const std::string& binning, const std::string& compare) {
  const std::uint64_t seed = require_seed(c);
  const Hollow h = io::hollow_from_json(load_spec(c), spec_dir(c));
  const auto family = parse_family(compare);
  EstimateOptions opt;
  opt.samples = c.samples;
  opt.binning = Binning(parse_binning(binning), c.bins);
  opt.seed = seed;
  opt.threads = c.threads;
  const GridMeasure gm = estimate(h, opt);
  const double tol = c.tol.value_or(0.01);

  const LambdaDefect ld = lambda_defect(gm);
  const double sd = symmetry_defect(gm);
  json defects = header("measure", c, true);
  defects["tolerance"] = tol;
  defects["lambda_defect"] = {{"incoming", ld.incoming}, {"outgoing", ld.outgoing}};
  defects["symmetry_defect"] = sd;
  bool pass = ld.incoming < tol && ld.outgoing < tol && sd < tol;
  if (family) {
    const double tv = tv_distance(gm, discretize(*family, gm.binning()));
    defects["compare"] = {{"family", compare}, {"tv", tv}};
    pass = pass && tv < tol;
  }
  defects["pass"] = pass;

  json m = header("measure", c, true);
  m["hollow"] = io::to_json(h);
  m["measure"] = io::to_json(gm);

  Outputs out;
  out.add("measure.csv", io::to_csv(gm));
  out.add("measure.json", m);
  out.add("defects.json", defects);
  out.commit(c.out);
  std::cout << defects.dump(2) << "\n";
  return c.check && !pass ? 4 : 0;
}

// --- body -----------------------------------------------------------------

int cmd_body(const RunConfig& c, bool lemma1) {
  const std::uint64_t seed = require_seed(c);
  const json spec = load_spec(c);
  if (!io::is_body_spec(spec)) throw Error(ErrorCode::kInvalidArgument, "expected a body spec");
  const RoughBody rb(io::body_spec_from_json(spec, spec_dir(c)));
  const double tol = c.tol.value_or(0.01);

  BodyEstimateOptions opt;
  opt.samples = c.samples;
  opt.binning = Binning(BinningKind::kEqualLambda, c.bins);
  opt.seed = seed;
  opt.threads = c.threads;
  const T3Histogram h = estimate_nu(rb, opt);

  json defects = header("body", c, true);
  defects["tolerance"] = tol;
  const PackingCheck pc = check_packing(rb);
  defects["packing"] = {{"copies", pc.copies},
                        {"overlapping_pairs", pc.overlapping_pairs},
                        {"outside_triangle", pc.outside_triangle},
                        {"area_removed", rb.area_removed()},
                        {"ok", pc.ok()}};
  bool pass = pc.ok();
  if (!rb.spec().empty_interior) {
    const LambdaDefect a1 = a1_defect(h);
    const double a2 = a2_defect(h);
    defects["A1"] = {{"incoming", a1.incoming}, {"outgoing", a1.outgoing}};
    defects["A2"] = a2;
    pass = pass && a1.incoming < tol && a1.outgoing < tol && a2 < tol;
  }
  defects["resistance_uniform"] = resistance(h, RotationDensity::uniform());
  if (lemma1) {
    const Lemma1Stats s = lemma1_stats(rb, c.samples, seed, c.threads);
    defects["lemma1"] = {{"I_xi", s.I_xi},       {"se_xi", s.se_xi},
                         {"I_n", s.I_n},         {"se_n", s.se_n},
                         {"I_tau", s.I_tau},     {"se_tau", s.se_tau},
                         {"c_B", s.c_B},         {"area_removed", s.area_removed},
                         {"bound_xi", s.bound_xi}, {"bound_n", s.bound_n},
                         {"n_bound_applies", s.n_bound_applies},
                         {"xi_ok", s.xi_ok},     {"n_ok", s.n_ok},
                         {"discarded", s.discarded}};
    pass = pass && s.xi_ok && (!s.n_bound_applies || s.n_ok);
  }
  defects["pass"] = pass;

  json nu = header("body", c, true);
  nu["spec"] = io::to_json(rb.spec());
  nu["nu"] = io::to_json(h);

  Outputs out;
  out.add("nu.csv", io::to_csv(h));
  out.add("nu.json", nu);
  out.add("defects.json", defects);
  out.commit(c.out);
  std::cout << defects.dump(2) << "\n";
  return c.check && !pass ? 4 : 0;
}

// --- synthesize -----------------------------------------------------------

int cmd_synthesize_reflector(RunConfig c, const std::string& perm, int m, double eps, std::optional<int> k) {
  const std::uint64_t seed = require_seed(c);
  if (c.samples == 1000000) c.samples = 4000;  // per cell; the global default is far too many
  const InvolutivePermutation sigma = InvolutivePermutation::parse(perm, m);
  ReflectorHollowOptions opt;
  opt.k = k;
  const ReflectorHollow rh = build_reflector_hollow(sigma, eps, opt);
  const MisdirectionReport rep = misdirection(rh, c.samples, seed, c.threads);
  const double tol = c.tol.value_or(0.1);

  json hollow = header("synthesize", c, false);
  hollow.update(io::to_json(rh));
  json mis = header("synthesize", c, true);
  mis["samples_per_cell"] = c.samples;
  mis["samples"] = c.samples * rep.cells.size();
  mis["permutation"] = sigma.to_string();
  mis["epsilon"] = eps;
  mis["k"] = rh.k;
  mis["report"] = io::to_json(rep);
  double worst = 0.0;
  for (double f : rep.fraction) worst = std::max(worst, f);
  mis["worst_fraction"] = worst;
  mis["tolerance"] = tol;
  mis["pass"] = worst <= tol;

  Outputs out;
  out.add("hollow.json", hollow);
  out.add("misdirection.json", mis);
  out.commit(c.out);
  std::cout << mis.dump(2) << "\n";
  return c.check && worst > tol ? 4 : 0;
}

int cmd_synthesize_family(const RunConfig& c, const std::string& name, int k) {
  const auto family = parse_family(name);
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "--k must be positive");
  const GridMeasure eta = discretize(*family, Binning(BinningKind::kEqualLambda, k));
  const RationalBlockInput rat = approximate_measure(eta);
  const IntegerBlockMatrix im = to_integer_matrix(rat);
  const PermutationExpansion pe = expand_to_permutation(im);

  double err = 0.0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) err = std::max(err, std::abs(rat.value(i, j) - eta.at(i, j)));
  json r = header("synthesize", c, false);
  r["family"] = name;
  r["rational"] = io::to_json(rat);
  r["max_cell_error"] = err;
  r["scale"] = im.scale;
  r["block_sizes"] = pe.block_sizes;
  r["permutation_size"] = pe.sigma.size();
  if (pe.sigma.size() <= 4096) r["permutation"] = pe.sigma.map();

  Outputs out;
  out.add("synthesis.json", r);
  out.commit(c.out);
  std::cout << json{{"family", name}, {"k", k}, {"max_cell_error", err}, {"permutation_size", pe.sigma.size()}}.dump(2)
            << "\n";
  return 0;
}

// --- transport ------------------------------------------------------------

int cmd_transport(const RunConfig& c, const std::string& density, std::vector<int> refine) {
  const RotationDensity r = RotationDensity::parse(density);
  r.validate();
  if (refine.empty()) {
    for (int n = c.bins; n >= 2 && refine.size() < 3; n /= 2) refine.insert(refine.begin(), n);
  }
  std::sort(refine.begin(), refine.end());
  refine.erase(std::unique(refine.begin(), refine.end()), refine.end());
  if (refine.back() != c.bins) refine.push_back(c.bins);

  json table = json::array();
  std::cout << "n,value,duality_gap\n";
  std::optional<TransportPlan> last;
  bool certified = true, monotone = true;
  double prev = std::numeric_limits<double>::infinity();
  for (int n : refine) {
    TransportPlan p = solve_min(r, n);
    std::cout << n << "," << fmt(p.value) << "," << fmt(p.duality_gap()) << "\n";
    table.push_back({{"n", n}, {"value", p.value}, {"duality_gap", p.duality_gap()}, {"certified", p.certified()}});
    certified = certified && p.certified();
    monotone = monotone && p.value <= prev + 1e-12;
    prev = p.value;
    last = std::move(p);
  }
  const TransportPlan& plan = *last;
  json rep = header("transport", c, false);
  rep["density"] = r.name;
  rep["n"] = plan.n;
  rep["value"] = plan.value;
  rep["dual_value"] = plan.dual_value;
  rep["duality_gap"] = plan.duality_gap();
  rep["max_dual_violation"] = plan.max_dual_violation;
  rep["certified"] = certified;
  rep["kappa"] = kappa(r);
  rep["F_eta0"] = evaluate_F(AnalyticFamily::kEta0, r);
  rep["F_star"] = evaluate_F(AnalyticFamily::kEtaStar, r);
  rep["refinement"] = table;
  rep["monotone"] = monotone;
  rep["pass"] = certified && monotone;

  std::ostringstream csv;
  csv << "phi_cell,phi_plus_cell,mass\n";
  for (int i = 0; i < plan.n; ++i)
    for (int j = 0; j < plan.n; ++j)
      if (plan.at(i, j) != 0.0) csv << i << "," << j << "," << fmt(plan.at(i, j)) << "\n";

  Outputs out;
  out.add("transport.json", rep);
  out.add("plan.csv", csv.str());
  out.commit(c.out);
  return c.check && !(certified && monotone) ? 4 : 0;
}

void common_flags(CLI::App* s, RunConfig& c, bool stochastic) {
  s->add_option("--out", c.out, "Output directory");
  s->add_option("--threads", c.threads, "Worker threads (default: ROUGHSCATTER_THREADS or all cores)");
  s->add_flag("--check", c.check, "Exit 4 when a threshold fails");
  s->add_option("--tol", c.tol, "Threshold for --check");
  if (stochastic) {
    s->add_option("--samples", c.samples, "Monte-Carlo samples");
    s->add_option("--seed", c.seed, "RNG seed (required)");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Billiard scattering on rough convex bodies"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);
  RunConfig c;

  double xi = 0.0, phi = 0.0;
  auto* t = app.add_subcommand("trace", "Trace one particle through a hollow");
  t->add_option("--spec", c.spec, "Hollow spec JSON")->required();
  t->add_option("--xi", xi, "Entry position on the opening")->required();
  t->add_option("--phi", phi, "Entry angle")->required();
  common_flags(t, c, false);

  std::string binning = "equal_lambda", compare;
  auto* m = app.add_subcommand("measure", "Estimate the scattering measure of a hollow");
  m->add_option("--spec", c.spec, "Hollow spec JSON")->required();
  int bins_measure = 32, bins_body = 8, bins_transport = 180;
  m->add_option("--bins", bins_measure, "Cells per angle axis")->capture_default_str();
  m->add_option("--binning", binning, "equal_lambda or uniform");
  m->add_option("--compare", compare, "Analytic family for a TV distance (eta0, eta_triangular, eta_rect_limit, eta_star)");
  common_flags(m, c, true);

  bool lemma1 = false;
  auto* b = app.add_subcommand("body", "Estimate the scattering measure of a rough body");
  b->add_option("--spec", c.spec, "Body spec JSON")->required();
  b->add_option("--bins", bins_body, "Cells per angle axis")->capture_default_str();
  b->add_flag("--lemma1", lemma1, "Also report the mean free path bounds");
  common_flags(b, c, true);

  std::string perm, family;
  int perm_m = 0, k_family = 8;
  double eps = 0.0;
  std::optional<int> k_reflector;
  auto* s = app.add_subcommand("synthesize", "Build a reflector hollow or a rational permutation synthesis");
  auto* po = s->add_option("--permutation", perm, "Involution in cycle notation, e.g. \"1 5;2 4\"");
  s->add_option("--m", perm_m, "Number of direction cells")->needs(po);
  s->add_option("--epsilon", eps, "Construction parameter in (0, 1)")->needs(po);
  s->add_option("--sub", k_reflector, "Sub-pairs per cell pair (default: chosen from epsilon)")->needs(po);
  auto* fo = s->add_option("--family", family, "Analytic family to approximate")->excludes(po);
  s->add_option("--k", k_family, "Cells per axis for --family")->needs(fo);
  common_flags(s, c, true);

  std::string density = "uniform";
  std::vector<int> refine;
  auto* tr = app.add_subcommand("transport", "Minimize resistance by discrete optimal transport");
  tr->add_option("--density", density, "uniform, gaussian:w, cos_power:k or tilted:s");
  tr->add_option("--bins", bins_transport, "Cells per angle axis")->capture_default_str();
  tr->add_option("--refine", refine, "Grid sizes for the refinement table")->delimiter(',');
  common_flags(tr, c, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (t->parsed()) return cmd_trace(c, xi, phi);
    if (m->parsed()) {
      c.bins = bins_measure;
      return cmd_measure(c, binning, compare);
    }
    if (b->parsed()) {
      c.bins = bins_body;
      return cmd_body(c, lemma1);
    }
    if (s->parsed()) {
      if (!perm.empty()) {
        if (perm_m < 1) throw Error(ErrorCode::kInvalidArgument, "--m is required with --permutation");
        return cmd_synthesize_reflector(c, perm, perm_m, eps, k_reflector);
      }
      if (!family.empty()) return cmd_synthesize_family(c, family, k_family);
      throw Error(ErrorCode::kInvalidArgument, "give --permutation or --family");
    }
    if (tr->parsed()) {
      c.bins = bins_transport;
      return cmd_transport(c, density, refine);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return io::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
