// sbim: command-line front end for simulation-based inference with a
// quadratic metamodel of simulated log-likelihoods.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "sbim/sbim.hpp"

namespace {

using namespace sbim;
using io::json;
namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

// Stage indices for seed derivation.
enum Stage : std::uint64_t {
  kStageData = 0,
  kStagePf = 1,
  kStagePmcmc = 2,
  kStageMeta = 3,
  kStageCoverage = 4,
};

struct Global {
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out;
  bool dry_run = false;
};

struct ModelOpts {
  std::string model = "gp";
  double gamma = 1.0;
  int dim = 2;
  double tau = 30.0;
};

struct SimulateOpts {
  ModelOpts m;
  std::string theta;
  int n = 100;
  bool oracle = false;
};

struct PfOpts {
  ModelOpts m;
  std::string data;
  std::vector<std::string> theta;
  std::vector<std::string> grid;
  int replicates = 1;
  int particles = 100;
  int blocks = 0;
  std::string table;
};

struct TestOpts {
  std::string table;
  std::string null_value;
  std::string test = "mesle";
  std::string k1 = "auto";
  std::string k1_file;
  int blocks = 0;
  int n = 0;
  bool auto_adjust = false;
  double level = 0.95;
  std::vector<std::string> grid;
};

struct DesignOpts {
  std::string table;
  int propose = 1;
};

struct BenchmarkOpts {
  std::string method = "both";
  std::vector<int> sims{100, 1000, 3000, 10000};
  int replicates = 20;
  int n = 200;
  std::vector<int> coverage_n{10, 50, 200, 1000};
  int datasets = 20;
  int coverage_sims = 1000;
  double tau = 30.0;
  double halfwidth = 10.0;
};

struct PipelineOpts {
  int n = 1000;
  double gamma = 1.0;
  double lambda = 1.0;
  int M = 401;
  double step = 0.001;
  int blocks = 0;
  double level = 0.95;
};

// ---- small helpers ---------------------------------------------------------

Vector parse_vector(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) v.push_back(io::parse_double(cell));
  if (v.empty()) throw DomainError("expected a comma-separated list of numbers, got '" + s + "'");
  return Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// "lo:hi:count" -> evenly spaced values including both ends.
std::vector<double> parse_axis(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ':')) parts.push_back(cell);
  if (parts.size() != 3) throw DomainError("grid axis must look like lo:hi:count, got '" + s + "'");
  const double lo = io::parse_double(parts[0]);
  const double hi = io::parse_double(parts[1]);
  const int count = std::stoi(parts[2]);
  if (count < 1) throw DomainError("grid axis count must be positive");
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
  return out;
}

// Cartesian product of axes; the first axis varies slowest.
std::vector<ParamPoint> cartesian(const std::vector<std::string>& axes) {
  std::vector<ParamPoint> pts{ParamPoint(0)};
  for (const auto& a : axes) {
    const auto vals = parse_axis(a);
    std::vector<ParamPoint> next;
    for (const auto& p : pts)
      for (double v : vals) {
        ParamPoint q(p.size() + 1);
        q << p, v;
        next.push_back(q);
      }
    pts = std::move(next);
  }
  return pts;
}

json vector_json(const Vector& v) { return io::to_json(v); }

int threads_of(const Global& g) { return g.threads > 0 ? g.threads : default_threads(); }

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << text;
}

void merge_into(json& dst, const json& src) {
  for (const auto& [key, value] : src.items()) dst[key] = value;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::vector<std::string>& collected_warnings() {
  static std::vector<std::string> w;
  return w;
}

json manifest(const std::string& command, const std::vector<std::string>& argv, const Global& g) {
  json m;
  m["tool"] = "sbim";
  m["version"] = kVersion;
  m["command"] = command;
  m["argv"] = argv;
  m["seed"] = g.seed;
  m["warnings"] = collected_warnings();
  return m;
}

void write_manifest(const std::string& out_path, const json& m) {
  if (out_path.empty() || out_path == "-") return;
  write_text(out_path + ".manifest.json", dump(m));
}

// ---- models ----------------------------------------------------------------

int model_dim(const ModelOpts& m) {
  if (m.model == "gp" || m.model == "lgss" || m.model == "gauss") return 1;
  if (m.model == "stovol") return 2;
  throw DomainError("unknown model '" + m.model + "' (expected gp, lgss, stovol or gauss)");
}

std::vector<int> to_counts(const std::vector<Vector>& y) {
  std::vector<int> out;
  for (const auto& v : y) {
    if (v.size() != 1) throw DomainError("gamma-Poisson data must have a single column");
    if (v(0) < 0 || v(0) != std::floor(v(0))) throw DomainError("gamma-Poisson data must be nonnegative integers");
    out.push_back(static_cast<int>(v(0)));
  }
  return out;
}

std::vector<double> to_scalars(const std::vector<Vector>& y) {
  std::vector<double> out;
  for (const auto& v : y) {
    if (v.size() != 1) throw DomainError("data must have a single column");
    out.push_back(v(0));
  }
  return out;
}

// One simulated log-likelihood with its per-observation terms.
struct SimDraw {
  double total = 0.0;
  Vector per_obs;
  double weight = 1.0;
};

class Simulator {
 public:
  Simulator(const ModelOpts& m, const std::vector<Vector>& y, int particles)
      : opts_(m), y_(y), particles_(particles) {
    if (y.empty()) throw DomainError("no observations");
    if (m.model == "gp") {
      gp_.emplace(to_counts(y));
    } else if (m.model == "gauss") {
      gl_.emplace(to_scalars(y));
    } else if (m.model == "lgss") {
      lgss_.emplace(models::LgssModel::standard(static_cast<int>(y.front().size())));
    } else if (m.model == "stovol") {
      models::StoVolModel sv;
      sv.n = static_cast<int>(y.size());
      stovol_.emplace(sv);
    } else {
      model_dim(m);
    }
  }

  int n() const { return static_cast<int>(y_.size()); }

  SimDraw draw(const ParamPoint& theta, Rng& rng) const {
    SimDraw out;
    if (theta.size() != model_dim(opts_)) throw DomainError("theta has the wrong dimension for model " + opts_.model);
    if (gp_) {
      const models::GammaPoissonModel gm{opts_.gamma, gp_->n()};
      const auto s = models::gp_simulate_loglik(gm, *gp_, theta(0), rng);
      out.total = s.total;
      out.per_obs = s.per_obs;
    } else if (gl_) {
      const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
      out.per_obs.resize(gl_->n());
      for (int i = 0; i < gl_->n(); ++i) {
        const double x = theta(0) + opts_.tau * rng.normal();
        out.per_obs(i) = -0.5 * (x - gl_->y[i]) * (x - gl_->y[i]) - half_log_2pi;
      }
      out.total = out.per_obs.sum();
    } else {
      const PFResult r = lgss_ ? bpf_run(*lgss_, y_, theta, particles_, rng) : bpf_run(*stovol_, y_, theta, particles_, rng);
      out.total = r.total_loglik;
      out.per_obs = r.cond_loglik;
      out.weight = particles_;
    }
    return out;
  }

 private:
  ModelOpts opts_;
  std::vector<Vector> y_;
  int particles_;
  std::optional<models::GpData> gp_;
  std::optional<models::GlData> gl_;
  std::optional<models::LgssPomp> lgss_;
  std::optional<models::StoVolPomp> stovol_;
};

// ---- simulate --------------------------------------------------------------

int cmd_simulate(const SimulateOpts& o, const Global& g, const std::vector<std::string>& argv) {
  const int d = model_dim(o.m);
  const Vector theta = parse_vector(o.theta);
  if (theta.size() != d) throw DomainError("--theta must have " + std::to_string(d) + " value(s) for " + o.m.model);
  if (o.n < 1) throw DomainError("--n must be positive");
  if (g.dry_run) {
    json plan;
    plan["command"] = "simulate";
    plan["model"] = o.m.model;
    plan["theta"] = vector_json(theta);
    plan["n"] = o.n;
    plan["seed"] = g.seed;
    std::cout << dump(plan);
    return 0;
  }
  Rng rng(derive_seed(g.seed, kStageData));
  std::vector<Vector> y;
  json oracle;
  oracle["model"] = o.m.model;
  oracle["theta"] = vector_json(theta);
  if (o.m.model == "gp") {
    const models::GammaPoissonModel gm{o.m.gamma, o.n};
    const auto counts = models::gp_simulate_data(gm, theta(0), rng);
    for (int c : counts) y.push_back(Vector::Constant(1, c));
    oracle["exact_loglik"] = io::number(models::gp_exact_loglik(gm, counts, theta(0)));
    double s = 0.0;
    for (int c : counts) s += c;
    oracle["mle"] = s > 0 ? io::number(models::gp_mesle(gm, counts)) : json(nullptr);
  } else if (o.m.model == "gauss") {
    const models::GaussLocationModel gl{o.m.tau};
    const auto v = models::gl_simulate_data(gl, theta(0), o.n, rng);
    for (double x : v) y.push_back(Vector::Constant(1, x));
    const models::GlData data(v);
    oracle["exact_loglik"] = io::number(models::gl_exact_loglik(gl, data, theta(0)));
    oracle["mle"] = io::number(data.mean);
  } else if (o.m.model == "lgss") {
    const auto lm = models::LgssModel::standard(o.m.dim);
    y = models::lgss_simulate(lm, theta(0), o.n, rng);
    oracle["exact_loglik"] = io::number(models::kalman_loglik(lm, y, theta(0)));
  } else {
    models::StoVolModel sv;
    sv.n = o.n;
    y = models::stovol_simulate(sv, theta, rng);
    oracle["exact_loglik"] = nullptr;
  }
  std::ostringstream os;
  io::write_observations_csv(os, y);
  write_text(g.out, os.str());
  if (o.oracle) {
    if (g.out.empty() || g.out == "-") {
      std::cerr << dump(oracle);
    } else {
      std::cout << dump(oracle);
    }
  }
  write_manifest(g.out, manifest("simulate", argv, g));
  return 0;
}

// ---- pf --------------------------------------------------------------------

SimLogLikTable merge_blocks(const SimLogLikTable& t, int K) {
  if (!t.per_block_values || K <= 0) return t;
  const Matrix& B = *t.per_block_values;
  const int have = static_cast<int>(B.cols());
  if (K == have) return t;
  if (K > have || have % K != 0)
    throw DomainError("--blocks " + std::to_string(K) + " must divide the " + std::to_string(have) +
                      " block columns of the table");
  const int g = have / K;
  SimLogLikTable out = t;
  Matrix merged(B.rows(), K);
  for (int k = 0; k < K; ++k) merged.col(k) = B.middleCols(k * g, g).rowwise().sum();
  out.per_block_values = merged;
  return out;
}

int cmd_pf(const PfOpts& o, const Global& g, const std::vector<std::string>& argv) {
  const int d = model_dim(o.m);
  std::vector<ParamPoint> points;
  for (const auto& s : o.theta) points.push_back(parse_vector(s));
  if (!o.grid.empty())
    for (const auto& p : cartesian(o.grid)) points.push_back(p);
  if (points.empty()) throw DomainError("pf: give at least one --theta or --grid");
  for (const auto& p : points)
    if (p.size() != d) throw DomainError("pf: theta has the wrong dimension for model " + o.m.model);
  if (o.replicates < 1) throw DomainError("--replicates must be positive");
  if (o.particles < 1) throw DomainError("--particles must be positive");
  if (o.data.empty()) throw DomainError("pf: --data is required");

  const auto y = io::read_observations_csv(o.data);
  const int n = static_cast<int>(y.size());
  std::optional<BlockPartition> part;
  if (o.blocks > 0) part = default_blocks(n, o.blocks);

  SimLogLikTable base;
  const bool append = !o.table.empty() && fs::exists(o.table);
  if (append) {
    base = io::read_table_csv(o.table);
    if (base.d() != d) throw DomainError("pf: existing table has a different parameter dimension");
    if (base.n_obs != 0 && base.n_obs != n) throw DomainError("pf: existing table was built from a different n");
    const int have = base.per_block_values ? static_cast<int>(base.per_block_values->cols()) : 0;
    if (have != (part ? part->K() : 0)) throw DomainError("pf: --blocks does not match the existing table");
  }
  const int P = static_cast<int>(points.size());
  const int R = o.replicates;

  if (g.dry_run) {
    json plan;
    plan["command"] = "pf";
    plan["model"] = o.m.model;
    plan["points"] = P;
    plan["replicates"] = R;
    plan["simulations"] = P * R;
    plan["particles"] = o.particles;
    plan["n_obs"] = n;
    plan["blocks"] = part ? part->K() : 0;
    plan["append_to"] = append ? json(o.table) : json(nullptr);
    std::cout << dump(plan);
    return 0;
  }

  const Simulator sim(o.m, y, o.particles);
  std::vector<SimDraw> draws(P * R);
  parallel_for(P * R, threads_of(g), [&](int i) {
    const int m = i / R, r = i % R;
    Rng rng(derive_seed(g.seed, kStagePf, m, r));
    draws[i] = sim.draw(points[m], rng);
  });

  int dropped = 0;
  std::vector<int> keep;
  for (int i = 0; i < P * R; ++i) {
    if (std::isfinite(draws[i].total)) {
      keep.push_back(i);
    } else {
      ++dropped;
    }
  }
  if (dropped > 0) warn("pf: dropped " + std::to_string(dropped) + " degenerate run(s) with -inf log-likelihood");

  const int M0 = append ? base.M() : 0;
  const int M = M0 + static_cast<int>(keep.size());
  SimLogLikTable t = base;
  t.n_obs = n;
  t.points.conservativeResize(M, d);
  t.values.conservativeResize(M);
  t.weights.conservativeResize(M);
  if (part) {
    if (!t.per_block_values) t.per_block_values = Matrix(0, part->K());
    t.per_block_values->conservativeResize(M, part->K());
  }
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const int i = keep[k];
    const int row = M0 + static_cast<int>(k);
    t.points.row(row) = points[i / R].transpose();
    t.values(row) = draws[i].total;
    t.weights(row) = draws[i].weight;
    if (part) t.per_block_values->row(row) = block_sums(draws[i].per_obs, *part).transpose();
  }

  std::ostringstream os;
  io::write_table_csv(os, t);
  const std::string target = !o.table.empty() ? o.table : g.out;
  write_text(target, os.str());
  json m = manifest("pf", argv, g);
  m["rows_written"] = static_cast<int>(keep.size());
  m["rows_dropped"] = dropped;
  write_manifest(target, m);
  return 0;
}

// ---- fit / ht / ci ---------------------------------------------------------

struct Prepared {
  SimLogLikTable table;
  std::optional<AdjustResult> adjust;
};

Prepared prepare_table(const TestOpts& o) {
  if (o.table.empty()) throw DomainError("--table is required");
  Prepared p;
  p.table = io::read_table_csv(o.table);
  if (o.n > 0) p.table.n_obs = o.n;
  p.table.validate();
  if (o.auto_adjust) {
    p.adjust = adjust_weights(p.table);
    p.table.weights = p.adjust->adjusted_weights;
  }
  return p;
}

json adjust_json(const AdjustResult& a) {
  json j;
  j["g_final"] = io::number(a.g_final);
  j["p_cubic_final"] = io::number(a.p_cubic_final);
  j["iterations"] = a.iterations;
  j["converged"] = a.converged;
  return j;
}

// Fits both stages of the proxy model and records where K1 came from.
ProxyFit proxy_from(const TestOpts& o, const SimLogLikTable& t, json& report) {
  if (t.n_obs < 1) throw DomainError("proxy test needs n: give --n or a table with an n_obs comment");
  Matrix k1;
  if (o.k1 == "auto") {
    const SimLogLikTable tb = merge_blocks(t, o.blocks);
    if (!tb.per_block_values) throw DomainError("--k1 auto needs block_k columns in the table (run pf with --blocks)");
    const BlockPartition part = default_blocks(t.n_obs, static_cast<int>(tb.per_block_values->cols()));
    const K1Estimate est = estimate_k1(tb, part);
    k1 = est.matrix;
    report["k1_source"] = "auto";
    report["k1_estimate"] = io::to_json(est.matrix);
    report["k1_blocks"] = part.K();
  } else if (o.k1 == "file") {
    if (o.k1_file.empty()) throw DomainError("--k1 file needs --k1-file");
    std::ifstream f(o.k1_file);
    if (!f) throw Error("cannot open K1 file '" + o.k1_file + "'");
    k1 = io::matrix_from_json(json::parse(f));
    report["k1_source"] = "file";
  } else {
    throw DomainError("--k1 must be auto or file");
  }
  const MetaFit first = fit_quadratic(t);
  report["sigma2_source"] = "first_stage_fit";
  const ProxyFit pf = proxy_fit(t, k1, first.sigma2);
  merge_into(report, io::to_json(pf));
  return pf;
}

int cmd_fit(const TestOpts& o, const Global& g, const std::vector<std::string>& argv) {
  const Prepared p = prepare_table(o);
  if (g.dry_run) {
    json plan{{"command", "fit"}, {"M", p.table.M()}, {"d", p.table.d()}};
    std::cout << dump(plan);
    return 0;
  }
  const MetaFit f = fit_quadratic(p.table);
  json out = io::to_json(f);
  try {
    out["mesle"] = vector_json(mesle_point(f));
  } catch (const NotNegativeDefiniteError&) {
    out["mesle"] = nullptr;
  }
  if (p.adjust) out["adjust"] = adjust_json(*p.adjust);
  write_text(g.out, dump(out));
  write_manifest(g.out, manifest("fit", argv, g));
  return 0;
}

int cmd_ht(const TestOpts& o, const Global& g, const std::vector<std::string>& argv) {
  const Prepared p = prepare_table(o);
  const Vector theta0 = parse_vector(o.null_value);
  if (theta0.size() != p.table.d()) throw DomainError("--null has the wrong dimension");
  if (o.test != "mesle" && o.test != "proxy") throw DomainError("--test must be mesle or proxy");
  if (g.dry_run) {
    json plan{{"command", "ht"}, {"test", o.test}, {"M", p.table.M()}, {"d", p.table.d()}};
    plan["null"] = vector_json(theta0);
    std::cout << dump(plan);
    return 0;
  }
  json out;
  out["test"] = o.test;
  out["null"] = vector_json(theta0);
  TestResult r;
  if (o.test == "mesle") {
    r = mesle_ht(fit_quadratic(p.table), theta0);
  } else {
    json extra;
    const ProxyFit pf = proxy_from(o, p.table, extra);
    r = proxy_ht(pf, theta0);
    merge_into(out, extra);
  }
  merge_into(out, io::to_json(r));
  if (p.adjust) out["adjust"] = adjust_json(*p.adjust);
  out["warnings"] = collected_warnings();
  write_text(g.out, dump(out));
  write_manifest(g.out, manifest("ht", argv, g));
  return 0;
}

int cmd_ci(const TestOpts& o, const Global& g, const std::vector<std::string>& argv) {
  const Prepared p = prepare_table(o);
  if (o.test != "mesle" && o.test != "proxy") throw DomainError("--test must be mesle or proxy");
  if (!(o.level > 0.0 && o.level < 1.0)) throw DomainError("--level must lie in (0, 1)");
  const int d = p.table.d();
  if (d > 1 && static_cast<int>(o.grid.size()) != d)
    throw DomainError("ci for d > 1 needs one --grid lo:hi:count per dimension");
  if (g.dry_run) {
    json plan{{"command", "ci"}, {"test", o.test}, {"level", o.level}, {"M", p.table.M()}, {"d", d}};
    std::cout << dump(plan);
    return 0;
  }
  const double alpha = 1.0 - o.level;
  json out;
  out["test"] = o.test;
  std::optional<ProxyFit> pf;
  std::optional<MetaFit> mf;
  if (o.test == "proxy") {
    json extra;
    pf = proxy_from(o, p.table, extra);
    merge_into(out, extra);
  } else {
    mf = fit_quadratic(p.table);
  }
  if (d == 1 && o.grid.empty()) {
    const ConfidenceSet s = pf ? proxy_ci_1d(*pf, alpha) : mesle_ci_1d(*mf, alpha);
    merge_into(out, io::to_json(s));
  } else {
    const auto grid = cartesian(o.grid);
    const auto region = pf ? proxy_confregion(*pf, alpha, grid) : mesle_confregion(*mf, alpha, grid);
    json pts = json::array();
    for (const auto& rp : region) {
      json e;
      e["point"] = vector_json(rp.point);
      e["inside"] = rp.inside;
      e["p_value"] = io::number(rp.p_value);
      pts.push_back(e);
    }
    out["kind"] = "grid_region";
    out["level"] = o.level;
    out["points"] = pts;
  }
  if (p.adjust) out["adjust"] = adjust_json(*p.adjust);
  out["warnings"] = collected_warnings();
  write_text(g.out, dump(out));
  write_manifest(g.out, manifest("ci", argv, g));
  return 0;
}

// ---- design ----------------------------------------------------------------

int cmd_design(const DesignOpts& o, const Global& g, const std::vector<std::string>& argv) {
  if (o.table.empty()) throw DomainError("--table is required");
  if (o.propose < 1) throw DomainError("--propose must be positive");
  SimLogLikTable t = io::read_table_csv(o.table);
  t.validate();
  if (g.dry_run) {
    json plan{{"command", "design"}, {"propose", o.propose}, {"M", t.M()}, {"d", t.d()}};
    std::cout << dump(plan);
    return 0;
  }
  t.per_block_values.reset();
  json props = json::array();
  for (int k = 0; k < o.propose; ++k) {
    const DesignProposal p = opt_design(t);
    json e;
    e["point"] = vector_json(p.point);
    e["stv"] = io::number(p.stv);
    e["weight"] = io::number(p.weight);
    e["starts_succeeded"] = p.starts_succeeded;
    props.push_back(e);
    // Later proposals condition on the earlier ones at their fitted values.
    const AdjustResult adj = adjust_weights(t);
    const int M = t.M();
    t.points.conservativeResize(M + 1, Eigen::NoChange);
    t.points.row(M) = p.point.transpose();
    t.values.conservativeResize(M + 1);
    t.values(M) = adj.fit.eval(p.point);
    t.weights.conservativeResize(M + 1);
    t.weights(M) = p.weight;
  }
  json out;
  out["proposals"] = props;
  out["warnings"] = collected_warnings();
  write_text(g.out, dump(out));
  write_manifest(g.out, manifest("design", argv, g));
  return 0;
}

// ---- benchmark -------------------------------------------------------------

struct GaussBench {
  models::GaussLocationModel model;
  double halfwidth = 10.0;

  // Simulated log-likelihoods on an even grid of M points centred at ybar.
  SimLogLikTable metamodel_table(const models::GlData& data, int M, Rng& rng) const {
    SimLogLikTable t;
    t.n_obs = data.n();
    t.points.resize(M, 1);
    t.values.resize(M);
    t.weights = Vector::Ones(M);
    for (int m = 0; m < M; ++m) {
      const double th = data.mean - halfwidth + 2.0 * halfwidth * m / std::max(M - 1, 1);
      t.points(m, 0) = th;
      t.values(m) = models::gl_simulate_loglik(model, data, th, rng);
    }
    return t;
  }

  // Proxy CI with the exact K1 = tau^2 + 1 of the marginal model.
  ConfidenceSet metamodel_ci(const SimLogLikTable& t, double level) const {
    const MetaFit f = fit_quadratic(t);
    const Matrix k1 = Matrix::Constant(1, 1, model.tau * model.tau + 1.0);
    return proxy_ci_1d(t, k1, f.sigma2, 1.0 - level);
  }

  PmcmcChain chain(const models::GlData& data, int M, Rng& rng) const {
    auto sim = [&](const ParamPoint& th, Rng& r) { return models::gl_simulate_loglik(model, data, th(0), r); };
    auto prior = [](const ParamPoint&) { return 0.0; };
    const double sd = std::sqrt(models::gl_posterior_variance(model, data.n()));
    const ParamPoint init = ParamPoint::Constant(1, data.mean + sd * rng.normal());
    return pmcmc_run(sim, prior, Vector::Constant(1, 3.0), init, M + 100, rng, 100);
  }
};

double sample_variance(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

int cmd_benchmark(const BenchmarkOpts& o, const Global& g, const std::vector<std::string>& argv) {
  if (o.method != "pmcmc" && o.method != "metamodel" && o.method != "both")
    throw DomainError("--method must be pmcmc, metamodel or both");
  if (o.sims.empty() || o.replicates < 2 || o.datasets < 1) throw DomainError("benchmark: need sims, replicates >= 2");
  for (int M : o.sims)
    if (M < 10) throw DomainError("benchmark: --sims values must be at least 10");
  const bool do_pm = o.method != "metamodel";
  const bool do_meta = o.method != "pmcmc";
  if (g.dry_run) {
    json plan{{"command", "benchmark"}, {"method", o.method}, {"sims", o.sims}, {"replicates", o.replicates},
              {"n", o.n}, {"coverage_n", o.coverage_n}, {"datasets", o.datasets}};
    std::cout << dump(plan);
    return 0;
  }
  const GaussBench bench{models::GaussLocationModel{o.tau}, o.halfwidth};
  const int threads = threads_of(g);
  json out;
  out["model"] = {{"name", "gauss_location"}, {"tau", o.tau}, {"theta_true", 0.0}};

  // ESS on one data set, estimator variance over independent replicates.
  Rng drng(derive_seed(g.seed, kStageData));
  const models::GlData data(models::gl_simulate_data(bench.model, 0.0, o.n, drng));
  const double post_var = models::gl_posterior_variance(bench.model, o.n);
  const int maxM = *std::max_element(o.sims.begin(), o.sims.end());
  const int S = static_cast<int>(o.sims.size());
  const int R = o.replicates;
  json ess_rows = json::array();
  std::vector<std::vector<double>> pm_est(S, std::vector<double>(R)), meta_est(S, std::vector<double>(R));
  std::vector<std::vector<bool>> meta_ok(S, std::vector<bool>(R, true));
  if (do_pm) {
    parallel_for(R, threads, [&](int r) {
      Rng rng(derive_seed(g.seed, kStagePmcmc, 0, r));
      const PmcmcChain c = bench.chain(data, maxM, rng);
      const auto est = running_estimates(c, o.sims);
      for (int s = 0; s < S; ++s) pm_est[s][r] = est[s](0);
    });
  }
  if (do_meta) {
    parallel_for(S * R, threads, [&](int i) {
      const int s = i / R, r = i % R;
      Rng rng(derive_seed(g.seed, kStageMeta, s, r));
      try {
        meta_est[s][r] = mesle_point(fit_quadratic(bench.metamodel_table(data, o.sims[s], rng)))(0);
      } catch (const Error&) {
        meta_ok[s][r] = false;
      }
    });
  }
  for (int s = 0; s < S; ++s) {
    json row;
    row["M"] = o.sims[s];
    if (do_pm) row["pmcmc"] = io::number(ess(sample_variance(pm_est[s]), post_var));
    if (do_meta) {
      std::vector<double> ok;
      for (int r = 0; r < R; ++r)
        if (meta_ok[s][r]) ok.push_back(meta_est[s][r]);
      row["metamodel"] = ok.size() >= 2 ? io::number(ess(sample_variance(ok), post_var)) : json(nullptr);
      row["metamodel_failures"] = R - static_cast<int>(ok.size());
    }
    ess_rows.push_back(row);
  }
  out["ess_by_M"] = ess_rows;

  // Coverage of theta = 0 by 95% intervals as n varies.
  json cov_rows = json::array();
  json widths = json::object();
  const int D = o.datasets;
  const int Mc = o.coverage_sims;
  for (std::size_t ni = 0; ni < o.coverage_n.size(); ++ni) {
    const int n = o.coverage_n[ni];
    std::vector<int> pm_hit(D, 0), meta_hit(D, 0), meta_fail(D, 0);
    std::vector<double> pm_w(D, kNaN), meta_w(D, kNaN);
    parallel_for(D, threads, [&](int k) {
      Rng rng(derive_seed(g.seed, kStageCoverage, ni, k));
      const models::GlData dk(models::gl_simulate_data(bench.model, 0.0, n, rng));
      if (do_pm) {
        const PmcmcChain c = bench.chain(dk, Mc, rng);
        const auto [lo, hi] = credible_interval(c, 0.95);
        pm_hit[k] = lo <= 0.0 && 0.0 <= hi;
        pm_w[k] = hi - lo;
      }
      if (do_meta) {
        try {
          const ConfidenceSet cs = bench.metamodel_ci(bench.metamodel_table(dk, Mc, rng), 0.95);
          meta_hit[k] = cs.contains(0.0);
          meta_w[k] = cs.kind == ConfidenceSet::Kind::interval ? cs.bounds[1] - cs.bounds[0] : kInf;
        } catch (const Error&) {
          meta_fail[k] = 1;
        }
      }
    });
    json row;
    row["n"] = n;
    row["exact_width"] = 2.0 * dist::normal_quantile(0.975) * std::sqrt(models::gl_posterior_variance(bench.model, n));
    json wrow;
    if (do_pm) {
      row["pmcmc"] = static_cast<double>(std::accumulate(pm_hit.begin(), pm_hit.end(), 0)) / D;
      wrow["pmcmc"] = vector_json(Eigen::Map<Vector>(pm_w.data(), D));
    }
    if (do_meta) {
      row["metamodel"] = static_cast<double>(std::accumulate(meta_hit.begin(), meta_hit.end(), 0)) / D;
      row["metamodel_failures"] = std::accumulate(meta_fail.begin(), meta_fail.end(), 0);
      wrow["metamodel"] = vector_json(Eigen::Map<Vector>(meta_w.data(), D));
    }
    cov_rows.push_back(row);
    widths[std::to_string(n)] = wrow;
  }
  out["coverage_by_n"] = cov_rows;
  out["interval_widths"] = widths;
  out["warnings"] = collected_warnings();
  write_text(g.out, dump(out));
  write_manifest(g.out, manifest("benchmark", argv, g));
  return 0;
}

// ---- pipeline --------------------------------------------------------------

int cmd_pipeline(const PipelineOpts& o, const Global& g, const std::vector<std::string>& argv) {
  if (o.n < 4 || o.M < 6) throw DomainError("pipeline: need n >= 4 and M >= 6");
  const models::GammaPoissonModel gm{o.gamma, o.n};
  gm.validate();
  const BlockPartition part = default_blocks(o.n, o.blocks);
  const int half = o.M / 2;
  if (!(o.lambda - o.step * half > 0.0)) throw DomainError("pipeline: lambda grid reaches zero");
  if (g.dry_run) {
    json plan;
    plan["command"] = "pipeline";
    plan["steps"] = {"simulate_data", "simulate_loglik", "fit", "estimate_k1", "proxy_test", "proxy_ci"};
    plan["n"] = o.n;
    plan["M"] = o.M;
    plan["lambda_grid"] = {o.lambda - o.step * half, o.lambda + o.step * (o.M - 1 - half)};
    plan["blocks"] = part.K();
    std::cout << dump(plan);
    return 0;
  }
  Rng drng(derive_seed(g.seed, kStageData));
  const models::GpData data(models::gp_simulate_data(gm, o.lambda, drng));

  SimLogLikTable t;
  t.n_obs = o.n;
  t.points.resize(o.M, 1);
  t.values.resize(o.M);
  t.weights = Vector::Ones(o.M);
  t.per_block_values = Matrix(o.M, part.K());
  parallel_for(o.M, threads_of(g), [&](int m) {
    Rng rng(derive_seed(g.seed, kStagePf, m, 0));
    const double lam = o.lambda + o.step * (m - half);
    const auto s = models::gp_simulate_loglik(gm, data, lam, rng);
    t.points(m, 0) = lam;
    t.values(m) = s.total;
    t.per_block_values->row(m) = block_sums(s.per_obs, part).transpose();
  });

  const MetaFit first = fit_quadratic(t);
  const K1Estimate est = estimate_k1(t, part);
  const ProxyFit pf = proxy_fit(t, est.matrix, first.sigma2);
  const TestResult r = proxy_ht(pf, ParamPoint::Constant(1, o.lambda));
  const ConfidenceSet cs = proxy_ci_1d(pf, 1.0 - o.level);

  json out;
  out["fit"] = io::to_json(first);
  out["proxy"] = io::to_json(pf);
  out["k1_estimate"] = io::to_json(est.matrix);
  out["test_at_truth"] = io::to_json(r);
  out["ci"] = io::to_json(cs);
  out["covers_truth"] = cs.contains(o.lambda);
  out["mle_exact"] = data.total() > 0 ? io::number(models::gp_mesle(gm, data.y)) : json(nullptr);
  out["warnings"] = collected_warnings();

  if (!g.out.empty() && g.out != "-") {
    fs::create_directories(g.out);
    std::ostringstream os;
    io::write_table_csv(os, t);
    write_text((fs::path(g.out) / "table.csv").string(), os.str());
    write_text((fs::path(g.out) / "result.json").string(), dump(out));
    write_text((fs::path(g.out) / "manifest.json").string(), dump(manifest("pipeline", argv, g)));
  }
  std::cout << dump(out);
  return 0;
}

// ---- entry -----------------------------------------------------------------

std::string error_type(const std::exception& e) {
  if (dynamic_cast<const RankDeficientError*>(&e)) return "RankDeficientError";
  if (dynamic_cast<const NotNegativeDefiniteError*>(&e)) return "NotNegativeDefiniteError";
  if (dynamic_cast<const DegenerateDesignError*>(&e)) return "DegenerateDesignError";
  if (dynamic_cast<const DomainError*>(&e)) return "DomainError";
  if (dynamic_cast<const Error*>(&e)) return "Error";
  return "InternalError";
}

void add_model_opts(CLI::App* c, ModelOpts& m) {
  c->add_option("--model", m.model, "gp | lgss | stovol | gauss")->capture_default_str();
  c->add_option("--gamma", m.gamma, "gamma-Poisson shape")->capture_default_str();
  c->add_option("--dim", m.dim, "LGSS state dimension")->capture_default_str();
  c->add_option("--tau", m.tau, "Gaussian-location latent sd")->capture_default_str();
}

void add_test_opts(CLI::App* c, TestOpts& t) {
  c->add_option("--table", t.table, "simulation table CSV")->required();
  c->add_option("--test", t.test, "mesle | proxy")->capture_default_str();
  c->add_option("--k1", t.k1, "auto | file")->capture_default_str();
  c->add_option("--k1-file", t.k1_file, "JSON file holding a d x d K1 matrix");
  c->add_option("--blocks", t.blocks, "merge block columns into K groups");
  c->add_option("--n", t.n, "number of observations (overrides the table)");
  c->add_flag("--auto-adjust", t.auto_adjust, "adjust weights for non-quadratic tails first");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation-based inference with a quadratic log-likelihood metamodel"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Global g;
  app.add_option("--seed", g.seed, "master seed")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads (default: SBIM_THREADS or hardware)");
  app.add_option("--out", g.out, "output path (default: stdout)");
  app.add_flag("--dry-run", g.dry_run, "validate and print the plan without simulating");

  SimulateOpts so;
  auto* sim = app.add_subcommand("simulate", "simulate an observation data set");
  add_model_opts(sim, so.m);
  sim->add_option("--theta", so.theta, "parameter values, comma separated")->required();
  sim->add_option("--n", so.n, "number of observations")->capture_default_str();
  sim->add_flag("--oracle", so.oracle, "also print the exact log-likelihood as JSON");

  PfOpts po;
  auto* pf = app.add_subcommand("pf", "simulate log-likelihoods at parameter points");
  add_model_opts(pf, po.m);
  pf->add_option("--data", po.data, "observation CSV")->required();
  pf->add_option("--theta", po.theta, "a parameter point, comma separated (repeatable)");
  pf->add_option("--grid", po.grid, "lo:hi:count, one per dimension");
  pf->add_option("--replicates", po.replicates, "simulations per point")->capture_default_str();
  pf->add_option("--particles", po.particles, "particles J")->capture_default_str();
  pf->add_option("--blocks", po.blocks, "record K block sums per row");
  pf->add_option("--table", po.table, "table CSV to create or append to");

  TestOpts fo, ho, co;
  auto* fit = app.add_subcommand("fit", "fit the quadratic metamodel");
  fit->add_option("--table", fo.table, "simulation table CSV")->required();
  fit->add_flag("--auto-adjust", fo.auto_adjust, "adjust weights first");
  auto* ht = app.add_subcommand("ht", "test a null parameter value");
  add_test_opts(ht, ho);
  ht->add_option("--null", ho.null_value, "null value, comma separated")->required();
  auto* ci = app.add_subcommand("ci", "confidence interval or region");
  add_test_opts(ci, co);
  ci->add_option("--level", co.level, "confidence level")->capture_default_str();
  ci->add_option("--grid", co.grid, "lo:hi:count, one per dimension");

  DesignOpts dop;
  auto* design = app.add_subcommand("design", "propose next simulation points");
  design->add_option("--table", dop.table, "simulation table CSV")->required();
  design->add_option("--propose", dop.propose, "number of sequential proposals")->capture_default_str();

  BenchmarkOpts bo;
  auto* bench = app.add_subcommand("benchmark", "pseudo-marginal MCMC versus metamodel on Gaussian location");
  bench->add_option("--method", bo.method, "pmcmc | metamodel | both")->capture_default_str();
  bench->add_option("--sims", bo.sims, "simulation budgets M")->delimiter(',')->capture_default_str();
  bench->add_option("--replicates", bo.replicates, "replicates per M")->capture_default_str();
  bench->add_option("--n", bo.n, "observations for the ESS table")->capture_default_str();
  bench->add_option("--coverage-n", bo.coverage_n, "data sizes for coverage")->delimiter(',')->capture_default_str();
  bench->add_option("--datasets", bo.datasets, "data sets per coverage size")->capture_default_str();
  bench->add_option("--coverage-sims", bo.coverage_sims, "simulations per interval")->capture_default_str();
  bench->add_option("--tau", bo.tau, "latent sd")->capture_default_str();
  bench->add_option("--halfwidth", bo.halfwidth, "metamodel design half-width around ybar")->capture_default_str();

  PipelineOpts plo;
  auto* pipe = app.add_subcommand("pipeline", "gamma-Poisson end-to-end run");
  pipe->add_option("--n", plo.n, "observations")->capture_default_str();
  pipe->add_option("--gamma", plo.gamma, "shape")->capture_default_str();
  pipe->add_option("--lambda", plo.lambda, "true rate and grid centre")->capture_default_str();
  pipe->add_option("--M", plo.M, "simulations")->capture_default_str();
  pipe->add_option("--step", plo.step, "grid spacing")->capture_default_str();
  pipe->add_option("--blocks", plo.blocks, "blocks for K1 (0 = automatic)")->capture_default_str();
  pipe->add_option("--level", plo.level, "confidence level")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  const std::vector<std::string> args(argv + 1, argv + argc);
  set_warning_handler([](const std::string& msg) {
    collected_warnings().push_back(msg);
    std::cerr << "WARN: " << msg << '\n';
  });
  try {
    if (*sim) return cmd_simulate(so, g, args);
    if (*pf) return cmd_pf(po, g, args);
    if (*fit) return cmd_fit(fo, g, args);
    if (*ht) return cmd_ht(ho, g, args);
    if (*ci) return cmd_ci(co, g, args);
    if (*design) return cmd_design(dop, g, args);
    if (*bench) return cmd_benchmark(bo, g, args);
    if (*pipe) return cmd_pipeline(plo, g, args);
  } catch (const std::exception& e) {
    json err;
    err["error"] = {{"type", error_type(e)}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return 1;
  }
  return 2;
}
