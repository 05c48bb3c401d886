#include "cs/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace cs {

namespace {

using json = nlohmann::json;

uint64_t derive_seed(uint64_t master, uint64_t k) {
  uint64_t s = master ^ (0x9e3779b97f4a7c15ULL * (k + 1));
  return splitmix64(s);
}

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

ReplicaSpec replica_spec_for(const EnsembleSpec& ensemble, double lambda,
                             double sigma0_sq, double rho_x) {
  if (ensemble.kind != OperatorKind::Structured)
    throw std::invalid_argument("no analytic prediction for the Gaussian baseline");
  ReplicaSpec r;
  r.l_r = ensemble.l_r;
  r.l_c = ensemble.l_c;
  r.nu = ensemble.nu;
  r.mu = ensemble.mu;
  r.gains = ensemble.gains;
  r.lambda = lambda;
  r.sigma0_sq = sigma0_sq;
  r.rho_x = rho_x;
  r.field = ensemble.field;
  return r;
}

namespace {

ExperimentRecord base_record(const ExperimentConfig& config, double lambda) {
  ExperimentRecord rec;
  rec.ensemble_id = config.ensemble_id;
  double mu = 0, nu = 0;
  for (double v : config.ensemble.mu) mu += v;
  for (double v : config.ensemble.nu) nu += v;
  rec.mu = mu;
  rec.nu = nu;
  rec.lambda = lambda;
  rec.sigma0_sq = config.sigma0_sq;
  rec.rho_x = config.prior.rho_x;
  rec.n = config.ensemble.base_n;
  rec.empirical_db = std::nan("");
  rec.theory_db = std::nan("");
  return rec;
}

void fill_theory(ExperimentRecord& rec, const ExperimentConfig& config,
                 double lambda) {
  if (config.ensemble.kind != OperatorKind::Structured) return;
  try {
    ReplicaSolution sol = solve_general(
        replica_spec_for(config.ensemble, lambda, config.sigma0_sq,
                         config.prior.rho_x));
    if (sol.converged) {
      rec.theory_db = sol.total_mse_db();
      rec.theory_converged = true;
    }
  } catch (const std::exception&) {
    rec.theory_converged = false;
  }
}

}  // namespace

ExperimentRecord predict(const ExperimentConfig& config, double lambda) {
  ExperimentRecord rec = base_record(config, lambda);
  rec.trials = 0;
  double t0 = now_s();
  fill_theory(rec, config, lambda);
  rec.wall_time_s = now_s() - t0;
  return rec;
}

ExperimentRecord simulate(const ExperimentConfig& config, double lambda) {
  ExperimentRecord rec = base_record(config, lambda);
  rec.trials = config.trials;
  double t0 = now_s();

  int nthreads = config.threads > 0
                     ? config.threads
                     : std::max(1u, std::thread::hardware_concurrency());
  nthreads = std::min(nthreads, config.trials);
  std::vector<double> mse(config.trials);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      int t = next.fetch_add(1);
      if (t >= config.trials) return;
      MeasurementOperator op(config.ensemble, derive_seed(config.master_seed, 2 * t));
      Rng rng(config.master_seed, 2 * t + 1);
      ProblemInstance inst =
          generate_instance(op, config.prior, config.sigma0_sq, rng);
      LassoConfig lc = config.lasso;
      lc.lambda = lambda;
      lc.field = config.ensemble.field;
      LassoResult res = solve(inst.y, op, lc);
      mse[t] = empirical_mse(inst.x0, res.x_hat);
    }
  };
  std::vector<std::thread> pool;
  for (int i = 0; i < nthreads - 1; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  // aggregate in trial order for determinism
  double mean = 0;
  for (double v : mse) mean += v;
  mean /= config.trials;
  double var = 0;
  for (double v : mse) var += (v - mean) * (v - mean);
  var = config.trials > 1 ? var / (config.trials - 1) : 0.0;
  double se = std::sqrt(var / config.trials);
  rec.empirical_db = to_db(mean);
  rec.stderr_db = 10.0 / std::log(10.0) * se / mean;
  rec.wall_time_s = now_s() - t0;
  return rec;
}

std::vector<ExperimentRecord> run_table(const ExperimentConfig& config) {
  std::vector<ExperimentRecord> out;
  for (double lambda : config.lambda_grid) {
    ExperimentRecord rec = simulate(config, lambda);
    fill_theory(rec, config, lambda);
    out.push_back(rec);
  }
  return out;
}

SweepResult sweep_lambda(const ExperimentConfig& config, bool with_empirical) {
  if (config.lambda_grid.empty())
    throw std::invalid_argument("lambda grid must be nonempty");
  SweepResult res;
  res.min_theory_db = std::numeric_limits<double>::infinity();
  for (double lambda : config.lambda_grid) {
    ExperimentRecord rec =
        with_empirical ? simulate(config, lambda) : base_record(config, lambda);
    fill_theory(rec, config, lambda);
    double score = rec.theory_converged ? rec.theory_db : rec.empirical_db;
    if (score < res.min_theory_db) {
      res.min_theory_db = score;
      res.argmin_lambda = lambda;
    }
    res.records.push_back(rec);
  }
  return res;
}

std::vector<double> fit_quadratic_in_inv_n(const std::vector<double>& n,
                                           const std::vector<double>& value) {
  if (n.size() != value.size() || n.size() < 3)
    throw std::invalid_argument("need >= 3 points for the quadratic fit");
  RMat a(n.size(), 3);
  RVec b(n.size());
  for (size_t i = 0; i < n.size(); ++i) {
    double inv = 1.0 / n[i];
    a(i, 0) = 1.0;
    a(i, 1) = inv;
    a(i, 2) = inv * inv;
    b[i] = value[i];
  }
  Eigen::ColPivHouseholderQR<RMat> qr(a);
  if (qr.rank() < 3) throw std::runtime_error("rank-deficient extrapolation fit");
  RVec c = qr.solve(b);
  return {c[0], c[1], c[2]};
}

ExtrapolationResult extrapolate_n(const ExperimentConfig& config) {
  if (config.n_grid.size() < 3)
    throw std::invalid_argument("n_grid needs at least 3 distinct sizes");
  double lambda = config.lambda_grid.at(0);
  ExtrapolationResult res;
  std::vector<double> ns, dbs;
  for (int n : config.n_grid) {
    ExperimentConfig c = config;
    c.ensemble.base_n = n;
    ExperimentRecord rec = simulate(c, lambda);
    res.points.push_back(rec);
    ns.push_back(n);
    dbs.push_back(rec.empirical_db);
  }
  res.coeffs = fit_quadratic_in_inv_n(ns, dbs);
  res.intercept_db = res.coeffs[0];
  ExperimentRecord th = predict(config, lambda);
  res.theory_db = th.theory_db;
  res.gap_db = res.intercept_db - res.theory_db;
  return res;
}

SpectrumReport spectrum_report(const EnsembleSpec& ensemble, uint64_t seed) {
  SpectrumReport rep;
  if (ensemble.kind == OperatorKind::GaussianIID) {
    double alpha = static_cast<double>(ensemble.m_bar()) / ensemble.n_bar();
    rep.law = mp_density(alpha);
  } else if (ensemble.l_r == 1 && ensemble.l_c == 1) {
    rep.law = haar_density(ensemble.mu[0], ensemble.nu[0], ensemble.gains[0][0]);
  } else {
    throw std::invalid_argument(
        "analytic spectrum available for single-block ensembles only");
  }
  MeasurementOperator op(ensemble, seed);
  rep.eigenvalues = empirical_spectrum(op);
  rep.ks = density_distance(rep.eigenvalues, rep.law, DistanceMetric::KS);
  rep.l1 = density_distance(rep.eigenvalues, rep.law, DistanceMetric::L1Hist);
  return rep;
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string records_to_csv(const std::vector<ExperimentRecord>& records) {
  std::ostringstream os;
  os << "ensemble_id,mu,nu,lambda,sigma0_sq,rho_x,theory_db,empirical_db,"
        "stderr_db,trials,n\n";
  for (const auto& r : records) {
    os << r.ensemble_id << ',' << fmt_double(r.mu) << ',' << fmt_double(r.nu)
       << ',' << fmt_double(r.lambda) << ',' << fmt_double(r.sigma0_sq) << ','
       << fmt_double(r.rho_x) << ',' << fmt_double(r.theory_db) << ','
       << fmt_double(r.empirical_db) << ',' << fmt_double(r.stderr_db) << ','
       << r.trials << ',' << r.n << '\n';
  }
  return os.str();
}

std::vector<ExperimentRecord> records_from_csv(const std::string& csv) {
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);  // header
  std::vector<ExperimentRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    std::vector<std::string> f;
    while (std::getline(ls, tok, ',')) f.push_back(tok);
    if (f.size() != 11) throw std::runtime_error("malformed CSV row: " + line);
    ExperimentRecord r;
    r.ensemble_id = f[0];
    r.mu = std::stod(f[1]);
    r.nu = std::stod(f[2]);
    r.lambda = std::stod(f[3]);
    r.sigma0_sq = std::stod(f[4]);
    r.rho_x = std::stod(f[5]);
    r.theory_db = std::stod(f[6]);
    r.empirical_db = std::stod(f[7]);
    r.stderr_db = std::stod(f[8]);
    r.trials = std::stoi(f[9]);
    r.n = std::stoi(f[10]);
    r.theory_converged = !std::isnan(r.theory_db);
    out.push_back(r);
  }
  return out;
}

std::string records_to_json(const std::vector<ExperimentRecord>& records) {
  json arr = json::array();
  for (const auto& r : records) {
    json o;
    o["ensemble_id"] = r.ensemble_id;
    o["mu"] = r.mu;
    o["nu"] = r.nu;
    o["lambda"] = r.lambda;
    o["sigma0_sq"] = r.sigma0_sq;
    o["rho_x"] = r.rho_x;
    if (std::isnan(r.theory_db))
      o["theory_db"] = nullptr;
    else
      o["theory_db"] = r.theory_db;
    if (std::isnan(r.empirical_db))
      o["empirical_db"] = nullptr;
    else
      o["empirical_db"] = r.empirical_db;
    o["stderr_db"] = r.stderr_db;
    o["trials"] = r.trials;
    o["n"] = r.n;
    o["wall_time_s"] = r.wall_time_s;
    arr.push_back(o);
  }
  return arr.dump(2) + "\n";
}

void write_records(const std::vector<ExperimentRecord>& records,
                   const std::string& path, OutputFormat format) {
  std::string text = format == OutputFormat::CSV ? records_to_csv(records)
                                                 : records_to_json(records);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file " + path);
  f << text;
}

namespace {

Field parse_field(const std::string& s) {
  if (s == "complex") return Field::Complex;
  if (s == "real") return Field::Real;
  throw std::invalid_argument("unknown field: " + s);
}

BaseTransform parse_base(const std::string& s) {
  if (s == "dft") return BaseTransform::DFT;
  if (s == "dct") return BaseTransform::DCT;
  if (s == "haar") return BaseTransform::HaarRandom;
  throw std::invalid_argument("unknown base_transform: " + s);
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
  json j = json::parse(text);
  ExperimentConfig c;
  const json& e = j.at("ensemble");
  std::string kind = e.value("kind", "structured");
  if (kind == "gaussian") {
    c.ensemble = gaussian_spec(e.at("m_bar").get<int>(), e.at("n_bar").get<int>(),
                               parse_field(e.value("field", "complex")));
  } else if (kind == "structured") {
    c.ensemble.kind = OperatorKind::Structured;
    c.ensemble.base_n = e.at("base_n").get<int>();
    c.ensemble.nu = e.at("nu").get<std::vector<double>>();
    c.ensemble.mu = e.at("mu").get<std::vector<double>>();
    c.ensemble.l_r = static_cast<int>(c.ensemble.nu.size());
    c.ensemble.l_c = static_cast<int>(c.ensemble.mu.size());
    if (!e.contains("gains") || e["gains"].is_string())
      c.ensemble.gains = uniform_gain_grid(c.ensemble.nu, c.ensemble.mu);
    else
      c.ensemble.gains = e["gains"].get<std::vector<std::vector<double>>>();
    c.ensemble.base_transform = parse_base(e.value("base_transform", "dft"));
    c.ensemble.field = parse_field(
        e.value("field", c.ensemble.base_transform == BaseTransform::DCT
                             ? "real"
                             : "complex"));
  } else {
    throw std::invalid_argument("unknown ensemble kind: " + kind);
  }
  c.ensemble_id = e.value("id", kind);
  if (j.contains("prior")) c.prior.rho_x = j["prior"].value("rho_x", 0.15);
  c.prior.field = c.ensemble.field;
  c.sigma0_sq = j.value("sigma0_sq", 1e-2);
  if (j.contains("lambda")) {
    if (j["lambda"].is_array())
      c.lambda_grid = j["lambda"].get<std::vector<double>>();
    else
      c.lambda_grid = {j["lambda"].get<double>()};
  }
  if (c.lambda_grid.empty()) throw std::invalid_argument("lambda grid is empty");
  c.trials = j.value("trials", 2000);
  if (c.trials < 1) throw std::invalid_argument("trials must be >= 1");
  c.master_seed = j.value("seed", 1ULL);
  if (j.contains("n_grid")) c.n_grid = j["n_grid"].get<std::vector<int>>();
  c.output_path = j.value("out", "");
  std::string fmt = j.value("format", "csv");
  if (fmt == "csv")
    c.format = OutputFormat::CSV;
  else if (fmt == "json")
    c.format = OutputFormat::JSON;
  else
    throw std::invalid_argument("unknown format: " + fmt);
  if (j.contains("lasso")) {
    const json& l = j["lasso"];
    c.lasso.max_iters = l.value("max_iters", c.lasso.max_iters);
    c.lasso.rel_tol = l.value("rel_tol", c.lasso.rel_tol);
    std::string rule = l.value("step_rule", "fixed_safe");
    if (rule == "fixed_safe")
      c.lasso.step_rule = StepRule::FixedSafe;
    else if (rule == "backtracking")
      c.lasso.step_rule = StepRule::Backtracking;
    else
      throw std::invalid_argument("unknown step_rule: " + rule);
  }
  c.threads = j.value("threads", 0);
  return c;
}

ExperimentConfig config_from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return config_from_json_text(ss.str());
}

}  // namespace cs
