#include <chrono>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "unishrink/cli/app.hpp"
#include "unishrink/constraints.hpp"
#include "unishrink/csv.hpp"
#include "unishrink/diagnostics.hpp"
#include "unishrink/errors.hpp"
#include "unishrink/mcar.hpp"
#include "unishrink/precision_gibbs.hpp"
#include "unishrink/regression_gibbs.hpp"
#include "unishrink/sim_bench.hpp"

namespace unishrink::cli {

namespace fs = std::filesystem;

namespace {

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json counters_json(const ChainCounters& c) {
  return Json{{"sweeps", c.sweeps},
              {"block_updates", c.block_updates},
              {"truncated_draws", c.truncated.draws},
              {"underflow_fallbacks", c.truncated.fallbacks},
              {"fallback_rate", c.truncated.fallback_rate()},
              {"spd_failures", c.spd_failures},
              {"constraint_violations", c.constraint_violations},
              {"scale_violations", c.scale_violations}};
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const Json& doc) {
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

Json document(const RunConfig& config) {
  return Json{{"schema_version", kSchemaVersion}, {"config", config.resolved}};
}

Matrix read_csv(const Json& node, const char* key) {
  return csv::read_matrix(node.at(key).get<std::string>());
}

std::string lower_triangle_names(const std::string& prefix, std::size_t p) {
  std::string names;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      names += "," + prefix + "_" + std::to_string(i) + "_" + std::to_string(j);
    }
  }
  return names;
}

void put(std::ostream& out, double x) { out << ',' << csv::format_double(x); }

void put_all(std::ostream& out, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put(out, v(i));
}

std::uint64_t kept_iteration(const RunConfig& config, std::size_t k) {
  return config.burnin() + (k + 1) * config.thin();
}

/// Lag-10 autocorrelation of each coordinate of a stored vector chain.
std::vector<double> lag10(const std::vector<Vector>& draws) {
  std::vector<double> out;
  if (draws.empty()) return out;
  std::vector<double> series(draws.size());
  for (Eigen::Index e = 0; e < draws.front().size(); ++e) {
    for (std::size_t k = 0; k < draws.size(); ++k) series[k] = draws[k](e);
    out.push_back(autocorrelation(series, 10));
  }
  return out;
}

fs::path chain_file(const RunConfig& config, std::size_t chain) {
  return config.out_dir() / ("draws_chain" + std::to_string(chain) + ".csv");
}

/// Runs fn(chain_index, chain_seed) for each chain on its own thread and
/// returns the results in chain order.
template <typename Fn>
auto run_chains(const RunConfig& config, Fn fn) {
  using Result = decltype(fn(std::size_t{0}, std::uint64_t{0}));
  std::vector<std::future<Result>> jobs;
  for (std::size_t c = 0; c < config.chains(); ++c) {
    jobs.push_back(std::async(std::launch::async, fn, c, config.seed() + c));
  }
  std::vector<Result> results;
  for (auto& job : jobs) results.push_back(job.get());
  return results;
}

ConstraintLedger build_ledger(const Json& node, std::size_t p) {
  ConstraintLedger ledger(p);
  const auto p_index = static_cast<Eigen::Index>(p);
  if (node.contains("graph")) {
    const Matrix w = read_csv(node, "graph");
    if (w.rows() != p_index || w.cols() != p_index) {
      throw ConfigError("/ledger/graph: expected a " + std::to_string(p) + "x" + std::to_string(p) + " matrix");
    }
    ledger.set_graph(Graph::from_adjacency(w));
  } else {
    ledger.set_graph(Graph::complete(p));
  }
  if (node.contains("centers")) {
    const Matrix m = read_csv(node, "centers");
    if (m.rows() != p_index || m.cols() != p_index) {
      throw ConfigError("/ledger/centers: expected a " + std::to_string(p) + "x" + std::to_string(p) + " matrix");
    }
    ledger.set_centers(m);
  }
  if (node.at("negative_edges").get<bool>()) ledger.constrain_edges_negative();
  const Json& boxes = node.at("boxes");
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    const Json& b = boxes[k];
    const auto i = b.at("i").get<std::size_t>();
    const auto j = b.at("j").get<std::size_t>();
    const std::string pointer = "/ledger/boxes/" + std::to_string(k);
    if (i >= p || j >= p) throw ConfigError(pointer + ": index outside the " + std::to_string(p) + " variables");
    if (!ledger.is_free(i, j)) throw ConfigError(pointer + ": (i, j) is not an edge of the graph");
    Interval box;
    if (!b.at("lo").is_null()) box.lo = b.at("lo").get<double>();
    if (!b.at("hi").is_null()) box.hi = b.at("hi").get<double>();
    ledger.set_box(i, j, box);
  }
  return ledger;
}

AdjacencyModel regions(const Json& node) {
  if (node.contains("adjacency")) return AdjacencyModel::from_matrix(read_csv(node, "adjacency"));
  return AdjacencyModel::lattice(node.at("lattice")[0].get<std::size_t>(),
                                 node.at("lattice")[1].get<std::size_t>());
}

void simulate(const RunConfig& config, std::ostream& log) {
  const Json& s = config.resolved.at("simulate");
  const fs::path out = config.out_dir();
  Json summary = document(config);
  if (s.at("kind") == "precision") {
    ModelSpec model;
    model.id = s.at("model").get<int>();
    model.p = s.at("p").get<std::size_t>();
    model.seed = config.seed();
    if (s.contains("alpha")) model.alpha = s.at("alpha").get<double>();
    const TruthModel truth = generate_truth(model);
    const Matrix y = sample_data(truth.sigma, s.at("n").get<std::size_t>(), config.seed());
    csv::write_matrix(out / "data.csv", y.transpose());
    csv::write_matrix(out / "truth_omega.csv", truth.omega);
    csv::write_matrix(out / "truth_sigma.csv", truth.sigma);
    summary["files"] = {"data.csv", "truth_omega.csv", "truth_sigma.csv"};
    log << "simulated " << y.cols() << " draws from model " << model.id << " (p=" << model.p << ")\n";
  } else {
    Rng rng = make_stream(config.seed());
    const auto scenario = s.at("scenario") == "correlated" ? DesignScenario::Correlated
                                                           : DesignScenario::Independent;
    const Vector beta = beta_configuration(s.at("configuration").get<int>());
    const auto sim = simulate_regression(scenario, beta, s.at("n").get<std::size_t>(),
                                         s.at("noise_sd").get<double>(), rng);
    csv::write_matrix(out / "x.csv", sim.data.x);
    csv::write_matrix(out / "y.csv", Matrix(sim.data.y));
    csv::write_matrix(out / "beta.csv", Matrix(sim.beta));
    csv::write_matrix(out / "sigma_x.csv", sim.sigma_x);
    summary["files"] = {"x.csv", "y.csv", "beta.csv", "sigma_x.csv"};
    log << "simulated a regression dataset with n=" << sim.data.n() << ", p=" << sim.data.p() << "\n";
  }
  write_json(out / "summary.json", summary);
}

void fit_precision(const RunConfig& config, std::ostream& log) {
  const Json& doc = config.resolved;
  const Matrix data = read_csv(doc.at("io"), "data");
  const auto p = static_cast<std::size_t>(data.cols());
  if (p == 0) throw IoError("/io/data: the data file has no columns");
  const SuffStats stats = SuffStats::from_data(data.transpose());
  const ConstraintLedger ledger = build_ledger(doc.at("ledger"), p);
  Json prior_node = doc.at("prior");
  const auto [spec, hyper] = parse_prior(prior_node, "/prior");

  auto results = run_chains(config, [&, spec = spec, hyper = hyper](std::size_t c, std::uint64_t seed) {
    ChainSettings settings;
    settings.iters = config.iters();
    settings.burnin = config.burnin();
    settings.thin = config.thin();
    settings.seed = seed;
    ChainResult r = run_chain(stats, ledger, spec, hyper, settings);
    auto out = open_output(chain_file(config, c));
    out << "iteration,tau" << lower_triangle_names("omega", p) << '\n';
    for (std::size_t k = 0; k < r.kept; ++k) {
      out << kept_iteration(config, k);
      put(out, r.tau_draws[k]);
      put_all(out, r.omega_draws[k]);
      out << '\n';
    }
    if (!out) throw IoError("failed writing " + chain_file(config, c).string());
    r.omega_draws.clear();
    return r;
  });

  Matrix mean_omega = Matrix::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  Matrix mean_sigma = mean_omega;
  Json chains = Json::array();
  Json diag_chains = Json::array();
  for (std::size_t c = 0; c < results.size(); ++c) {
    const ChainResult& r = results[c];
    mean_omega += r.mean_omega / static_cast<double>(results.size());
    mean_sigma += r.mean_sigma / static_cast<double>(results.size());
    const double mean_tau = mean(r.tau_draws);
    chains.push_back({{"chain", c},
                      {"seed", config.seed() + c},
                      {"draws_file", chain_file(config, c).filename().string()},
                      {"posterior_mean_tau", mean_tau},
                      {"posterior_mean_omega", matrix_json(r.mean_omega)}});
    Json d = counters_json(r.counters);
    d["chain"] = c;
    d["seed"] = config.seed() + c;
    d["kept"] = r.kept;
    d["lag10_autocorrelation"] = r.lag10_autocorrelation;
    d["runtime_seconds"] = r.runtime_seconds;
    diag_chains.push_back(std::move(d));
  }
  Json summary = document(config);
  summary["p"] = p;
  summary["n"] = data.rows();
  summary["kept_per_chain"] = results.front().kept;
  summary["posterior_mean_omega"] = matrix_json(mean_omega);
  summary["sigma_hat_L1"] = matrix_json(spd_inverse(mean_omega));
  summary["sigma_hat_L2"] = matrix_json(mean_sigma);
  summary["chains"] = std::move(chains);
  Json diagnostics = document(config);
  diagnostics["lag10_order"] = "lower triangle, row-major: (0,0), (1,0), (1,1), ...";
  diagnostics["chains"] = std::move(diag_chains);
  write_json(config.out_dir() / "summary.json", summary);
  write_json(config.out_dir() / "diagnostics.json", diagnostics);
  log << "fit-precision: p=" << p << ", n=" << data.rows() << ", " << results.size()
      << " chain(s) of " << results.front().kept << " kept draws\n";
}

void fit_regression(const RunConfig& config, std::ostream& log) {
  const Json& doc = config.resolved;
  const Matrix x = read_csv(doc.at("io"), "x");
  const Matrix y = read_csv(doc.at("io"), "y");
  if (y.cols() != 1 || y.rows() != x.rows()) {
    throw ConfigError("/io/y: expected one column with " + std::to_string(x.rows()) + " rows");
  }
  const RegressionData data = RegressionData::make(x, y.col(0));
  Json prior_node = doc.at("prior");
  const auto [spec, hyper] = parse_prior(prior_node, "/prior");
  const std::size_t p = data.p();

  struct Output {
    RegressionResult result;
    std::vector<double> acf;
  };
  auto results = run_chains(config, [&, spec = spec, hyper = hyper](std::size_t c, std::uint64_t seed) {
    RegressionSettings settings;
    settings.iters = config.iters();
    settings.burnin = config.burnin();
    settings.thin = config.thin();
    settings.seed = seed;
    Output o{run_regression_chain(data, spec, hyper, settings), {}};
    const RegressionResult& r = o.result;
    auto out = open_output(chain_file(config, c));
    out << "iteration,sigma2,tau";
    for (std::size_t j = 0; j < p; ++j) out << ",beta_" << j;
    out << '\n';
    std::vector<Vector> rows;
    for (std::size_t k = 0; k < r.kept; ++k) {
      out << kept_iteration(config, k);
      put(out, r.sigma2_draws[k]);
      put(out, r.tau_draws[k]);
      put_all(out, r.beta_draws[k]);
      out << '\n';
      Vector row(static_cast<Eigen::Index>(p) + 1);
      row << r.sigma2_draws[k], r.beta_draws[k];
      rows.push_back(std::move(row));
    }
    if (!out) throw IoError("failed writing " + chain_file(config, c).string());
    o.acf = lag10(rows);
    o.result.beta_draws.clear();
    return o;
  });

  Vector mean_beta = Vector::Zero(static_cast<Eigen::Index>(p));
  double mean_sigma2 = 0.0;
  Json chains = Json::array();
  Json diag_chains = Json::array();
  for (std::size_t c = 0; c < results.size(); ++c) {
    const RegressionResult& r = results[c].result;
    mean_beta += r.mean_beta / static_cast<double>(results.size());
    mean_sigma2 += r.mean_sigma2 / static_cast<double>(results.size());
    chains.push_back({{"chain", c},
                      {"seed", config.seed() + c},
                      {"draws_file", chain_file(config, c).filename().string()},
                      {"posterior_mean_beta", vector_json(r.mean_beta)},
                      {"posterior_mean_sigma2", r.mean_sigma2},
                      {"posterior_mean_tau", mean(r.tau_draws)}});
    diag_chains.push_back({{"chain", c},
                           {"seed", config.seed() + c},
                           {"kept", r.kept},
                           {"truncated_draws", r.counters.draws},
                           {"underflow_fallbacks", r.counters.fallbacks},
                           {"fallback_rate", r.counters.fallback_rate()},
                           {"lag10_autocorrelation", results[c].acf},
                           {"runtime_seconds", r.runtime_seconds}});
  }
  Json summary = document(config);
  summary["n"] = data.n();
  summary["p"] = p;
  summary["kept_per_chain"] = results.front().result.kept;
  summary["posterior_mean_beta"] = vector_json(mean_beta);
  summary["posterior_mean_sigma2"] = mean_sigma2;
  summary["chains"] = std::move(chains);
  Json diagnostics = document(config);
  diagnostics["lag10_order"] = "sigma2, beta_0, ..., beta_{p-1}";
  diagnostics["chains"] = std::move(diag_chains);
  write_json(config.out_dir() / "summary.json", summary);
  write_json(config.out_dir() / "diagnostics.json", diagnostics);
  log << "fit-regression: n=" << data.n() << ", p=" << p << ", " << results.size() << " chain(s)\n";
}

MCARSpec mcar_spec(const Json& doc) {
  const Json& m = doc.at("mcar");
  MCARSpec spec;
  const std::string variant = m.at("variant").get<std::string>();
  spec.variant = variant == "gv" ? MCARVariant::GV : variant == "wp1" ? MCARVariant::WP1 : MCARVariant::WP2;
  if (m.contains("wishart_df")) spec.wishart_df = m.at("wishart_df").get<double>();
  if (doc.contains("prior")) {
    Json prior = doc.at("prior");
    std::tie(spec.column_prior, spec.column_hyper) = parse_prior(prior, "/prior");
  }
  if (spec.variant == MCARVariant::WP2) {
    spec.fixed_rho = m.at("rho").get<double>();
    Json row = m.at("row_prior");
    const auto [row_spec, row_hyper] = parse_prior(row, "/mcar/row_prior");
    spec.row_prior = row_spec.with_tau(1.0);
    spec.row_tau = std::get<FixedTau>(row_hyper).value;
  }
  spec.validate();
  return spec;
}

void fit_mcar_command(const RunConfig& config, std::ostream& log) {
  const Json& doc = config.resolved;
  const AdjacencyModel adj = regions(doc.at("mcar"));
  const auto pr = static_cast<Eigen::Index>(adj.size());
  std::vector<Matrix> xs;
  if (doc.at("io").contains("data")) {
    const Matrix stacked = read_csv(doc.at("io"), "data");
    if (stacked.rows() == 0 || stacked.rows() % pr != 0) {
      throw ConfigError("/io/data: the row count must be a positive multiple of the " +
                        std::to_string(pr) + " regions");
    }
    for (Eigen::Index r = 0; r < stacked.rows(); r += pr) xs.push_back(stacked.middleRows(r, pr));
  } else {
    const Json& files = doc.at("io").at("replicates");
    for (std::size_t k = 0; k < files.size(); ++k) {
      xs.push_back(csv::read_matrix(files[k].get<std::string>()));
      if (xs.back().rows() != pr || xs.back().cols() != xs.front().cols() || xs.back().cols() == 0) {
        throw ConfigError("/io/replicates/" + std::to_string(k) + ": expected " + std::to_string(pr) +
                          " rows and " + std::to_string(xs.front().cols()) + " columns");
      }
    }
  }
  const MCARSpec spec = mcar_spec(doc);
  const auto pc = static_cast<std::size_t>(xs.front().cols());
  const bool grid = spec.variant != MCARVariant::WP2;

  struct Output {
    MCARResult result;
    std::vector<double> acf;
  };
  auto results = run_chains(config, [&](std::size_t c, std::uint64_t seed) {
    MCARSettings settings;
    settings.iters = config.iters();
    settings.burnin = config.burnin();
    settings.thin = config.thin();
    settings.seed = seed;
    Output o{fit_mcar(xs, adj, spec, settings), {}};
    const MCARResult& r = o.result;
    auto out = open_output(chain_file(config, c));
    out << "iteration" << (grid ? ",rho" : "") << lower_triangle_names("omega_r", adj.size())
        << lower_triangle_names("omega_c", pc) << '\n';
    std::vector<Vector> rows;
    for (std::size_t k = 0; k < r.kept; ++k) {
      out << kept_iteration(config, k);
      if (grid) put(out, r.rho_draws[k]);
      put_all(out, r.omega_r_draws[k]);
      put_all(out, r.omega_c_draws[k]);
      out << '\n';
      Vector row(r.omega_r_draws[k].size() + r.omega_c_draws[k].size());
      row << r.omega_r_draws[k], r.omega_c_draws[k];
      rows.push_back(std::move(row));
    }
    if (!out) throw IoError("failed writing " + chain_file(config, c).string());
    o.acf = lag10(rows);
    o.result.omega_r_draws.clear();
    o.result.omega_c_draws.clear();
    return o;
  });

  const double share = 1.0 / static_cast<double>(results.size());
  Matrix mean_r = Matrix::Zero(pr, pr);
  Matrix mean_c = Matrix::Zero(static_cast<Eigen::Index>(pc), static_cast<Eigen::Index>(pc));
  std::vector<double> rho_posterior;
  Json chains = Json::array();
  Json diag_chains = Json::array();
  for (std::size_t c = 0; c < results.size(); ++c) {
    const MCARResult& r = results[c].result;
    mean_r += share * r.mean_omega_r;
    mean_c += share * r.mean_omega_c;
    rho_posterior.resize(r.rho_posterior.size(), 0.0);
    for (std::size_t g = 0; g < r.rho_posterior.size(); ++g) rho_posterior[g] += share * r.rho_posterior[g];
    Json chain{{"chain", c},
               {"seed", config.seed() + c},
               {"draws_file", chain_file(config, c).filename().string()},
               {"posterior_mean_omega_r", matrix_json(r.mean_omega_r)},
               {"posterior_mean_omega_c", matrix_json(r.mean_omega_c)}};
    if (grid) chain["rho_mode"] = r.rho_mode();
    chains.push_back(std::move(chain));
    diag_chains.push_back({{"chain", c},
                           {"seed", config.seed() + c},
                           {"kept", r.kept},
                           {"row_sampler", counters_json(r.row_counters)},
                           {"column_sampler", counters_json(r.column_counters)},
                           {"lag10_autocorrelation", results[c].acf},
                           {"runtime_seconds", r.runtime_seconds}});
  }
  Json summary = document(config);
  summary["regions"] = adj.size();
  summary["columns"] = pc;
  summary["replicates"] = xs.size();
  summary["normalization"] = "omega_r(0,0) = 1";
  summary["posterior_mean_omega_r"] = matrix_json(mean_r);
  summary["posterior_mean_omega_c"] = matrix_json(mean_c);
  if (grid) {
    const auto rho_values = rho_grid();
    std::size_t best = 0;
    for (std::size_t g = 1; g < rho_posterior.size(); ++g) {
      if (rho_posterior[g] > rho_posterior[best]) best = g;
    }
    summary["rho_grid"] = rho_values;
    summary["rho_posterior"] = rho_posterior;
    summary["rho_mode"] = rho_values[best];
  }
  summary["chains"] = std::move(chains);
  Json diagnostics = document(config);
  diagnostics["lag10_order"] = "omega_r lower triangle, then omega_c lower triangle";
  diagnostics["chains"] = std::move(diag_chains);
  write_json(config.out_dir() / "summary.json", summary);
  write_json(config.out_dir() / "diagnostics.json", diagnostics);
  log << "fit-mcar: " << xs.size() << " replicate(s) of " << pr << "x" << pc << "\n";
}

void elicit_prior(const RunConfig& config, std::ostream& log) {
  const Json& e = config.resolved.at("elicit");
  const AdjacencyModel adj = regions(e);
  Json row = e.at("row_prior");
  row["tau"] = Json{{"fixed", 1.0}};
  const PriorSpec prior = parse_prior(row, "/elicit/row_prior").first;
  const double rho = e.at("rho").get<double>();
  const auto draws = static_cast<std::size_t>(config.iters() - config.burnin());

  auto out = open_output(config.out_dir() / "elicitation.csv");
  out << "tau,i,j,center,q25,median,q75,iqr,median_abs_deviation\n";
  const Matrix centers = adj.car_precision(rho);
  std::vector<std::vector<double>> iqrs;
  Json per_tau = Json::array();
  Json diag = Json::array();
  const auto started = std::chrono::steady_clock::now();
  for (const Json& tau_node : e.at("tau_values")) {
    const double tau = tau_node.get<double>();
    const ElicitationSummary s =
        prior_elicitation_sim(adj, prior, tau, rho, draws, config.burnin(), config.seed());
    const auto iqr = s.iqr();
    for (std::size_t k = 0; k < s.edges.size(); ++k) {
      const auto [i, j] = s.edges[k];
      out << csv::format_double(tau) << ',' << i << ',' << j;
      put(out, centers(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      put(out, s.q25[k]);
      put(out, s.median[k]);
      put(out, s.q75[k]);
      put(out, iqr[k]);
      put(out, s.median_abs_deviation_from_center[k]);
      out << '\n';
    }
    per_tau.push_back({{"tau", tau},
                       {"draws", s.draws},
                       {"median_iqr", median(iqr)},
                       {"positive_offdiagonal", s.positive_offdiagonal},
                       {"outside_scale_band", s.outside_scale_band}});
    Json d = counters_json(s.counters);
    d["tau"] = tau;
    diag.push_back(std::move(d));
    iqrs.push_back(iqr);
  }
  if (!out) throw IoError("failed writing elicitation.csv");
  // Ordering is checked in the listed order of tau_values.
  bool increasing = true;
  for (std::size_t t = 1; t < iqrs.size(); ++t) {
    for (std::size_t k = 0; k < iqrs[t].size(); ++k) increasing = increasing && iqrs[t][k] > iqrs[t - 1][k];
  }
  Json summary = document(config);
  summary["regions"] = adj.size();
  summary["edges"] = adj.graph().edge_count();
  summary["per_tau"] = std::move(per_tau);
  summary["iqr_strictly_increasing"] = increasing;
  Json diagnostics = document(config);
  diagnostics["per_tau"] = std::move(diag);
  diagnostics["runtime_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_json(config.out_dir() / "summary.json", summary);
  write_json(config.out_dir() / "diagnostics.json", diagnostics);
  log << "elicit-prior: " << iqrs.size() << " scale value(s), " << draws << " draws each\n";
}

void bench(const RunConfig& config, std::ostream& log) {
  const Json& b = config.resolved.at("bench");
  ChainSettings settings;
  settings.iters = config.iters();
  settings.burnin = config.burnin();
  settings.thin = config.thin();
  settings.seed = config.seed();
  const auto p = b.at("p").get<std::size_t>();
  const auto replicates = b.at("replicates").get<std::size_t>();

  auto out = open_output(config.out_dir() / "bench.csv");
  write_bench_header(out);
  std::map<std::string, std::vector<BenchRow>> groups;
  const auto started = std::chrono::steady_clock::now();
  for (const Json& m : b.at("models")) {
    ModelSpec model;
    model.id = m.get<int>();
    model.p = p;
    model.seed = b.at("model_seed").get<std::uint64_t>();
    const TruthModel truth = generate_truth(model);
    for (const Json& n : b.at("n")) {
      for (const Json& label : b.at("priors")) {
        const NamedPrior& prior = benchmark_prior(label.get<std::string>());
        for (std::size_t r = 0; r < replicates; ++r) {
          const BenchRow row = run_bench_replicate(model, truth, n.get<std::size_t>(), prior, r, settings);
          write_bench_row(out, row);
          out.flush();
          const std::string key = std::to_string(row.model) + "/" + std::to_string(row.n) + "/" + row.prior;
          groups[key].push_back(row);
          log << "model " << row.model << " n=" << row.n << " " << row.prior << " rep " << r
              << ": L1=" << row.l1 << " L2=" << row.l2 << '\n';
        }
      }
    }
  }
  if (!out) throw IoError("failed writing bench.csv");
  Json cells = Json::array();
  for (const auto& [key, rows] : groups) {
    std::vector<double> l1, l2;
    for (const auto& r : rows) {
      l1.push_back(r.l1);
      l2.push_back(r.l2);
    }
    cells.push_back({{"model", rows.front().model},
                     {"n", rows.front().n},
                     {"prior", rows.front().prior},
                     {"replicates", rows.size()},
                     {"median_l1", median(l1)},
                     {"median_l2", median(l2)},
                     {"mean_l1", mean(l1)},
                     {"se_l1", standard_error(l1)},
                     {"mean_l2", mean(l2)},
                     {"se_l2", standard_error(l2)}});
  }
  Json summary = document(config);
  summary["results_file"] = "bench.csv";
  summary["cells"] = std::move(cells);
  Json diagnostics = document(config);
  diagnostics["runtime_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_json(config.out_dir() / "summary.json", summary);
  write_json(config.out_dir() / "diagnostics.json", diagnostics);
}

}  // namespace

void run(const RunConfig& config, std::ostream& log) {
  std::error_code ec;
  fs::create_directories(config.out_dir(), ec);
  if (ec) throw IoError("cannot create output directory " + config.out_dir().string() + ": " + ec.message());
  switch (config.command) {
    case Command::Simulate:
      return simulate(config, log);
    case Command::FitPrecision:
      return fit_precision(config, log);
    case Command::FitRegression:
      return fit_regression(config, log);
    case Command::FitMcar:
      return fit_mcar_command(config, log);
    case Command::ElicitPrior:
      return elicit_prior(config, log);
    case Command::Bench:
      return bench(config, log);
  }
}

}  // namespace unishrink::cli
