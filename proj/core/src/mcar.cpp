#include "unishrink/mcar.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "unishrink/diagnostics.hpp"
#include "unishrink/errors.hpp"

namespace unishrink {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

AdjacencyModel AdjacencyModel::from_matrix(const Matrix& w) {
  const auto p = w.rows();
  if (p < 2 || w.cols() != p) throw InvalidSpec("adjacency must be square with at least 2 regions");
  for (Eigen::Index i = 0; i < p; ++i) {
    if (w(i, i) != 0.0) throw InvalidSpec("adjacency diagonal must be zero");
    for (Eigen::Index j = 0; j < p; ++j) {
      if (w(i, j) != 0.0 && w(i, j) != 1.0) throw InvalidSpec("adjacency entries must be 0 or 1");
      if (w(i, j) != w(j, i)) throw InvalidSpec("adjacency must be symmetric");
    }
  }
  AdjacencyModel model;
  model.w_ = w;
  model.row_sums_ = w.rowwise().sum();
  for (Eigen::Index i = 0; i < p; ++i) {
    if (model.row_sums_(i) == 0.0) {
      std::ostringstream msg;
      msg << "region " << i << " has no neighbours; M(rho) would be singular";
      throw InvalidSpec(msg.str());
    }
  }
  model.graph_ = Graph::from_adjacency(w);
  const Vector inv_sqrt = model.row_sums_.cwiseSqrt().cwiseInverse();
  const Matrix normalized = inv_sqrt.asDiagonal() * w * inv_sqrt.asDiagonal();
  const auto [lmin, lmax] = extremal_eigenvalues(normalized);
  model.admissible_ = {1.0 / lmin, 1.0 / lmax};
  return model;
}

AdjacencyModel AdjacencyModel::lattice(std::size_t rows, std::size_t cols) {
  const auto n = static_cast<Eigen::Index>(rows * cols);
  Matrix w = Matrix::Zero(n, n);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto k = static_cast<Eigen::Index>(r * cols + c);
      if (c + 1 < cols) w(k, k + 1) = w(k + 1, k) = 1.0;
      if (r + 1 < rows) {
        const auto below = static_cast<Eigen::Index>((r + 1) * cols + c);
        w(k, below) = w(below, k) = 1.0;
      }
    }
  }
  return from_matrix(w);
}

Matrix AdjacencyModel::car_precision(double rho) const {
  if (!(rho > admissible_.lo && rho < admissible_.hi)) {
    std::ostringstream msg;
    msg << "rho = " << rho << " outside the admissible interval (" << admissible_.lo << ", "
        << admissible_.hi << ")";
    throw RhoOutOfRange(msg.str());
  }
  Matrix m = -rho * w_;
  m.diagonal() = row_sums_;
  return m;
}

std::vector<double> rho_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 16; ++k) grid.push_back(k * 0.05);
  for (int k = 1; k <= 5; ++k) grid.push_back(0.80 + k * 0.02);
  for (int k = 1; k <= 9; ++k) grid.push_back(0.90 + k * 0.01);
  return grid;
}

SuffStats row_suffstats(const std::vector<Matrix>& xs, const Matrix& omega_c) {
  if (xs.empty()) throw InvalidSpec("at least one replicate is required");
  const auto pr = xs.front().rows();
  SuffStats out{Matrix::Zero(pr, pr), 0.0};
  for (const Matrix& x : xs) {
    if (x.rows() != pr || x.cols() != omega_c.rows()) throw InvalidSpec("replicate shape mismatch");
    out.s.noalias() += x * omega_c * x.transpose();
    out.n += static_cast<double>(x.cols());
  }
  return out;
}

SuffStats column_suffstats(const std::vector<Matrix>& xs, const Matrix& omega_r) {
  if (xs.empty()) throw InvalidSpec("at least one replicate is required");
  const auto pc = xs.front().cols();
  SuffStats out{Matrix::Zero(pc, pc), 0.0};
  for (const Matrix& x : xs) {
    if (x.cols() != pc || x.rows() != omega_r.rows()) throw InvalidSpec("replicate shape mismatch");
    out.s.noalias() += x.transpose() * omega_r * x;
    out.n += static_cast<double>(x.rows());
  }
  return out;
}

double matrix_normal_log_density(const Matrix& x, const Matrix& omega_r, const Matrix& omega_c) {
  const double pr = static_cast<double>(x.rows());
  const double pc = static_cast<double>(x.cols());
  const double quad = (omega_r * x * omega_c * x.transpose()).trace();
  return -0.5 * pr * pc * std::log(2.0 * std::numbers::pi) + 0.5 * pc * log_det(omega_r) +
         0.5 * pr * log_det(omega_c) - 0.5 * quad;
}

Matrix sample_matrix_normal(const Matrix& omega_r, const Matrix& omega_c, Rng& rng) {
  // X = L_r^{-T} Z L_c^{-1} has row covariance Ω_r^{-1} and column covariance Ω_c^{-1}.
  const Matrix lr = cholesky(omega_r);
  const Matrix lc = cholesky(omega_c);
  Matrix z(omega_r.rows(), omega_c.rows());
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    for (Eigen::Index r = 0; r < z.rows(); ++r) z(r, c) = standard_normal(rng);
  }
  const Matrix left = lr.transpose().triangularView<Eigen::Upper>().solve(z);
  return lc.transpose().triangularView<Eigen::Upper>().solve(left.transpose()).transpose();
}

void MCARSpec::validate() const {
  if (variant == MCARVariant::GV && !(wishart_df > 2.0)) {
    throw InvalidSpec("Wishart degrees of freedom must exceed 2");
  }
  if (variant != MCARVariant::GV) unishrink::validate(column_hyper, column_prior);
  if (variant == MCARVariant::WP2 && !(row_tau > 0.0)) throw InvalidSpec("row tau must be positive");
}

ConstraintLedger wp2_row_ledger(const AdjacencyModel& adj, double rho) {
  ConstraintLedger ledger(adj.size());
  ledger.set_graph(adj.graph());
  ledger.set_centers(adj.car_precision(rho));
  ledger.constrain_edges_negative();
  return ledger;
}

void MCARSettings::validate() const {
  if (iters == 0) throw ConfigError("iters must be positive");
  if (iters <= burnin) throw ConfigError("iters must exceed burnin");
  if (thin == 0) throw ConfigError("thin must be positive");
}

double MCARResult::rho_mode() const {
  if (rho_posterior.empty()) throw InvalidSpec("no rho posterior for this variant");
  const auto it = std::max_element(rho_posterior.begin(), rho_posterior.end());
  return rho_grid[static_cast<std::size_t>(it - rho_posterior.begin())];
}

void rescale_pair(Matrix& omega_r, Matrix& omega_c) {
  const double c = omega_r(0, 0);
  if (!(c > 0.0)) throw InvalidSpec("rescale_pair: leading row precision must be positive");
  omega_r /= c;
  omega_c *= c;
}

Matrix sample_wishart(double df, const Matrix& scale, Rng& rng) {
  const auto p = scale.rows();
  if (!(df > static_cast<double>(p) - 1.0)) throw InvalidSpec("Wishart df must exceed p - 1");
  const Matrix l = cholesky(scale);
  Matrix a = Matrix::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    std::chi_squared_distribution<double> chi(df - static_cast<double>(i));
    a(i, i) = std::sqrt(chi(rng));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = standard_normal(rng);
  }
  const Matrix la = l * a;
  Matrix out = la * la.transpose();
  mirror_lower(out);
  return out;
}

namespace {

struct RhoTable {
  std::vector<double> grid;
  std::vector<double> log_det;
};

RhoTable make_rho_table(const AdjacencyModel& adj) {
  RhoTable table;
  for (const double rho : rho_grid()) {
    const Interval ok = adj.admissible_rho();
    if (!(rho > ok.lo && rho < ok.hi)) continue;
    table.grid.push_back(rho);
    table.log_det.push_back(log_det(adj.car_precision(rho)));
  }
  if (table.grid.empty()) throw RhoOutOfRange("no grid value of rho is admissible");
  return table;
}

/// Conditional grid probabilities of ρ given S_r with n_r = stats.n.
std::vector<double> rho_conditional(const RhoTable& table, const AdjacencyModel& adj,
                                    const SuffStats& stats) {
  const double tr_e = (adj.row_sums().asDiagonal() * stats.s).trace();
  const double tr_w = (adj.adjacency().cwiseProduct(stats.s)).sum();
  std::vector<double> logp(table.grid.size());
  for (std::size_t k = 0; k < logp.size(); ++k) {
    logp[k] = 0.5 * stats.n * table.log_det[k] - 0.5 * (tr_e - table.grid[k] * tr_w);
  }
  const double top = *std::max_element(logp.begin(), logp.end());
  double total = 0.0;
  for (double& v : logp) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : logp) v /= total;
  return logp;
}

std::size_t draw_categorical(const std::vector<double>& probs, Rng& rng) {
  const double u = uniform_open(rng);
  double acc = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    if (u < acc) return k;
  }
  return probs.size() - 1;
}

}  // namespace

MCARResult fit_mcar(const std::vector<Matrix>& xs, const AdjacencyModel& adj,
                    const MCARSpec& spec, const MCARSettings& settings) {
  spec.validate();
  settings.validate();
  if (xs.empty()) throw InvalidSpec("fit_mcar: at least one replicate is required");
  const auto started = std::chrono::steady_clock::now();
  const auto pr = static_cast<Eigen::Index>(adj.size());
  const auto pc = xs.front().cols();
  for (const Matrix& x : xs) {
    if (x.rows() != pr || x.cols() != pc) throw InvalidSpec("replicate shape mismatch");
  }

  Rng rng = make_stream(settings.seed);
  const bool grid_rho = spec.variant != MCARVariant::WP2;

  MCARResult result;
  result.p_r = static_cast<std::size_t>(pr);
  result.p_c = static_cast<std::size_t>(pc);
  result.mean_omega_r = Matrix::Zero(pr, pr);
  result.mean_omega_c = Matrix::Zero(pc, pc);

  // Row side.
  RhoTable table;
  std::optional<PrecisionSampler> row_sampler;
  GibbsState row_state;
  Matrix omega_r;
  double rho = spec.fixed_rho;
  if (grid_rho) {
    table = make_rho_table(adj);
    result.rho_grid = table.grid;
    result.rho_posterior.assign(table.grid.size(), 0.0);
    rho = table.grid[table.grid.size() / 2];
    omega_r = adj.car_precision(rho);
  } else {
    const ConstraintLedger ledger = wp2_row_ledger(adj, spec.fixed_rho);
    row_sampler.emplace(ledger, spec.row_prior.with_tau(1.0), FixedTau{spec.row_tau});
    row_state = row_sampler->initial_state(SuffStats::empty(adj.size()),
                                           adj.car_precision(spec.fixed_rho), rng);
    omega_r = row_state.omega;
  }

  // Column side.
  std::optional<PrecisionSampler> col_sampler;
  GibbsState col_state;
  Matrix omega_c = Matrix::Identity(pc, pc);
  if (spec.variant != MCARVariant::GV) {
    col_sampler.emplace(ConstraintLedger(static_cast<std::size_t>(pc)), spec.column_prior,
                        spec.column_hyper);
    col_state = col_sampler->initial_state(column_suffstats(xs, omega_r), std::nullopt, rng);
    omega_c = col_state.omega;
  }

  std::vector<double> probs;
  for (std::size_t k = 1; k <= settings.iters; ++k) {
    // Ω_c | Ω_r
    const SuffStats sc = column_suffstats(xs, omega_r);
    if (spec.variant == MCARVariant::GV) {
      const Matrix scale = spd_inverse(Matrix::Identity(pc, pc) + sc.s);
      omega_c = sample_wishart(spec.wishart_df + sc.n + static_cast<double>(pc) - 1.0, scale, rng);
    } else {
      col_state.stats = sc;
      col_sampler->sweep(col_state, rng);
      omega_c = col_state.omega;
    }
    // Ω_r | Ω_c
    const SuffStats sr = row_suffstats(xs, omega_c);
    if (grid_rho) {
      probs = rho_conditional(table, adj, sr);
      rho = table.grid[draw_categorical(probs, rng)];
      omega_r = adj.car_precision(rho);
    } else {
      row_state.stats = sr;
      row_sampler->sweep(row_state, rng);
      omega_r = row_state.omega;
    }

    if (k <= settings.burnin || (k - settings.burnin) % settings.thin != 0) continue;
    Matrix rep_r = omega_r;
    Matrix rep_c = omega_c;
    rescale_pair(rep_r, rep_c);
    result.mean_omega_r += rep_r;
    result.mean_omega_c += rep_c;
    if (grid_rho) {
      for (std::size_t g = 0; g < probs.size(); ++g) result.rho_posterior[g] += probs[g];
    }
    ++result.kept;
    if (settings.store_draws) {
      result.omega_r_draws.push_back(lower_triangle(rep_r));
      result.omega_c_draws.push_back(lower_triangle(rep_c));
      if (grid_rho) result.rho_draws.push_back(rho);
    }
  }
  const double kept = static_cast<double>(result.kept);
  result.mean_omega_r /= kept;
  result.mean_omega_c /= kept;
  for (double& v : result.rho_posterior) v /= kept;
  if (row_sampler) result.row_counters = row_sampler->counters();
  if (col_sampler) result.column_counters = col_sampler->counters();
  result.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  for (const auto* c : {&result.row_counters, &result.column_counters}) {
    if (c->truncated.fallback_rate() > settings.max_fallback_rate) {
      throw NumericalFailure("underflow fallback rate exceeds the tolerated rate");
    }
  }
  return result;
}

std::vector<double> ElicitationSummary::iqr() const {
  std::vector<double> out(q25.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = q75[k] - q25[k];
  return out;
}

ElicitationSummary prior_elicitation_sim(const AdjacencyModel& adj, const PriorSpec& row_prior,
                                         double row_tau, double rho, std::size_t n_draws,
                                         std::size_t burnin, std::uint64_t seed) {
  if (n_draws == 0) throw InvalidSpec("prior_elicitation_sim: n_draws must be positive");
  const ConstraintLedger ledger = wp2_row_ledger(adj, rho);
  PrecisionSampler sampler(ledger, row_prior.with_tau(1.0), FixedTau{row_tau});
  Rng rng = make_stream(seed);
  GibbsState state =
      sampler.initial_state(SuffStats::empty(adj.size()), adj.car_precision(rho), rng);

  ElicitationSummary out;
  out.edges = adj.graph().edges();
  std::vector<std::vector<double>> values(out.edges.size());
  std::vector<std::vector<double>> deviations(out.edges.size());
  for (auto& v : values) v.reserve(n_draws);
  const std::size_t p = adj.size();

  for (std::size_t k = 0; k < burnin + n_draws; ++k) {
    sampler.sweep(state, rng);
    if (k < burnin) continue;
    ++out.draws;
    for (std::size_t e = 0; e < out.edges.size(); ++e) {
      const auto [i, j] = out.edges[e];
      const double w = state.omega(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      values[e].push_back(w);
      deviations[e].push_back(std::abs(w - ledger.center(i, j)));
      if (!(w < 0.0)) ++out.positive_offdiagonal;
    }
    // The scales in the state were redrawn after Ω, so |ω - m| < τ t must hold.
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        if (!ledger.is_free(i, j)) continue;
        const auto ii = static_cast<Eigen::Index>(i);
        const auto jj = static_cast<Eigen::Index>(j);
        const double dev = std::abs(state.omega(ii, jj) - ledger.center(i, j));
        if (!(dev < row_tau * state.scales(ii, jj))) ++out.outside_scale_band;
      }
    }
  }
  for (std::size_t e = 0; e < out.edges.size(); ++e) {
    out.q25.push_back(quantile(values[e], 0.25));
    out.median.push_back(quantile(values[e], 0.5));
    out.q75.push_back(quantile(values[e], 0.75));
    out.median_abs_deviation_from_center.push_back(median(deviations[e]));
  }
  out.counters = sampler.counters();
  return out;
}

}  // namespace unishrink
