#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "unishrink/constraints.hpp"
#include "unishrink/linalg.hpp"
#include "unishrink/precision_gibbs.hpp"
#include "unishrink/priors.hpp"
#include "unishrink/random.hpp"

namespace unishrink {

/// Symmetric 0/1 adjacency W over regions, its row sums and the CAR
/// precision M(ρ) = E_W - ρW.
class AdjacencyModel {
 public:
  /// Throws InvalidSpec unless W is symmetric 0/1 with a zero diagonal and
  /// every region has at least one neighbour.
  static AdjacencyModel from_matrix(const Matrix& w);
  /// Rook-contiguity lattice with rows x cols regions, numbered row-major.
  static AdjacencyModel lattice(std::size_t rows, std::size_t cols);

  std::size_t size() const noexcept { return static_cast<std::size_t>(w_.rows()); }
  const Matrix& adjacency() const noexcept { return w_; }
  const Vector& row_sums() const noexcept { return row_sums_; }
  const Graph& graph() const noexcept { return graph_; }

  /// Open interval of ρ for which M(ρ) is positive definite: the reciprocals
  /// of the extreme eigenvalues of E_W^{-1/2} W E_W^{-1/2}.
  Interval admissible_rho() const noexcept { return admissible_; }
  /// Throws RhoOutOfRange outside admissible_rho().
  Matrix car_precision(double rho) const;

 private:
  Matrix w_;
  Vector row_sums_;
  Graph graph_;
  Interval admissible_;
};

/// 31 equally weighted values: 0 to 0.8 by 0.05, 0.82 to 0.9 by 0.02 and
/// 0.91 to 0.99 by 0.01.
std::vector<double> rho_grid();

/// S_r = Σ_k X_k Ω_c X_kᵀ with n = p_c · replicates.
SuffStats row_suffstats(const std::vector<Matrix>& xs, const Matrix& omega_c);
/// S_c = Σ_k X_kᵀ Ω_r X_k with n = p_r · replicates.
SuffStats column_suffstats(const std::vector<Matrix>& xs, const Matrix& omega_r);

/// log density of one p_r x p_c matrix-normal draw with row precision Ω_r and
/// column precision Ω_c.
double matrix_normal_log_density(const Matrix& x, const Matrix& omega_r, const Matrix& omega_c);

/// One p_r x p_c draw with row precision Ω_r and column precision Ω_c.
Matrix sample_matrix_normal(const Matrix& omega_r, const Matrix& omega_c, Rng& rng);

enum class MCARVariant {
  /// Ω_r = M(ρ) on the grid, Ω_c ~ Wishart(b, I).
  GV,
  /// Ω_r = M(ρ) on the grid, Ω_c under a shrinkage prior.
  WP1,
  /// Ω_r shrunk towards M(ρ₀) with negative off-diagonals on the graph of W,
  /// Ω_c under a shrinkage prior.
  WP2,
};

struct MCARSpec {
  MCARVariant variant = MCARVariant::WP1;
  PriorSpec column_prior = PriorSpec::logarithmic();
  TauHyperPrior column_hyper = HalfCauchyTau{1.0};
  double wishart_df = 3.0;
  PriorSpec row_prior = PriorSpec::exponential_power(1.0);
  double row_tau = 1.0;
  double fixed_rho = 0.9;

  void validate() const;
};

/// Ledger for the WP2 row precision: graph of W, centers M(ρ), (-∞, 0) boxes
/// on the edges.
ConstraintLedger wp2_row_ledger(const AdjacencyModel& adj, double rho);

struct MCARSettings {
  std::size_t iters = 15000;
  std::size_t burnin = 5000;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  bool store_draws = true;
  double max_fallback_rate = 1e-3;

  void validate() const;
};

struct MCARResult {
  std::size_t p_r = 0;
  std::size_t p_c = 0;
  std::size_t kept = 0;
  /// Reported draws are normalized so that Ω_r(0, 0) = 1 (Ω_c scaled up by
  /// the same factor); lower triangles flattened row-major.
  std::vector<Vector> omega_r_draws;
  std::vector<Vector> omega_c_draws;
  std::vector<double> rho_draws;
  /// Grid posterior averaged over kept sweeps (GV and WP1 only).
  std::vector<double> rho_grid;
  std::vector<double> rho_posterior;
  Matrix mean_omega_r;
  Matrix mean_omega_c;
  ChainCounters row_counters;
  ChainCounters column_counters;
  double runtime_seconds = 0.0;

  double rho_mode() const;
};

/// Normalizes a pair so that Ω_r(0, 0) = 1; Ω_c ⊗ Ω_r is unchanged.
void rescale_pair(Matrix& omega_r, Matrix& omega_c);

MCARResult fit_mcar(const std::vector<Matrix>& xs, const AdjacencyModel& adj,
                    const MCARSpec& spec, const MCARSettings& settings);

/// Wishart draw with df degrees of freedom and scale matrix `scale`.
Matrix sample_wishart(double df, const Matrix& scale, Rng& rng);

struct ElicitationSummary {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<double> q25;
  std::vector<double> median;
  std::vector<double> q75;
  /// Median of |ω_ij - m_ij| per edge.
  std::vector<double> median_abs_deviation_from_center;
  std::size_t draws = 0;
  std::size_t positive_offdiagonal = 0;
  std::size_t outside_scale_band = 0;
  ChainCounters counters;

  std::vector<double> iqr() const;
};

/// Prior draws of the WP2 row precision for a fixed τ_r (the sampler run
/// without data).
ElicitationSummary prior_elicitation_sim(const AdjacencyModel& adj, const PriorSpec& row_prior,
                                         double row_tau, double rho, std::size_t n_draws,
                                         std::size_t burnin, std::uint64_t seed);

}  // namespace unishrink
