#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "unishrink/constraints.hpp"
#include "unishrink/linalg.hpp"
#include "unishrink/priors.hpp"
#include "unishrink/random.hpp"
#include "unishrink/truncated.hpp"

namespace unishrink {

/// S = Y Y^T and the effective sample size n. n = 0 samples the prior.
struct SuffStats {
  Matrix s;
  double n = 0.0;

  /// Y is p x n, one observation per column.
  static SuffStats from_data(const Matrix& y);
  static SuffStats empty(std::size_t p);
};

/// (Ω, T, τ) plus the cached inverse of Ω. Latent scales live in the lower
/// triangle of `scales` (mirrored); non-free elements hold +inf.
struct GibbsState {
  Matrix omega;
  Matrix scales;
  double tau = 1.0;
  SuffStats stats;
  /// Ω^{-1}, kept current by the sampler; call resync() after editing omega.
  RunningInverse inverse;

  void resync() { inverse.reset(omega); }
};

/// Conditional truncation regions for one 2x2 block, each given the current
/// values of the other two parameters.
struct BlockRegions {
  Interval d1;
  Interval d2;
  IntervalSet l21;
};

enum class BlockSolver { FreshCholesky, RunningInverse };

struct SweepOptions {
  /// Shuffle the block order each sweep; not bit-reproducible against the
  /// lexicographic scan.
  bool randomized_scan = false;
  /// Cholesky-check Ω and the ledger after every block update (slow).
  bool verify_each_block = false;
  BlockSolver solver = BlockSolver::RunningInverse;
};

struct ChainCounters {
  SamplerCounters truncated;
  std::uint64_t sweeps = 0;
  std::uint64_t block_updates = 0;
  std::uint64_t spd_failures = 0;
  std::uint64_t constraint_violations = 0;
  std::uint64_t scale_violations = 0;
};

/// Block Gibbs sampler for Ω under a scale-mixture-of-uniforms prior:
/// 2x2 blocks over the graph's edges (truncated Wishart via (d1, d2, l21)),
/// isolated diagonals, the collapsed τ update and the latent scales T.
class PrecisionSampler {
 public:
  PrecisionSampler(ConstraintLedger ledger, PriorSpec spec, TauHyperPrior hyper,
                   SweepOptions options = {});

  const ConstraintLedger& ledger() const noexcept { return ledger_; }
  const PriorSpec& prior() const noexcept { return spec_; }
  const TauHyperPrior& hyper() const noexcept { return hyper_; }
  const ChainCounters& counters() const noexcept { return counters_; }
  void reset_counters() noexcept { counters_ = {}; }

  /// Ω₀ (identity by default) projected into the ledger, τ₀ from the
  /// hyper-prior, then one draw of T.
  GibbsState initial_state(SuffStats stats, const std::optional<Matrix>& omega0, Rng& rng) const;

  BlockRegions block_conditional_regions(const GibbsState& state, std::size_t i,
                                         std::size_t j) const;

  /// Updates (d1, d2, l21) of block (i, j), in that order, and recomposes Ω_{e,e}.
  void sample_block(GibbsState& state, std::size_t i, std::size_t j, Rng& rng);
  /// ω_vv for a vertex without edges in the graph.
  void sample_isolated_diag(GibbsState& state, std::size_t v, Rng& rng);
  /// τ | Ω with T integrated out. Must precede sample_latent_scales.
  void sample_global_scale(GibbsState& state, Rng& rng) const;
  void sample_latent_scales(GibbsState& state, Rng& rng) const;

  /// Blocks (lexicographic unless randomized), isolated vertices, τ, then T.
  void sweep(GibbsState& state, Rng& rng);

  /// (ω_ij - m_ij) / v_ij over the free elements.
  std::vector<double> deviations(const GibbsState& state) const;
  bool scales_feasible(const GibbsState& state) const;

 private:
  BlockDecomposition decompose(const GibbsState& state, std::size_t i, std::size_t j) const;
  Interval d1_region(const GibbsState& state, const BlockDecomposition& blk, double l21,
                     double d2) const;
  Interval d2_region(const GibbsState& state, const BlockDecomposition& blk, double d1,
                     double l21) const;
  IntervalSet l21_region(const GibbsState& state, const BlockDecomposition& blk, double d1,
                         double d2) const;

  ConstraintLedger ledger_;
  PriorSpec spec_;
  TauHyperPrior hyper_;
  SweepOptions options_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
  std::vector<std::size_t> isolated_;
  ChainCounters counters_;
};

struct ChainSettings {
  std::size_t iters = 15000;
  std::size_t burnin = 5000;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  bool store_draws = true;
  std::optional<Matrix> initial_omega;
  SweepOptions sweep;
  /// The run fails when the share of deterministic fallbacks exceeds this.
  double max_fallback_rate = 1e-3;

  void validate() const;
  std::size_t kept() const noexcept;
};

struct ChainResult {
  std::size_t p = 0;
  std::size_t kept = 0;
  /// One lower-triangle-flattened Ω per stored draw.
  std::vector<Vector> omega_draws;
  std::vector<double> tau_draws;
  Matrix mean_omega;
  Matrix mean_sigma;
  ChainCounters counters;
  /// Lag-10 autocorrelation for each lower-triangle element (empty when
  /// draws were not stored).
  std::vector<double> lag10_autocorrelation;
  double runtime_seconds = 0.0;

  Matrix omega_draw(std::size_t k) const { return from_lower_triangle(omega_draws.at(k), p); }
};

ChainResult run_chain(const SuffStats& stats, const ConstraintLedger& ledger,
                      const PriorSpec& spec, const TauHyperPrior& hyper,
                      const ChainSettings& settings);

}  // namespace unishrink
