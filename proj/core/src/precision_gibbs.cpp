#include "unishrink/precision_gibbs.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "unishrink/diagnostics.hpp"
#include "unishrink/errors.hpp"

namespace unishrink {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCap = 1e308;

double cap(double x) { return std::isinf(x) ? x : std::clamp(x, -kCap, kCap); }

Interval shift(Interval r, double by) { return {r.lo - by, r.hi - by}; }

// Values x with a*x + c inside r.
Interval solve_linear(double a, double c, Interval r, const char* what) {
  if (a > 0.0) return {cap((r.lo - c) / a), cap((r.hi - c) / a)};
  if (a < 0.0) return {cap((r.hi - c) / a), cap((r.lo - c) / a)};
  const double tol = 1e-12 * (1.0 + std::abs(c));
  if (c < r.lo - tol || c > r.hi + tol) {
    throw InfeasibleState(std::string(what) + ": constant term violates its constraint");
  }
  return {};
}

// Rounding can leave the current point a hair outside its own region, which
// then comes out empty; collapse such slivers instead of aborting.
Interval nonempty(Interval r, const char* what, SamplerCounters& counters) {
  if (r.lo <= r.hi) return r;
  const double gap = r.lo - r.hi;
  if (gap <= 1e-9 * (1.0 + std::max(std::abs(r.lo), std::abs(r.hi)))) {
    ++counters.fallbacks;
    const double mid = 0.5 * (r.lo + r.hi);
    return {mid, mid};
  }
  std::ostringstream msg;
  msg << what << ": empty truncation region [" << r.lo << ", " << r.hi << "]";
  throw InfeasibleState(msg.str());
}

double interior_point(Interval box) {
  const bool lo_finite = std::isfinite(box.lo);
  const bool hi_finite = std::isfinite(box.hi);
  if (lo_finite && hi_finite) return 0.5 * (box.lo + box.hi);
  if (lo_finite) return box.lo + 0.1 * std::max(1.0, std::abs(box.lo));
  if (hi_finite) return box.hi - 0.1 * std::max(1.0, std::abs(box.hi));
  return 0.0;
}

bool strictly_inside(double x, Interval box) { return x > box.lo && x < box.hi; }

// The exact draw lies inside `allowed`; rebuilding ω from (d1, l21, d2) and B can
// still land a fraction of an operand ulp outside when the bound is tiny.
double pull_inside(double w, Interval allowed) {
  if (!(allowed.lo < allowed.hi)) return w;
  if (w <= allowed.lo) return std::nextafter(allowed.lo, allowed.hi);
  if (w >= allowed.hi) return std::nextafter(allowed.hi, allowed.lo);
  return w;
}

}  // namespace

SuffStats SuffStats::from_data(const Matrix& y) {
  SuffStats out;
  out.s = y * y.transpose();
  out.n = static_cast<double>(y.cols());
  return out;
}

SuffStats SuffStats::empty(std::size_t p) {
  const auto n = static_cast<Eigen::Index>(p);
  return {Matrix::Zero(n, n), 0.0};
}

PrecisionSampler::PrecisionSampler(ConstraintLedger ledger, PriorSpec spec, TauHyperPrior hyper,
                                   SweepOptions options)
    : ledger_(std::move(ledger)),
      spec_(spec),
      hyper_(hyper),
      options_(options),
      edges_(ledger_.graph().edges()),
      isolated_(ledger_.graph().isolated()) {
  validate(hyper_, spec_);
  if (!is_fixed(hyper_) && (ledger_.has_nonzero_centers() || !ledger_.boxes_are_cones())) {
    // The τ-conditional relies on the prior being a scale family over a cone.
    throw InvalidSpec(
        "a random tau requires zero centers and cone-shaped boxes; fix tau for centered or "
        "bounded ledgers");
  }
}

GibbsState PrecisionSampler::initial_state(SuffStats stats, const std::optional<Matrix>& omega0,
                                           Rng& rng) const {
  const auto p = static_cast<Eigen::Index>(ledger_.dim());
  if (stats.s.rows() != p || stats.s.cols() != p) {
    throw InvalidSpec("sufficient statistics do not match the ledger dimension");
  }
  if (!(stats.n >= 0.0)) throw InvalidSpec("effective sample size must be non-negative");

  GibbsState state;
  state.stats = std::move(stats);
  state.omega = omega0.value_or(Matrix::Identity(p, p));
  if (state.omega.rows() != p || state.omega.cols() != p) {
    throw InvalidSpec("initial omega has the wrong shape");
  }
  Matrix& omega = state.omega;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const auto ui = static_cast<std::size_t>(i);
      const auto uj = static_cast<std::size_t>(j);
      double w = omega(i, j);
      if (!ledger_.is_free(ui, uj)) {
        w = 0.0;
      } else {
        const Interval box = ledger_.box(ui, uj);
        const bool boxed = std::isfinite(box.lo) || std::isfinite(box.hi);
        if (i == j && boxed && std::isfinite(box.lo) && std::isfinite(box.hi)) {
          w = 0.5 * (box.lo + box.hi);
        } else if (!strictly_inside(w, box)) {
          w = interior_point(box);
        }
      }
      omega(i, j) = omega(j, i) = w;
    }
  }
  if (!is_positive_definite(omega)) {
    for (Eigen::Index i = 0; i < p; ++i) {
      const double off = omega.row(i).cwiseAbs().sum() - std::abs(omega(i, i));
      omega(i, i) = std::max(omega(i, i), 0.0) + off + 1.0;
      if (!strictly_inside(omega(i, i), ledger_.box(static_cast<std::size_t>(i),
                                                    static_cast<std::size_t>(i)))) {
        throw InfeasibleState("cannot build a feasible initial state: diagonal box too tight");
      }
    }
  }
  if (!ledger_.satisfied_by(omega)) throw InfeasibleState("initial omega violates the ledger");
  state.tau = initial_tau(hyper_, spec_);
  state.scales = Matrix::Constant(p, p, kInf);
  state.resync();
  sample_latent_scales(state, rng);
  return state;
}

BlockDecomposition PrecisionSampler::decompose(const GibbsState& state, std::size_t i,
                                               std::size_t j) const {
  if (options_.solver == BlockSolver::FreshCholesky) return schur_block(state.omega, i, j);
  return state.inverse.block(state.omega, i, j);
}

Interval PrecisionSampler::d1_region(const GibbsState& state, const BlockDecomposition& blk,
                                     double l21, double d2) const {
  const std::size_t i = blk.first;
  const std::size_t j = blk.second;
  const auto& t = state.scales;
  const auto ii = static_cast<Eigen::Index>(i);
  const auto jj = static_cast<Eigen::Index>(j);
  Interval r{0.0, kInf};
  r = r.intersect(shift(ledger_.allowed(i, i, state.tau, t(ii, ii)), blk.b(0, 0)));
  r = r.intersect(solve_linear(l21, blk.b(1, 0), ledger_.allowed(i, j, state.tau, t(ii, jj)), "d1"));
  r = r.intersect(
      solve_linear(l21 * l21, d2 + blk.b(1, 1), ledger_.allowed(j, j, state.tau, t(jj, jj)), "d1"));
  return r;
}

Interval PrecisionSampler::d2_region(const GibbsState& state, const BlockDecomposition& blk,
                                     double d1, double l21) const {
  const auto jj = static_cast<Eigen::Index>(blk.second);
  Interval r{0.0, kInf};
  const Interval allowed = ledger_.allowed(blk.second, blk.second, state.tau, state.scales(jj, jj));
  return r.intersect(shift(allowed, d1 * l21 * l21 + blk.b(1, 1)));
}

IntervalSet PrecisionSampler::l21_region(const GibbsState& state, const BlockDecomposition& blk,
                                         double d1, double d2) const {
  const std::size_t i = blk.first;
  const std::size_t j = blk.second;
  const auto ii = static_cast<Eigen::Index>(i);
  const auto jj = static_cast<Eigen::Index>(j);
  const Interval linear =
      solve_linear(d1, blk.b(1, 0), ledger_.allowed(i, j, state.tau, state.scales(ii, jj)), "l21");
  // d1 * l21^2 + d2 + b22 inside the allowed range of ω_jj.
  const Interval jj_allowed = ledger_.allowed(j, j, state.tau, state.scales(jj, jj));
  const double upper = cap((jj_allowed.hi - d2 - blk.b(1, 1)) / d1);
  const double lower = cap((jj_allowed.lo - d2 - blk.b(1, 1)) / d1);
  if (!(upper > 0.0)) {
    // Only a rounding sliver can get here from a feasible state.
    if (upper < -1e-9 * (1.0 + std::abs(lower))) {
      throw InfeasibleState("l21: quadratic constraint on the second diagonal is empty");
    }
    return IntervalSet(Interval{0.0, 0.0});
  }
  const double outer = std::sqrt(upper);
  std::vector<Interval> pieces;
  if (lower <= 0.0) {
    pieces.push_back(Interval{-outer, outer}.intersect(linear));
  } else {
    const double inner = std::sqrt(lower);
    pieces.push_back(Interval{-outer, -inner}.intersect(linear));
    pieces.push_back(Interval{inner, outer}.intersect(linear));
  }
  std::vector<Interval> kept;
  for (const auto& piece : pieces) {
    if (piece.lo <= piece.hi) kept.push_back(piece);
  }
  if (kept.empty()) {
    // Same rounding guard as for d1 and d2: pick the closest sliver.
    Interval best = pieces.front();
    for (const auto& piece : pieces) {
      if (piece.lo - piece.hi < best.lo - best.hi) best = piece;
    }
    SamplerCounters dummy;
    return IntervalSet(nonempty(best, "l21", dummy));
  }
  if (kept.size() == 1) return IntervalSet(kept.front());
  return IntervalSet(kept[0], kept[1]);
}

BlockRegions PrecisionSampler::block_conditional_regions(const GibbsState& state, std::size_t i,
                                                         std::size_t j) const {
  const BlockDecomposition blk = decompose(state, i, j);
  return {d1_region(state, blk, blk.l21, blk.d2), d2_region(state, blk, blk.d1, blk.l21),
          l21_region(state, blk, blk.d1, blk.d2)};
}

void PrecisionSampler::sample_block(GibbsState& state, std::size_t i, std::size_t j, Rng& rng) {
  if (i == j || !ledger_.graph().has_edge(i, j)) {
    throw InvalidSpec("sample_block: (i, j) must be an edge of the graph");
  }
  const BlockDecomposition blk = decompose(state, i, j);
  const auto ii = static_cast<Eigen::Index>(i);
  const auto jj = static_cast<Eigen::Index>(j);
  const double n = state.stats.n;
  const double s11 = state.stats.s(ii, ii);
  const double s21 = state.stats.s(jj, ii);
  const double s22 = state.stats.s(jj, jj);
  auto& counters = counters_.truncated;

  double d1 = blk.d1;
  double d2 = blk.d2;
  double l21 = blk.l21;

  const double rate1 = std::max(0.0, 0.5 * (s11 + s22 * l21 * l21 + 2.0 * s21 * l21));
  d1 = truncated_gamma(0.5 * n + 2.0, rate1, nonempty(d1_region(state, blk, l21, d2), "d1", counters),
                       rng, &counters);
  if (!(d1 > 0.0)) throw InfeasibleState("sample_block: d1 collapsed to zero");

  d2 = truncated_gamma(0.5 * n + 1.0, std::max(0.0, 0.5 * s22),
                       nonempty(d2_region(state, blk, d1, l21), "d2", counters), rng, &counters);
  if (!(d2 > 0.0)) throw InfeasibleState("sample_block: d2 collapsed to zero");

  const IntervalSet l_region = l21_region(state, blk, d1, d2);
  if (s22 > 0.0) {
    l21 = truncated_normal(-s21 / s22, 1.0 / (s22 * d1), l_region, rng, &counters);
  } else {
    l21 = truncated_uniform(l_region, rng);
    ++counters.draws;
  }

  auto rebuilt = [&](std::size_t r, std::size_t c, double value) {
    const auto ri = static_cast<Eigen::Index>(r);
    const auto ci = static_cast<Eigen::Index>(c);
    return pull_inside(value, ledger_.allowed(r, c, state.tau, state.scales(ri, ci)));
  };
  const double w11 = rebuilt(i, i, d1 + blk.b(0, 0));
  const double w21 = rebuilt(i, j, d1 * l21 + blk.b(1, 0));
  const double w22 = rebuilt(j, j, d1 * l21 * l21 + d2 + blk.b(1, 1));
  state.omega(ii, ii) = w11;
  state.omega(jj, ii) = state.omega(ii, jj) = w21;
  state.omega(jj, jj) = w22;
  Matrix2 a;
  a << w11 - blk.b(0, 0), w21 - blk.b(1, 0), w21 - blk.b(1, 0), w22 - blk.b(1, 1);
  if (options_.solver == BlockSolver::RunningInverse) state.inverse.update_block(i, j, a);
  ++counters_.block_updates;

  if (options_.verify_each_block) {
    if (!is_positive_definite(state.omega)) ++counters_.spd_failures;
    for (const auto& [r, c] : {std::pair{i, i}, std::pair{i, j}, std::pair{j, j}}) {
      const auto ri = static_cast<Eigen::Index>(r);
      const auto ci = static_cast<Eigen::Index>(c);
      const double w = state.omega(ri, ci);
      if (!strictly_inside(w, ledger_.box(r, c))) ++counters_.constraint_violations;
      const Interval allowed = ledger_.allowed(r, c, state.tau, state.scales(ri, ci));
      if (!(w >= allowed.lo && w <= allowed.hi)) ++counters_.scale_violations;
    }
  }
}

void PrecisionSampler::sample_isolated_diag(GibbsState& state, std::size_t v, Rng& rng) {
  if (ledger_.graph().degree(v) != 0) throw InvalidSpec("sample_isolated_diag: vertex has edges");
  const auto vv = static_cast<Eigen::Index>(v);
  // The rest of the row is structurally zero, so the Schur term vanishes.
  const double b = 0.0;
  const Interval allowed = ledger_.allowed(v, v, state.tau, state.scales(vv, vv));
  const Interval region =
      nonempty(Interval{0.0, kInf}.intersect(shift(allowed, b)), "diag", counters_.truncated);
  const double gamma = truncated_gamma(0.5 * state.stats.n + 1.0,
                                       std::max(0.0, 0.5 * state.stats.s(vv, vv)), region, rng,
                                       &counters_.truncated);
  if (!(gamma > 0.0)) throw InfeasibleState("sample_isolated_diag: draw collapsed to zero");
  state.omega(vv, vv) = b + gamma;
  if (options_.solver == BlockSolver::RunningInverse) state.inverse.update_scalar(v, gamma);
}

std::vector<double> PrecisionSampler::deviations(const GibbsState& state) const {
  std::vector<double> out;
  out.reserve(ledger_.free_count());
  const auto p = ledger_.dim();
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      if (!ledger_.is_free(i, j)) continue;
      const double w = state.omega(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      out.push_back((w - ledger_.center(i, j)) / ledger_.multiplier(i, j));
    }
  }
  return out;
}

void PrecisionSampler::sample_global_scale(GibbsState& state, Rng& rng) const {
  if (is_fixed(hyper_)) {
    state.tau = std::get<FixedTau>(hyper_).value;
    return;
  }
  const std::vector<double> dev = deviations(state);
  state.tau = sample_tau(hyper_, spec_, dev, ledger_.free_count(), state.tau, rng);
}

void PrecisionSampler::sample_latent_scales(GibbsState& state, Rng& rng) const {
  const PriorSpec unit = spec_.with_tau(1.0);
  const auto p = ledger_.dim();
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      if (!ledger_.is_free(i, j)) {
        state.scales(ii, jj) = state.scales(jj, ii) = kInf;
        continue;
      }
      const double theta =
          (state.omega(ii, jj) - ledger_.center(i, j)) / (ledger_.multiplier(i, j) * state.tau);
      state.scales(ii, jj) = state.scales(jj, ii) = sample_latent_scale(unit, theta, rng);
    }
  }
}

bool PrecisionSampler::scales_feasible(const GibbsState& state) const {
  const auto p = ledger_.dim();
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      if (!ledger_.is_free(i, j)) continue;
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      const double theta = std::abs(state.omega(ii, jj) - ledger_.center(i, j)) /
                           (ledger_.multiplier(i, j) * state.tau);
      if (!(state.scales(ii, jj) > theta)) return false;
    }
  }
  return true;
}

void PrecisionSampler::sweep(GibbsState& state, Rng& rng) {
  if (options_.solver == BlockSolver::RunningInverse) state.resync();
  if (options_.randomized_scan) {
    auto order = edges_;
    std::shuffle(order.begin(), order.end(), rng);
    for (const auto& [i, j] : order) sample_block(state, i, j, rng);
  } else {
    for (const auto& [i, j] : edges_) sample_block(state, i, j, rng);
  }
  for (const std::size_t v : isolated_) sample_isolated_diag(state, v, rng);
  sample_global_scale(state, rng);
  sample_latent_scales(state, rng);
  ++counters_.sweeps;
}

void ChainSettings::validate() const {
  if (iters == 0) throw ConfigError("iters must be positive");
  if (iters <= burnin) throw ConfigError("iters must exceed burnin");
  if (thin == 0) throw ConfigError("thin must be positive");
}

std::size_t ChainSettings::kept() const noexcept {
  return iters > burnin ? (iters - burnin) / thin : 0;
}

ChainResult run_chain(const SuffStats& stats, const ConstraintLedger& ledger,
                      const PriorSpec& spec, const TauHyperPrior& hyper,
                      const ChainSettings& settings) {
  settings.validate();
  const auto started = std::chrono::steady_clock::now();
  PrecisionSampler sampler(ledger, spec, hyper, settings.sweep);
  Rng rng = make_stream(settings.seed);
  GibbsState state = sampler.initial_state(stats, settings.initial_omega, rng);

  const auto p = static_cast<Eigen::Index>(ledger.dim());
  ChainResult result;
  result.p = ledger.dim();
  result.mean_omega = Matrix::Zero(p, p);
  result.mean_sigma = Matrix::Zero(p, p);
  if (settings.store_draws) {
    result.omega_draws.reserve(settings.kept());
    result.tau_draws.reserve(settings.kept());
  }

  for (std::size_t k = 1; k <= settings.iters; ++k) {
    sampler.sweep(state, rng);
    if (k <= settings.burnin || (k - settings.burnin) % settings.thin != 0) continue;
    result.mean_omega += state.omega;
    result.mean_sigma += spd_inverse(state.omega);
    ++result.kept;
    if (settings.store_draws) {
      result.omega_draws.push_back(lower_triangle(state.omega));
      result.tau_draws.push_back(state.tau);
    }
  }
  const double kept = static_cast<double>(result.kept);
  result.mean_omega /= kept;
  result.mean_sigma /= kept;
  result.counters = sampler.counters();

  if (settings.store_draws && result.kept > 0) {
    const std::size_t m = result.omega_draws.front().size();
    std::vector<double> series(result.kept);
    result.lag10_autocorrelation.resize(m);
    for (std::size_t e = 0; e < m; ++e) {
      for (std::size_t k = 0; k < result.kept; ++k) {
        series[k] = result.omega_draws[k](static_cast<Eigen::Index>(e));
      }
      result.lag10_autocorrelation[e] = autocorrelation(series, 10);
    }
  }
  result.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  if (result.counters.truncated.fallback_rate() > settings.max_fallback_rate) {
    std::ostringstream msg;
    msg << "underflow fallbacks " << result.counters.truncated.fallbacks << " of "
        << result.counters.truncated.draws << " draws exceed the tolerated rate "
        << settings.max_fallback_rate;
    throw NumericalFailure(msg.str());
  }
  return result;
}

}  // namespace unishrink
