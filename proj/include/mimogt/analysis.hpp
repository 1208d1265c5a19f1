#pragma once

// Closed-form quantities of the MIMO-GT scheme: crossover probabilities,
// Noisy CoMa error bounds, the antenna-scaling optimisation (p*, γ*, Δ*, β*),
// scaling laws, the hard-decision converse and rate ratios.
//
// Notation used in comments: K active users, p codeword bit probability,
// ρ = P/N0, γ normalised energy threshold, Δ decoder relaxation, δ margin,
// and J ~ Bin(K, p) the number of users targeting one antenna.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace mimogt {

class AnalysisError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) comp_ += (sum_ - t) + x;
    else comp_ += (x - t) + sum_;
    sum_ = t;
  }
  [[nodiscard]] double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

namespace detail {

inline void check_kp(std::size_t k, double p) {
  if (k == 0) throw std::invalid_argument("K must be at least 1");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0, 1)");
}

}  // namespace detail

/// P(J = j | J >= 1) for j = 1..K, returned at index j-1. Evaluated in the log
/// domain so K in the tens of thousands does not overflow the binomials.
inline std::vector<double> conditional_binomial_weights(std::size_t k, double p) {
  detail::check_kp(k, p);
  const double kd = static_cast<double>(k);
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  const double log_norm = std::log(-std::expm1(kd * log_q));  // log(1 - (1-p)^K)
  const double log_kfact = std::lgamma(kd + 1.0);
  std::vector<double> w(k);
  for (std::size_t j = 1; j <= k; ++j) {
    const double jd = static_cast<double>(j);
    const double log_w = log_kfact - std::lgamma(jd + 1.0) - std::lgamma(kd - jd + 1.0) + jd * log_p +
                         (kd - jd) * log_q - log_norm;
    w[j - 1] = std::exp(log_w);
  }
  return w;
}

// ---------------------------------------------------------------------------
// Crossover probabilities

inline double q01_analytic(double gamma) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be nonnegative");
  return std::exp(-gamma);
}

/// 1 -> 0 crossover: sum_j P(J=j | J>=1) (1 - exp(-γ / (jρ + 1))).
inline double q10_analytic(std::size_t k, double p, double rho, double gamma) {
  detail::check_kp(k, p);
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be nonnegative");
  const auto w = conditional_binomial_weights(k, p);
  CompensatedSum sum;
  for (std::size_t j = 1; j <= k; ++j) {
    sum.add(w[j - 1] * -std::expm1(-gamma / (static_cast<double>(j) * rho + 1.0)));
  }
  return std::clamp(sum.value(), 0.0, 1.0);
}

/// 1 - q01 - q10 without cancellation: sum_j w_j e^{-γ/(1+jρ)} (1 - e^{-γ jρ/(1+jρ)}).
inline double detection_gap(std::size_t k, double p, double rho, double gamma) {
  detail::check_kp(k, p);
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be nonnegative");
  const auto w = conditional_binomial_weights(k, p);
  CompensatedSum sum;
  for (std::size_t j = 1; j <= k; ++j) {
    const double b = static_cast<double>(j) * rho;
    sum.add(w[j - 1] * std::exp(-gamma / (1.0 + b)) * -std::expm1(-gamma * b / (1.0 + b)));
  }
  return sum.value();
}

struct PoissonLimit {
  double value = 0.0;
  std::size_t terms = 0;  // last j included
};

/// K -> ∞ limit of q10 with Kp = α held fixed (Poisson weights). The series is
/// truncated once the remaining Poisson mass, bounded geometrically, drops
/// below tail_tol.
inline PoissonLimit q10_poisson_limit(double alpha, double rho, double gamma, double tail_tol = 1e-12) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(tail_tol > 0.0)) throw std::invalid_argument("tail_tol must be positive");
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be nonnegative");
  const double norm = -std::expm1(-alpha);
  double log_pmf = -alpha;  // log P(Pois = 0)
  CompensatedSum sum;
  std::size_t j = 0;
  for (;;) {
    ++j;
    const double jd = static_cast<double>(j);
    log_pmf += std::log(alpha) - std::log(jd);
    const double pmf = std::exp(log_pmf);
    sum.add(pmf * -std::expm1(-gamma / (jd * rho + 1.0)));
    // P(Pois > j) <= pmf_{j+1} / (1 - α/(j+2)) once j + 2 > α.
    const double next = pmf * alpha / (jd + 1.0);
    if (jd + 2.0 > alpha) {
      const double tail = next / (1.0 - alpha / (jd + 2.0));
      if (tail < tail_tol) break;
    }
    if (j > 1'000'000) throw AnalysisError("Poisson series did not converge");
  }
  return {std::clamp(sum.value() / norm, 0.0, 1.0), j};
}

/// P(Y_i = 0) = (1 - (1-p)^K) q10 + (1-p)^K (1 - q01).
inline double p0_analytic(std::size_t k, double p, double q01, double q10) {
  if (k == 0) throw std::invalid_argument("K must be at least 1");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0, 1]");
  const double none = std::exp(static_cast<double>(k) * std::log1p(-p));  // (1-p)^K
  return (1.0 - none) * q10 + none * (1.0 - q01);
}

struct CrossoverProbs {
  double q01 = 0.0;
  double q10 = 0.0;
  double p0 = 0.0;
  double p1 = 0.0;
};

inline CrossoverProbs crossover_probs(std::size_t k, double p, double rho, double gamma) {
  CrossoverProbs c;
  c.q01 = q01_analytic(gamma);
  c.q10 = q10_analytic(k, p, rho, gamma);
  c.p0 = p0_analytic(k, p, c.q01, c.q10);
  c.p1 = 1.0 - c.p0;
  return c;
}

// ---------------------------------------------------------------------------
// Decoder relaxation and the β conditions

/// Largest admissible relaxation, p0/q10 - 1.
inline double delta_upper_limit(double p0, double q10) {
  if (q10 <= 0.0) return kInf;
  return p0 / q10 - 1.0;
}

/// Equaliser of β1 and β2: Δ* = (p0/q10 - 1) / 2.
inline double delta_star(double p0, double q10) {
  if (!(q10 > 0.0)) throw AnalysisError("Δ* undefined (β1 already 0-cost): q10 = 0");
  if (p0 < q10) throw AnalysisError("Δ* undefined: p0 < q10");
  return 0.5 * (p0 / q10 - 1.0);
}

struct BetaPair {
  double beta1 = kInf;  // miss-detection condition
  double beta2 = kInf;  // false-alarm condition
  double delta_used = 0.0;

  [[nodiscard]] double max() const { return std::max(beta1, beta2); }
};

/// β1 = 1 / (Kp (1 - e^{-2 (q10 Δ)^2})),
/// β2 = 1 / (Kp (1 - e^{-2 (p0 - q10 (Δ+1))^2})), +∞ once Δ >= p0/q10 - 1.
inline BetaPair beta_pair(std::size_t k, double p, double q10, double p0, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  if (k == 0) throw std::invalid_argument("K must be at least 1");
  const double kp = static_cast<double>(k) * p;
  BetaPair out;
  out.delta_used = delta;
  const double a = q10 * delta;
  const double e1 = -std::expm1(-2.0 * a * a);
  out.beta1 = e1 > 0.0 ? 1.0 / (kp * e1) : kInf;
  if (delta < delta_upper_limit(p0, q10)) {
    const double b = p0 - q10 * (delta + 1.0);
    const double e2 = -std::expm1(-2.0 * b * b);
    out.beta2 = e2 > 0.0 ? 1.0 / (kp * e2) : kInf;
  }
  return out;
}

/// max{β1, β2} at the equaliser Δ*:
/// 1 / (Kp (1 - exp{-(1-p)^{2K} (1 - q10 - q01)^2 / 2})).
inline double beta_objective(std::size_t k, double p, double gamma, double rho) {
  detail::check_kp(k, p);
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be nonnegative");
  const double gap = detection_gap(k, p, rho, gamma);
  const double none_sq = std::exp(2.0 * static_cast<double>(k) * std::log1p(-p));  // (1-p)^{2K}
  const double e = -std::expm1(-0.5 * none_sq * gap * gap);
  if (!(e > 0.0)) return kInf;
  return 1.0 / (static_cast<double>(k) * p * e);
}

// ---------------------------------------------------------------------------
// Threshold optimisation in γ

struct GammaDerivatives {
  double f = 0.0;    // q01 + q10
  double df = 0.0;   // ∂f/∂γ
  double d2f = 0.0;  // ∂²f/∂γ²
};

/// f = q01 + q10 and its first two γ-derivatives. Each summand is rewritten so
/// that the e^{-γ} cancellation happens inside expm1:
///   f'  = Σ w_j e^{-γ/(1+b)} [(1 - e^{-a}) - b/(1+b)]
///   f'' = Σ w_j e^{-γ/(1+b)} [b(2+b)/(1+b)^2 - (1 - e^{-a})]
/// with b = jρ and a = γ b/(1+b).
inline GammaDerivatives f_gamma_derivatives(std::size_t k, double p, double rho, double gamma) {
  detail::check_kp(k, p);
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be nonnegative");
  const auto w = conditional_binomial_weights(k, p);
  CompensatedSum gap, d1, d2;
  for (std::size_t j = 1; j <= k; ++j) {
    const double b = static_cast<double>(j) * rho;
    const double lead = w[j - 1] * std::exp(-gamma / (1.0 + b));
    const double one_minus_ea = -std::expm1(-gamma * b / (1.0 + b));
    gap.add(lead * one_minus_ea);
    d1.add(lead * (one_minus_ea - b / (1.0 + b)));
    d2.add(lead * (b * (2.0 + b) / ((1.0 + b) * (1.0 + b)) - one_minus_ea));
  }
  return {1.0 - gap.value(), d1.value(), d2.value()};
}

struct GammaStar {
  double gamma = 0.0;
  double df = 0.0;
  double d2f = 0.0;
  std::size_t iterations = 0;
};

namespace detail {

// f'(γ) · e^{γ/(1+Kρ)}: same sign as f', but free of underflow for large γ.
inline double scaled_df(const std::vector<double>& w, double rho, double gamma) {
  const double b_max = static_cast<double>(w.size()) * rho;
  const double shift = gamma / (1.0 + b_max);
  CompensatedSum sum;
  for (std::size_t j = 1; j <= w.size(); ++j) {
    const double b = static_cast<double>(j) * rho;
    const double lead = w[j - 1] * std::exp(shift - gamma / (1.0 + b));
    sum.add(lead * (-std::expm1(-gamma * b / (1.0 + b)) - b / (1.0 + b)));
  }
  return sum.value();
}

}  // namespace detail

/// Unique stationary point of q01 + q10 in γ > 0. Bracket by doubling from
/// γ = 1 up to 10^3 max(1, ρ), then bisect to machine resolution.
inline GammaStar gamma_star_detailed(std::size_t k, double p, double rho) {
  detail::check_kp(k, p);
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  const auto w = conditional_binomial_weights(k, p);
  const double limit = 1e3 * std::max(1.0, rho);
  double lo = 0.0;
  double hi = 1.0;
  while (detail::scaled_df(w, rho, hi) <= 0.0) {
    if (hi >= limit) {
      throw AnalysisError("gamma* bracket not found below " + std::to_string(limit) + " (K=" +
                          std::to_string(k) + ", p=" + std::to_string(p) + ", rho=" + std::to_string(rho) + ")");
    }
    lo = hi;
    hi = std::min(2.0 * hi, limit);
  }
  std::size_t it = 0;
  for (; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (detail::scaled_df(w, rho, mid) > 0.0) hi = mid;
    else lo = mid;
  }
  const auto at_lo = f_gamma_derivatives(k, p, rho, lo);
  const auto at_hi = f_gamma_derivatives(k, p, rho, hi);
  const bool pick_lo = std::abs(at_lo.df) <= std::abs(at_hi.df);
  const auto& best = pick_lo ? at_lo : at_hi;
  return {pick_lo ? lo : hi, best.df, best.d2f, it};
}

inline double gamma_star(std::size_t k, double p, double rho) { return gamma_star_detailed(k, p, rho).gamma; }

// ---------------------------------------------------------------------------
// β* optimisation

struct OptimizationResult {
  std::size_t k = 0;
  double rho = 0.0;
  double p_star = 0.0;
  double alpha_star = 0.0;  // K p*
  double gamma_star = 0.0;
  double delta_star = 0.0;
  double beta_star = kInf;
  double q01 = 0.0;
  double q10 = 0.0;
  double p0 = 0.0;
  double beta1 = kInf;  // at Δ*
  double beta2 = kInf;  // at Δ*
  // Diagnostics.
  double df_at_gamma = 0.0;
  double d2f_at_gamma = 0.0;
  double equalizer_residual = 0.0;  // |β1 - β2| / β1 at Δ*
  std::size_t grid_points = 0;
  std::size_t golden_iterations = 0;
  std::size_t bisection_iterations = 0;
};

namespace detail {

inline double profile_objective(std::size_t k, double alpha, double rho) {
  const double p = alpha / static_cast<double>(k);
  return beta_objective(k, p, gamma_star(k, p, rho), rho);
}

}  // namespace detail

/// Minimises the equaliser objective over p with γ = γ*(p) solved inline.
/// The search runs over α = Kp in (0, min(e-1, K/2)]: a 64-point grid picks
/// the basin, golden-section search refines α to 1e-10.
inline OptimizationResult optimize_beta_star(std::size_t k, double rho) {
  if (k == 0) throw std::invalid_argument("K must be at least 1");
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  constexpr std::size_t kGrid = 64;
  const double alpha_max = std::min(std::numbers::e - 1.0, 0.5 * static_cast<double>(k));

  std::size_t best = 1;
  double best_val = kInf;
  for (std::size_t i = 1; i <= kGrid; ++i) {
    const double v = detail::profile_objective(k, alpha_max * static_cast<double>(i) / kGrid, rho);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  double a = alpha_max * static_cast<double>(best - 1) / kGrid;
  if (a == 0.0) a = alpha_max * 1e-6 / kGrid;
  double b = alpha_max * static_cast<double>(std::min(best + 1, kGrid)) / kGrid;

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = detail::profile_objective(k, c, rho);
  double fd = detail::profile_objective(k, d, rho);
  std::size_t it = 0;
  while (b - a > 1e-10 && it < 500) {
    ++it;
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = detail::profile_objective(k, c, rho);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = detail::profile_objective(k, d, rho);
    }
  }
  double alpha = 0.5 * (a + b);
  double val = detail::profile_objective(k, alpha, rho);
  // The grid point itself may still be better when the basin is flat.
  const double grid_alpha = alpha_max * static_cast<double>(best) / kGrid;
  if (best_val < val) {
    alpha = grid_alpha;
    val = best_val;
  }

  OptimizationResult r;
  r.k = k;
  r.rho = rho;
  r.alpha_star = alpha;
  r.p_star = alpha / static_cast<double>(k);
  const auto gs = gamma_star_detailed(k, r.p_star, rho);
  r.gamma_star = gs.gamma;
  r.df_at_gamma = gs.df;
  r.d2f_at_gamma = gs.d2f;
  r.bisection_iterations = gs.iterations;
  r.beta_star = val;
  const auto cp = crossover_probs(k, r.p_star, rho, r.gamma_star);
  r.q01 = cp.q01;
  r.q10 = cp.q10;
  r.p0 = cp.p0;
  r.delta_star = delta_star(cp.p0, cp.q10);
  const auto bp = beta_pair(k, r.p_star, cp.q10, cp.p0, r.delta_star);
  r.beta1 = bp.beta1;
  r.beta2 = bp.beta2;
  r.equalizer_residual = std::abs(bp.beta1 - bp.beta2) / bp.beta1;
  r.grid_points = kGrid;
  r.golden_iterations = it;
  return r;
}

/// Upper bound on β* valid for γ in [1, max(1, ρ)] and K >= 2:
/// 8 e^{2 max(ρ,1)} (ρ+1)^2 / (3 α (1 - α/2)^4 ρ^2).
inline double beta_star_upper_bound(double alpha, double rho) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("alpha must lie in (0, 2)");
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  const double shrink = std::pow(1.0 - 0.5 * alpha, 4);
  return 8.0 * std::exp(2.0 * std::max(rho, 1.0)) * (rho + 1.0) * (rho + 1.0) / (3.0 * alpha * shrink * rho * rho);
}

// ---------------------------------------------------------------------------
// Error-probability bounds (unclamped; may exceed 1)

/// K exp{-M_r p (1 - e^{-2 (q10 Δ)^2})}
inline double pmd_upper_bound(std::size_t k, double p, std::size_t m_r, double q10, double delta) {
  const double a = q10 * delta;
  return static_cast<double>(k) * std::exp(-static_cast<double>(m_r) * p * -std::expm1(-2.0 * a * a));
}

/// (NM - K) exp{-M_r p (1 - e^{-2 (p0 - q10(Δ+1))^2})}, requires Δ < p0/q10 - 1.
inline double pfa_upper_bound(std::size_t nm, std::size_t k, double p, std::size_t m_r, double p0, double q10,
                              double delta) {
  if (!(delta < delta_upper_limit(p0, q10))) {
    throw AnalysisError("false-alarm bound requires delta < p0/q10 - 1");
  }
  if (k > nm) throw std::invalid_argument("K exceeds the codebook size");
  const double b = p0 - q10 * (delta + 1.0);
  return static_cast<double>(nm - k) * std::exp(-static_cast<double>(m_r) * p * -std::expm1(-2.0 * b * b));
}

inline double clamp_probability(double v) { return std::clamp(v, 0.0, 1.0); }

/// ceil((1 + δ) β K ln(NM)).
inline std::size_t required_antennas(std::size_t n, std::size_t m, std::size_t k, double delta, double beta) {
  const double v = (1.0 + delta) * beta * static_cast<double>(k) * std::log(static_cast<double>(n * m));
  if (!std::isfinite(v)) throw AnalysisError("required antenna count is not finite");
  return static_cast<std::size_t>(std::ceil(v));
}

// ---------------------------------------------------------------------------
// Converse

/// Binary entropy in bits, H(0) = H(1) = 0.
inline double binary_entropy(double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("probability must lie in [0, 1]");
  if (q == 0.0 || q == 1.0) return 0.0;
  return -q * std::log2(q) - (1.0 - q) * std::log2(1.0 - q);
}

/// Capacity (bits/use) of the binary asymmetric channel with flip
/// probabilities q01 (0->1) and q10 (1->0). Returns 0 when 1 - q01 - q10 = 0.
inline double bac_capacity(double q01, double q10) {
  if (!(q01 >= 0.0 && q01 <= 1.0 && q10 >= 0.0 && q10 <= 1.0)) {
    throw std::invalid_argument("crossover probabilities must lie in [0, 1]");
  }
  const double d = 1.0 - q01 - q10;
  if (d == 0.0) return 0.0;
  const double h01 = binary_entropy(q01);
  const double h10 = binary_entropy(q10);
  const double x = (h01 - h10) / d;
  // log2(1 + 2^x) evaluated without overflow.
  const double softplus = std::max(x, 0.0) + std::log2(1.0 + std::exp2(-std::abs(x)));
  const double c = q01 / d * h10 - (1.0 - q10) / d * h01 + softplus;
  return std::clamp(c, 0.0, 1.0);
}

/// (1 - p_e) K log2(NM/K) / C_BAC(q01, q10); +∞ for a useless channel.
inline double converse_min_antennas(std::size_t n, std::size_t m, std::size_t k, double p_e, double q01, double q10) {
  if (!(p_e >= 0.0 && p_e <= 1.0)) throw std::invalid_argument("p_e must lie in [0, 1]");
  const double kd = static_cast<double>(k);
  const double numer = (1.0 - p_e) * kd * std::log2(static_cast<double>(n * m) / kd);
  if (numer == 0.0) return 0.0;
  const double c = bac_capacity(q01, q10);
  if (c == 0.0) return kInf;
  return numer / c;
}

/// converse / achievable in closed form:
/// (1 - p_e)(1 - log K / log NM) / ((1 + δ) β C_BAC ln 2).
inline double tightness_ratio(std::size_t n, std::size_t m, std::size_t k, double delta, double beta, double q01,
                              double q10, double p_e = 0.0) {
  const double c = bac_capacity(q01, q10);
  if (c == 0.0) return kInf;
  const double share = 1.0 - std::log(static_cast<double>(k)) / std::log(static_cast<double>(n * m));
  return (1.0 - p_e) * share / ((1.0 + delta) * beta * c * std::numbers::ln2);
}

// ---------------------------------------------------------------------------
// Rates

struct Rates {
  double sum_rate = 0.0;             // K log2(NM) bits per channel use
  double sum_rate_at_antennas = 0.0; // M_r / ((1+δ) β* ln 2)
  double spectral_efficiency = 0.0;  // 1 / ((1+δ) β* ln 2)
  double ratio_full_csi_leading = 0.0;
  double ratio_rr = 0.0;
};

/// The full-CSI ratio is the leading term only; its remainder is
/// rate_remainder_annotation() and is never evaluated.
inline Rates rates(std::size_t k, std::size_t n, std::size_t m, std::size_t m_r, double delta, double beta_star,
                   double rho) {
  Rates r;
  const double scale = (1.0 + delta) * beta_star;
  r.sum_rate = static_cast<double>(k) * std::log2(static_cast<double>(n * m));
  r.sum_rate_at_antennas = static_cast<double>(m_r) / (scale * std::numbers::ln2);
  r.spectral_efficiency = 1.0 / (scale * std::numbers::ln2);
  r.ratio_full_csi_leading = scale * std::log1p(rho);
  r.ratio_rr = static_cast<double>(k) / static_cast<double>(n) * scale * std::log1p(rho);
  return r;
}

inline std::string rate_remainder_annotation() { return "O(log(K^2 log NM) / (K log NM))"; }

}  // namespace mimogt
