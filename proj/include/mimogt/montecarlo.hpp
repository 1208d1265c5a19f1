#pragma once

// Reproducible Monte Carlo harness. Work is cut into fixed-size chunks whose
// random streams depend only on (seed, round index); workers pull chunks and
// integer counters are reduced in chunk order, so results are identical for
// any worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mimogt/analysis.hpp"
#include "mimogt/decoder.hpp"
#include "mimogt/params.hpp"
#include "mimogt/phy.hpp"
#include "mimogt/rng.hpp"
#include "mimogt/stats.hpp"

namespace mimogt {

enum class CodebookMode { fresh, fixed };

struct RunOptions {
  unsigned workers = 1;
  CodebookMode codebook_mode = CodebookMode::fresh;
  std::optional<double> decoder_q10;  // defaults to the analytic q10
  double rank_tol = kDefaultRankTol;
  std::size_t chunk_rounds = 64;      // part of the result's identity, not a tuning knob
  std::ostream* dump = nullptr;       // optional round dump
};

/// Runs fn(task) for task in [0, n_tasks) on up to `workers` threads. The first
/// exception thrown by any task is rethrown after all threads join.
template <class Fn>
void parallel_for(std::size_t n_tasks, unsigned workers, Fn&& fn) {
  const std::size_t n_threads = std::max<std::size_t>(1, std::min<std::size_t>(workers, n_tasks));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= n_tasks) return;
      try {
        fn(t);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n_tasks);
        return;
      }
    }
  };
  if (n_threads == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(body);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
}

namespace detail {

struct RoundContext {
  Engine rng;
  std::optional<Codebook> fresh;
  const Codebook* fixed = nullptr;

  [[nodiscard]] const Codebook& codebook() const { return fresh ? *fresh : *fixed; }
};

inline RoundContext begin_round(const SystemParams& params, const std::optional<Codebook>& fixed,
                                std::size_t round) {
  RoundContext ctx{make_stream(params.seed, StreamTag::round, round), std::nullopt, nullptr};
  if (fixed) ctx.fixed = &*fixed;
  else ctx.fresh.emplace(generate_codebook(params, ctx.rng));
  return ctx;
}

inline std::optional<Codebook> fixed_codebook(const SystemParams& params, CodebookMode mode) {
  if (mode == CodebookMode::fresh) return std::nullopt;
  auto rng = make_stream(params.seed, StreamTag::codebook, 0);
  return generate_codebook(params, rng);
}

inline std::size_t chunk_count(std::size_t trials, std::size_t chunk) { return (trials + chunk - 1) / chunk; }

}  // namespace detail

// ---------------------------------------------------------------------------

struct CrossoverEstimate {
  EstimateWithCI q01;  // P(Y_i = 1 | J_i = 0)
  EstimateWithCI q10;  // P(Y_i = 0 | J_i >= 1)
  std::size_t rounds = 0;
  std::size_t zero_codeword_users = 0;
};

/// Pools per-antenna outcomes over `trials` rounds, conditioning on the true
/// J_i computed from the transmitted supports.
inline CrossoverEstimate estimate_crossovers(const SystemParams& raw, std::size_t trials,
                                             const RunOptions& opts = {}) {
  if (trials < 1000) throw std::invalid_argument("estimate_crossovers needs at least 1000 trials");
  const auto params = validate(raw);
  const auto fixed = detail::fixed_codebook(params, opts.codebook_mode);

  struct Counts {
    std::size_t j0 = 0, j0_ones = 0, j1 = 0, j1_zeros = 0, zero_users = 0;
  };
  const std::size_t n_chunks = detail::chunk_count(trials, opts.chunk_rounds);
  std::vector<Counts> counts(n_chunks);
  parallel_for(n_chunks, opts.workers, [&](std::size_t c) {
    Counts acc;
    const std::size_t end = std::min(trials, (c + 1) * opts.chunk_rounds);
    for (std::size_t r = c * opts.chunk_rounds; r < end; ++r) {
      auto ctx = detail::begin_round(params, fixed, r);
      const auto sel = draw_active_set(params, ctx.codebook(), ctx.rng);
      const auto round = transmit_round(params, ctx.codebook(), sel.active_set, sel.chosen_words, ctx.rng,
                                        opts.rank_tol);
      const auto y = energy_detect(round.received, params.noise, params.threshold_gamma);
      acc.zero_users += round.zero_codeword_users;
      for (std::size_t i = 0; i < params.m_rx; ++i) {
        bool targeted = false;
        for (auto j : sel.chosen_words) targeted = targeted || ctx.codebook().word(j).test(i);
        if (targeted) {
          ++acc.j1;
          acc.j1_zeros += !y.test(i);
        } else {
          ++acc.j0;
          acc.j0_ones += y.test(i);
        }
      }
    }
    counts[c] = acc;
  });

  Counts total;
  for (const auto& c : counts) {
    total.j0 += c.j0;
    total.j0_ones += c.j0_ones;
    total.j1 += c.j1;
    total.j1_zeros += c.j1_zeros;
    total.zero_users += c.zero_users;
  }
  if (total.j0 == 0 || total.j1 == 0) throw std::runtime_error("no antenna samples in one of the J classes");
  return {wilson_interval(total.j0_ones, total.j0), wilson_interval(total.j1_zeros, total.j1), trials,
          total.zero_users};
}

// ---------------------------------------------------------------------------

struct ErrorRateEstimate {
  EstimateWithCI pmd;
  EstimateWithCI pfa;
  EstimateWithCI pe;  // any scoring error
  std::size_t rounds = 0;
  std::size_t m_r = 0;
  double decoder_q10 = 0.0;
  std::size_t zero_codeword_users = 0;
};

/// Full pipeline per round: codebook (fresh or fixed), active set, channels,
/// RZF, noise, energy detection, Noisy CoMa, set scoring. `m_r` overrides the
/// antenna counts of `raw` (M_t follows unless a mismatch was allowed).
inline ErrorRateEstimate estimate_error_rates(const SystemParams& raw, std::size_t m_r, std::size_t trials,
                                              const RunOptions& opts = {}) {
  if (trials < 1000) throw std::invalid_argument("estimate_error_rates needs at least 1000 trials");
  SystemParams adjusted = raw;
  adjusted.m_rx = m_r;
  if (!adjusted.allow_antenna_mismatch) adjusted.m_tx = m_r;
  const auto params = validate(adjusted);
  const double q10 = opts.decoder_q10.value_or(
      q10_analytic(params.k_active, params.bernoulli_p, params.snr, params.threshold_gamma));
  const auto fixed = detail::fixed_codebook(params, opts.codebook_mode);

  struct Counts {
    std::size_t miss = 0, fa = 0, any = 0, zero_users = 0;
  };
  const std::size_t n_chunks = detail::chunk_count(trials, opts.chunk_rounds);
  std::vector<Counts> counts(n_chunks);
  std::vector<std::vector<std::string>> dumps(opts.dump ? n_chunks : 0);
  parallel_for(n_chunks, opts.workers, [&](std::size_t c) {
    Counts acc;
    const std::size_t end = std::min(trials, (c + 1) * opts.chunk_rounds);
    for (std::size_t r = c * opts.chunk_rounds; r < end; ++r) {
      auto ctx = detail::begin_round(params, fixed, r);
      const auto sel = draw_active_set(params, ctx.codebook(), ctx.rng);
      const auto round = transmit_round(params, ctx.codebook(), sel.active_set, sel.chosen_words, ctx.rng,
                                        opts.rank_tol);
      const auto y = energy_detect(round.received, params.noise, params.threshold_gamma);
      const auto decision = noisy_coma_decode(y, ctx.codebook(), q10, params.relax_delta);
      const auto score = score_round(round, decision);
      acc.miss += score.miss;
      acc.fa += score.false_alarm;
      acc.any += score.miss || score.false_alarm;
      acc.zero_users += round.zero_codeword_users;
      if (opts.dump) dumps[c].push_back(format_round_dump({r, sel.active_set, sel.chosen_words, y}));
    }
    counts[c] = acc;
  });

  Counts total;
  for (const auto& c : counts) {
    total.miss += c.miss;
    total.fa += c.fa;
    total.any += c.any;
    total.zero_users += c.zero_users;
  }
  if (opts.dump) {
    for (const auto& chunk : dumps) {
      for (const auto& line : chunk) *opts.dump << line << '\n';
    }
  }
  ErrorRateEstimate out;
  out.pmd = wilson_interval(total.miss, trials);
  out.pfa = wilson_interval(total.fa, trials);
  out.pe = wilson_interval(total.any, trials);
  out.rounds = trials;
  out.m_r = m_r;
  out.decoder_q10 = q10;
  out.zero_codeword_users = total.zero_users;
  return out;
}

// ---------------------------------------------------------------------------

struct EnergyMomentRow {
  std::size_t j = 0;
  std::size_t samples = 0;
  double mean = 0.0;
  double expected_mean = 0.0;  // J P + N0
  double relative_error = 0.0;
  double variance = 0.0;
  double expected_variance = 0.0;
  double ks = 0.0;
  double ks_critical = 0.0;  // 1% level

  [[nodiscard]] bool passed(double mean_tol = 0.01) const {
    return relative_error <= mean_tol && ks < ks_critical;
  }
};

/// For each J, builds J RZF users whose codewords all have a '1' at antenna 0
/// (other bits fair coins) over `antennas` x `antennas` channels and records
/// |y_0|^2. Samples are compared with Exp of mean J P + N0.
inline std::vector<EnergyMomentRow> energy_moment_check(const std::vector<std::size_t>& j_targets, double power,
                                                        double noise, std::size_t samples, std::uint64_t seed,
                                                        unsigned workers = 1, std::size_t antennas = 4) {
  if (samples < 2) throw std::invalid_argument("energy_moment_check needs at least two samples");
  if (antennas < 1) throw std::invalid_argument("need at least one antenna");
  constexpr std::size_t kBlock = 4096;
  std::vector<EnergyMomentRow> rows;
  for (auto j : j_targets) {
    std::vector<double> energy(samples);
    const std::size_t n_blocks = (samples + kBlock - 1) / kBlock;
    parallel_for(n_blocks, workers, [&](std::size_t b) {
      auto rng = make_stream(seed, StreamTag::energy, (static_cast<std::uint64_t>(j) << 32) + b);
      ComplexMatrix h(static_cast<Eigen::Index>(antennas), static_cast<Eigen::Index>(antennas));
      BitVector word(antennas);
      const std::size_t end = std::min(samples, (b + 1) * kBlock);
      for (std::size_t s = b * kBlock; s < end; ++s) {
        Complex y0 = 0.0;
        for (std::size_t u = 0; u < j; ++u) {
          word.set(0);
          for (std::size_t i = 1; i < antennas; ++i) word.set(i, uniform01(rng) < 0.5);
          fill_cgrv(rng, h, 1.0);
          const auto beam = rzf_beamform(h, word, power);
          y0 += (h.row(0) * beam.x).value();
        }
        y0 += sample_cgrv(rng, noise);
        energy[s] = std::norm(y0);
      }
    });
    EnergyMomentRow row;
    row.j = j;
    row.samples = samples;
    const auto mom = sample_moments(energy);
    row.mean = mom.mean;
    row.variance = mom.variance;
    row.expected_mean = static_cast<double>(j) * power + noise;
    row.expected_variance = row.expected_mean * row.expected_mean;
    row.relative_error = std::abs(row.mean - row.expected_mean) / row.expected_mean;
    row.ks = ks_statistic_exponential(energy, row.expected_mean);
    row.ks_critical = ks_critical_value(samples, 0.01);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace mimogt
