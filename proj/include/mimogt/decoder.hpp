#pragma once

// Noisy CoMa group-testing decoder and round scoring.

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mimogt/phy.hpp"

namespace mimogt {

struct WordStats {
  std::size_t ones = 0;    // T_j = |supp(c_j)|
  std::size_t hits = 0;    // S_j = |supp(c_j) ∩ supp(Y)|
  double threshold = 0.0;  // T_j * (1 - q10 (Δ + 1))
  bool vacuous = false;    // all-zero word, never accepted
};

struct DecodeDecision {
  std::vector<std::size_t> accepted;  // ascending codeword indices
  std::vector<WordStats> per_word;
  std::size_t vacuous_words = 0;
  // q10 (Δ + 1) >= 1: every nonzero word passes.
  bool trivial_threshold = false;

  [[nodiscard]] bool contains(std::size_t j) const {
    return std::binary_search(accepted.begin(), accepted.end(), j);
  }

  /// (user, message) pairs of the accepted words.
  [[nodiscard]] std::vector<std::pair<std::size_t, std::size_t>> identities(const Codebook& cb) const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(accepted.size());
    for (auto j : accepted) out.emplace_back(cb.user_of(j), cb.msg_of(j));
    return out;
  }
};

/// Accepts word j iff S_j >= T_j (1 - q10 (Δ + 1)), compared in floating point
/// without rounding. Words with T_j = 0 would pass vacuously; they are excluded
/// and counted in `vacuous_words`. No cardinality constraint is applied.
inline DecodeDecision noisy_coma_decode(const BinaryResultVector& y_hat, const Codebook& codebook,
                                        double q10, double delta) {
  if (!(q10 >= 0.0 && q10 < 1.0)) throw std::invalid_argument("q10 must lie in [0, 1)");
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  if (y_hat.size() != codebook.code_len()) throw std::invalid_argument("result vector length mismatch");

  const double factor = 1.0 - q10 * (delta + 1.0);
  DecodeDecision out;
  out.trivial_threshold = factor <= 0.0;
  out.per_word.resize(codebook.size());
  for (std::size_t j = 0; j < codebook.size(); ++j) {
    const auto& w = codebook.word(j);
    auto& st = out.per_word[j];
    st.ones = w.count();
    st.hits = w.and_count(y_hat);
    st.threshold = static_cast<double>(st.ones) * factor;
    if (st.ones == 0) {
      st.vacuous = true;
      ++out.vacuous_words;
      continue;
    }
    if (static_cast<double>(st.hits) >= st.threshold) out.accepted.push_back(j);
  }
  return out;
}

struct RoundScore {
  bool miss = false;         // some transmitted word not accepted
  bool false_alarm = false;  // some accepted word not transmitted
};

/// Set-based scoring on codeword indices. A non-transmitted duplicate of a
/// transmitted bit pattern counts as a false alarm.
inline RoundScore score_round(const std::vector<std::size_t>& transmitted, const DecodeDecision& decision) {
  RoundScore s;
  for (auto j : transmitted) s.miss = s.miss || !decision.contains(j);
  for (auto j : decision.accepted) {
    s.false_alarm = s.false_alarm || std::find(transmitted.begin(), transmitted.end(), j) == transmitted.end();
  }
  return s;
}

inline RoundScore score_round(const TransmissionRound& truth, const DecodeDecision& decision) {
  return score_round(truth.chosen_words, decision);
}

}  // namespace mimogt
