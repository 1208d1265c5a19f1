#pragma once

// Physical layer: random codebook, Rayleigh channel, randomized zero-forcing
// beamforming, superposition with noise and per-antenna energy detection.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mimogt/complex_linalg.hpp"
#include "mimogt/params.hpp"
#include "mimogt/rng.hpp"

namespace mimogt {

/// Fixed-length packed bit vector.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

  [[nodiscard]] std::size_t size() const { return size_; }

  [[nodiscard]] bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1U; }

  void set(std::size_t i, bool value = true) {
    const std::uint64_t mask = std::uint64_t{1} << (i % 64);
    if (value) words_[i / 64] |= mask;
    else words_[i / 64] &= ~mask;
  }

  [[nodiscard]] std::size_t count() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  /// |supp(this) ∩ supp(other)|
  [[nodiscard]] std::size_t and_count(const BitVector& other) const {
    if (other.size_ != size_) throw std::invalid_argument("bit vector length mismatch");
    std::size_t n = 0;
    for (std::size_t w = 0; w < words_.size(); ++w) {
      n += static_cast<std::size_t>(std::popcount(words_[w] & other.words_[w]));
    }
    return n;
  }

  BitVector& operator|=(const BitVector& other) {
    if (other.size_ != size_) throw std::invalid_argument("bit vector length mismatch");
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] |= other.words_[w];
    return *this;
  }

  friend bool operator==(const BitVector&, const BitVector&) = default;

  /// Hex digits, 4 bits each, LSB-first within a digit; digit d covers bits
  /// 4d..4d+3. The length is not encoded.
  [[nodiscard]] std::string to_hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve((size_ + 3) / 4);
    for (std::size_t d = 0; d * 4 < size_; ++d) {
      unsigned nibble = 0;
      for (std::size_t b = 0; b < 4 && d * 4 + b < size_; ++b) {
        if (test(d * 4 + b)) nibble |= 1U << b;
      }
      out.push_back(digits[nibble]);
    }
    return out;
  }

  static BitVector from_hex(std::size_t size, const std::string& hex) {
    if (hex.size() != (size + 3) / 4) throw std::invalid_argument("hex length does not match bit length");
    BitVector v(size);
    for (std::size_t d = 0; d < hex.size(); ++d) {
      const char c = hex[d];
      unsigned nibble = 0;
      if (c >= '0' && c <= '9') nibble = static_cast<unsigned>(c - '0');
      else if (c >= 'a' && c <= 'f') nibble = static_cast<unsigned>(c - 'a' + 10);
      else throw std::invalid_argument("invalid hex digit");
      for (std::size_t b = 0; b < 4; ++b) {
        const bool bit = (nibble >> b) & 1U;
        if (d * 4 + b < size) v.set(d * 4 + b, bit);
        else if (bit) throw std::invalid_argument("hex sets bits beyond the length");
      }
    }
    return v;
  }

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Hard-decision result vector Y (or the noiseless Boolean sum).
using BinaryResultVector = BitVector;

/// N*M binary codewords; word j belongs to user j / M and carries message j % M.
class Codebook {
 public:
  Codebook(std::size_t n_users, std::size_t msgs_per_user, std::size_t code_len)
      : n_users_(n_users), msgs_per_user_(msgs_per_user), code_len_(code_len),
        words_(n_users * msgs_per_user, BitVector(code_len)) {}

  [[nodiscard]] std::size_t n_users() const { return n_users_; }
  [[nodiscard]] std::size_t msgs_per_user() const { return msgs_per_user_; }
  [[nodiscard]] std::size_t code_len() const { return code_len_; }
  [[nodiscard]] std::size_t size() const { return words_.size(); }

  [[nodiscard]] const BitVector& word(std::size_t j) const { return words_[j]; }
  BitVector& word(std::size_t j) { return words_[j]; }

  [[nodiscard]] std::size_t word_index(std::size_t user, std::size_t msg) const {
    return user * msgs_per_user_ + msg;
  }
  [[nodiscard]] std::size_t user_of(std::size_t j) const { return j / msgs_per_user_; }
  [[nodiscard]] std::size_t msg_of(std::size_t j) const { return j % msgs_per_user_; }

 private:
  std::size_t n_users_;
  std::size_t msgs_per_user_;
  std::size_t code_len_;
  std::vector<BitVector> words_;
};

/// Word-major, bit-minor order of Bernoulli(p) draws.
inline Codebook generate_codebook(const SystemParams& params, Engine& rng) {
  Codebook cb(params.n_users, params.msgs_per_user, params.m_rx);
  for (std::size_t j = 0; j < cb.size(); ++j) {
    auto& w = cb.word(j);
    for (std::size_t i = 0; i < cb.code_len(); ++i) w.set(i, uniform01(rng) < params.bernoulli_p);
  }
  return cb;
}

struct ChannelMatrix {
  std::size_t user = 0;
  ComplexMatrix h;  // m_rx x m_tx, i.i.d. CN(0, 1)
};

inline ChannelMatrix sample_channel(const SystemParams& params, std::size_t user, Engine& rng) {
  ChannelMatrix ch{user, ComplexMatrix(params.m_rx, params.m_tx)};
  fill_cgrv(rng, ch.h, 1.0);
  return ch;
}

class NumericalRankFailure : public LinalgError {
 public:
  using LinalgError::LinalgError;
};

enum class BeamStatus { ok, zero_codeword };

struct Beamformed {
  ComplexVector x;
  BeamStatus status = BeamStatus::ok;
  std::size_t nullity = 0;
};

/// One-dimensional randomized zero-forcing.
///
/// Collects the rows of `h` at the zeros of `word`, takes an orthonormal basis
/// of their nullspace, sums its columns and scales the sum to power `power`.
/// An all-zero word cannot be signalled under the power constraint: the zero
/// vector is returned with status zero_codeword and the caller stays silent.
inline Beamformed rzf_beamform(const ComplexMatrix& h, const BitVector& word, double power,
                               double rank_tol = kDefaultRankTol) {
  if (word.size() != static_cast<std::size_t>(h.rows())) {
    throw std::invalid_argument("codeword length must equal the number of receive antennas");
  }
  const auto m_tx = h.cols();
  const std::size_t ones = word.count();
  if (ones == 0) return {ComplexVector::Zero(m_tx), BeamStatus::zero_codeword, 0};

  const std::size_t zeros = word.size() - ones;
  ComplexMatrix h_zero(static_cast<Eigen::Index>(zeros), m_tx);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (!word.test(i)) h_zero.row(r++) = h.row(static_cast<Eigen::Index>(i));
  }
  auto [v, nullity] = nullspace_column_sum(h_zero, rank_tol);
  const double norm = v.norm();
  if (nullity == 0 || !(norm > 0.0)) {
    throw NumericalRankFailure("nullspace of the zero-indexed channel rows is numerically empty");
  }
  return {(std::sqrt(power) / norm) * v, BeamStatus::ok, nullity};
}

inline Beamformed rzf_beamform(const ChannelMatrix& ch, const BitVector& word, double power,
                               double rank_tol = kDefaultRankTol) {
  return rzf_beamform(ch.h, word, power, rank_tol);
}

struct ReceivedVector {
  ComplexVector y;
};

struct TransmissionRound {
  std::vector<std::size_t> active_set;     // user indices
  std::vector<std::size_t> chosen_words;   // codeword index per active user
  std::vector<ChannelMatrix> channels;     // one per active user
  ReceivedVector received;
  std::size_t zero_codeword_users = 0;
};

struct ActiveSelection {
  std::vector<std::size_t> active_set;
  std::vector<std::size_t> chosen_words;
};

/// K distinct users uniformly without replacement (partial Fisher-Yates), each
/// with a uniform message.
inline ActiveSelection draw_active_set(const SystemParams& params, const Codebook& codebook, Engine& rng) {
  std::vector<std::size_t> users(params.n_users);
  std::iota(users.begin(), users.end(), std::size_t{0});
  ActiveSelection sel;
  for (std::size_t k = 0; k < params.k_active; ++k) {
    const auto pick = k + uniform_index(rng, params.n_users - k);
    std::swap(users[k], users[pick]);
    sel.active_set.push_back(users[k]);
    const auto msg = uniform_index(rng, params.msgs_per_user);
    sel.chosen_words.push_back(codebook.word_index(users[k], msg));
  }
  return sel;
}

/// y_i = sum_k (row i of H_k) x_k + n_i with fresh channels and n_i ~ CN(0, N0).
/// Any active-set size is accepted, including the empty set (pure noise).
inline TransmissionRound transmit_round(const SystemParams& params, const Codebook& codebook,
                                        const std::vector<std::size_t>& active_set,
                                        const std::vector<std::size_t>& chosen_words, Engine& rng,
                                        double rank_tol = kDefaultRankTol) {
  if (active_set.size() != chosen_words.size()) {
    throw std::invalid_argument("one chosen word per active user is required");
  }
  TransmissionRound round;
  round.active_set = active_set;
  round.chosen_words = chosen_words;
  round.received.y = ComplexVector::Zero(static_cast<Eigen::Index>(params.m_rx));
  round.channels.reserve(active_set.size());
  for (std::size_t k = 0; k < active_set.size(); ++k) {
    if (codebook.user_of(chosen_words[k]) != active_set[k]) {
      throw std::invalid_argument("chosen word does not belong to its active user");
    }
    auto ch = sample_channel(params, active_set[k], rng);
    const auto beam = rzf_beamform(ch, codebook.word(chosen_words[k]), params.power, rank_tol);
    if (beam.status == BeamStatus::zero_codeword) ++round.zero_codeword_users;
    else round.received.y.noalias() += ch.h * beam.x;
    round.channels.push_back(std::move(ch));
  }
  for (Eigen::Index i = 0; i < round.received.y.size(); ++i) {
    round.received.y(i) += sample_cgrv(rng, params.noise);
  }
  return round;
}

/// Bit i is 1 iff |y_i|^2 > N0 * gamma (strict).
inline BinaryResultVector energy_detect(const ReceivedVector& y, double noise, double gamma) {
  const double threshold = noise * gamma;
  BinaryResultVector out(static_cast<std::size_t>(y.y.size()));
  for (Eigen::Index i = 0; i < y.y.size(); ++i) {
    if (std::norm(y.y(i)) > threshold) out.set(static_cast<std::size_t>(i));
  }
  return out;
}

/// Noiseless result vector: OR of the given codewords.
inline BitVector boolean_sum(const Codebook& codebook, const std::vector<std::size_t>& words) {
  BitVector out(codebook.code_len());
  for (auto j : words) out |= codebook.word(j);
  return out;
}

// Round dump: one line per round,
//   round=<r> m_r=<len> active=<u,u,...> words=<j,j,...> y=<hex>
// with the hex layout of BitVector::to_hex.

struct RoundDumpRecord {
  std::size_t round = 0;
  std::vector<std::size_t> active_set;
  std::vector<std::size_t> chosen_words;
  BinaryResultVector detected;
};

namespace detail {

inline std::string join_indices(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s.push_back(',');
    s += std::to_string(v[i]);
  }
  return s;
}

inline std::vector<std::size_t> split_indices(const std::string& s) {
  std::vector<std::size_t> out;
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<std::size_t>(std::stoull(item)));
  return out;
}

}  // namespace detail

inline std::string format_round_dump(const RoundDumpRecord& rec) {
  return "round=" + std::to_string(rec.round) + " m_r=" + std::to_string(rec.detected.size()) +
         " active=" + detail::join_indices(rec.active_set) +
         " words=" + detail::join_indices(rec.chosen_words) + " y=" + rec.detected.to_hex();
}

inline RoundDumpRecord parse_round_dump(const std::string& line) {
  std::istringstream in(line);
  std::string field;
  RoundDumpRecord rec;
  std::size_t m_r = 0;
  std::string hex;
  bool have_round = false, have_len = false, have_y = false;
  while (in >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("malformed round dump field '" + field + "'");
    const auto key = field.substr(0, eq);
    const auto value = field.substr(eq + 1);
    if (key == "round") { rec.round = std::stoull(value); have_round = true; }
    else if (key == "m_r") { m_r = std::stoull(value); have_len = true; }
    else if (key == "active") rec.active_set = detail::split_indices(value);
    else if (key == "words") rec.chosen_words = detail::split_indices(value);
    else if (key == "y") { hex = value; have_y = true; }
    else throw std::invalid_argument("unknown round dump field '" + key + "'");
  }
  if (!have_round || !have_len || !have_y) throw std::invalid_argument("incomplete round dump record");
  rec.detected = BitVector::from_hex(m_r, hex);
  return rec;
}

}  // namespace mimogt
