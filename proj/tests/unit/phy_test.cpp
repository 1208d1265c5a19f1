#include <gtest/gtest.h>

#include <cmath>

#include "mimogt/phy.hpp"

using namespace mimogt;

namespace {

SystemParams small(std::size_t m_r, double p = 0.3) {
  SystemParams s;
  s.n_users = 8;
  s.msgs_per_user = 2;
  s.k_active = 2;
  s.m_rx = s.m_tx = m_r;
  s.bernoulli_p = p;
  s.power = 1.0;
  s.noise = 0.1;
  return validate(s);
}

BitVector bits(const std::string& s) {
  BitVector v(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) v.set(i, s[i] == '1');
  return v;
}

}  // namespace

TEST(BitVector, HexRoundTrip) {
  auto rng = make_stream(21, StreamTag::misc, 0);
  for (std::size_t len : {1U, 3U, 4U, 10U, 63U, 64U, 65U, 254U}) {
    BitVector v(len);
    for (std::size_t i = 0; i < len; ++i) v.set(i, uniform01(rng) < 0.5);
    EXPECT_EQ(BitVector::from_hex(len, v.to_hex()), v);
  }
  EXPECT_EQ(bits("1000").to_hex(), "1");
  EXPECT_EQ(bits("00011").to_hex(), "81");
  EXPECT_THROW(BitVector::from_hex(3, "f"), std::invalid_argument);
}

TEST(BitVector, CountsAndOr) {
  auto a = bits("110010");
  const auto b = bits("011000");
  EXPECT_EQ(a.count(), 3U);
  EXPECT_EQ(a.and_count(b), 1U);
  a |= b;
  EXPECT_EQ(a, bits("111010"));
}

TEST(Codebook, NearOneDensity) {
  auto p = small(64, 0.999);
  p.n_users = 500;
  p.k_active = 1;
  auto rng = make_stream(22, StreamTag::misc, 0);
  const auto cb = generate_codebook(p, rng);
  double ones = 0.0;
  for (std::size_t j = 0; j < cb.size(); ++j) ones += static_cast<double>(cb.word(j).count());
  EXPECT_NEAR(ones / static_cast<double>(cb.size()), 63.936, 0.05);
}

TEST(Codebook, FairCoinDensity) {
  auto p = small(100, 0.5);
  p.n_users = 500;
  auto rng = make_stream(23, StreamTag::misc, 0);
  const auto cb = generate_codebook(p, rng);
  double ones = 0.0;
  for (std::size_t j = 0; j < cb.size(); ++j) ones += static_cast<double>(cb.word(j).count());
  EXPECT_NEAR(ones / 1e5, 0.5, 0.005);
}

TEST(Codebook, SameSeedSameCodebook) {
  const auto p = small(50);
  auto r1 = make_stream(5, StreamTag::codebook, 0);
  auto r2 = make_stream(5, StreamTag::codebook, 0);
  const auto a = generate_codebook(p, r1);
  const auto b = generate_codebook(p, r2);
  for (std::size_t j = 0; j < a.size(); ++j) EXPECT_EQ(a.word(j), b.word(j));
  EXPECT_EQ(a.user_of(5), 2U);
  EXPECT_EQ(a.msg_of(5), 1U);
  EXPECT_EQ(a.word_index(2, 1), 5U);
}

TEST(Channel, EntryMomentsAndIndependence) {
  const auto p = small(500);
  auto rng = make_stream(24, StreamTag::misc, 0);
  double energy = 0.0, re = 0.0;
  Complex cross = 0.0;
  std::size_t n = 0;
  for (std::size_t u = 0; u < 4; u += 2) {
    const auto a = sample_channel(p, u, rng);
    const auto b = sample_channel(p, u + 1, rng);
    energy += a.h.cwiseAbs2().sum() + b.h.cwiseAbs2().sum();
    re += a.h.real().sum() + b.h.real().sum();
    cross += (a.h.array() * b.h.array().conjugate()).sum();
    n += 2 * static_cast<std::size_t>(a.h.size());
  }
  const double nd = static_cast<double>(n);
  EXPECT_NEAR(energy / nd, 1.0, 0.01);
  EXPECT_NEAR(re / nd, 0.0, 0.005);
  EXPECT_LE(std::abs(cross) / (nd / 2.0), 0.01);
}

TEST(Rzf, AllOnesWordSpreadsPowerEvenly) {
  auto rng = make_stream(25, StreamTag::misc, 0);
  ComplexMatrix h(6, 6);
  fill_cgrv(rng, h, 1.0);
  const auto beam = rzf_beamform(h, bits("111111"), 2.0);
  ASSERT_EQ(beam.status, BeamStatus::ok);
  EXPECT_EQ(beam.nullity, 6U);
  const ComplexVector expected = ComplexVector::Constant(6, std::sqrt(2.0) / std::sqrt(6.0));
  EXPECT_LE((beam.x - expected).norm(), 1e-12);
}

TEST(Rzf, ZeroRowsReceiveNoEnergy) {
  auto rng = make_stream(26, StreamTag::misc, 0);
  ComplexMatrix h(4, 4);
  fill_cgrv(rng, h, 1.0);
  const auto word = bits("1010");
  const double power = 1.0;
  const auto beam = rzf_beamform(h, word, power);
  const ComplexVector y = h * beam.x;
  EXPECT_LE(std::norm(y(1)), 1e-18 * power);
  EXPECT_LE(std::norm(y(3)), 1e-18 * power);
  EXPECT_GT(std::norm(y(0)) + std::norm(y(2)), 0.0);
}

TEST(Rzf, PowerAndNullingProperty) {
  auto rng = make_stream(27, StreamTag::misc, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 2 + uniform_index(rng, 40);
    ComplexMatrix h(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    fill_cgrv(rng, h, 1.0);
    BitVector word(m);
    for (std::size_t i = 0; i < m; ++i) word.set(i, uniform01(rng) < 0.4);
    const double power = 0.1 + 5.0 * uniform01(rng);
    const auto beam = rzf_beamform(h, word, power);
    if (word.count() == 0) {
      EXPECT_EQ(beam.status, BeamStatus::zero_codeword);
      EXPECT_EQ(beam.x.norm(), 0.0);
      continue;
    }
    ASSERT_NEAR(beam.x.squaredNorm(), power, 1e-10 * power);
    const ComplexVector y = h * beam.x;
    for (std::size_t i = 0; i < m; ++i) {
      if (!word.test(i)) {
        ASSERT_LE(std::norm(y(static_cast<Eigen::Index>(i))), 1e-18 * power * static_cast<double>(m));
      }
    }
  }
}

TEST(Rzf, TooFewTransmitAntennasFails) {
  auto rng = make_stream(28, StreamTag::misc, 0);
  ComplexMatrix h(4, 2);
  fill_cgrv(rng, h, 1.0);
  EXPECT_THROW(rzf_beamform(h, bits("1000"), 1.0), NumericalRankFailure);
  EXPECT_THROW(rzf_beamform(h, bits("100"), 1.0), std::invalid_argument);
}

TEST(Transmit, EmptyActiveSetIsPureNoise) {
  auto p = small(16);
  p.noise = 0.5;
  auto rng = make_stream(29, StreamTag::misc, 0);
  auto cbr = make_stream(29, StreamTag::codebook, 0);
  const auto cb = generate_codebook(p, cbr);
  double energy = 0.0;
  std::size_t n = 0;
  for (int r = 0; r < 20000; ++r) {
    const auto round = transmit_round(p, cb, {}, {}, rng);
    energy += round.received.y.squaredNorm();
    n += 16;
  }
  EXPECT_NEAR(energy / static_cast<double>(n), 0.5, 0.01);
}

TEST(Transmit, SingleUserLeavesZeroPositionsDark) {
  auto p = small(24);
  p.noise = 1e-30;
  p = validate(p);
  auto rng = make_stream(30, StreamTag::misc, 0);
  auto cbr = make_stream(30, StreamTag::codebook, 0);
  const auto cb = generate_codebook(p, cbr);
  for (int r = 0; r < 50; ++r) {
    const std::size_t j = static_cast<std::size_t>(r) % cb.size();
    const auto round = transmit_round(p, cb, {cb.user_of(j)}, {j}, rng);
    for (std::size_t i = 0; i < p.m_rx; ++i) {
      if (!cb.word(j).test(i)) {
        EXPECT_LE(std::norm(round.received.y(static_cast<Eigen::Index>(i))), 1e-18 * p.power);
      }
    }
  }
}

TEST(Transmit, DisjointSupportsStayInsideUnion) {
  auto p = small(6);
  p.noise = 1e-30;
  p = validate(p);
  Codebook cb(p.n_users, p.msgs_per_user, 6);
  cb.word(0) = bits("110000");
  cb.word(2) = bits("001100");
  auto rng = make_stream(31, StreamTag::misc, 0);
  const auto round = transmit_round(p, cb, {0, 1}, {0, 2}, rng);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_GT(std::norm(round.received.y(i)), 1e-12);
  for (Eigen::Index i = 4; i < 6; ++i) EXPECT_LE(std::norm(round.received.y(i)), 1e-18);
}

TEST(Transmit, RejectsForeignWord) {
  const auto p = small(8);
  auto rng = make_stream(32, StreamTag::misc, 0);
  const auto cb = generate_codebook(p, rng);
  EXPECT_THROW(transmit_round(p, cb, {0}, {5}, rng), std::invalid_argument);
  EXPECT_THROW(transmit_round(p, cb, {0, 1}, {0}, rng), std::invalid_argument);
}

TEST(EnergyDetect, Thresholding) {
  ReceivedVector y{ComplexVector::Zero(4)};
  EXPECT_EQ(energy_detect(y, 1.0, 1.0).count(), 0U);
  y.y(1) = Complex(1e-20, 0.0);
  const auto at_zero = energy_detect(y, 1.0, 0.0);
  EXPECT_EQ(at_zero, bits("0100"));
  // |y|^2 = N0 * gamma exactly maps to 0.
  y.y(2) = Complex(0.5, 0.0);
  EXPECT_FALSE(energy_detect(y, 0.5, 0.5).test(2));
  y.y(3) = Complex(0.5 + 1e-9, 0.0);
  EXPECT_TRUE(energy_detect(y, 0.5, 0.5).test(3));
}

// With a near-zero noise floor the threshold must sit far above it: at γ = 1
// the noise alone crosses N0·γ with probability e^{-1} at every idle antenna.
TEST(Transmit, NoiselessDetectionIsBooleanSum) {
  auto p = small(16);
  p.noise = 1e-12 * p.power;
  p.threshold_gamma = 40.0;
  p = validate(p);
  std::size_t matches = 0;
  const int rounds = 10000;
  for (int r = 0; r < rounds; ++r) {
    auto rng = make_stream(33, StreamTag::round, static_cast<std::uint64_t>(r));
    const auto cb = generate_codebook(p, rng);
    const auto sel = draw_active_set(p, cb, rng);
    const auto round = transmit_round(p, cb, sel.active_set, sel.chosen_words, rng);
    matches += energy_detect(round.received, p.noise, p.threshold_gamma) == boolean_sum(cb, sel.chosen_words);
  }
  EXPECT_GE(static_cast<double>(matches) / rounds, 0.999);
}

TEST(ActiveSet, DistinctUsersWithOwnWords) {
  auto p = small(8);
  p.k_active = 8;
  auto rng = make_stream(34, StreamTag::misc, 0);
  const auto cb = generate_codebook(p, rng);
  for (int r = 0; r < 200; ++r) {
    const auto sel = draw_active_set(p, cb, rng);
    auto users = sel.active_set;
    std::sort(users.begin(), users.end());
    EXPECT_EQ(std::unique(users.begin(), users.end()), users.end());
    for (std::size_t k = 0; k < users.size(); ++k) EXPECT_EQ(cb.user_of(sel.chosen_words[k]), sel.active_set[k]);
  }
}

TEST(RoundDump, FormatParsesBack) {
  RoundDumpRecord rec{7, {3, 1}, {6, 3}, bits("1011000001")};
  const auto line = format_round_dump(rec);
  EXPECT_EQ(line, "round=7 m_r=10 active=3,1 words=6,3 y=d02");
  const auto back = parse_round_dump(line);
  EXPECT_EQ(back.round, 7U);
  EXPECT_EQ(back.active_set, rec.active_set);
  EXPECT_EQ(back.chosen_words, rec.chosen_words);
  EXPECT_EQ(back.detected, rec.detected);
  EXPECT_THROW(parse_round_dump("round=1 y=0"), std::invalid_argument);
}
