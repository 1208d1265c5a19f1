#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mimogt/params.hpp"
#include "mimogt/rng.hpp"

using namespace mimogt;

namespace {

SystemParams desk() {
  SystemParams p;
  p.n_users = 16;
  p.msgs_per_user = 2;
  p.k_active = 2;
  p.power = 1.0;
  p.noise = 0.1;
  return p;
}

}  // namespace

TEST(Params, DeskConfigIsValidAtTenDb) {
  const auto p = validate(desk());
  EXPECT_DOUBLE_EQ(p.snr, 10.0);
  EXPECT_EQ(p.codebook_size(), 32U);
}

TEST(Params, RejectsMoreActiveUsersThanUsers) {
  auto p = desk();
  p.k_active = 5;
  p.n_users = 4;
  try {
    validate(p);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("K exceeds N"), std::string::npos);
  }
}

TEST(Params, UnitNoiseIsZeroDb) {
  auto p = desk();
  p.noise = 1.0;
  p = validate(p);
  EXPECT_DOUBLE_EQ(p.snr, 1.0);
  EXPECT_DOUBLE_EQ(linear_to_db(p.snr), 0.0);
}

TEST(Params, RejectsOutOfRangeFields) {
  auto bad = [](auto mutate) {
    auto p = desk();
    mutate(p);
    EXPECT_THROW(validate(p), ConfigError);
  };
  bad([](SystemParams& p) { p.bernoulli_p = 0.0; });
  bad([](SystemParams& p) { p.bernoulli_p = 1.0; });
  bad([](SystemParams& p) { p.noise = 0.0; });
  bad([](SystemParams& p) { p.power = -1.0; });
  bad([](SystemParams& p) { p.threshold_gamma = -0.1; });
  bad([](SystemParams& p) { p.relax_delta = 0.0; });
  bad([](SystemParams& p) { p.margin_delta = -1.0; });
  bad([](SystemParams& p) { p.m_tx = 32; });
  bad([](SystemParams& p) { p.k_active = 0; });
}

TEST(Params, AntennaMismatchNeedsOverride) {
  auto p = desk();
  p.m_tx = 32;
  p.allow_antenna_mismatch = true;
  EXPECT_NO_THROW(validate(p));
}

TEST(Params, DbRoundTripProperty) {
  auto rng = make_stream(7, StreamTag::misc, 0);
  for (int i = 0; i < 10000; ++i) {
    const double db = -60.0 + 120.0 * uniform01(rng);
    const double lin = db_to_linear(db);
    EXPECT_NEAR(db_to_linear(linear_to_db(lin)), lin, 1e-12 * lin);
    const double lin2 = std::exp(-20.0 + 40.0 * uniform01(rng));
    EXPECT_NEAR(db_to_linear(linear_to_db(lin2)), lin2, 1e-12 * lin2);
  }
}

TEST(Params, ValidateIsIdempotentProperty) {
  auto rng = make_stream(8, StreamTag::misc, 0);
  for (int i = 0; i < 500; ++i) {
    SystemParams p;
    p.n_users = 1 + uniform_index(rng, 50);
    p.k_active = 1 + uniform_index(rng, p.n_users);
    p.msgs_per_user = 1 + uniform_index(rng, 8);
    p.m_rx = p.m_tx = 1 + uniform_index(rng, 300);
    p.power = 0.01 + 10.0 * uniform01(rng);
    p.noise = 0.01 + 10.0 * uniform01(rng);
    p.bernoulli_p = 0.001 + 0.998 * uniform01(rng);
    const auto once = validate(p);
    const auto twice = validate(once);
    EXPECT_EQ(to_config_string(once), to_config_string(twice));
    EXPECT_EQ(once.snr, once.power / once.noise);
  }
}

TEST(Params, ParsesConfigText) {
  std::istringstream in(
      "# comment\n"
      "n_users = 8\n"
      "\n"
      "k_active=3\n"
      "snr_db = 20\n"
      "m_rx = 100\n");
  const auto p = parse_config(in);
  EXPECT_EQ(p.n_users, 8U);
  EXPECT_EQ(p.k_active, 3U);
  EXPECT_NEAR(p.snr, 100.0, 1e-12);
  EXPECT_EQ(p.m_rx, 100U);
  EXPECT_EQ(p.m_tx, 100U);
}

TEST(Params, ConfigErrorsAreReported) {
  std::istringstream unknown("bogus = 1\n");
  EXPECT_THROW(parse_config(unknown), ConfigError);
  std::istringstream dup("n_users = 4\nn_users = 5\n");
  EXPECT_THROW(parse_config(dup), ConfigError);
  std::istringstream both("noise = 1\nsnr_db = 3\n");
  EXPECT_THROW(parse_config(both), ConfigError);
  std::istringstream garbage("n_users = four\n");
  EXPECT_THROW(parse_config(garbage), ConfigError);
  std::istringstream no_eq("n_users 4\n");
  EXPECT_THROW(parse_config(no_eq), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/file.cfg"), ConfigError);
}

TEST(Params, CanonicalFormRoundTrips) {
  auto p = desk();
  p.noise = 0.1234567890123;
  p = validate(p);
  std::istringstream in(to_config_string(p));
  const auto q = parse_config(in);
  EXPECT_EQ(to_config_string(p), to_config_string(q));
  EXPECT_EQ(params_hash(p), params_hash(q));
  auto r = p;
  r.seed = 2;
  EXPECT_NE(params_hash(p), params_hash(r));
}

TEST(Rng, StreamsAreDeterministicAndDistinct) {
  auto a = make_stream(1, StreamTag::round, 5);
  auto b = make_stream(1, StreamTag::round, 5);
  auto c = make_stream(1, StreamTag::round, 6);
  auto d = make_stream(1, StreamTag::codebook, 5);
  const auto va = a();
  EXPECT_EQ(va, b());
  EXPECT_NE(va, c());
  EXPECT_NE(va, d());
}
