#include <gtest/gtest.h>

#include <random>

#include "circdyn/invariant.hpp"

using namespace circdyn;

namespace {

EquippedSet make(std::vector<std::pair<double, char>> pts) {
  EquippedSet e;
  for (auto [p, c] : pts) e.points.push_back({p, c == 'U' ? Label::kU : Label::kS});
  e.normalize();
  return e;
}

std::string random_word(std::mt19937& rng, int len) {
  std::string w;
  for (int i = 0; i < len; ++i) w += (rng() & 1) ? 'U' : 'S';
  return w;
}

}  // namespace

GTEST_TEST(Invariant, WordOfExamples) {
  EXPECT_EQ(word_of(make({{0.0, 'U'}, {0.5, 'S'}})).canonical, "US");
  auto w = word_of(make({{0.0, 'S'}, {0.25, 'U'}, {0.5, 'S'}, {0.75, 'U'}}));
  EXPECT_EQ(w.canonical, "USUS");
  EXPECT_EQ(w.n, 2);
  EXPECT_EQ(w.m, 2);
}

GTEST_TEST(Invariant, BoothMatchesBruteForceUpToTwelve) {
  for (int len = 1; len <= 12; ++len) {
    for (unsigned mask = 0; mask < (1u << len); ++mask) {
      std::string w;
      for (int i = 0; i < len; ++i) w += (mask >> i) & 1 ? 'S' : 'U';
      std::string c = least_rotation(w);
      ASSERT_EQ(c, least_rotation_brute(w)) << w;
      ASSERT_EQ(least_rotation(c), c);
    }
  }
}

GTEST_TEST(Invariant, EquivalenceExamples) {
  auto us = invariant_from_token("US"), su = invariant_from_token("SU");
  EXPECT_TRUE(equivalent(us, su));
  EXPECT_FALSE(equivalent(invariant_from_token("UUSS"), invariant_from_token("USUS")));
  EXPECT_FALSE(equivalent(invariant_from_token("UUS"), invariant_from_token("USS")));
}

GTEST_TEST(Invariant, ReflectionFlag) {
  // UUSUSS reversed is SSUSUU, a rotation of UUSSUS, which differs from UUSUSS.
  auto a = invariant_from_token("UUSUSS"), b = invariant_from_token("UUSSUS");
  EXPECT_FALSE(equivalent(a, b, false));
  EXPECT_TRUE(equivalent(a, b, true));
}

GTEST_TEST(Invariant, TokenValidation) {
  EXPECT_THROW(invariant_from_token("UUU"), std::invalid_argument);
  EXPECT_THROW(invariant_from_token("UXS"), std::invalid_argument);
  EXPECT_THROW(make({{0.0, 'U'}, {0.00001, 'S'}}), std::invalid_argument);
}

GTEST_TEST(Invariant, EquivalenceRelationOnRandomTriples) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 3000; ++trial) {
    int len = 2 + static_cast<int>(rng() % 5);
    std::string wa = random_word(rng, len), wb = random_word(rng, len), wc = random_word(rng, len);
    auto valid = [](const std::string& w) {
      return w.find('U') != std::string::npos && w.find('S') != std::string::npos;
    };
    if (!valid(wa) || !valid(wb) || !valid(wc)) continue;
    auto a = invariant_from_token(wa), b = invariant_from_token(wb), c = invariant_from_token(wc);
    for (bool refl : {false, true}) {
      ASSERT_TRUE(equivalent(a, a, refl));
      ASSERT_EQ(equivalent(a, b, refl), equivalent(b, a, refl));
      if (equivalent(a, b, refl) && equivalent(b, c, refl)) ASSERT_TRUE(equivalent(a, c, refl));
    }
  }
}

GTEST_TEST(Invariant, WitnessIdentityAndRotation) {
  auto e = make({{0.1, 'U'}, {0.4, 'S'}, {0.7, 'S'}});
  auto id = witness_homeomorphism(e, e);
  for (double x : {0.0, 0.1, 0.33, 0.95}) EXPECT_NEAR(id(x), x, 1e-15);

  auto h = witness_homeomorphism(make({{0.0, 'U'}, {0.5, 'S'}}), make({{0.25, 'U'}, {0.75, 'S'}}));
  for (double x : {0.0, 0.1, 0.5, 0.9}) EXPECT_NEAR(h.lifted(x) - x, 0.25, 1e-15);

  EXPECT_THROW(witness_homeomorphism(make({{0.0, 'U'}, {0.5, 'S'}}),
                                     make({{0.0, 'U'}, {0.3, 'U'}, {0.6, 'S'}})),
               NotEquivalentError);
}

GTEST_TEST(Invariant, WitnessOnRandomEquivalentPairs) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    int len = 2 + static_cast<int>(rng() % 7);
    std::string w = random_word(rng, len);
    if (w.find('U') == std::string::npos || w.find('S') == std::string::npos) continue;
    int rot = static_cast<int>(rng() % len);
    std::string w2 = w.substr(rot) + w.substr(0, rot);
    auto place = [&](const std::string& word) {
      std::vector<double> pos;
      for (int i = 0; i < len; ++i) pos.push_back((i + 0.2 + 0.6 * unit(rng)) / len);
      double off = unit(rng);
      EquippedSet e;
      for (int i = 0; i < len; ++i)
        e.points.push_back({pos[i] + off, word[i] == 'U' ? Label::kU : Label::kS});
      e.normalize();
      return e;
    };
    auto e1 = place(w), e2 = place(w2);
    auto h = witness_homeomorphism(e1, e2);
    // Images of points of e1 are points of e2 with matching labels.
    for (const auto& p : e1.points) {
      double y = h(p.position);
      bool hit = false;
      for (const auto& q : e2.points)
        if (std::abs(q.position - y) < 1e-12 || std::abs(std::abs(q.position - y) - 1) < 1e-12)
          hit = hit || q.label == p.label;
      ASSERT_TRUE(hit);
    }
    // Strictly increasing lift with degree one.
    double prev = h.lifted(0.0);
    for (int i = 1; i <= 400; ++i) {
      double v = h.lifted(i / 400.0);
      ASSERT_GT(v, prev);
      prev = v;
    }
    ASSERT_NEAR(h.lifted(1.0) - h.lifted(0.0), 1.0, 1e-12);
  }
}
