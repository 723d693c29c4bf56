#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "sgpo/errors.hpp"
#include "sgpo/stylized_dynamics.hpp"

using namespace sgpo;

TEST_CASE("likelihood step identities") {
  CHECK(update_log_gain(0.3, 0.0) == 0.0);
  CHECK(likelihood_step(0.5, std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-15));
  // gain matches the direct form on moderate inputs
  for (const double v : {0.1, 0.5, 0.9}) {
    for (const double d : {-1.0, -0.2, 0.3, 2.0}) {
      const double direct = v * std::exp(d) / (1.0 - v + v * std::exp(d));
      CHECK(likelihood_step(v, d) == doctest::Approx(direct).epsilon(1e-13));
      CHECK(std::exp(std::log(v) + update_log_gain(v, d)) ==
            doctest::Approx(direct).epsilon(1e-13));
    }
  }
  // probabilities stay inside (0,1) for large exponents
  CHECK(likelihood_step(1e-9, 30.0) < 1.0);
  CHECK(likelihood_step(1e-9, 60.0) <= 1.0);
  CHECK(likelihood_step(1.0 - 1e-9, -60.0) > 0.0);
}

TEST_CASE("one-step closed forms hit the frozen values") {
  const DynamicsState start{Method::kSgpo, 0.5, 0.5};
  const DynamicsState s1 = dynamics_step(start);
  CHECK(s1.p == 0.5621765008857981);   // 1 / (1 + e^(-1/4))
  CHECK(s1.q == 0.5156199157230156);   // 1 / (1 + e^(-1/16))

  const DynamicsState g1 = dynamics_step({Method::kGrpo, 0.5, 0.5});
  CHECK(g1.p == 0.5312093733737563);   // 1 / (1 + e^(-1/8))
  CHECK(g1.q == g1.p);

  CHECK(std::exp(sgpo_log_update_p(0.5)) == doctest::Approx(s1.p).epsilon(1e-15));
  CHECK(std::exp(sgpo_log_update_q(0.5, 0.5)) == doctest::Approx(s1.q).epsilon(1e-15));
  CHECK(std::exp(grpo_log_update_p(0.5, 0.5)) == doctest::Approx(g1.p).epsilon(1e-15));
  CHECK(std::exp(grpo_log_update_q(0.5, 0.5)) == doctest::Approx(g1.q).epsilon(1e-15));
}

TEST_CASE("grpo keeps p and q bitwise equal from a symmetric start") {
  DynamicsState s{Method::kGrpo, 0.37, 0.37};
  for (int k = 0; k < 200; ++k) {
    s = dynamics_step(s);
    CHECK(s.p == s.q);
  }
  CHECK(s.p > 0.99);
}

TEST_CASE("population gradient frozen point") {
  const auto gs = population_gradient(Method::kSgpo, 0.5, 0.5);
  CHECK(gs[0] == -0.125);
  CHECK(gs[1] == 0.125);
  CHECK(gs[2] == -0.03125);
  CHECK(gs[3] == 0.03125);
  const auto gg = population_gradient(Method::kGrpo, 0.5, 0.5);
  CHECK(gg[0] == -0.0625);
  CHECK(gg[1] == 0.0625);
  CHECK(gg[2] == -0.0625);
  CHECK(gg[3] == 0.0625);
  // antisymmetry within each logit row
  for (const double p : {0.2, 0.7}) {
    for (const double q : {0.3, 0.8}) {
      for (const Method m : {Method::kSgpo, Method::kGrpo}) {
        const auto g = population_gradient(m, p, q);
        CHECK(g[0] == doctest::Approx(-g[1]).epsilon(1e-15));
        CHECK(g[2] == doctest::Approx(-g[3]).epsilon(1e-15));
      }
    }
  }
}

TEST_CASE("step size scales the exponent linearly") {
  const DynamicsState half = dynamics_step({Method::kSgpo, 0.5, 0.5}, 0.5);
  CHECK(half.p == doctest::Approx(likelihood_step(0.5, 0.5 * 0.25)).epsilon(1e-15));
  CHECK(half.q == doctest::Approx(likelihood_step(0.5, 0.5 * 0.0625)).epsilon(1e-15));
  CHECK_THROWS_AS(dynamics_step({Method::kSgpo, 0.5, 0.5}, 0.0), ConfigError);
  CHECK_THROWS_AS(dynamics_step({Method::kSgpo, 0.0, 0.5}), ConfigError);
  CHECK_THROWS_AS(dynamics_step({Method::kSgpo, 0.5, 1.0}), ConfigError);
}

TEST_CASE("dynamics trace structure") {
  const DynamicsTrace trace = run_dynamics({Method::kSgpo, 0.5, 0.5}, 50);
  REQUIRE(trace.points.size() == 51);
  CHECK(trace.points.front().k == 0);
  CHECK(trace.points.front().p == 0.5);
  CHECK(trace.points.back().k == 50);
  for (const DynamicsPoint& pt : trace.points) {
    CHECK(pt.product == pt.p * pt.q);
    CHECK(pt.entropy_step1 == doctest::Approx(binary_entropy(pt.p)).epsilon(1e-15));
  }
  // monotone ascent toward certainty
  for (std::size_t i = 1; i < trace.points.size(); ++i) {
    CHECK(trace.points[i].p > trace.points[i - 1].p);
    CHECK(trace.points[i].q > trace.points[i - 1].q);
  }
  CHECK(trace.points.back().product > 0.9);
}

TEST_CASE("binary entropy values") {
  CHECK(binary_entropy(0.5) == doctest::Approx(0.6931471805599453).epsilon(1e-15));
  CHECK(binary_entropy(0.25) == doctest::Approx(0.5623351446188083).epsilon(1e-15));
  CHECK(binary_entropy(0.25) == doctest::Approx(binary_entropy(0.75)).epsilon(1e-15));
  CHECK(binary_entropy(1e-300) >= 0.0);
}

TEST_CASE("separation check passes on honest traces and rejects doctored ones") {
  const DynamicsTrace sgpo = run_dynamics({Method::kSgpo, 0.5, 0.5}, 200);
  const DynamicsTrace grpo = run_dynamics({Method::kGrpo, 0.5, 0.5}, 200);

  const TheoremCheck ok = check_theorem_separation(sgpo, grpo);
  CHECK(ok.pass);
  CHECK(ok.failures.empty());
  CHECK(ok.min_p_gap > 1e-5);
  CHECK(ok.min_product_gap > 1e-5);
  CHECK(ok.min_pq_gap_sgpo > 1e-5);
  CHECK(ok.min_entropy_gap > 1e-7);
  CHECK(ok.max_grpo_asymmetry <= 1e-12);

  CHECK_THROWS_AS(check_theorem_separation(grpo, sgpo), ConfigError);

  DynamicsTrace corrupted = sgpo;
  corrupted.points[3].p = grpo.points[3].p;  // kill the p gap at k=3
  const TheoremCheck bad = check_theorem_separation(corrupted, grpo);
  CHECK_FALSE(bad.pass);
  CHECK_FALSE(bad.failures.empty());

  DynamicsTrace skewed = grpo;
  skewed.points[5].q = skewed.points[5].q + 1e-6;  // break GRPO symmetry
  CHECK_FALSE(check_theorem_separation(sgpo, skewed).pass);
}

TEST_CASE("dynamics csv layout") {
  const DynamicsTrace sgpo = run_dynamics({Method::kSgpo, 0.5, 0.5}, 2);
  const DynamicsTrace grpo = run_dynamics({Method::kGrpo, 0.5, 0.5}, 2);
  std::ostringstream out;
  write_dynamics_csv(out, sgpo, grpo);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line ==
        "k,p_sgpo,q_sgpo,prod_sgpo,p_grpo,q_grpo,prod_grpo,"
        "entropy1_sgpo,entropy1_grpo");
  std::getline(in, line);
  CHECK(line.substr(0, 6) == "0,0.5,");
  int rows = 1;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);

  DynamicsTrace longer = run_dynamics({Method::kGrpo, 0.5, 0.5}, 3);
  std::ostringstream mismatch;
  CHECK_THROWS_AS(write_dynamics_csv(mismatch, sgpo, longer), ConfigError);
}
