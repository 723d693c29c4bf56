#pragma once

#include <array>
#include <ostream>
#include <string>
#include <vector>

namespace sgpo {

enum class Method { kSgpo, kGrpo };

// Log of one multiplicative likelihood step: for current probability v and
// exponent delta, the next probability is v e^delta / (1 - v + v e^delta).
// update_log_gain returns log(v'/v) = delta - log1p(v * expm1(delta)); the
// full log-update is log(v) + update_log_gain(v, delta).
double update_log_gain(double v, double delta);
double likelihood_step(double v, double delta);  // v' itself, stable form

// Closed-form one-step log-updates of the two coordinates (step-1 correct
// probability p, step-2 correct probability q) under each method, unit step
// size. Exponents: SGPO p(1-p) and p^2 q(1-q); GRPO p(1-p)q and q(1-q)p.
double sgpo_log_update_p(double p);
double sgpo_log_update_q(double p, double q);
double grpo_log_update_p(double p, double q);
double grpo_log_update_q(double p, double q);

// Population gradient over the four logits (root:1, root:2, after-2:1,
// after-2:2) for pair groups on the stylized task:
//  SGPO: 1/2 * (p(p-1), p(1-p), p^2 q(q-1), p^2 q(1-q))
//  GRPO: 1/2 * (p(p-1)q, p(1-p)q, pq(q-1), pq(1-q))
std::array<double, 4> population_gradient(Method m, double p, double q);

struct DynamicsState {
  Method method = Method::kSgpo;
  double p = 0.5;
  double q = 0.5;
};

// One exact update with step size eta (exponents scale linearly in eta).
DynamicsState dynamics_step(const DynamicsState& s, double eta = 1.0);

struct DynamicsPoint {
  int k = 0;
  double p = 0.0;
  double q = 0.0;
  double product = 0.0;        // p * q, the success probability
  double entropy_step1 = 0.0;  // binary entropy of p, nats
};

struct DynamicsTrace {
  Method method = Method::kSgpo;
  double eta = 1.0;
  std::vector<DynamicsPoint> points;  // k = 0..iterations
};

DynamicsTrace run_dynamics(DynamicsState init, int iterations, double eta = 1.0);

double binary_entropy(double p);

// Separation facts checked pointwise on paired traces from the symmetric
// start p = q (margins use 1e-15 above exact equality; the symmetric GRPO
// trace must keep |p - q| <= 1e-12):
//   for all k >= 1: p_S > p_G, p_S q_S > p_G q_G, p_S > q_S,
//                   step-1 entropy of SGPO strictly below GRPO.
struct TheoremCheck {
  bool pass = false;
  double min_p_gap = 0.0;
  double min_product_gap = 0.0;
  double min_pq_gap_sgpo = 0.0;
  double max_grpo_asymmetry = 0.0;
  double min_entropy_gap = 0.0;
  std::vector<std::string> failures;  // "k=3: p gap 0 <= margin", ...
};

TheoremCheck check_theorem_separation(const DynamicsTrace& sgpo, const DynamicsTrace& grpo);

// CSV: k,p_sgpo,q_sgpo,prod_sgpo,p_grpo,q_grpo,prod_grpo,entropy1_sgpo,entropy1_grpo
void write_dynamics_csv(std::ostream& out, const DynamicsTrace& sgpo,
                        const DynamicsTrace& grpo);

}  // namespace sgpo
