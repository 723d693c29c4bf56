#include "sgpo/stylized_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sgpo/csv.hpp"
#include "sgpo/errors.hpp"

namespace sgpo {

namespace {

void require_open01(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0))
    throw ConfigError(std::string("dynamics: ") + name + " must lie in (0, 1)");
}

constexpr double kStrictMargin = 1e-15;
constexpr double kSymmetryTol = 1e-12;

}  // namespace

double update_log_gain(double v, double delta) {
  // log(v'/v) for v' = v e^d / (1 - v + v e^d) = d - log(1 + v(e^d - 1))
  return delta - std::log1p(v * std::expm1(delta));
}

double likelihood_step(double v, double delta) {
  return v * std::exp(delta) / (1.0 + v * std::expm1(delta));
}

double sgpo_log_update_p(double p) {
  require_open01(p, "p");
  return std::log(p) + update_log_gain(p, p * (1.0 - p));
}

double sgpo_log_update_q(double p, double q) {
  require_open01(p, "p");
  require_open01(q, "q");
  return std::log(q) + update_log_gain(q, (p * p) * (q * (1.0 - q)));
}

// GRPO exponents are written as (v(1-v)) * other so the p and q expressions
// are the same floating-point function when p == q; symmetric starts then stay
// bitwise symmetric.
double grpo_log_update_p(double p, double q) {
  require_open01(p, "p");
  require_open01(q, "q");
  return std::log(p) + update_log_gain(p, (p * (1.0 - p)) * q);
}

double grpo_log_update_q(double p, double q) {
  require_open01(p, "p");
  require_open01(q, "q");
  return std::log(q) + update_log_gain(q, (q * (1.0 - q)) * p);
}

std::array<double, 4> population_gradient(Method m, double p, double q) {
  require_open01(p, "p");
  require_open01(q, "q");
  if (m == Method::kSgpo) {
    const double a = 0.5 * p * (1.0 - p);
    const double b = 0.5 * (p * p) * (q * (1.0 - q));
    return {-a, a, -b, b};
  }
  const double a = 0.5 * (p * (1.0 - p)) * q;
  const double b = 0.5 * (q * (1.0 - q)) * p;
  return {-a, a, -b, b};
}

DynamicsState dynamics_step(const DynamicsState& s, double eta) {
  if (!(eta > 0.0)) throw ConfigError("dynamics: eta must be positive");
  require_open01(s.p, "p");
  require_open01(s.q, "q");
  DynamicsState next = s;
  if (s.method == Method::kSgpo) {
    next.p = likelihood_step(s.p, eta * (s.p * (1.0 - s.p)));
    next.q = likelihood_step(s.q, eta * ((s.p * s.p) * (s.q * (1.0 - s.q))));
  } else {
    next.p = likelihood_step(s.p, eta * ((s.p * (1.0 - s.p)) * s.q));
    next.q = likelihood_step(s.q, eta * ((s.q * (1.0 - s.q)) * s.p));
  }
  return next;
}

double binary_entropy(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log(1.0 - p);
  return h;
}

DynamicsTrace run_dynamics(DynamicsState init, int iterations, double eta) {
  if (iterations < 0) throw ConfigError("dynamics: iterations must be >= 0");
  DynamicsTrace trace;
  trace.method = init.method;
  trace.eta = eta;
  trace.points.reserve(static_cast<std::size_t>(iterations) + 1);
  DynamicsState s = init;
  for (int k = 0; k <= iterations; ++k) {
    trace.points.push_back({k, s.p, s.q, s.p * s.q, binary_entropy(s.p)});
    if (k < iterations) s = dynamics_step(s, eta);
  }
  return trace;
}

TheoremCheck check_theorem_separation(const DynamicsTrace& sgpo, const DynamicsTrace& grpo) {
  if (sgpo.method != Method::kSgpo || grpo.method != Method::kGrpo)
    throw ConfigError("check_theorem_separation: traces passed in the wrong order");
  if (sgpo.points.size() != grpo.points.size())
    throw ConfigError("check_theorem_separation: trace lengths differ");
  if (sgpo.points.empty()) throw ConfigError("check_theorem_separation: empty traces");

  TheoremCheck out;
  out.pass = true;
  out.min_p_gap = out.min_product_gap = out.min_pq_gap_sgpo = out.min_entropy_gap =
      std::numeric_limits<double>::infinity();
  out.max_grpo_asymmetry = 0.0;
  auto fail = [&out](int k, const std::string& what) {
    out.pass = false;
    if (out.failures.size() < 16)
      out.failures.push_back("k=" + std::to_string(k) + ": " + what);
  };
  for (std::size_t i = 1; i < sgpo.points.size(); ++i) {
    const DynamicsPoint& s = sgpo.points[i];
    const DynamicsPoint& g = grpo.points[i];
    const int k = s.k;
    const double p_gap = s.p - g.p;
    const double product_gap = s.product - g.product;
    const double pq_gap = s.p - s.q;
    const double entropy_gap = g.entropy_step1 - s.entropy_step1;
    const double asym = std::abs(g.p - g.q);
    out.min_p_gap = std::min(out.min_p_gap, p_gap);
    out.min_product_gap = std::min(out.min_product_gap, product_gap);
    out.min_pq_gap_sgpo = std::min(out.min_pq_gap_sgpo, pq_gap);
    out.min_entropy_gap = std::min(out.min_entropy_gap, entropy_gap);
    out.max_grpo_asymmetry = std::max(out.max_grpo_asymmetry, asym);
    if (!(p_gap > kStrictMargin)) fail(k, "p separation not strict");
    if (!(product_gap > kStrictMargin)) fail(k, "success-probability separation not strict");
    if (!(pq_gap > kStrictMargin)) fail(k, "p > q not strict on the SGPO trace");
    if (!(entropy_gap > kStrictMargin)) fail(k, "step-1 entropy ordering not strict");
    if (!(asym <= kSymmetryTol)) fail(k, "GRPO trace left the symmetric line");
  }
  return out;
}

void write_dynamics_csv(std::ostream& out, const DynamicsTrace& sgpo,
                        const DynamicsTrace& grpo) {
  if (sgpo.points.size() != grpo.points.size())
    throw ConfigError("write_dynamics_csv: trace lengths differ");
  const std::string header[] = {"k",      "p_sgpo",    "q_sgpo",        "prod_sgpo",
                                "p_grpo", "q_grpo",    "prod_grpo",     "entropy1_sgpo",
                                "entropy1_grpo"};
  write_csv_row(out, header);
  for (std::size_t i = 0; i < sgpo.points.size(); ++i) {
    const DynamicsPoint& s = sgpo.points[i];
    const DynamicsPoint& g = grpo.points[i];
    const std::string row[] = {std::to_string(s.k),      format_double(s.p),
                               format_double(s.q),       format_double(s.product),
                               format_double(g.p),       format_double(g.q),
                               format_double(g.product), format_double(s.entropy_step1),
                               format_double(g.entropy_step1)};
    write_csv_row(out, row);
  }
}

}  // namespace sgpo
