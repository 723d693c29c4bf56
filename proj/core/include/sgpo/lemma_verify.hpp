#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "sgpo/stylized_dynamics.hpp"

namespace sgpo {

// Open-interval grid: points lo + i*h for i = 1..resolution with
// h = (hi - lo) / (resolution + 1), so endpoints are never sampled.
struct GridSpec {
  double lo = 0.0;
  double hi = 1.0;
  int resolution = 10000;  // points per axis, >= 2
  double margin = 1e-12;   // required minimum slack for strict inequalities
};

struct Violation {
  std::array<double, 2> point{};  // 1-d checks use {x, 0}
  double slack = 0.0;
};

struct LemmaReport {
  std::string id;
  long long points = 0;  // comparisons evaluated
  double min_slack = 0.0;
  std::array<double, 2> argmin{};
  std::vector<Violation> violations;  // slack < margin; at most 16 recorded
  double margin = 0.0;
  bool pass = false;
};

// Generic grid checkers. Exposed so tests can feed corrupted functions and
// confirm each one actually fails (a constant function must not pass).
LemmaReport check_increasing(const std::string& id, const std::function<double(double)>& f,
                             const GridSpec& g, bool derivative_probe = false);
LemmaReport check_concave(const std::string& id, const std::function<double(double)>& f,
                          const GridSpec& g);
// Consecutive differences along x (axis 0) or y (axis 1) of f(x, y).
LemmaReport check_increasing_2d(const std::string& id,
                                const std::function<double(double, double)>& f,
                                const GridSpec& gx, const GridSpec& gy, int axis);
// Pointwise positivity of f on the triangle lo < y < x < hi.
LemmaReport check_positive_lower_triangle(const std::string& id,
                                          const std::function<double(double, double)>& f,
                                          const GridSpec& g);

// Reciprocal one-step products: 1 / (next likelihood) after one unit step.
//   inv_sgpo_p_step(x)    = 1 + (1/x - 1) e^{-x(1-x)}
//   inv_sgpo_q_step(x, y) = 1 + (1/y - 1) e^{-x^2 y(1-y)}
//   inv_grpo_sym_step(z)  = 1 + (1/z - 1) e^{-z^2 (1-z)}   (symmetric p=q=z)
double inv_sgpo_p_step(double x);
double inv_sgpo_q_step(double x, double y);
double inv_grpo_sym_step(double z);

// Concave curvature witness: x -> log(1 + e^(-e^x)) on x < 0.
double curvature_witness(double x);

// 2*log(1+e^-mid) - log(1+e^-lo) - log(1+e^-hi); the symmetric-start base case
// uses (mid, lo, hi) = (1/8, 1/4, 1/16). Equal arguments give exactly zero.
double product_step_slack(double mid, double lo, double hi);

// Named certifiers with their default grids.
LemmaReport verify_sgpo_p_map_increasing(GridSpec g = {1e-3, 1.0 - 1e-3, 10000, 1e-12});
LemmaReport verify_gain_increasing(GridSpec gv = {1e-3, 1.0 - 1e-3, 100, 1e-12},
                                   GridSpec gx = {-5.0, 5.0, 100, 1e-12});
LemmaReport verify_grpo_p_map_increasing(GridSpec g = {1e-3, 1.0 - 1e-3, 100, 1e-12});
LemmaReport verify_curvature_concave(GridSpec g = {-10.0, -0.01, 10000, 1e-12});
LemmaReport verify_pair_product_bound(GridSpec g = {0.5, 1.0, 500, 1e-12});
// Trace facts: iterates in (0,1) for k >= 0; strictly increasing and in
// (1/2, 1) for k >= 1; p > q for k >= 1 on SGPO traces.
LemmaReport verify_trace_monotone(const DynamicsTrace& trace, double margin = 1e-12);
LemmaReport verify_base_case(double margin = 1e-12);

// The full battery: the five grid/base-case certificates plus trace-monotone
// on the two symmetric-start traces (200 iterations, unit step).
std::vector<LemmaReport> run_all_lemmas(int resolution_1d = 10000, int resolution_2d = 500);

// ids: sgpo-p-map-increasing, gain-increasing, grpo-p-map-increasing,
//      curvature-concave, pair-product-bound, trace-monotone-sgpo,
//      trace-monotone-grpo, base-case-step
std::vector<std::string> lemma_ids();

}  // namespace sgpo
