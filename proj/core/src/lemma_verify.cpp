#include "sgpo/lemma_verify.hpp"

#include <algorithm>
#include <cmath>

#include "sgpo/errors.hpp"

namespace sgpo {

namespace {

std::vector<double> open_grid(const GridSpec& g) {
  if (g.resolution < 2) throw ConfigError("GridSpec.resolution must be >= 2");
  if (!(g.hi > g.lo)) throw ConfigError("GridSpec bounds must satisfy lo < hi");
  if (!(g.margin >= 0.0)) throw ConfigError("GridSpec.margin must be >= 0");
  const double h = (g.hi - g.lo) / static_cast<double>(g.resolution + 1);
  std::vector<double> xs(static_cast<std::size_t>(g.resolution));
  for (int i = 0; i < g.resolution; ++i)
    xs[static_cast<std::size_t>(i)] = g.lo + h * static_cast<double>(i + 1);
  return xs;
}

void note(LemmaReport& r, double slack, double x, double y) {
  ++r.points;
  if (r.points == 1 || slack < r.min_slack) {
    r.min_slack = slack;
    r.argmin = {x, y};
  }
  if (slack < r.margin && r.violations.size() < 16) r.violations.push_back({{x, y}, slack});
}

void finish(LemmaReport& r) {
  r.pass = r.points > 0 && r.violations.empty() && r.min_slack >= r.margin;
}

void merge_into(LemmaReport& a, const LemmaReport& b) {
  a.points += b.points;
  if (b.min_slack < a.min_slack) {
    a.min_slack = b.min_slack;
    a.argmin = b.argmin;
  }
  for (const Violation& v : b.violations)
    if (a.violations.size() < 16) a.violations.push_back(v);
  a.pass = a.pass && b.pass;
}

}  // namespace

LemmaReport check_increasing(const std::string& id, const std::function<double(double)>& f,
                             const GridSpec& g, bool derivative_probe) {
  const std::vector<double> xs = open_grid(g);
  LemmaReport r;
  r.id = id;
  r.margin = g.margin;
  std::vector<double> fx(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) fx[i] = f(xs[i]);
  for (std::size_t i = 0; i + 1 < xs.size(); ++i)
    note(r, fx[i + 1] - fx[i], xs[i], 0.0);
  if (derivative_probe) {
    // local forward step far below the grid spacing
    const double eps = (g.hi - g.lo) / static_cast<double>(g.resolution + 1) * 1e-3;
    for (std::size_t i = 0; i < xs.size(); ++i)
      note(r, f(xs[i] + eps) - fx[i], xs[i], 0.0);
  }
  finish(r);
  return r;
}

LemmaReport check_concave(const std::string& id, const std::function<double(double)>& f,
                          const GridSpec& g) {
  const std::vector<double> xs = open_grid(g);
  LemmaReport r;
  r.id = id;
  r.margin = g.margin;
  std::vector<double> fx(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) fx[i] = f(xs[i]);
  // negated second difference must stay positive
  for (std::size_t i = 1; i + 1 < xs.size(); ++i)
    note(r, 2.0 * fx[i] - fx[i - 1] - fx[i + 1], xs[i], 0.0);
  finish(r);
  return r;
}

LemmaReport check_increasing_2d(const std::string& id,
                                const std::function<double(double, double)>& f,
                                const GridSpec& gx, const GridSpec& gy, int axis) {
  if (axis != 0 && axis != 1) throw ConfigError("check_increasing_2d: axis must be 0 or 1");
  const std::vector<double> xs = open_grid(gx);
  const std::vector<double> ys = open_grid(gy);
  LemmaReport r;
  r.id = id;
  r.margin = axis == 0 ? gx.margin : gy.margin;
  if (axis == 0) {
    for (double y : ys) {
      double prev = f(xs[0], y);
      for (std::size_t i = 1; i < xs.size(); ++i) {
        const double cur = f(xs[i], y);
        note(r, cur - prev, xs[i - 1], y);
        prev = cur;
      }
    }
  } else {
    for (double x : xs) {
      double prev = f(x, ys[0]);
      for (std::size_t j = 1; j < ys.size(); ++j) {
        const double cur = f(x, ys[j]);
        note(r, cur - prev, x, ys[j - 1]);
        prev = cur;
      }
    }
  }
  finish(r);
  return r;
}

LemmaReport check_positive_lower_triangle(const std::string& id,
                                          const std::function<double(double, double)>& f,
                                          const GridSpec& g) {
  const std::vector<double> xs = open_grid(g);
  LemmaReport r;
  r.id = id;
  r.margin = g.margin;
  for (std::size_t i = 1; i < xs.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) note(r, f(xs[i], xs[j]), xs[i], xs[j]);
  finish(r);
  return r;
}

double inv_sgpo_p_step(double x) {
  return 1.0 + (1.0 / x - 1.0) * std::exp(-(x * (1.0 - x)));
}

double inv_sgpo_q_step(double x, double y) {
  return 1.0 + (1.0 / y - 1.0) * std::exp(-(x * x * y * (1.0 - y)));
}

double inv_grpo_sym_step(double z) {
  return 1.0 + (1.0 / z - 1.0) * std::exp(-(z * z * (1.0 - z)));
}

double curvature_witness(double x) { return std::log1p(std::exp(-std::exp(x))); }

double product_step_slack(double mid, double lo, double hi) {
  return 2.0 * std::log1p(std::exp(-mid)) - std::log1p(std::exp(-lo)) -
         std::log1p(std::exp(-hi));
}

LemmaReport verify_sgpo_p_map_increasing(GridSpec g) {
  return check_increasing(
      "sgpo-p-map-increasing",
      [](double x) { return likelihood_step(x, x * (1.0 - x)); }, g,
      /*derivative_probe=*/true);
}

LemmaReport verify_gain_increasing(GridSpec gv, GridSpec gx) {
  return check_increasing_2d(
      "gain-increasing", [](double v, double x) { return update_log_gain(v, x); }, gv, gx,
      /*axis=*/1);
}

LemmaReport verify_grpo_p_map_increasing(GridSpec g) {
  const auto map = [](double p, double q) {
    return likelihood_step(p, (p * (1.0 - p)) * q);
  };
  LemmaReport r = check_increasing_2d("grpo-p-map-increasing", map, g, g, /*axis=*/0);
  merge_into(r, check_increasing_2d("grpo-p-map-increasing", map, g, g, /*axis=*/1));
  return r;
}

LemmaReport verify_curvature_concave(GridSpec g) {
  return check_concave("curvature-concave", curvature_witness, g);
}

LemmaReport verify_pair_product_bound(GridSpec g) {
  return check_positive_lower_triangle(
      "pair-product-bound", [](double x, double y) {
        const double c = inv_grpo_sym_step(std::sqrt(x * y));
        return c * c - inv_sgpo_p_step(x) * inv_sgpo_q_step(x, y);
      },
      g);
}

LemmaReport verify_trace_monotone(const DynamicsTrace& trace, double margin) {
  if (trace.points.size() < 2)
    throw ConfigError("verify_trace_monotone: trace needs at least 2 points");
  LemmaReport r;
  r.id = trace.method == Method::kSgpo ? "trace-monotone-sgpo" : "trace-monotone-grpo";
  r.margin = margin;
  for (std::size_t k = 0; k < trace.points.size(); ++k) {
    const DynamicsPoint& pt = trace.points[k];
    const double kd = static_cast<double>(pt.k);
    note(r, std::min({pt.p, 1.0 - pt.p, pt.q, 1.0 - pt.q}), kd, pt.p);
    if (k >= 1) {
      const DynamicsPoint& prev = trace.points[k - 1];
      note(r, pt.p - prev.p, kd, pt.p);
      note(r, pt.q - prev.q, kd, pt.q);
      note(r, pt.p - 0.5, kd, pt.p);
      note(r, pt.q - 0.5, kd, pt.q);
      if (trace.method == Method::kSgpo) note(r, pt.p - pt.q, kd, pt.p);
    }
  }
  finish(r);
  return r;
}

LemmaReport verify_base_case(double margin) {
  LemmaReport r;
  r.id = "base-case-step";
  r.margin = margin;
  note(r, product_step_slack(0.125, 0.25, 0.0625), 0.125, 0.0);
  finish(r);
  return r;
}

std::vector<LemmaReport> run_all_lemmas(int resolution_1d, int resolution_2d) {
  std::vector<LemmaReport> out;
  out.reserve(8);
  out.push_back(verify_sgpo_p_map_increasing({1e-3, 1.0 - 1e-3, resolution_1d, 1e-12}));
  out.push_back(verify_gain_increasing({1e-3, 1.0 - 1e-3, resolution_2d, 1e-12},
                                       {-5.0, 5.0, resolution_2d, 1e-12}));
  out.push_back(verify_grpo_p_map_increasing({1e-3, 1.0 - 1e-3, resolution_2d, 1e-12}));
  out.push_back(verify_curvature_concave({-10.0, -0.01, resolution_1d, 1e-12}));
  out.push_back(verify_pair_product_bound({0.5, 1.0, resolution_2d, 1e-12}));
  const DynamicsTrace sgpo = run_dynamics({Method::kSgpo, 0.5, 0.5}, 200, 1.0);
  const DynamicsTrace grpo = run_dynamics({Method::kGrpo, 0.5, 0.5}, 200, 1.0);
  out.push_back(verify_trace_monotone(sgpo));
  out.push_back(verify_trace_monotone(grpo));
  out.push_back(verify_base_case());
  return out;
}

std::vector<std::string> lemma_ids() {
  return {"sgpo-p-map-increasing", "gain-increasing",     "grpo-p-map-increasing",
          "curvature-concave",     "pair-product-bound",  "trace-monotone-sgpo",
          "trace-monotone-grpo",   "base-case-step"};
}

}  // namespace sgpo
