#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

#include "condprob/error.hpp"

namespace condprob {

// Slack used when comparing two quantities that are equal in exact
// arithmetic; absorbs floating-point rounding only.
inline constexpr double kFpSlack = 1e-12;

inline bool leq_fp(double a, double b) { return a <= b + kFpSlack * (1 + std::abs(b)); }

// How far a product of per-node estimates can drift from a product of true
// per-node conditionals, with the two chained upper bounds and the
// depth-squared mean-squared-error form.
struct EstimateBounds {
  double lhs = 0;         // |prod q - prod p|
  double slab_bound = 0;  // sum_i |q_i - p_i| * prod_{j != i} max(p_j, q_j)
  double sum_bound = 0;   // sum_i |q_i - p_i|
  double thm_bound = 0;   // d^2 * mean_i (q_i - p_i)^2, compared to lhs^2
  bool all_hold = false;  // lhs <= slab <= sum and lhs^2 <= thm_bound
};

inline EstimateBounds check_estimate_bounds(std::span<const double> p,
                                            std::span<const double> q) {
  if (p.size() != q.size()) {
    throw ConfigError("p and q must have equal length");
  }
  for (size_t i = 0; i < p.size(); i++) {
    if (!(p[i] >= 0 && p[i] <= 1 && q[i] >= 0 && q[i] <= 1)) {
      throw ConfigError("p and q entries must lie in [0, 1]");
    }
  }
  const size_t d = p.size();
  EstimateBounds r;
  double prod_p = 1, prod_q = 1;
  for (size_t i = 0; i < d; i++) {
    prod_p *= p[i];
    prod_q *= q[i];
  }
  r.lhs = std::abs(prod_q - prod_p);

  double sq = 0;
  for (size_t i = 0; i < d; i++) {
    double others = 1;
    for (size_t j = 0; j < d; j++) {
      if (j != i) others *= std::max(p[j], q[j]);
    }
    r.slab_bound += std::abs(q[i] - p[i]) * others;
    r.sum_bound += std::abs(q[i] - p[i]);
    sq += (q[i] - p[i]) * (q[i] - p[i]);
  }
  r.thm_bound = d == 0 ? 0.0 : double(d) * double(d) * (sq / double(d));
  r.all_hold = leq_fp(r.lhs, r.slab_bound) && leq_fp(r.slab_bound, r.sum_bound) &&
               leq_fp(r.lhs * r.lhs, r.thm_bound);
  return r;
}

}  // namespace condprob
