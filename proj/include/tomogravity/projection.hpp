#pragma once

// KL projection of a reference distribution onto the tomographic space
//   T = { f >= 0, sum f = 1, y proportional to A f }
// by Krupp's relaxation: the proportionality and normalization constraints
// are rewritten as H f = (0, ..., 0, 1) with
//   h_ij = a_ij / y_i - a_rj / y_r   (i < r),   h_rj = 1,
// and the concave dual
//   D(v) = v_r - sum_j g_j exp(sum_i h_ij v_i - 1)
// is maximized by cyclic coordinate Newton steps. The primal iterate is
// f_j = g_j exp(sum_i h_ij v_i - 1).

#include <cstddef>
#include <span>
#include <vector>

#include "tomogravity/gravity.hpp"
#include "tomogravity/network.hpp"

namespace tomo {

// Which observed link serves as the common denominator y_r.
enum class ReferenceLink {
  largest_load,  // best conditioned; the default
  last,          // the last row of the input system
};

// Exponents are clamped here before exp().
inline constexpr double exponent_cap = 700.0;

class DualProblem {
 public:
  // Constraint rows; the last one is the normalization row.
  std::size_t constraint_count() const noexcept { return row_links_.size(); }
  std::size_t pair_count() const noexcept { return g_old_.size(); }

  double h(std::size_t i, std::size_t j) const { return dense_[i * pair_count() + j]; }
  // Nonzero columns of row i, with their values.
  std::span<const std::size_t> row_columns(std::size_t i) const { return columns_[i]; }
  std::span<const double> row_values(std::size_t i) const { return values_[i]; }
  bool is_redundant(std::size_t i) const { return columns_[i].empty(); }

  // Input row compared against the reference by constraint i; the entry for
  // the normalization row is the reference link itself.
  std::span<const std::size_t> row_links() const noexcept { return row_links_; }
  std::size_t reference_link() const { return row_links_.back(); }

  const std::vector<double>& g_old() const noexcept { return g_old_; }
  // Initial dual point (0, ..., 0, 1), for which the primal iterate is g_old.
  const std::vector<double>& v() const noexcept { return v_; }

 private:
  friend DualProblem build_dual(const RoutingMatrix&, const LinkLoads&, const ProbabilityVector&,
                                ReferenceLink);
  std::vector<double> dense_;
  std::vector<std::vector<std::size_t>> columns_;
  std::vector<std::vector<double>> values_;
  std::vector<std::size_t> row_links_;
  std::vector<double> g_old_;
  std::vector<double> v_;
};

// Preconditions: loads strictly positive (apply reduce_zero_loads first) and
// g_old strictly positive. Throws InvalidArgument otherwise.
DualProblem build_dual(const RoutingMatrix& routing, const LinkLoads& loads,
                       const ProbabilityVector& g_old,
                       ReferenceLink reference = ReferenceLink::largest_load);

double dual_objective(const DualProblem& dual, std::span<const double> v);

// f_j = g_j exp(sum_i h_ij v_i - 1), exponents capped.
std::vector<double> primal_from_dual(const DualProblem& dual, std::span<const double> v);

struct ProjectionOptions {
  double tol = 1e-9;
  int max_sweeps = 10000;
  ReferenceLink reference = ReferenceLink::largest_load;
  // |v_i| * max_j |h_ij| beyond this is taken as dual divergence.
  double divergence_bound = 1e4;
  // After each cyclic sweep, also try one Newton step in all dual
  // coordinates at once; it is kept only if it raises D. Cuts the sweep
  // count from hundreds to a handful near the optimum.
  bool newton_polish = true;
  bool record_trajectory = false;
};

struct ProjectionResult {
  ProbabilityVector f_new;
  std::vector<double> v;
  double dual_value = 0.0;
  // max_i |(H f - (0, ..., 0, 1))_i|, in the units of H.
  double constraint_residual = 0.0;
  // Scale-free feasibility: max over links of |ratio_i / ratio_ref - 1| with
  // ratio_i = (A f)_i / y_i, together with |sum f - 1|.
  double relative_residual = 0.0;
  int newton_sweeps = 0;
  int polish_steps = 0;  // accepted full Newton steps
  bool converged = false;
  std::vector<double> dual_trajectory;  // dual value after each sweep
};

// Columns with g_old = 0 stay at 0. Throws InfeasibleError when the dual
// diverges (empty tomographic space) or when a converged answer needs an
// exponent beyond the cap. `warm_start` may carry the v of an earlier
// projection on the same system.
ProjectionResult krupp_project(const RoutingMatrix& routing, const LinkLoads& loads,
                               const ProbabilityVector& g_old, const ProjectionOptions& options = {},
                               std::span<const double> warm_start = {});

}  // namespace tomo
