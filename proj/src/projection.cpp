#include "tomogravity/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "tomogravity/errors.hpp"

namespace tomo {

DualProblem build_dual(const RoutingMatrix& routing, const LinkLoads& loads,
                       const ProbabilityVector& g_old, ReferenceLink reference) {
  const std::size_t rows = routing.link_count();
  const std::size_t pairs = routing.pair_count();
  if (loads.size() != rows) throw DimensionError("build_dual: loads do not match routing rows");
  if (g_old.size() != pairs) throw DimensionError("build_dual: reference measure has wrong length");
  if (rows == 0) throw InvalidArgument("build_dual: no observed links");
  for (std::size_t i = 0; i < rows; ++i)
    if (!loads.observed(i) || !(loads[i] > 0.0))
      throw InvalidArgument("build_dual: load on link '" + routing.link(i).id +
                            "' is not strictly positive; reduce zero loads first");
  for (std::size_t j = 0; j < pairs; ++j)
    if (!(g_old[j] > 0.0))
      throw InvalidArgument("build_dual: reference measure has a zero at pair " + std::to_string(j));

  std::size_t ref = rows - 1;
  if (reference == ReferenceLink::largest_load)
    ref = static_cast<std::size_t>(
        std::max_element(loads.values().begin(), loads.values().end()) - loads.values().begin());

  DualProblem dual;
  for (std::size_t i = 0; i < rows; ++i)
    if (i != ref) dual.row_links_.push_back(i);
  dual.row_links_.push_back(ref);

  const std::size_t r = dual.row_links_.size();
  dual.dense_.assign(r * pairs, 0.0);
  dual.columns_.resize(r);
  dual.values_.resize(r);
  const double inv_ref = 1.0 / loads[ref];
  for (std::size_t i = 0; i + 1 < r; ++i) {
    const std::size_t link = dual.row_links_[i];
    const double inv = 1.0 / loads[link];
    for (std::size_t j = 0; j < pairs; ++j) {
      const double h = (routing.entry(link, j) ? inv : 0.0) - (routing.entry(ref, j) ? inv_ref : 0.0);
      dual.dense_[i * pairs + j] = h;
      if (h != 0.0) {
        dual.columns_[i].push_back(j);
        dual.values_[i].push_back(h);
      }
    }
  }
  for (std::size_t j = 0; j < pairs; ++j) {
    dual.dense_[(r - 1) * pairs + j] = 1.0;
    dual.columns_[r - 1].push_back(j);
    dual.values_[r - 1].push_back(1.0);
  }
  dual.g_old_ = g_old.values();
  dual.v_.assign(r, 0.0);
  dual.v_.back() = 1.0;
  return dual;
}

namespace {

std::vector<double> exponents(const DualProblem& dual, std::span<const double> v) {
  if (v.size() != dual.constraint_count()) throw DimensionError("dual vector has wrong length");
  std::vector<double> e(dual.pair_count(), -1.0);
  for (std::size_t i = 0; i < dual.constraint_count(); ++i) {
    const auto cols = dual.row_columns(i);
    const auto vals = dual.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) e[cols[k]] += vals[k] * v[i];
  }
  return e;
}

}  // namespace

double dual_objective(const DualProblem& dual, std::span<const double> v) {
  const auto e = exponents(dual, v);
  double mass = 0.0;
  for (std::size_t j = 0; j < e.size(); ++j)
    mass += dual.g_old()[j] * std::exp(std::min(e[j], exponent_cap));
  return v.back() - mass;
}

std::vector<double> primal_from_dual(const DualProblem& dual, std::span<const double> v) {
  auto f = exponents(dual, v);
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = dual.g_old()[j] * std::exp(std::min(f[j], exponent_cap));
  return f;
}

namespace {

// Cyclic coordinate ascent on the dual with safeguarded Newton steps.
class CoordinateAscent {
 public:
  CoordinateAscent(const DualProblem& dual, const RoutingMatrix& routing, const LinkLoads& loads,
                   std::span<const double> v0, double divergence_bound)
      : dual_(dual),
        routing_(routing),
        loads_(loads),
        v_(v0.begin(), v0.end()),
        e_(exponents(dual, v0)),
        w_(e_.size()),
        trial_(e_.size()),
        divergence_bound_(divergence_bound) {
    for (std::size_t j = 0; j < w_.size(); ++j) w_[j] = weight(j, e_[j]);
    scale_.resize(dual.constraint_count());
    for (std::size_t i = 0; i < scale_.size(); ++i) {
      double m = 0.0;
      for (double h : dual.row_values(i)) m = std::max(m, std::abs(h));
      scale_[i] = m;
    }
  }

  double value() const {
    return v_.back() - std::accumulate(w_.begin(), w_.end(), 0.0);
  }

  void sweep() {
    for (std::size_t i = 0; i < v_.size(); ++i) step(i);
  }

  // Newton steps on the normalization coordinate until sum f = 1 to
  // rounding.
  void normalize() {
    for (int k = 0; k < 8; ++k) {
      const double mass = std::accumulate(w_.begin(), w_.end(), 0.0);
      if (std::abs(mass - 1.0) <= 1e-15) break;
      step(v_.size() - 1);
    }
  }

  // Returns {raw H residual, scale-free residual}.
  std::pair<double, double> residuals() const {
    const std::size_t r = v_.size();
    double raw = 0.0;
    for (std::size_t i = 0; i + 1 < r; ++i) {
      const auto cols = dual_.row_columns(i);
      const auto vals = dual_.row_values(i);
      double hf = 0.0;
      for (std::size_t k = 0; k < cols.size(); ++k) hf += vals[k] * w_[cols[k]];
      raw = std::max(raw, std::abs(hf));
    }
    const double mass_error = std::abs(std::accumulate(w_.begin(), w_.end(), 0.0) - 1.0);
    raw = std::max(raw, mass_error);

    auto ratio = [&](std::size_t link) {
      double af = 0.0;
      for (std::size_t j : routing_.row(link)) af += w_[j];
      return af / loads_[link];
    };
    const double ref_ratio = ratio(dual_.reference_link());
    double relative = mass_error;
    for (std::size_t i = 0; i + 1 < r; ++i) {
      const double rel = ref_ratio > 0.0 ? std::abs(ratio(dual_.row_links()[i]) / ref_ratio - 1.0)
                                         : std::numeric_limits<double>::infinity();
      relative = std::max(relative, rel);
    }
    return {raw, relative};
  }

  // One Newton step in all coordinates, halved until D does not decrease.
  // Returns whether a step was taken.
  bool full_step() {
    const std::size_t r = v_.size(), J = w_.size();
    if (dense_.size() == 0) {
      dense_.resize(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(J));
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < J; ++j) dense_(i, j) = dual_.h(i, j);
    }
    const Eigen::Map<const Eigen::VectorXd> w(w_.data(), static_cast<Eigen::Index>(J));
    Eigen::VectorXd grad = -(dense_ * w);
    grad(static_cast<Eigen::Index>(r - 1)) += 1.0;
    const Eigen::MatrixXd weighted = dense_ * w.asDiagonal();
    Eigen::MatrixXd hessian = weighted * dense_.transpose();
    // Rows of H differ in scale by 1/y; solve the Jacobi-scaled system. A
    // small ridge keeps redundant (singular) rows harmless.
    Eigen::VectorXd scale(static_cast<Eigen::Index>(r));
    for (Eigen::Index i = 0; i < scale.size(); ++i)
      scale(i) = hessian(i, i) > 0.0 ? 1.0 / std::sqrt(hessian(i, i)) : 0.0;
    hessian = scale.asDiagonal() * hessian * scale.asDiagonal();
    hessian.diagonal().array() += 1e-12;
    const Eigen::VectorXd direction =
        (scale.asDiagonal() * hessian.ldlt().solve(scale.cwiseProduct(grad))).eval();
    if (!direction.allFinite()) return false;
    const Eigen::VectorXd e_direction = dense_.transpose() * direction;

    const double base = value();
    for (int halving = 0; halving <= 20; ++halving) {
      const double t = std::ldexp(1.0, -halving);
      double mass = 0.0;
      for (std::size_t j = 0; j < J; ++j) {
        trial_[j] = weight(j, e_[j] + t * e_direction(static_cast<Eigen::Index>(j)));
        mass += trial_[j];
      }
      const double candidate = v_.back() + t * direction(static_cast<Eigen::Index>(r - 1)) - mass;
      if (candidate > base) {
        for (std::size_t i = 0; i < r; ++i) v_[i] += t * direction(static_cast<Eigen::Index>(i));
        for (std::size_t j = 0; j < J; ++j) e_[j] += t * e_direction(static_cast<Eigen::Index>(j));
        std::swap(w_, trial_);
        trial_.resize(J);
        check_divergence();
        return true;
      }
    }
    return false;
  }

  bool exponent_capped() const {
    return std::any_of(e_.begin(), e_.end(), [](double e) { return e > exponent_cap; });
  }

  const std::vector<double>& v() const noexcept { return v_; }
  const std::vector<double>& primal() const noexcept { return w_; }

 private:
  double weight(std::size_t j, double e) const {
    return dual_.g_old()[j] * std::exp(std::min(e, exponent_cap));
  }

  void step(std::size_t i) {
    const bool normalization = i + 1 == v_.size();
    const auto cols = dual_.row_columns(i);
    const auto vals = dual_.row_values(i);
    if (cols.empty()) return;  // redundant constraint

    double grad = normalization ? 1.0 : 0.0;
    double curvature = 0.0;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double hw = vals[k] * w_[cols[k]];
      grad -= hw;
      curvature += vals[k] * hw;
    }
    if (!(curvature > 0.0)) return;

    double delta_v = grad / curvature;
    for (int halving = 0; halving <= 30; ++halving, delta_v *= 0.5) {
      // Exact change of the dual along the coordinate.
      double gain = normalization ? delta_v : 0.0;
      for (std::size_t k = 0; k < cols.size(); ++k) {
        const std::size_t j = cols[k];
        const double e_new = e_[j] + vals[k] * delta_v;
        double w_new;
        if (e_new <= exponent_cap && e_[j] <= exponent_cap) {
          const double change = w_[j] * std::expm1(vals[k] * delta_v);
          w_new = w_[j] + change;
          gain -= change;
        } else {
          w_new = weight(j, e_new);
          gain -= w_new - w_[j];
        }
        trial_[k] = w_new;
      }
      if (gain >= 0.0) {
        v_[i] += delta_v;
        for (std::size_t k = 0; k < cols.size(); ++k) {
          const std::size_t j = cols[k];
          e_[j] += vals[k] * delta_v;
          w_[j] = trial_[k];
        }
        check_divergence(i);
        return;
      }
    }
  }

  void check_divergence(std::size_t i) const {
    if (std::abs(v_[i]) * scale_[i] > divergence_bound_) {
      const std::string link = routing_.link(dual_.row_links()[i]).id;
      throw InfeasibleError("tomographic space is empty: dual coordinate for link '" + link +
                            "' diverges");
    }
  }

  void check_divergence() const {
    for (std::size_t i = 0; i < v_.size(); ++i) check_divergence(i);
  }

  const DualProblem& dual_;
  const RoutingMatrix& routing_;
  const LinkLoads& loads_;
  std::vector<double> v_;
  std::vector<double> e_;
  std::vector<double> w_;
  std::vector<double> trial_;
  std::vector<double> scale_;
  double divergence_bound_;
  Eigen::MatrixXd dense_;
};

}  // namespace

ProjectionResult krupp_project(const RoutingMatrix& routing, const LinkLoads& loads,
                               const ProbabilityVector& g_old, const ProjectionOptions& options,
                               std::span<const double> warm_start) {
  if (!(options.tol > 0.0)) throw InvalidArgument("krupp_project: tol must be positive");
  if (options.max_sweeps < 1) throw InvalidArgument("krupp_project: max_sweeps must be >= 1");
  if (g_old.size() != routing.pair_count())
    throw DimensionError("krupp_project: reference measure has wrong length");

  std::vector<std::size_t> support;
  for (std::size_t j = 0; j < g_old.size(); ++j)
    if (g_old[j] > 0.0) support.push_back(j);

  if (support.size() < g_old.size()) {
    // Zero reference mass stays zero: solve on the positive support.
    std::vector<std::size_t> rows(routing.link_count());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const RoutingMatrix sub = submatrix(routing, rows, support);
    for (std::size_t i = 0; i < sub.link_count(); ++i)
      if (sub.row(i).empty())
        throw InfeasibleError("tomographic space is empty: link '" + sub.link(i).id +
                              "' carries load but the reference measure has no mass on its pairs");
    std::vector<double> g_sub;
    for (std::size_t j : support) g_sub.push_back(g_old[j]);
    ProjectionResult inner =
        krupp_project(sub, loads, ProbabilityVector::normalized(std::move(g_sub)), options, warm_start);
    std::vector<double> f(g_old.size(), 0.0);
    for (std::size_t k = 0; k < support.size(); ++k) f[support[k]] = inner.f_new[k];
    inner.f_new = ProbabilityVector(std::move(f));
    return inner;
  }

  const DualProblem dual = build_dual(routing, loads, g_old, options.reference);
  std::span<const double> v0 = dual.v();
  if (!warm_start.empty()) {
    if (warm_start.size() != dual.constraint_count())
      throw DimensionError("krupp_project: warm start has wrong length");
    v0 = warm_start;
  }

  CoordinateAscent ascent(dual, routing, loads, v0, options.divergence_bound);
  ProjectionResult result;
  double value = ascent.value();
  std::pair<double, double> res{0.0, 0.0};
  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    ascent.sweep();
    if (options.newton_polish && ascent.full_step()) ++result.polish_steps;
    const double next = ascent.value();
    const double improvement = (next - value) / std::max(1.0, std::abs(next));
    value = next;
    if (options.record_trajectory) result.dual_trajectory.push_back(value);
    res = ascent.residuals();
    result.newton_sweeps = sweep;
    if (res.second <= options.tol && improvement <= options.tol) {
      result.converged = true;
      break;
    }
  }
  ascent.normalize();
  res = ascent.residuals();

  if (result.converged && ascent.exponent_capped())
    throw InfeasibleError("krupp_project: converged point needs exponents beyond the cap; "
                          "constraints are infeasible or badly scaled");

  result.v = ascent.v();
  result.dual_value = ascent.value();
  result.constraint_residual = res.first;
  result.relative_residual = res.second;
  result.f_new = ProbabilityVector::normalized(ascent.primal());
  return result;
}

}  // namespace tomo
