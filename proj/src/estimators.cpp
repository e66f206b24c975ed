#include "tomogravity/estimators.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tomogravity/errors.hpp"
#include "tomogravity/random.hpp"

namespace tomo {

// ==================================================================== ITG

void validate(const ItgOptions& options) {
  if (!(options.outer_tol > 0.0)) throw InvalidArgument("outer tolerance must be positive");
  if (!(options.inner_tol > 0.0)) throw InvalidArgument("inner tolerance must be positive");
  if (options.max_outer_iters < 1) throw InvalidArgument("max outer iterations must be >= 1");
  if (options.inner_max_sweeps < 1) throw InvalidArgument("max inner sweeps must be >= 1");
  if (options.starts < 1) throw InvalidArgument("number of starts must be >= 1");
  if (!(options.start_perturbation >= 0.0))
    throw InvalidArgument("start perturbation must be nonnegative");
}

namespace {

ProbabilityVector gravity_step(const ProbabilityVector& f, const SdIndex& index, bool exclude_self) {
  if (exclude_self) return project_to_gravity_excluding_self(f, index);
  return project_to_gravity(f, index).product(index);
}

EstimateReport run_itg(const ObservedSystem& observed, const ReducedSystem& reduced,
                       const SdIndex& index, ProbabilityVector g, const ItgOptions& options) {
  const std::size_t pairs = index.pair_count();
  ProjectionOptions inner;
  inner.tol = options.inner_tol;
  inner.max_sweeps = options.inner_max_sweeps;
  inner.reference = options.reference;

  EstimateReport report;
  report.forced_zero = reduced.forced_zero;

  ProbabilityVector f;
  std::vector<double> warm;
  bool inner_converged = false;
  for (int k = 1; k <= options.max_outer_iters; ++k) {
    std::vector<double> g_kept;
    g_kept.reserve(reduced.kept_pairs.size());
    for (std::size_t j : reduced.kept_pairs) g_kept.push_back(g[j]);
    const ProjectionResult projection =
        krupp_project(reduced.routing, reduced.loads, ProbabilityVector::normalized(std::move(g_kept)),
                      inner, options.warm_start ? std::span<const double>(warm) : std::span<const double>{});
    if (options.warm_start) warm = projection.v;
    inner_converged = projection.converged;
    report.inner_sweeps += projection.newton_sweeps;
    report.inner_relative_residual = projection.relative_residual;

    std::vector<double> full(pairs, 0.0);
    for (std::size_t k2 = 0; k2 < reduced.kept_pairs.size(); ++k2)
      full[reduced.kept_pairs[k2]] = projection.f_new[k2];
    f = ProbabilityVector::normalized(std::move(full));
    report.kl_half_steps.push_back(kl_divergence(f, g));

    g = gravity_step(f, index, options.gravity_excludes_self);
    const double kl = kl_divergence(f, g);
    report.kl_trajectory.push_back(kl);
    report.outer_iters = k;

    const std::size_t n = report.kl_trajectory.size();
    if (n >= 2 && std::abs(report.kl_trajectory[n - 1] - report.kl_trajectory[n - 2]) <= options.outer_tol) {
      report.converged = inner_converged;
      break;
    }
    // A single iteration reaching K = 0 cannot move further.
    if (kl == 0.0) {
      report.converged = inner_converged;
      break;
    }
  }

  // Rescale to the observed total.
  const RoutingMatrix& a = observed.routing;
  const LinkLoads& y = observed.loads;
  double load_total = 0.0, fitted_total = 0.0;
  for (std::size_t i = 0; i < a.link_count(); ++i) {
    load_total += y[i];
    for (std::size_t j : a.row(i)) fitted_total += f[j];
  }
  report.n_hat = load_total / fitted_total;
  std::vector<double> x(pairs);
  for (std::size_t j = 0; j < pairs; ++j) x[j] = report.n_hat * f[j];

  // Observed self links carry their pair's flow exactly.
  for (std::size_t i = 0; i < a.link_count(); ++i) {
    if (a.link(i).kind != LinkKind::self) continue;
    const std::size_t j = a.row(i).front();
    const double adjustment = y[i] > 0.0 ? std::abs(x[j] - y[i]) / y[i] : std::abs(x[j]);
    report.self_pin_adjustment = std::max(report.self_pin_adjustment, adjustment);
    x[j] = y[i];
  }

  for (std::size_t i = 0; i < a.link_count(); ++i) {
    double fitted = 0.0;
    for (std::size_t j : a.row(i)) fitted += x[j];
    const double err = y[i] > 0.0 ? std::abs(fitted - y[i]) / y[i] : std::abs(fitted);
    report.max_relative_load_error = std::max(report.max_relative_load_error, err);
  }

  report.x_hat = TrafficVector(std::move(x));
  report.f_final = std::move(f);
  report.g_final = std::move(g);
  return report;
}

}  // namespace

EstimateReport itg_estimate(const RoutingMatrix& routing, const SdIndex& index,
                            const LinkLoads& loads, const ItgOptions& options,
                            const std::optional<TrafficVector>& gravity_prior) {
  validate(options);
  if (routing.pair_count() != index.pair_count())
    throw DimensionError("itg_estimate: routing columns do not match the SD index");
  const ObservedSystem observed = restrict_observed(routing, loads);
  const ReducedSystem reduced = reduce_zero_loads(observed.routing, observed.loads);

  ProbabilityVector base;
  if (options.init == ItgInit::gravity_seeded) {
    if (!gravity_prior) throw InvalidArgument("gravity-seeded initialization needs a gravity prior");
    if (gravity_prior->size() != index.pair_count())
      throw DimensionError("gravity prior does not match the SD index");
    base = ProbabilityVector::normalized(gravity_prior->values());
  } else {
    base = ProbabilityVector::uniform(index.pair_count());
  }

  EstimateReport best;
  bool have_best = false;
  for (int start = 0; start < options.starts; ++start) {
    ProbabilityVector g = base;
    if (start > 0) {
      Rng rng(derive_seed(options.seed, {static_cast<std::uint64_t>(start)}));
      std::vector<double> perturbed = base.values();
      for (double& value : perturbed) value *= rng.lognormal(options.start_perturbation);
      g = ProbabilityVector::normalized(std::move(perturbed));
    }
    EstimateReport report = run_itg(observed, reduced, index, std::move(g), options);
    report.start = start;
    if (!have_best || report.kl_trajectory.back() < best.kl_trajectory.back()) {
      best = std::move(report);
      have_best = true;
    }
  }
  return best;
}

EstimateReport itg_estimate(const Network& network, const LinkLoads& loads, const ItgOptions& options) {
  std::optional<TrafficVector> prior;
  if (options.init == ItgInit::gravity_seeded)
    prior = simple_gravity(node_totals(network, loads), network.index());
  return itg_estimate(network.routing(), network.index(), loads, options, prior);
}

// ==================================================================== STG

namespace {

Eigen::MatrixXd dense_matrix(const RoutingMatrix& routing) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(routing.link_count()),
                                            static_cast<Eigen::Index>(routing.pair_count()));
  for (std::size_t i = 0; i < routing.link_count(); ++i)
    for (std::size_t j : routing.row(i)) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
  return a;
}

Eigen::VectorXd to_eigen(std::span<const double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) out(static_cast<Eigen::Index>(k)) = v[k];
  return out;
}

ObservedSystem observed_rows(const RoutingMatrix& routing, const LinkLoads& loads) {
  if (loads.observed_count() == loads.size() && routing.observed_count() == routing.link_count()) {
    std::vector<std::size_t> rows(routing.link_count());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return ObservedSystem{routing, loads, rows};
  }
  return restrict_observed(routing, loads);
}

}  // namespace

TrafficVector StgResult::clamped() const {
  std::vector<double> x = x_hat;
  for (double& v : x) v = std::max(v, 0.0);
  return TrafficVector(std::move(x));
}

StgResult simple_tomogravity(const RoutingMatrix& routing, const LinkLoads& loads,
                             const TrafficVector& x_tilde, const StgOptions& options) {
  if (x_tilde.size() != routing.pair_count())
    throw DimensionError("simple_tomogravity: prior does not match routing columns");
  const ObservedSystem sys = observed_rows(routing, loads);
  const Eigen::MatrixXd a = dense_matrix(sys.routing);
  const Eigen::VectorXd y = to_eigen(sys.loads.values());
  const Eigen::VectorXd prior = to_eigen(x_tilde.values());

  // Minimum-norm correction: x = x~ + A^+ (y - A x~).
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  const Eigen::VectorXd x = prior + cod.solve(y - a * prior);

  StgResult result;
  result.residual = (a * x - y).cwiseAbs().maxCoeff();
  const double scale = std::max(y.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  if (result.residual > options.consistency_tol * scale)
    throw InfeasibleError("simple tomogravity: loads are not in the range of the routing matrix "
                          "(least-squares residual " + std::to_string(result.residual) + ")");

  result.x_hat.assign(x.data(), x.data() + x.size());
  for (double v : result.x_hat) {
    if (v < 0.0) {
      ++result.negative_count;
      result.most_negative = std::min(result.most_negative, v);
    }
  }
  if (options.clamp_negative)
    for (double& v : result.x_hat) v = std::max(v, 0.0);
  return result;
}

// =================================================================== ERTG

namespace {

// Normalized problem: u = x / N, b = y / N,
//   F(u) = ||b - A u||^2 + phi * D(u, w),   w = x_tilde / N,
// over the support of w. Original objective = N^2 F(u).
class ErtgProblem {
 public:
  ErtgProblem(const ObservedSystem& sys, const TrafficVector& x_tilde, double phi, EntropyForm form)
      : phi_(phi), form_(form) {
    total_ = x_tilde.total();
    for (std::size_t j = 0; j < x_tilde.size(); ++j)
      if (x_tilde[j] > 0.0) support_.push_back(j);
    const Eigen::MatrixXd full = dense_matrix(sys.routing);
    a_.resize(full.rows(), static_cast<Eigen::Index>(support_.size()));
    prior_.resize(static_cast<Eigen::Index>(support_.size()));
    for (std::size_t k = 0; k < support_.size(); ++k) {
      a_.col(static_cast<Eigen::Index>(k)) = full.col(static_cast<Eigen::Index>(support_[k]));
      prior_(static_cast<Eigen::Index>(k)) = x_tilde[support_[k]] / total_;
    }
    b_ = to_eigen(sys.loads.values()) / total_;
    gram_ = 2.0 * a_.transpose() * a_;
  }

  double value(const Eigen::VectorXd& u) const {
    const double data = (b_ - a_ * u).squaredNorm();
    double entropy = 0.0;
    for (Eigen::Index k = 0; k < u.size(); ++k) {
      const double uk = u(k), wk = prior_(k);
      if (uk < 0.0) return std::numeric_limits<double>::infinity();
      const double term = uk > 0.0 ? uk * std::log(uk / wk) : 0.0;
      entropy += form_ == EntropyForm::generalized ? term - uk + wk : term;
    }
    return data + phi_ * entropy;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& u) const {
    Eigen::VectorXd g = 2.0 * a_.transpose() * (a_ * u - b_);
    for (Eigen::Index k = 0; k < u.size(); ++k) {
      g(k) += phi_ * std::log(u(k) / prior_(k));
      if (form_ == EntropyForm::standard) g(k) += phi_;
    }
    return g;
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& u) const {
    Eigen::MatrixXd h = gram_;
    for (Eigen::Index k = 0; k < u.size(); ++k) h(k, k) += phi_ / u(k);
    return h;
  }

  const Eigen::VectorXd& prior() const noexcept { return prior_; }
  const std::vector<std::size_t>& support() const noexcept { return support_; }
  double total() const noexcept { return total_; }

 private:
  double phi_;
  EntropyForm form_;
  double total_ = 0.0;
  std::vector<std::size_t> support_;
  Eigen::MatrixXd a_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd b_;
  Eigen::VectorXd prior_;
};

// Largest t <= 1 keeping u + t d strictly positive (fraction to boundary).
double positive_step(const Eigen::VectorXd& u, const Eigen::VectorXd& d) {
  double t = 1.0;
  for (Eigen::Index k = 0; k < u.size(); ++k)
    if (d(k) < 0.0) t = std::min(t, -0.99 * u(k) / d(k));
  return t;
}

}  // namespace

double ertg_objective(const RoutingMatrix& routing, const LinkLoads& loads,
                      const TrafficVector& x_tilde, std::span<const double> x, double phi,
                      EntropyForm form) {
  if (x.size() != routing.pair_count() || x_tilde.size() != routing.pair_count())
    throw DimensionError("ertg_objective: size mismatch");
  const ObservedSystem sys = observed_rows(routing, loads);
  const double n = x_tilde.total();
  double data = 0.0;
  for (std::size_t i = 0; i < sys.routing.link_count(); ++i) {
    double fitted = 0.0;
    for (std::size_t j : sys.routing.row(i)) fitted += x[j];
    data += (sys.loads[i] - fitted) * (sys.loads[i] - fitted);
  }
  double entropy = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] < 0.0) return std::numeric_limits<double>::infinity();
    const double u = x[j] / n, w = x_tilde[j] / n;
    if (u > 0.0 && w == 0.0) return std::numeric_limits<double>::infinity();
    const double term = u > 0.0 ? u * std::log(u / w) : 0.0;
    entropy += form == EntropyForm::generalized ? term - u + w : term;
  }
  return data + phi * n * n * entropy;
}

ErtgResult entropy_regularized_tomogravity(const RoutingMatrix& routing, const LinkLoads& loads,
                                           const TrafficVector& x_tilde, const ErtgOptions& options) {
  if (!(options.phi > 0.0)) throw InvalidArgument("ERTG: phi must be positive");
  if (!(options.grad_tol > 0.0)) throw InvalidArgument("ERTG: gradient tolerance must be positive");
  if (options.max_iters < 1) throw InvalidArgument("ERTG: iteration cap must be >= 1");
  if (x_tilde.size() != routing.pair_count())
    throw DimensionError("ERTG: prior does not match routing columns");
  if (!(x_tilde.total() > 0.0)) throw InvalidArgument("ERTG: prior is identically zero");

  const ObservedSystem sys = observed_rows(routing, loads);
  const ErtgProblem problem(sys, x_tilde, options.phi, options.form);

  Eigen::VectorXd u = problem.prior();
  double value = problem.value(u);
  Eigen::VectorXd grad = problem.gradient(u);
  ErtgResult result;
  for (int iter = 0; iter < options.max_iters; ++iter) {
    if (grad.lpNorm<Eigen::Infinity>() <= options.grad_tol) {
      result.converged = true;
      break;
    }
    result.iterations = iter + 1;

    Eigen::VectorXd direction;
    const Eigen::LLT<Eigen::MatrixXd> llt(problem.hessian(u));
    if (llt.info() == Eigen::Success) direction = -llt.solve(grad);
    const double slope = direction.size() ? grad.dot(direction) : 0.0;

    Eigen::VectorXd next;
    double next_value = value;
    bool moved = false;
    if (direction.size() && slope < 0.0) {
      // Damped Newton with Armijo backtracking, kept inside u > 0.
      for (double t = positive_step(u, direction); t > 1e-20; t *= 0.5) {
        next = u + t * direction;
        next_value = problem.value(next);
        if (next_value <= value + 1e-4 * t * slope) {
          moved = true;
          break;
        }
      }
    }
    if (!moved) {
      // Multiplicative (exponentiated-gradient) fallback; preserves support.
      const double g2 = grad.squaredNorm();
      for (double eta = 1.0 / std::max(grad.lpNorm<Eigen::Infinity>(), 1e-300); eta > 1e-30; eta *= 0.5) {
        next = u.array() * (-eta * grad.array()).exp();
        next_value = problem.value(next);
        if (next_value < value - 1e-4 * eta * g2 * u.minCoeff() || (next_value < value && eta < 1e-12)) {
          moved = true;
          break;
        }
      }
    }
    if (!moved) break;
    u = std::move(next);
    value = next_value;
    grad = problem.gradient(u);
  }
  result.gradient_norm = grad.lpNorm<Eigen::Infinity>();
  if (result.gradient_norm <= options.grad_tol) result.converged = true;

  std::vector<double> x(routing.pair_count(), 0.0);
  const auto& support = problem.support();
  for (std::size_t k = 0; k < support.size(); ++k)
    x[support[k]] = u(static_cast<Eigen::Index>(k)) * problem.total();
  result.objective = value * problem.total() * problem.total();
  result.x_hat = TrafficVector(std::move(x));
  return result;
}

}  // namespace tomo
