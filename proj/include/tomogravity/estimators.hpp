#pragma once

// Traffic-matrix estimators from one snapshot of link loads:
//  - iterative tomogravity (ITG): alternating KL projections between the
//    tomographic space and the gravity space, rescaled to the observed total;
//  - simple tomogravity (STG): Euclidean projection of a gravity prior onto
//    {x : A x = y};
//  - entropy-regularized tomogravity (ERTG): least squares plus a KL penalty
//    towards the gravity prior.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "tomogravity/gravity.hpp"
#include "tomogravity/network.hpp"
#include "tomogravity/projection.hpp"
#include "tomogravity/topology.hpp"

namespace tomo {

enum class ItgInit {
  uniform,         // g = 1/J
  gravity_seeded,  // g = simple gravity prior / N
};

struct ItgOptions {
  double outer_tol = 1e-10;  // stop when |K(f, g) change| <= outer_tol
  int max_outer_iters = 500;
  double inner_tol = 1e-12;
  int inner_max_sweeps = 10000;
  ItgInit init = ItgInit::uniform;
  // Keep self pairs out of the rank-1 structure (quasi-independence fit).
  bool gravity_excludes_self = false;
  // Start each tomographic projection from the previous dual point.
  bool warm_start = true;
  // Restarts from log-normally perturbed initializations; best final K wins.
  int starts = 1;
  std::uint64_t seed = 0;
  double start_perturbation = 0.5;
  ReferenceLink reference = ReferenceLink::largest_load;
};

struct EstimateReport {
  TrafficVector x_hat;
  double n_hat = 0.0;
  int outer_iters = 0;
  // K(f^(k), g^(k)) after each gravity step.
  std::vector<double> kl_trajectory;
  // K(f^(k), g^(k-1)) after each tomographic step.
  std::vector<double> kl_half_steps;
  bool converged = false;
  std::vector<std::size_t> forced_zero;
  ProbabilityVector f_final;
  ProbabilityVector g_final;
  // max over observed links of |(A x_hat)_i - y_i| / y_i (absolute for y_i = 0).
  double max_relative_load_error = 0.0;
  // Largest relative correction applied when pinning self pairs to their
  // observed self-link loads.
  double self_pin_adjustment = 0.0;
  int inner_sweeps = 0;
  double inner_relative_residual = 0.0;
  int start = 0;
};

void validate(const ItgOptions& options);

// `gravity_prior` is required for ItgInit::gravity_seeded.
EstimateReport itg_estimate(const RoutingMatrix& routing, const SdIndex& index,
                            const LinkLoads& loads, const ItgOptions& options = {},
                            const std::optional<TrafficVector>& gravity_prior = std::nullopt);
EstimateReport itg_estimate(const Network& network, const LinkLoads& loads,
                            const ItgOptions& options = {});

struct StgOptions {
  bool clamp_negative = false;
  // max_i |(A x)_i - y_i| / max_i y_i above this means y is not in range(A).
  double consistency_tol = 1e-8;
};

struct StgResult {
  // Unconstrained affine projection; may hold negative entries unless clamped.
  std::vector<double> x_hat;
  std::size_t negative_count = 0;
  double most_negative = 0.0;
  double residual = 0.0;  // max_i |(A x_hat)_i - y_i|, before clamping

  TrafficVector clamped() const;
};

// Euclidean projection of x_tilde onto {x : A* x = y*} over the observed rows.
// Throws InfeasibleError (with the least-squares residual) when inconsistent.
StgResult simple_tomogravity(const RoutingMatrix& routing, const LinkLoads& loads,
                             const TrafficVector& x_tilde, const StgOptions& options = {});

enum class EntropyForm {
  generalized,  // sum u log(u/w) - u + w; agrees with KL when totals match
  standard,     // sum u log(u/w)
};

struct ErtgOptions {
  double phi = 1e-3;
  // Infinity-norm of the gradient of the normalized objective (x / N units).
  double grad_tol = 1e-8;
  int max_iters = 500;
  EntropyForm form = EntropyForm::generalized;
};

struct ErtgResult {
  TrafficVector x_hat;
  double objective = 0.0;  // ||y - A x||^2 + phi N^2 K(x/N, x_tilde/N)
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Objective of ERTG at x (original units); +inf when x leaves supp(x_tilde).
double ertg_objective(const RoutingMatrix& routing, const LinkLoads& loads,
                      const TrafficVector& x_tilde, std::span<const double> x, double phi,
                      EntropyForm form = EntropyForm::generalized);

ErtgResult entropy_regularized_tomogravity(const RoutingMatrix& routing, const LinkLoads& loads,
                                           const TrafficVector& x_tilde,
                                           const ErtgOptions& options = {});

}  // namespace tomo
