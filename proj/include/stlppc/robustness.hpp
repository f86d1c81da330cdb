#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "stlppc/stl_ast.hpp"

namespace stlppc {

/// Temperature of the smooth conjunction. k = 1 is the plain
/// -ln(sum exp(-rho_i)) form; larger k tightens the under-approximation of the
/// min to within ln(n)/k.
struct SmoothConfig {
  double k = 1.0;
};

struct RobustnessResult {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

struct OptimumEstimate {
  double rho_opt = 0.0;
  Eigen::VectorXd argmax;
  bool converged = false;
  std::size_t iterations = 0;
};

/// Softmin -(1/k) ln sum_i exp(-k v_i), evaluated after factoring out min v_i.
/// Writes the normalized weights into `weights` when non-null. The n-ary form
/// is permutation invariant, unlike folding the binary form pairwise.
double softmin(const std::vector<double>& values, double k, std::vector<double>* weights = nullptr);

/// Smooth robustness of a non-temporal body and its gradient. Inf-ball atoms
/// that were not desugared are treated as the softmin of their halfspaces.
RobustnessResult smooth_robustness(const FormulaNode& body, const Eigen::VectorXd& x,
                                   const SmoothConfig& cfg);

/// Exact (min/max) robustness of a non-temporal body at one state.
double exact_state_robustness(const FormulaNode& body, const Eigen::VectorXd& x);

/// Time-stamped states the monitor runs on. Times must be strictly increasing.
struct SampledSignal {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
};

/// Index of the sample closest in time to t (ties go to the earlier sample).
std::size_t nearest_sample(const std::vector<double>& times, double t);

/// Exact space robustness of `root` at time t0 over the sampled signal.
/// Windows [t+a, t+b] map to the samples nearest their endpoints, both ends
/// included. Throws InsufficientHorizon when the trace ends early.
double exact_robustness(const FormulaNode& root, const SampledSignal& trace, double t0 = 0.0);

/// Robustness signal of `node` at every sample index for which it is defined
/// (the returned vector may be shorter than the trace).
std::vector<double> robustness_signal(const FormulaNode& node, const SampledSignal& trace);

struct OptimumOptions {
  double tol = 1e-8;
  std::size_t max_iter = 10000;
};

/// Gradient ascent with backtracking on the concave smooth robustness. Starts
/// from x_init and, when the body has inf-ball atoms, also from the mean of
/// their centers; the better result wins. Throws InfeasibleFormula when the
/// optimum is not positive.
OptimumEstimate estimate_optimum(const FormulaNode& body, const Eigen::VectorXd& x_init,
                                 const SmoothConfig& cfg, const OptimumOptions& options = {});

/// Same search without the feasibility check.
OptimumEstimate maximize_smooth_robustness(const FormulaNode& body, const Eigen::VectorXd& x_init,
                                           const SmoothConfig& cfg,
                                           const OptimumOptions& options = {});

}  // namespace stlppc
