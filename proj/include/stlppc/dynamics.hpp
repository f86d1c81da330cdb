#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stlppc/robustness.hpp"

namespace stlppc {

/// Control-affine model x' = f(x) + g(x) u + w.
struct SystemModel {
  std::size_t n = 0;
  std::size_t m = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> f;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> g;
  std::string description;
  /// Agents and coordinates per agent, for plot output. Zero when not a
  /// multi-agent model.
  std::size_t agents = 0;
  std::size_t dims_per_agent = 0;
};

/// f(x) = -(L kron I_d) x, g(x) = I.
SystemModel build_consensus_system(const Eigen::MatrixXd& laplacian, std::size_t dims_per_agent);

/// f = 0, g = I of size n.
SystemModel build_single_integrator(std::size_t n);

/// Smallest eigenvalue of g(x) g(x)^T over `samples` uniform points of the
/// box ||x||_inf <= box_bound. Positive means the input map has full row rank
/// everywhere sampled.
double min_input_gain(const SystemModel& sys, double box_bound, std::size_t samples,
                      std::uint64_t seed);

/// One classical Runge-Kutta step with u and w held constant.
Eigen::VectorXd integrate_step(const SystemModel& sys, const Eigen::VectorXd& u,
                               const Eigen::VectorXd& w, const Eigen::VectorXd& x, double h);

enum class DisturbanceKind { zero, uniform, sinusoidal };

struct DisturbanceSpec {
  DisturbanceKind kind = DisturbanceKind::zero;
  double bound = 0.0;
  std::uint64_t seed = 0;
};

/// Bounded additive disturbance with ||w||_inf <= bound. Owns its generator.
class DisturbanceSource {
public:
  DisturbanceSource(const DisturbanceSpec& spec, std::size_t dim);

  Eigen::VectorXd sample(double t);

  const DisturbanceSpec& spec() const { return spec_; }
  static constexpr const char* generator_name() { return "std::mt19937_64"; }

private:
  DisturbanceSpec spec_;
  std::size_t dim_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unit_{-1.0, 1.0};
  Eigen::VectorXd omega_;
  Eigen::VectorXd phase_;
};

Eigen::VectorXd sample_disturbance(DisturbanceSource& src, double t);

const char* to_string(DisturbanceKind kind);

struct TrajectorySample {
  double time = 0.0;
  std::size_t mode = 1;
  Eigen::VectorXd x;
  double rho = 0.0;
  double funnel_lo = 0.0;
  double funnel_hi = 0.0;
  Eigen::VectorXd u;
  Eigen::VectorXd w;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;

  SampledSignal signal() const;
};

}  // namespace stlppc
