#include "stlppc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "stlppc/errors.hpp"

namespace stlppc {

SystemModel build_consensus_system(const Eigen::MatrixXd& laplacian, std::size_t dims_per_agent) {
  constexpr double tol = 1e-12;
  const auto agents = laplacian.rows();
  if (agents == 0 || laplacian.cols() != agents)
    throw InvalidLaplacian("matrix must be square and nonempty");
  if (dims_per_agent == 0) throw InvalidLaplacian("dims_per_agent must be positive");
  if (!laplacian.allFinite()) throw InvalidLaplacian("entries must be finite");
  if ((laplacian - laplacian.transpose()).cwiseAbs().maxCoeff() > tol)
    throw InvalidLaplacian("matrix is not symmetric");
  if (laplacian.rowwise().sum().cwiseAbs().maxCoeff() > tol)
    throw InvalidLaplacian("rows do not sum to zero");
  for (Eigen::Index i = 0; i < agents; ++i)
    for (Eigen::Index j = 0; j < agents; ++j)
      if (i != j && laplacian(i, j) > 0.0) throw InvalidLaplacian("off-diagonal entry is positive");

  const auto d = static_cast<Eigen::Index>(dims_per_agent);
  const Eigen::Index n = agents * d;
  Eigen::MatrixXd drift = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < agents; ++i)
    for (Eigen::Index j = 0; j < agents; ++j)
      drift.block(i * d, j * d, d, d) = -laplacian(i, j) * Eigen::MatrixXd::Identity(d, d);

  SystemModel sys;
  sys.n = sys.m = static_cast<std::size_t>(n);
  sys.f = [drift](const Eigen::VectorXd& x) -> Eigen::VectorXd { return drift * x; };
  sys.g = [n](const Eigen::VectorXd&) -> Eigen::MatrixXd { return Eigen::MatrixXd::Identity(n, n); };
  sys.description = "consensus, " + std::to_string(agents) + " agents x " +
                    std::to_string(dims_per_agent) + " dims";
  sys.agents = static_cast<std::size_t>(agents);
  sys.dims_per_agent = dims_per_agent;
  return sys;
}

SystemModel build_single_integrator(std::size_t n) {
  const auto dim = static_cast<Eigen::Index>(n);
  SystemModel sys;
  sys.n = sys.m = n;
  sys.f = [dim](const Eigen::VectorXd&) -> Eigen::VectorXd { return Eigen::VectorXd::Zero(dim); };
  sys.g = [dim](const Eigen::VectorXd&) -> Eigen::MatrixXd {
    return Eigen::MatrixXd::Identity(dim, dim);
  };
  sys.description = "single integrator, " + std::to_string(n) + " states";
  return sys;
}

double min_input_gain(const SystemModel& sys, double box_bound, std::size_t samples,
                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-box_bound, box_bound);
  double worst = kInf;
  Eigen::VectorXd x(static_cast<Eigen::Index>(sys.n));
  for (std::size_t s = 0; s < samples; ++s) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = coord(rng);
    const Eigen::MatrixXd g = sys.g(x);
    const Eigen::MatrixXd ggt = g * g.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ggt, Eigen::EigenvaluesOnly);
    worst = std::min(worst, eig.eigenvalues().minCoeff());
  }
  return worst;
}

Eigen::VectorXd integrate_step(const SystemModel& sys, const Eigen::VectorXd& u,
                               const Eigen::VectorXd& w, const Eigen::VectorXd& x, double h) {
  auto rate = [&](const Eigen::VectorXd& s) -> Eigen::VectorXd {
    return sys.f(s) + sys.g(s) * u + w;
  };
  const Eigen::VectorXd k1 = rate(x);
  const Eigen::VectorXd k2 = rate(x + 0.5 * h * k1);
  const Eigen::VectorXd k3 = rate(x + 0.5 * h * k2);
  const Eigen::VectorXd k4 = rate(x + h * k3);
  Eigen::VectorXd next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) throw NonFiniteState("dynamics", "integration step overflowed");
  return next;
}

DisturbanceSource::DisturbanceSource(const DisturbanceSpec& spec, std::size_t dim)
    : spec_(spec), dim_(dim), rng_(spec.seed) {
  if (spec_.kind == DisturbanceKind::sinusoidal) {
    const auto d = static_cast<Eigen::Index>(dim_);
    omega_.resize(d);
    phase_.resize(d);
    std::uniform_real_distribution<double> freq(0.5, 2.0);
    std::uniform_real_distribution<double> ph(0.0, 2.0 * std::numbers::pi);
    for (Eigen::Index i = 0; i < d; ++i) {
      omega_(i) = freq(rng_);
      phase_(i) = ph(rng_);
    }
  }
}

Eigen::VectorXd DisturbanceSource::sample(double t) {
  const auto d = static_cast<Eigen::Index>(dim_);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  if (spec_.bound == 0.0) return w;
  switch (spec_.kind) {
    case DisturbanceKind::zero:
      break;
    case DisturbanceKind::uniform:
      for (Eigen::Index i = 0; i < d; ++i)
        w(i) = std::clamp(spec_.bound * unit_(rng_), -spec_.bound, spec_.bound);
      break;
    case DisturbanceKind::sinusoidal:
      for (Eigen::Index i = 0; i < d; ++i) w(i) = spec_.bound * std::sin(omega_(i) * t + phase_(i));
      break;
  }
  return w;
}

Eigen::VectorXd sample_disturbance(DisturbanceSource& src, double t) { return src.sample(t); }

const char* to_string(DisturbanceKind kind) {
  switch (kind) {
    case DisturbanceKind::zero: return "zero";
    case DisturbanceKind::uniform: return "uniform";
    case DisturbanceKind::sinusoidal: return "sinusoidal";
  }
  return "?";
}

SampledSignal Trajectory::signal() const {
  SampledSignal s;
  s.times.reserve(samples.size());
  s.states.reserve(samples.size());
  for (const auto& smp : samples) {
    s.times.push_back(smp.time);
    s.states.push_back(smp.x);
  }
  return s;
}

}  // namespace stlppc
