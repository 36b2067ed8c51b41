#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "spinbench/errors.hpp"

namespace spinbench {

/// Parameter estimate with 1σ uncertainty.
struct Estimate {
  double value = 0.0;
  double sigma = 0.0;
};

/// Outcome of a least-squares fit.
struct FitResult {
  std::map<std::string, Estimate> parameters;
  double residual_norm = 0.0;  // sqrt(sum of squared residuals)
  int iterations = 0;
  bool converged = false;
  std::string model_id;
  std::vector<std::string> warnings;

  // Raw solver state, in parameter_names order (covariance row-major).
  std::vector<std::string> parameter_names;
  Eigen::VectorXd raw_parameters;
  Eigen::MatrixXd covariance;

  const Estimate& at(const std::string& name) const {
    const auto it = parameters.find(name);
    if (it == parameters.end()) throw Error("no fitted parameter '" + name + "'");
    return it->second;
  }

  bool has_warning(const std::string& tag) const {
    return std::find(warnings.begin(), warnings.end(), tag) != warnings.end();
  }
};

/// Thrown when the iteration cap is reached; carries the best result so far.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, FitResult best)
      : Error(what), best_(std::move(best)) {}
  const FitResult& best() const { return best_; }

 private:
  FitResult best_;
};

/// Residual/Jacobian problem for the damped least-squares engine. The
/// residual convention is r(p) = model(p) − data, so the Jacobian equals
/// the model Jacobian.
struct LeastSquaresProblem {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residuals;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
  std::vector<std::string> parameter_names;
};

struct FitOptions {
  int max_iterations = 500;
  double step_tolerance = 1e-10;      // relative step
  double gradient_tolerance = 1e-12;  // inf-norm of Jᵀr
  double initial_lambda_scale = 1e-8; // times max diag(JᵀJ)
  Eigen::VectorXd lower_bounds;       // empty = unbounded
  Eigen::VectorXd upper_bounds;
  std::string model_id = "custom";
};

namespace detail {

inline Eigen::VectorXd clamp_to_bounds(Eigen::VectorXd p, const FitOptions& opt) {
  if (opt.lower_bounds.size())
    p = p.cwiseMax(opt.lower_bounds);
  if (opt.upper_bounds.size())
    p = p.cwiseMin(opt.upper_bounds);
  return p;
}

inline void check_initial_point(const Eigen::VectorXd& p, const FitOptions& opt) {
  if (opt.lower_bounds.size() && (p.array() < opt.lower_bounds.array()).any())
    throw DomainError("least_squares: initial guess below lower bound");
  if (opt.upper_bounds.size() && (p.array() > opt.upper_bounds.array()).any())
    throw DomainError("least_squares: initial guess above upper bound");
}

} // namespace detail

/// Damped (Levenberg-Marquardt) least squares with box clamping.
/// Converged when the relative step drops below step_tolerance or the
/// gradient inf-norm below gradient_tolerance; the covariance is
/// RSS/(m−n) · (JᵀJ)⁻¹ evaluated at the solution.
inline FitResult least_squares(const LeastSquaresProblem& problem,
                               const Eigen::VectorXd& initial,
                               const FitOptions& options = {}) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;

  const int n = static_cast<int>(initial.size());
  if (n == 0) throw DomainError("least_squares: no parameters");
  if (static_cast<int>(problem.parameter_names.size()) != n)
    throw DomainError("least_squares: parameter name count mismatch");
  detail::check_initial_point(initial, options);

  VectorXd p = initial;
  VectorXd r = problem.residuals(p);
  const int m = static_cast<int>(r.size());
  if (m < n)
    throw DataError("least_squares: " + std::to_string(m) +
                    " residuals cannot determine " + std::to_string(n) +
                    " parameters");

  MatrixXd jac = problem.jacobian(p);
  if (jac.rows() != m || jac.cols() != n)
    throw DomainError("least_squares: Jacobian shape mismatch");

  // A parameter whose column vanishes identically cannot move the model.
  for (int j = 0; j < n; ++j) {
    if (jac.col(j).norm() == 0.0)
      throw RankDeficiencyError(
          "least_squares: Jacobian column for parameter '" +
              problem.parameter_names[j] + "' is identically zero",
          problem.parameter_names[j]);
  }

  double cost = 0.5 * r.squaredNorm();
  MatrixXd jtj = jac.transpose() * jac;
  VectorXd gradient = jac.transpose() * r;
  double lambda = options.initial_lambda_scale *
                  std::max(jtj.diagonal().maxCoeff(),
                           std::numeric_limits<double>::min());

  FitResult result;
  result.parameter_names = problem.parameter_names;
  result.model_id = options.model_id;

  int iter = 0;
  bool converged = gradient.lpNorm<Eigen::Infinity>() < options.gradient_tolerance;
  std::vector<double> cost_trace{cost};

  while (!converged && iter < options.max_iterations) {
    ++iter;
    // Marquardt scaling plus a tiny absolute floor so dead directions stay put.
    VectorXd damp = jtj.diagonal();
    const double floor = 1e-14 * std::max(damp.maxCoeff(), 1.0);
    damp = damp.cwiseMax(floor);

    MatrixXd a = jtj;
    a.diagonal() += lambda * damp;
    VectorXd step = a.ldlt().solve(-gradient);
    if (!step.allFinite()) {
      lambda *= 10.0;
      continue;
    }

    VectorXd p_trial = detail::clamp_to_bounds(p + step, options);
    VectorXd r_trial = problem.residuals(p_trial);
    const double cost_trial = 0.5 * r_trial.squaredNorm();

    if (cost_trial <= cost) {
      const double step_norm = (p_trial - p).norm();
      const double rel_step = step_norm / std::max(p.norm(), 1e-30);
      p = p_trial;
      r = r_trial;
      cost = cost_trial;
      jac = problem.jacobian(p);
      jtj = jac.transpose() * jac;
      gradient = jac.transpose() * r;
      lambda = std::max(lambda / 3.0, 1e-18);
      cost_trace.push_back(cost);
      if (rel_step < options.step_tolerance ||
          gradient.lpNorm<Eigen::Infinity>() < options.gradient_tolerance)
        converged = true;
    } else {
      lambda *= 5.0;
      if (lambda > 1e30) {
        // Cannot descend further in any direction; treat as converged.
        converged = true;
      }
    }
  }

  result.iterations = iter;
  result.converged = converged;
  result.residual_norm = std::sqrt(2.0 * cost);
  result.raw_parameters = p;

  // Covariance from the Jacobian at the solution. Directions with
  // (near-)zero curvature are unidentifiable; the parameters they touch get
  // an infinite uncertainty instead of a meaningless small one.
  MatrixXd jtj_final = jac.transpose() * jac;
  const double dof = std::max(m - n, 1);
  const double variance = 2.0 * cost / dof;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eigens(jtj_final);
  const VectorXd& evals = eigens.eigenvalues();
  const MatrixXd& evecs = eigens.eigenvectors();
  const double emax = std::max(evals(n - 1), std::numeric_limits<double>::min());

  result.covariance = MatrixXd::Zero(n, n);
  std::vector<bool> unidentifiable(static_cast<std::size_t>(n), false);
  bool deficient = false;
  for (int i = 0; i < n; ++i) {
    if (evals(i) <= 1e-12 * emax) {
      deficient = true;
      for (int j = 0; j < n; ++j)
        if (std::abs(evecs(j, i)) > 1e-6) unidentifiable[static_cast<std::size_t>(j)] = true;
    } else {
      result.covariance +=
          (variance / evals(i)) * evecs.col(i) * evecs.col(i).transpose();
    }
  }
  if (deficient) result.warnings.push_back("singular_covariance");

  for (int j = 0; j < n; ++j) {
    Estimate e;
    e.value = p[j];
    if (unidentifiable[static_cast<std::size_t>(j)]) {
      e.sigma = std::numeric_limits<double>::infinity();
    } else {
      const double var = result.covariance(j, j);
      e.sigma = std::isfinite(var) && var > 0.0 ? std::sqrt(var) : 0.0;
    }
    result.parameters[problem.parameter_names[j]] = e;
  }

  if (!converged) {
    std::ostringstream msg;
    msg << "least_squares: no convergence after " << iter << " iterations (cost ";
    const std::size_t k = cost_trace.size();
    for (std::size_t i = k > 4 ? k - 4 : 0; i < k; ++i) msg << cost_trace[i] << " ";
    msg << ")";
    throw ConvergenceError(msg.str(), result);
  }
  return result;
}

} // namespace spinbench
