#include "spiro/logistic.h"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "spiro/stats.h"

namespace spiro {

LogisticFit FitLogistic(std::span<const double> design, std::size_t columns,
                        std::span<const double> outcome,
                        const LogisticOptions& options) {
  if (columns == 0 || design.size() != outcome.size() * columns) {
    throw std::invalid_argument("FitLogistic: design/outcome size mismatch");
  }
  const auto n = static_cast<Eigen::Index>(outcome.size());
  const auto p = static_cast<Eigen::Index>(columns);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>
      x(design.data(), n, p);
  Eigen::Map<const Eigen::VectorXd> y(outcome.data(), n);

  LogisticFit fit;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd information(p, p);
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    fit.iterations = iter;
    const Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd w(n);
    Eigen::VectorXd residual(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = Logistic(eta[i]);
      w[i] = std::max(mu * (1.0 - mu), 1e-12);
      residual[i] = y[i] - mu;
    }
    information.noalias() = x.transpose() * w.asDiagonal() * x;
    const Eigen::VectorXd score = x.transpose() * residual;
    const Eigen::LDLT<Eigen::MatrixXd> solver(information);
    if (solver.info() != Eigen::Success || !solver.isPositive()) {
      fit.separated = true;
      break;
    }
    const Eigen::VectorXd step = solver.solve(score);
    if (!step.allFinite()) {
      fit.separated = true;
      break;
    }
    beta += step;
    if (beta.cwiseAbs().maxCoeff() > options.divergence_bound) {
      fit.separated = true;
      break;
    }
    if (step.cwiseAbs().maxCoeff() < options.tolerance) {
      fit.converged = true;
      break;
    }
  }

  fit.coefficients.assign(beta.data(), beta.data() + p);
  fit.standard_errors.assign(static_cast<std::size_t>(p),
                             std::numeric_limits<double>::quiet_NaN());
  if (fit.converged) {
    Eigen::VectorXd w(n);
    const Eigen::VectorXd eta = x * beta;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = Logistic(eta[i]);
      w[i] = mu * (1.0 - mu);
    }
    information.noalias() = x.transpose() * w.asDiagonal() * x;
    const Eigen::MatrixXd covariance =
        information.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    for (Eigen::Index j = 0; j < p; ++j) {
      fit.standard_errors[static_cast<std::size_t>(j)] =
          std::sqrt(covariance(j, j));
    }
  }
  return fit;
}

}  // namespace spiro
