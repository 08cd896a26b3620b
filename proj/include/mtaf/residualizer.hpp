#pragma once

#include <string>

#include <Eigen/Dense>

#include "mtaf/data_model.hpp"

namespace mtaf {

struct ResidualVector {
  Eigen::VectorXd values;
  std::string source_id;
};

// Orthonormal basis of span([1 | Z]) computed once per dataset by Householder
// QR and shared read-only by every residualization.
class CovariateProjection {
 public:
  explicit CovariateProjection(const CovariateMatrix& covariates);

  Index n() const { return basis_.rows(); }
  Index rank() const { return basis_.cols(); }
  const Eigen::MatrixXd& basis() const { return basis_; }
  bool intercept_only() const { return basis_.cols() == 1; }

  /// v - P v where P projects onto span([1 | Z]).
  Eigen::VectorXd residualize(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  Eigen::MatrixXd residualize_columns(const Eigen::Ref<const Eigen::MatrixXd>& m) const;

 private:
  Eigen::MatrixXd basis_;
};

/// OLS residual of the genotype on [1 | Z]; throws DegenerateGenotype when
/// the residual variance is <= 1e-12.
ResidualVector genotype_residuals(const GenotypeVector& g, const CovariateProjection& proj);
ResidualVector genotype_residuals(const GenotypeVector& g, const CovariateMatrix& covariates);

/// Column k is the OLS residual of continuous trait k on [1 | Z].
Eigen::MatrixXd trait_residuals(const Eigen::Ref<const Eigen::MatrixXd>& continuous_traits,
                                const CovariateProjection& proj);
Eigen::MatrixXd trait_residuals(const Eigen::Ref<const Eigen::MatrixXd>& continuous_traits,
                                const CovariateMatrix& covariates);

}  // namespace mtaf
