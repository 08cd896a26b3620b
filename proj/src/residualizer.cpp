#include "mtaf/residualizer.hpp"

#include "mtaf/error.hpp"

namespace mtaf {

CovariateProjection::CovariateProjection(const CovariateMatrix& covariates) {
  const Eigen::MatrixXd x = covariates.design();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  basis_ = qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), x.cols());
}

Eigen::VectorXd CovariateProjection::residualize(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  if (intercept_only()) return v.array() - v.mean();
  Eigen::VectorXd out = v - basis_ * (basis_.transpose() * v);
  // A second sweep removes the rounding left by the first (re-orthogonalization).
  out -= basis_ * (basis_.transpose() * out);
  return out;
}

Eigen::MatrixXd CovariateProjection::residualize_columns(const Eigen::Ref<const Eigen::MatrixXd>& m) const {
  if (intercept_only()) return m.rowwise() - m.colwise().mean();
  Eigen::MatrixXd out = m - basis_ * (basis_.transpose() * m);
  out -= basis_ * (basis_.transpose() * out);
  return out;
}

ResidualVector genotype_residuals(const GenotypeVector& g, const CovariateProjection& proj) {
  if (static_cast<Index>(g.values.size()) != proj.n())
    throw Error(ErrorCode::DimensionMismatch, "genotype length differs from covariates");
  ResidualVector out{proj.residualize(g.as_vector()), g.snp_id};
  const double n = static_cast<double>(out.values.size());
  const double variance = out.values.squaredNorm() / n;
  if (variance <= 1e-12)
    throw Error(ErrorCode::DegenerateGenotype,
                "SNP '" + g.snp_id + "' lies in the covariate span");
  return out;
}

ResidualVector genotype_residuals(const GenotypeVector& g, const CovariateMatrix& covariates) {
  return genotype_residuals(g, CovariateProjection(covariates));
}

Eigen::MatrixXd trait_residuals(const Eigen::Ref<const Eigen::MatrixXd>& continuous_traits,
                                const CovariateProjection& proj) {
  if (continuous_traits.cols() == 0)
    throw Error(ErrorCode::InvalidArgument, "trait_residuals needs at least one continuous trait");
  if (continuous_traits.rows() != proj.n())
    throw Error(ErrorCode::DimensionMismatch, "trait rows differ from covariates");
  return proj.residualize_columns(continuous_traits);
}

Eigen::MatrixXd trait_residuals(const Eigen::Ref<const Eigen::MatrixXd>& continuous_traits,
                                const CovariateMatrix& covariates) {
  return trait_residuals(continuous_traits, CovariateProjection(covariates));
}

}  // namespace mtaf
