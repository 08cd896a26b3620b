#include "mtaf/pca_transform.hpp"

#include <cmath>

#include "mtaf/error.hpp"

namespace mtaf {

PCScores principal_components(const Eigen::Ref<const Eigen::MatrixXd>& residuals, bool scale) {
  const Eigen::Index n = residuals.rows();
  const Eigen::Index k = residuals.cols();
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "PCA needs at least one column");
  if (n <= k)
    throw Error(ErrorCode::InsufficientSamples,
                "PCA needs more subjects than traits (" + std::to_string(n) + " <= " +
                    std::to_string(k) + ")");

  Eigen::MatrixXd x = residuals;
  if (scale) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double sd = std::sqrt(x.col(j).squaredNorm() / static_cast<double>(n - 1));
      if (sd > 0.0) x.col(j) /= sd;
    }
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();

  PCScores out;
  out.loadings = svd.matrixV();
  out.scores = svd.matrixU() * sigma.asDiagonal();
  out.explained_variance = sigma.array().square() / static_cast<double>(n - 1);

  const double cutoff = 1e-10 * (sigma.size() > 0 ? sigma[0] : 0.0);
  out.rank = 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (sigma[j] <= cutoff) {
      out.scores.col(j).setZero();
      out.explained_variance[j] = 0.0;
      out.warnings.push_back("RankDeficientTraits: component " + std::to_string(j + 1) +
                             " has zero variance");
      continue;
    }
    ++out.rank;
    Eigen::Index arg = 0;
    out.loadings.col(j).cwiseAbs().maxCoeff(&arg);
    if (out.loadings(arg, j) < 0.0) {
      out.loadings.col(j) *= -1.0;
      out.scores.col(j) *= -1.0;
    }
  }
  return out;
}

}  // namespace mtaf
