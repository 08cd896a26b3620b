#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mtaf {

struct PCScores {
  Eigen::MatrixXd scores;              // n x K_c
  Eigen::VectorXd explained_variance;  // descending, denominator n - 1
  Eigen::MatrixXd loadings;            // K_c x K_c, column j gives component j
  Eigen::Index rank = 0;
  std::vector<std::string> warnings;
};

/// All principal components of a column-centered residual matrix, via SVD.
/// Each loading vector is signed so its largest-magnitude entry is positive.
/// Components with singular value <= 1e-10 * largest are returned as exact
/// zero columns with a warning. With `scale`, columns are standardized to unit
/// variance first (correlation PCA).
PCScores principal_components(const Eigen::Ref<const Eigen::MatrixXd>& residuals,
                              bool scale = false);

}  // namespace mtaf
