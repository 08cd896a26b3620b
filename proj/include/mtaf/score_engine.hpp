#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mtaf/data_model.hpp"

namespace mtaf {

inline constexpr double kPValueFloor = 1e-300;
inline constexpr double kPValueCeiling = 1.0 - 1e-16;

// Null GLM (covariates only) for one trait. Everything the score test needs is
// precomputed here so that testing a genotype is two dot products and a small
// projection.
struct NullFit {
  TraitKind kind = TraitKind::Continuous;
  Eigen::VectorXd fitted;
  Eigen::VectorXd weights;
  double dispersion = 1.0;
  Eigen::VectorXd coefficients;
  int iterations = 0;

  // u = score_weights' g equals sum_i (g_i - ghat_i)(y_i - yhat_i) with ghat
  // the working-weight projection of g onto [1 | Z].
  Eigen::VectorXd score_weights;
  // Orthonormal basis Q_w of W^{1/2}[1 | Z]; g'WZ(Z'WZ)^{-1}Z'Wg equals
  // |Q_w' W^{1/2} g|^2.
  Eigen::MatrixXd weighted_basis;
};

struct ScoreTestResult {
  double u = 0.0;
  double v = 0.0;
  double z = 0.0;
  double p_lower = 0.5;
  double p_upper = 0.5;
  double p_two = 1.0;
};

/// Continuous: OLS on [1 | Z], dispersion RSS/(n - M - 1).
/// Binary: logistic IRLS from a zero start; converged when the largest
/// coefficient change is below 1e-8, at most 25 iterations.
NullFit fit_null(const Eigen::Ref<const Eigen::VectorXd>& y, TraitKind kind,
                 const CovariateMatrix& covariates);

ScoreTestResult score_test(const NullFit& fit, const Eigen::Ref<const Eigen::VectorXd>& g);

/// Normal tail probabilities for z; p_lower + p_upper == 1 up to the clamp.
ScoreTestResult pvalues_from_z(double z);

/// Same numbers as score_test, for many genotype columns and many fits at once.
/// Fits that share working weights and projector are grouped so the covariate
/// projection is computed once per group.
class ScoreBattery {
 public:
  explicit ScoreBattery(std::vector<NullFit> fits);

  Index size() const { return static_cast<Index>(fits_.size()); }
  Index n() const { return scores_.rows(); }
  const std::vector<NullFit>& fits() const { return fits_; }

  /// z statistics, genotypes.cols() x size(). Columns of `genotypes` whose
  /// variance against some fit is <= 1e-12 get z = 0 for that fit.
  Eigen::MatrixXd z_scores(const Eigen::Ref<const Eigen::MatrixXd>& genotypes) const;

 private:
  struct Group {
    bool unit_weights = true;
    Eigen::VectorXd weights;
    Eigen::MatrixXd basis;
    Eigen::MatrixXd projector;  // basis' W^{1/2}
    std::vector<Index> members;
  };

  std::vector<NullFit> fits_;
  Eigen::MatrixXd scores_;  // n x size(), column j = fits_[j].score_weights
  std::vector<Group> groups_;
};

}  // namespace mtaf
