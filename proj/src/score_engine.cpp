#include "mtaf/score_engine.hpp"

#include <algorithm>
#include <cmath>

#include "mtaf/error.hpp"

namespace mtaf {

namespace {

constexpr int kMaxIrlsIterations = 25;
constexpr double kIrlsTolerance = 1e-8;
constexpr double kSeparationEps = 1e-10;
constexpr double kDegenerateVariance = 1e-12;

Eigen::MatrixXd thin_q(const Eigen::MatrixXd& x) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  return qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), x.cols());
}

Eigen::VectorXd expit(const Eigen::VectorXd& eta) {
  return (1.0 / (1.0 + (-eta.array()).exp())).matrix();
}

void check_separation(const Eigen::VectorXd& mu) {
  for (Index i = 0; i < mu.size(); ++i) {
    if (mu[i] < kSeparationEps || mu[i] > 1.0 - kSeparationEps)
      throw Error(ErrorCode::SeparationDetected,
                  "fitted probability " + std::to_string(mu[i]) + " at subject " +
                      std::to_string(i + 1));
  }
}

void finish_weighted(NullFit& fit, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::VectorXd sqrt_w = fit.weights.cwiseSqrt();
  fit.weighted_basis = thin_q(sqrt_w.asDiagonal() * x);
  // Remove W X (X'WX)^{-1} X' r so that u does not depend on how close the
  // IRLS solution is to the exact score equations.
  const Eigen::VectorXd r = y - fit.fitted;
  const Eigen::MatrixXd xtwx = x.transpose() * fit.weights.asDiagonal() * x;
  const Eigen::VectorXd c = xtwx.ldlt().solve(x.transpose() * r);
  fit.score_weights = r - fit.weights.asDiagonal() * (x * c);
}

}  // namespace

NullFit fit_null(const Eigen::Ref<const Eigen::VectorXd>& y, TraitKind kind,
                 const CovariateMatrix& covariates) {
  if (y.size() != covariates.n())
    throw Error(ErrorCode::DimensionMismatch, "trait length differs from covariates");
  const Eigen::MatrixXd x = covariates.design();
  const Index n = x.rows();
  const Index p = x.cols();
  if (n <= p) throw Error(ErrorCode::InsufficientSamples, "n must exceed M + 1");

  NullFit fit;
  fit.kind = kind;

  if (kind == TraitKind::Continuous) {
    const Eigen::MatrixXd q = thin_q(x);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
    fit.coefficients = qr.solve(y);
    fit.fitted = x * fit.coefficients;
    Eigen::VectorXd r = y - fit.fitted;
    r -= q * (q.transpose() * r);
    fit.weights = Eigen::VectorXd::Ones(n);
    fit.dispersion = r.squaredNorm() / static_cast<double>(n - p);
    if (!(fit.dispersion > 0.0))
      throw Error(ErrorCode::ConstantTrait, "trait is fitted exactly by the covariates");
    fit.weighted_basis = q;
    fit.score_weights = r;
    return fit;
  }

  for (Index i = 0; i < n; ++i)
    if (y[i] != 0.0 && y[i] != 1.0)
      throw Error(ErrorCode::NonBinaryCoding, "binary trait value " + std::to_string(y[i]));

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  bool converged = false;
  for (int it = 1; it <= kMaxIrlsIterations; ++it) {
    const Eigen::VectorXd eta = x * beta;
    const Eigen::VectorXd mu = expit(eta);
    check_separation(mu);
    const Eigen::VectorXd w = mu.array() * (1.0 - mu.array());
    const Eigen::VectorXd working = eta.array() + (y - mu).array() / w.array();
    const Eigen::VectorXd sqrt_w = w.cwiseSqrt();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(sqrt_w.asDiagonal() * x);
    const Eigen::VectorXd next = qr.solve((sqrt_w.array() * working.array()).matrix());
    const double change = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    fit.iterations = it;
    if (change < kIrlsTolerance) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw Error(ErrorCode::IrlsNonConvergence,
                "logistic fit did not converge in " + std::to_string(kMaxIrlsIterations) +
                    " iterations");

  fit.coefficients = beta;
  fit.fitted = expit(x * beta);
  check_separation(fit.fitted);
  fit.weights = fit.fitted.array() * (1.0 - fit.fitted.array());
  fit.dispersion = 1.0;
  finish_weighted(fit, x, y);
  return fit;
}

ScoreTestResult pvalues_from_z(double z) {
  ScoreTestResult r;
  r.z = z;
  // Evaluate the smaller tail directly and take the other as its complement.
  const double small = std::clamp(0.5 * std::erfc(std::abs(z) / std::sqrt(2.0)),
                                  kPValueFloor, 0.5);
  const double large = std::min(1.0 - small, kPValueCeiling);
  if (z >= 0.0) {
    r.p_upper = small;
    r.p_lower = large;
  } else {
    r.p_lower = small;
    r.p_upper = large;
  }
  r.p_two = std::clamp(2.0 * small, kPValueFloor, 1.0);
  return r;
}

ScoreTestResult score_test(const NullFit& fit, const Eigen::Ref<const Eigen::VectorXd>& g) {
  if (g.size() != fit.score_weights.size())
    throw Error(ErrorCode::DimensionMismatch, "genotype length differs from null fit");
  const double u = fit.score_weights.dot(g);
  // Residual form of g'Wg - g'WZ(Z'WZ)^{-1}Z'Wg; stays >= 0 for g in the span.
  const Eigen::VectorXd wg = fit.weights.cwiseSqrt().cwiseProduct(g);
  const Eigen::MatrixXd& q = fit.weighted_basis;
  const Eigen::VectorXd resid = wg - q * (q.transpose() * wg);
  const double v = resid.squaredNorm() * fit.dispersion;
  if (!(v > kDegenerateVariance))
    throw Error(ErrorCode::DegenerateGenotype, "genotype lies in the covariate span");
  ScoreTestResult r = pvalues_from_z(u / std::sqrt(v));
  r.u = u;
  r.v = v;
  return r;
}

ScoreBattery::ScoreBattery(std::vector<NullFit> fits) : fits_(std::move(fits)) {
  if (fits_.empty()) return;
  const Index n = fits_.front().score_weights.size();
  scores_.resize(n, static_cast<Index>(fits_.size()));
  for (std::size_t j = 0; j < fits_.size(); ++j) {
    const auto& f = fits_[j];
    if (f.score_weights.size() != n)
      throw Error(ErrorCode::DimensionMismatch, "null fits disagree on n");
    scores_.col(static_cast<Index>(j)) = f.score_weights;

    auto same = [&](const Group& g) {
      return g.basis.cols() == f.weighted_basis.cols() && g.weights == f.weights &&
             g.basis == f.weighted_basis;
    };
    auto it = std::find_if(groups_.begin(), groups_.end(), same);
    if (it == groups_.end()) {
      Group g;
      g.weights = f.weights;
      g.unit_weights = (f.weights.array() == 1.0).all();
      g.basis = f.weighted_basis;
      g.projector = f.weighted_basis.transpose() * f.weights.cwiseSqrt().asDiagonal();
      groups_.push_back(std::move(g));
      it = std::prev(groups_.end());
    }
    it->members.push_back(static_cast<Index>(j));
  }
}

Eigen::MatrixXd ScoreBattery::z_scores(const Eigen::Ref<const Eigen::MatrixXd>& genotypes) const {
  if (genotypes.rows() != n())
    throw Error(ErrorCode::DimensionMismatch, "genotype rows differ from null fits");
  const Index c = genotypes.cols();
  Eigen::MatrixXd z = genotypes.transpose() * scores_;

  const bool any_weighted =
      std::any_of(groups_.begin(), groups_.end(), [](const Group& g) { return !g.unit_weights; });
  Eigen::MatrixXd squared;
  if (any_weighted) squared = genotypes.array().square();
  const Eigen::RowVectorXd sum_sq = genotypes.colwise().squaredNorm();

  for (const auto& group : groups_) {
    const Eigen::RowVectorXd explained = (group.projector * genotypes).colwise().squaredNorm();
    Eigen::RowVectorXd base =
        group.unit_weights ? sum_sq : Eigen::RowVectorXd(group.weights.transpose() * squared);
    base -= explained;
    for (Index j : group.members) {
      const double phi = fits_[static_cast<std::size_t>(j)].dispersion;
      for (Index b = 0; b < c; ++b) {
        const double v = base[b] * phi;
        z(b, j) = v > kDegenerateVariance ? z(b, j) / std::sqrt(v) : 0.0;
      }
    }
  }
  return z;
}

}  // namespace mtaf
