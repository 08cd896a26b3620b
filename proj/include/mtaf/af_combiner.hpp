#pragma once

#include <vector>

#include <Eigen/Dense>

namespace mtaf {

enum class Tail { Lower, Upper, TwoSided, Combined };

// (B+1) x K p-values; row 0 is the observed data, rows 1..B permutations.
struct PValueMatrix {
  Eigen::MatrixXd values;
  Tail tail = Tail::TwoSided;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

// Empirical p-values, one per row of the input; element 0 is the test result.
struct AFResult {
  Eigen::VectorXd pvalues;

  double reported() const { return pvalues[0]; }
  Eigen::Index size() const { return pvalues.size(); }
};

// Intermediate quantities of the AF operator, exposed for inspection.
struct AFTrace {
  Eigen::MatrixXd partial_sums;  // s_k per row, (B+1) x K
  // #{j : s_k^(j) >= s_k^(b)}; p_{s_k}^(b) is this divided by B+1.
  Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> sum_counts;
  std::vector<long> statistic;  // t^(b) * (B+1)
  AFResult result;
};

/// For each row: sort, partial sums of -log p, empirical p-value of each
/// partial sum across rows, minimum over k, then the empirical p-value of that
/// minimum. Ties count inclusively.
AFResult af_operator(const PValueMatrix& p);
AFTrace af_trace(const PValueMatrix& p);

/// Empirical p-value of the row minimum.
AFResult minp_operator(const PValueMatrix& p);

/// AF over [AF(lower) AF(upper)].
AFResult combine_one_sided(const PValueMatrix& lower, const PValueMatrix& upper);

/// AF over [AF(original) AF(pca)].
AFResult combine_continuous(const PValueMatrix& original, const PValueMatrix& pca);

/// AF over two aligned branch results.
AFResult combine_results(const AFResult& a, const AFResult& b);
AFResult combine_mixed(const AFResult& binary, const AFResult& continuous);

/// Stack branch results as columns of a combined p-value matrix.
PValueMatrix stack_results(const std::vector<const AFResult*>& results);

}  // namespace mtaf
