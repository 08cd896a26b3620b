#include "mtaf/af_combiner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mtaf/error.hpp"
#include "mtaf/score_engine.hpp"

namespace mtaf {

namespace {

using Index = Eigen::Index;

void check_matrix(const PValueMatrix& p) {
  if (p.rows() < 2 || p.cols() < 1)
    throw Error(ErrorCode::EmptyMatrix,
                "p-value matrix is " + std::to_string(p.rows()) + " x " +
                    std::to_string(p.cols()) + "; need B >= 1 and K >= 1");
  const double* data = p.values.data();
  for (Index i = 0; i < p.values.size(); ++i) {
    const double v = data[i];
    if (!(v > 0.0))
      throw Error(ErrorCode::NonPositiveEntry,
                  "p-value " + std::to_string(v) + " reached the AF operator");
    if (v > 1.0)
      throw Error(ErrorCode::InvalidArgument, "p-value " + std::to_string(v) + " exceeds 1");
  }
}

// counts[b] = #{j : values[j] >= values[b]}, ties inclusive.
void count_at_least(const double* values, Index n, std::vector<Index>& order,
                    std::vector<long>& counts) {
  order.resize(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(),
            [values](Index a, Index b) { return values[a] > values[b]; });
  counts.resize(static_cast<std::size_t>(n));
  Index i = 0;
  while (i < n) {
    Index j = i;
    while (j + 1 < n && values[order[static_cast<std::size_t>(j + 1)]] ==
                            values[order[static_cast<std::size_t>(i)]])
      ++j;
    for (Index t = i; t <= j; ++t) counts[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])] = static_cast<long>(j + 1);
    i = j + 1;
  }
}

// p[b] = #{j : stat[j] <= stat[b]} / R for integer statistics in [1, R].
AFResult rank_integer_statistic(const std::vector<long>& stat) {
  const auto rows = static_cast<long>(stat.size());
  std::vector<long> cumulative(static_cast<std::size_t>(rows) + 2, 0);
  for (long t : stat) ++cumulative[static_cast<std::size_t>(t)];
  for (std::size_t t = 1; t < cumulative.size(); ++t) cumulative[t] += cumulative[t - 1];
  AFResult out;
  out.pvalues.resize(rows);
  const double denom = static_cast<double>(rows);
  for (long b = 0; b < rows; ++b)
    out.pvalues[b] = static_cast<double>(cumulative[static_cast<std::size_t>(stat[static_cast<std::size_t>(b)])]) / denom;
  return out;
}

AFTrace run_af(const PValueMatrix& p, bool keep_trace) {
  check_matrix(p);
  const Index rows = p.rows();
  const Index k = p.cols();

  // s_k for every row; column-major so each column is contiguous for ranking.
  Eigen::MatrixXd sums(rows, k);
  std::vector<double> row(static_cast<std::size_t>(k));
  for (Index b = 0; b < rows; ++b) {
    for (Index j = 0; j < k; ++j) row[static_cast<std::size_t>(j)] = std::max(p.values(b, j), kPValueFloor);
    std::sort(row.begin(), row.end());
    double acc = 0.0;
    for (Index j = 0; j < k; ++j) {
      acc += -std::log(row[static_cast<std::size_t>(j)]);
      sums(b, j) = acc;
    }
  }

  AFTrace trace;
  if (keep_trace) trace.sum_counts.resize(rows, k);
  std::vector<long> statistic(static_cast<std::size_t>(rows), static_cast<long>(rows));
  std::vector<Index> order;
  std::vector<long> counts;
  for (Index j = 0; j < k; ++j) {
    count_at_least(sums.col(j).data(), rows, order, counts);
    for (Index b = 0; b < rows; ++b) {
      const long c = counts[static_cast<std::size_t>(b)];
      auto& t = statistic[static_cast<std::size_t>(b)];
      t = std::min(t, c);
      if (keep_trace) trace.sum_counts(b, j) = c;
    }
  }

  trace.result = rank_integer_statistic(statistic);
  if (keep_trace) {
    trace.partial_sums = std::move(sums);
    trace.statistic = std::move(statistic);
  }
  return trace;
}

}  // namespace

AFResult af_operator(const PValueMatrix& p) { return run_af(p, false).result; }

AFTrace af_trace(const PValueMatrix& p) { return run_af(p, true); }

AFResult minp_operator(const PValueMatrix& p) {
  check_matrix(p);
  const Index rows = p.rows();
  Eigen::VectorXd minima(rows);
  for (Index b = 0; b < rows; ++b) minima[b] = std::max(p.values.row(b).minCoeff(), kPValueFloor);

  // #{j : min_j <= min_b}: ascending order, ties share the last position.
  std::vector<Index> order(static_cast<std::size_t>(rows));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return minima[a] < minima[b]; });
  AFResult out;
  out.pvalues.resize(rows);
  Index i = 0;
  while (i < rows) {
    Index j = i;
    while (j + 1 < rows && minima[order[static_cast<std::size_t>(j + 1)]] == minima[order[static_cast<std::size_t>(i)]]) ++j;
    const double value = static_cast<double>(j + 1) / static_cast<double>(rows);
    for (Index t = i; t <= j; ++t) out.pvalues[order[static_cast<std::size_t>(t)]] = value;
    i = j + 1;
  }
  return out;
}

PValueMatrix stack_results(const std::vector<const AFResult*>& results) {
  if (results.empty()) throw Error(ErrorCode::EmptyMatrix, "nothing to stack");
  const Index rows = results.front()->size();
  PValueMatrix out;
  out.tail = Tail::Combined;
  out.values.resize(rows, static_cast<Index>(results.size()));
  for (std::size_t j = 0; j < results.size(); ++j) {
    if (results[j]->size() != rows)
      throw Error(ErrorCode::ShapeMismatch,
                  "branch results have " + std::to_string(results[j]->size()) + " and " +
                      std::to_string(rows) + " rows");
    out.values.col(static_cast<Index>(j)) = results[j]->pvalues;
  }
  return out;
}

AFResult combine_results(const AFResult& a, const AFResult& b) {
  return af_operator(stack_results({&a, &b}));
}

AFResult combine_one_sided(const PValueMatrix& lower, const PValueMatrix& upper) {
  if (lower.rows() != upper.rows() || lower.cols() != upper.cols())
    throw Error(ErrorCode::ShapeMismatch, "lower and upper tail matrices differ in shape");
  const AFResult lo = af_operator(lower);
  const AFResult up = af_operator(upper);
  return combine_results(lo, up);
}

AFResult combine_continuous(const PValueMatrix& original, const PValueMatrix& pca) {
  if (original.rows() != pca.rows())
    throw Error(ErrorCode::ShapeMismatch, "original and PCA matrices differ in row count");
  return combine_results(af_operator(original), af_operator(pca));
}

AFResult combine_mixed(const AFResult& binary, const AFResult& continuous) {
  return combine_results(binary, continuous);
}

}  // namespace mtaf
