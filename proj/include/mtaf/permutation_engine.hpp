#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mtaf/af_combiner.hpp"
#include "mtaf/data_model.hpp"
#include "mtaf/pca_transform.hpp"
#include "mtaf/residualizer.hpp"
#include "mtaf/score_engine.hpp"

namespace mtaf {

inline constexpr long kMinPermutations = 20;

// Addresses the permutation stream of one SNP in one round. Permutation b is
// a function of (seed, snp_id, round, b) only.
struct PermutationPlan {
  std::uint64_t seed = 0;
  std::string snp_id;
  long b = 0;
  int round = 1;
  // Test hook: every permuted row uses the identity permutation.
  bool identity_permutations = false;

  std::uint64_t key(long index) const;
};

struct AdaptiveSchedule {
  long b_init = 100;
  long growth = 10;
  long b_max = 10'000'000;
  double drop_coefficient = 5.0;

  void validate() const;
  /// Permutation counts per round: b_init * growth^r, ending exactly at b_max.
  std::vector<long> rounds() const;
};

enum class PermutationMode {
  Residual,       // permute OLS residuals of the genotype on [1 | Z]
  // Test-only: permute the raw genotype and leave the covariates out of the
  // trait models, so genotype-covariate association is not preserved.
  NaiveGenotype,
};

struct TestOptions {
  bool one_sided = true;
  bool use_pca = true;
  bool pca_scale = false;
  unsigned threads = 1;
  PermutationMode mode = PermutationMode::Residual;
};

enum class RecordStatus { Completed, Dropped, Degenerate };

struct AssociationRecord {
  std::string snp_id;
  std::optional<std::string> chrom;
  std::optional<std::int64_t> pos;
  double p_value = 1.0;  // NaN when degenerate
  long n_perm = 0;
  std::map<std::string, double> branch_pvalues;
  RecordStatus status = RecordStatus::Completed;
  int dropped_round = 0;
  long total_permutations = 0;  // across all rounds; not serialized

  std::string status_label() const;
  static AssociationRecord from_status_label(std::string_view label);
};

// z statistics of one branch for rows 0..B; p-value matrices are derived on
// demand so that only one tail is materialized at a time.
struct BranchScores {
  Eigen::MatrixXd z;  // (B+1) x columns

  bool empty() const { return z.cols() == 0; }
  PValueMatrix lower() const;
  PValueMatrix upper() const;
  PValueMatrix two_sided() const;
};

struct BranchMatrices {
  BranchScores binary;
  BranchScores continuous_original;
  BranchScores continuous_pca;
};

struct MethodPValues {
  double mtaf = 1.0;
  double mtaf_original = 1.0;
  double mtaf_pca = 1.0;
  double minp = 1.0;
};

// Per-dataset state shared by every SNP: the covariate projection, null fits
// for every trait and for every principal component of the continuous trait
// residuals. Immutable after construction.
class MtafEngine {
 public:
  MtafEngine(const ValidatedDataset& dataset, TestOptions options);

  const ValidatedDataset& dataset() const { return *dataset_; }
  const TestOptions& options() const { return options_; }
  const CovariateProjection& projection() const { return projection_; }
  const std::optional<PCScores>& pca() const { return pca_; }
  Index binary_count() const { return binary_.size(); }
  Index continuous_count() const { return continuous_.size(); }
  Index pca_count() const { return pca_battery_.size(); }

  /// The vector whose permutations are tested (e_x, or g in naive mode).
  Eigen::VectorXd permuted_source(const GenotypeVector& snp) const;

  /// Row 0 uses the unpermuted source; rows 1..b use permutation b of `plan`.
  BranchMatrices build_pvalue_matrices(const GenotypeVector& snp, long b,
                                       const PermutationPlan& plan) const;
  BranchMatrices build_pvalue_matrices(const GenotypeVector& snp, long b,
                                       const PermutationPlan& plan, unsigned threads) const;

  /// Full combination tree for one SNP at a fixed permutation count.
  AssociationRecord test_snp(const GenotypeVector& snp, long b, const PermutationPlan& plan,
                             unsigned threads = 1) const;

  /// MTAF, MTAF without PCA, MTAF with PCA only and minP from one set of matrices.
  MethodPValues evaluate_methods(const BranchMatrices& m) const;
  MethodPValues evaluate_methods(const BranchMatrices& m, bool one_sided) const;

 private:
  const ValidatedDataset* dataset_;
  TestOptions options_;
  CovariateProjection projection_;
  ScoreBattery binary_;
  ScoreBattery continuous_;
  std::optional<PCScores> pca_;
  ScoreBattery pca_battery_;
};

/// Combination-tree evaluation shared by the engine and simulator.
AFResult branch_result(const BranchScores& scores, bool one_sided);

AssociationRecord mtaf_single_snp(const MtafEngine& engine, const GenotypeVector& snp, long b,
                                  const PermutationPlan& plan);

/// Multi-round scan: SNPs with p > drop_coefficient / B_r are finalized after
/// round r; survivors are re-tested with fresh permutations at the next B.
std::vector<AssociationRecord> adaptive_scan(const MtafEngine& engine,
                                             const AdaptiveSchedule& schedule,
                                             std::uint64_t seed);

}  // namespace mtaf
