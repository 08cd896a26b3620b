#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mtaf {

using Eigen::Index;

enum class TraitKind { Continuous, Binary };

std::string_view to_string(TraitKind kind);
TraitKind parse_trait_kind(std::string_view text);

// One SNP: additive minor-allele counts across subjects.
struct GenotypeVector {
  std::string snp_id;
  std::vector<int> values;
  std::optional<std::string> chrom;
  std::optional<std::int64_t> pos;

  Eigen::VectorXd as_vector() const;
  bool is_constant() const;

  bool operator==(const GenotypeVector&) const = default;
};

// n x K phenotypes with a kind flag per column.
struct TraitMatrix {
  std::vector<std::string> names;
  std::vector<TraitKind> kinds;
  Eigen::MatrixXd values;

  Index n() const { return values.rows(); }
  Index k() const { return values.cols(); }

  std::vector<Index> columns_of(TraitKind kind) const;

  bool operator==(const TraitMatrix& other) const {
    return names == other.names && kinds == other.kinds &&
           values.rows() == other.values.rows() &&
           values.cols() == other.values.cols() && values == other.values;
  }
};

// n x M covariates. The intercept is never stored; design() prepends it.
struct CovariateMatrix {
  std::vector<std::string> names;
  Eigen::MatrixXd values;

  Index n() const { return values.rows(); }
  Index m() const { return values.cols(); }

  /// [1 | Z], n x (M+1).
  Eigen::MatrixXd design() const;

  static CovariateMatrix intercept_only(Index n);

  bool operator==(const CovariateMatrix& other) const {
    return names == other.names && values.rows() == other.values.rows() &&
           values.cols() == other.values.cols() && values == other.values;
  }
};

// Parsed but unvalidated inputs, each keyed by its own subject-id column.
struct GenotypeTable {
  std::vector<std::string> subject_ids;
  std::vector<GenotypeVector> snps;
};

struct TraitTable {
  std::vector<std::string> subject_ids;
  TraitMatrix traits;
};

struct CovariateTable {
  std::vector<std::string> subject_ids;
  CovariateMatrix covariates;
};

struct ExcludedSnp {
  std::size_t input_index;
  GenotypeVector snp;
  std::string reason;
};

struct ValidatedDataset {
  std::vector<std::string> subject_ids;
  std::vector<GenotypeVector> genotypes;
  /// Position of each entry of `genotypes` in the input table.
  std::vector<std::size_t> input_index;
  TraitMatrix traits;
  CovariateMatrix covariates;
  std::vector<ExcludedSnp> excluded;
  std::vector<std::string> warnings;

  Index n() const { return static_cast<Index>(subject_ids.size()); }

  // Diagnostics (excluded, warnings) do not take part in equality.
  bool operator==(const ValidatedDataset& other) const {
    return subject_ids == other.subject_ids && genotypes == other.genotypes &&
           traits == other.traits && covariates == other.covariates;
  }
};

/// Aligns the three tables on the genotype table's subject order and checks
/// every data-model invariant. Constant SNPs are excluded with a warning.
ValidatedDataset validate_dataset(const GenotypeTable& genotypes,
                                  const TraitTable& traits,
                                  const CovariateTable& covariates);

/// Convenience overload for inputs that are already row-aligned.
ValidatedDataset validate_dataset(std::vector<GenotypeVector> genotypes,
                                  TraitMatrix traits,
                                  CovariateMatrix covariates);

}  // namespace mtaf
