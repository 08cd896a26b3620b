#include "mtaf/data_model.hpp"

#include <cmath>
#include <unordered_map>

#include "mtaf/error.hpp"

namespace mtaf {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonBinaryCoding: return "NonBinaryCoding";
    case ErrorCode::RankDeficientCovariates: return "RankDeficientCovariates";
    case ErrorCode::AllSnpsConstant: return "AllSnpsConstant";
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::ConstantTrait: return "ConstantTrait";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::IrlsNonConvergence: return "IrlsNonConvergence";
    case ErrorCode::SeparationDetected: return "SeparationDetected";
    case ErrorCode::DegenerateGenotype: return "DegenerateGenotype";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::NonPositiveEntry: return "NonPositiveEntry";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::PermutationCountTooSmall: return "PermutationCountTooSmall";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

std::string_view to_string(TraitKind kind) {
  return kind == TraitKind::Binary ? "binary" : "continuous";
}

TraitKind parse_trait_kind(std::string_view text) {
  if (text == "continuous") return TraitKind::Continuous;
  if (text == "binary") return TraitKind::Binary;
  throw Error(ErrorCode::ParseError,
              "unknown trait kind '" + std::string(text) +
                  "' (expected continuous|binary)");
}

Eigen::VectorXd GenotypeVector::as_vector() const {
  Eigen::VectorXd out(static_cast<Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) out[static_cast<Index>(i)] = values[i];
  return out;
}

bool GenotypeVector::is_constant() const {
  for (int v : values)
    if (v != values.front()) return false;
  return true;
}

std::vector<Index> TraitMatrix::columns_of(TraitKind kind) const {
  std::vector<Index> out;
  for (std::size_t k = 0; k < kinds.size(); ++k)
    if (kinds[k] == kind) out.push_back(static_cast<Index>(k));
  return out;
}

Eigen::MatrixXd CovariateMatrix::design() const {
  Eigen::MatrixXd x(n(), m() + 1);
  x.col(0).setOnes();
  x.rightCols(m()) = values;
  return x;
}

CovariateMatrix CovariateMatrix::intercept_only(Index n) {
  return CovariateMatrix{{}, Eigen::MatrixXd(n, 0)};
}

namespace {

std::vector<Index> align(const std::vector<std::string>& reference,
                         const std::vector<std::string>& ids,
                         std::string_view what) {
  if (ids.size() != reference.size())
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + " has " + std::to_string(ids.size()) +
                    " subjects, genotypes have " +
                    std::to_string(reference.size()));
  std::unordered_map<std::string, Index> where;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!where.emplace(ids[i], static_cast<Index>(i)).second)
      throw Error(ErrorCode::DimensionMismatch,
                  std::string(what) + ": duplicated subject id '" + ids[i] + "'");
  }
  std::vector<Index> order;
  order.reserve(reference.size());
  for (const auto& id : reference) {
    auto it = where.find(id);
    if (it == where.end())
      throw Error(ErrorCode::DimensionMismatch,
                  std::string(what) + " lacks subject '" + id + "'");
    order.push_back(it->second);
  }
  return order;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<Index>& order) {
  Eigen::MatrixXd out(static_cast<Index>(order.size()), m.cols());
  for (std::size_t i = 0; i < order.size(); ++i) out.row(static_cast<Index>(i)) = m.row(order[i]);
  return out;
}

void check_traits(const TraitMatrix& traits) {
  if (traits.names.size() != static_cast<std::size_t>(traits.k()) ||
      traits.kinds.size() != static_cast<std::size_t>(traits.k()))
    throw Error(ErrorCode::DimensionMismatch, "trait names/kinds do not match trait columns");
  if (traits.k() == 0) throw Error(ErrorCode::DimensionMismatch, "no traits");
  for (Index k = 0; k < traits.k(); ++k) {
    const auto col = traits.values.col(k);
    const auto& name = traits.names[static_cast<std::size_t>(k)];
    for (Index i = 0; i < col.size(); ++i) {
      if (!std::isfinite(col[i]))
        throw Error(ErrorCode::MissingValue,
                    "trait '" + name + "' subject " + std::to_string(i + 1));
    }
    if (traits.kinds[static_cast<std::size_t>(k)] == TraitKind::Binary) {
      for (Index i = 0; i < col.size(); ++i)
        if (col[i] != 0.0 && col[i] != 1.0)
          throw Error(ErrorCode::NonBinaryCoding,
                      "binary trait '" + name + "' has value " +
                          std::to_string(col[i]) + " at subject " + std::to_string(i + 1));
    }
    if ((col.array() == col[0]).all())
      throw Error(ErrorCode::ConstantTrait, "trait '" + name + "' is constant");
  }
}

void check_covariates(const CovariateMatrix& cov) {
  if (cov.names.size() != static_cast<std::size_t>(cov.m()))
    throw Error(ErrorCode::DimensionMismatch, "covariate names do not match covariate columns");
  if (!cov.values.allFinite())
    throw Error(ErrorCode::MissingValue, "covariates contain missing or non-finite values");
  const Eigen::MatrixXd x = cov.design();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < x.cols())
    throw Error(ErrorCode::RankDeficientCovariates,
                "[1 | Z] has rank " + std::to_string(qr.rank()) + " < " +
                    std::to_string(x.cols()));
}

}  // namespace

ValidatedDataset validate_dataset(const GenotypeTable& genotypes,
                                  const TraitTable& traits,
                                  const CovariateTable& covariates) {
  const auto& ids = genotypes.subject_ids;
  const auto n = static_cast<Index>(ids.size());

  for (const auto& snp : genotypes.snps) {
    if (static_cast<Index>(snp.values.size()) != n)
      throw Error(ErrorCode::DimensionMismatch,
                  "SNP '" + snp.snp_id + "' has " + std::to_string(snp.values.size()) +
                      " values for " + std::to_string(n) + " subjects");
  }

  ValidatedDataset out;
  out.subject_ids = ids;

  const auto trait_order = align(ids, traits.subject_ids, "trait table");
  if (traits.traits.n() != static_cast<Index>(traits.subject_ids.size()))
    throw Error(ErrorCode::DimensionMismatch, "trait table rows do not match its subject ids");
  out.traits = traits.traits;
  out.traits.values = take_rows(traits.traits.values, trait_order);
  check_traits(out.traits);

  if (covariates.subject_ids.empty() && covariates.covariates.m() == 0) {
    out.covariates = CovariateMatrix::intercept_only(n);
  } else {
    const auto cov_order = align(ids, covariates.subject_ids, "covariate table");
    if (covariates.covariates.n() != static_cast<Index>(covariates.subject_ids.size()))
      throw Error(ErrorCode::DimensionMismatch,
                  "covariate table rows do not match its subject ids");
    out.covariates = covariates.covariates;
    out.covariates.values = take_rows(covariates.covariates.values, cov_order);
  }
  check_covariates(out.covariates);

  if (n < out.traits.k() + out.covariates.m() + 2)
    throw Error(ErrorCode::InsufficientSamples,
                std::to_string(n) + " subjects for " + std::to_string(out.traits.k()) +
                    " traits and " + std::to_string(out.covariates.m()) + " covariates");

  for (std::size_t s = 0; s < genotypes.snps.size(); ++s) {
    const auto& snp = genotypes.snps[s];
    for (std::size_t i = 0; i < snp.values.size(); ++i) {
      const int v = snp.values[i];
      if (v < 0)
        throw Error(ErrorCode::MissingValue,
                    "SNP '" + snp.snp_id + "' subject " + ids[i]);
      if (v > 2)
        throw Error(ErrorCode::InvalidArgument,
                    "SNP '" + snp.snp_id + "' has genotype " + std::to_string(v) +
                        " outside {0,1,2}");
    }
    if (snp.is_constant()) {
      out.warnings.push_back("SNP '" + snp.snp_id + "' is constant; excluded");
      out.excluded.push_back({s, snp, "constant"});
      continue;
    }
    out.genotypes.push_back(snp);
    out.input_index.push_back(s);
  }
  if (out.genotypes.empty())
    throw Error(ErrorCode::AllSnpsConstant,
                genotypes.snps.empty() ? "no SNPs supplied" : "every SNP is constant");
  return out;
}

ValidatedDataset validate_dataset(std::vector<GenotypeVector> genotypes,
                                  TraitMatrix traits, CovariateMatrix covariates) {
  const Index n = traits.n();
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) ids.push_back(std::to_string(i + 1));
  GenotypeTable g{ids, std::move(genotypes)};
  TraitTable t{ids, std::move(traits)};
  CovariateTable c{covariates.m() == 0 ? std::vector<std::string>{} : ids,
                   std::move(covariates)};
  return validate_dataset(g, t, c);
}

}  // namespace mtaf
