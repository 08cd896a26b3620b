#include "mtaf/permutation_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mtaf/error.hpp"
#include "mtaf/parallel.hpp"
#include "mtaf/rng.hpp"

namespace mtaf {

namespace {

constexpr Index kChunkRows = 256;

std::vector<NullFit> fits_for(const TraitMatrix& traits, const std::vector<Index>& columns,
                              const CovariateMatrix& covariates) {
  std::vector<NullFit> fits;
  fits.reserve(columns.size());
  for (Index k : columns) {
    try {
      fits.push_back(fit_null(traits.values.col(k), traits.kinds[static_cast<std::size_t>(k)],
                              covariates));
    } catch (const Error& e) {
      throw Error(e.code(), "trait '" + traits.names[static_cast<std::size_t>(k)] + "': " + e.what());
    }
  }
  return fits;
}

template <typename F>
PValueMatrix map_z(const Eigen::MatrixXd& z, Tail tail, F f) {
  PValueMatrix p;
  p.tail = tail;
  p.values.resize(z.rows(), z.cols());
  const double* in = z.data();
  double* out = p.values.data();
  for (Index i = 0; i < z.size(); ++i) out[i] = f(pvalues_from_z(in[i]));
  return p;
}

Eigen::MatrixXd hcat(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() == 0) return b;
  if (b.cols() == 0) return a;
  Eigen::MatrixXd out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

const AFResult* pick(const std::optional<AFResult>& r) { return r ? &*r : nullptr; }

// Covariates entering the trait models. The naive mode ignores them entirely,
// which is what makes permuting the raw genotype confounded.
CovariateMatrix model_covariates(const ValidatedDataset& d, const TestOptions& o) {
  if (o.mode == PermutationMode::NaiveGenotype) return CovariateMatrix::intercept_only(d.n());
  return d.covariates;
}

}  // namespace

std::uint64_t PermutationPlan::key(long index) const {
  return stream_key(seed, hash_string(snp_id), static_cast<std::uint64_t>(round),
                    static_cast<std::uint64_t>(index));
}

void AdaptiveSchedule::validate() const {
  if (b_init < kMinPermutations)
    throw Error(ErrorCode::PermutationCountTooSmall,
                "b_init must be >= " + std::to_string(kMinPermutations));
  if (growth < 2) throw Error(ErrorCode::InvalidArgument, "growth must be >= 2");
  if (b_max < b_init) throw Error(ErrorCode::InvalidArgument, "b_max must be >= b_init");
  if (!(drop_coefficient > 0.0))
    throw Error(ErrorCode::InvalidArgument, "drop coefficient must be positive");
}

std::vector<long> AdaptiveSchedule::rounds() const {
  validate();
  std::vector<long> out;
  long b = b_init;
  while (b < b_max) {
    out.push_back(b);
    if (b > b_max / growth) break;
    b *= growth;
  }
  out.push_back(b_max);
  return out;
}

std::string AssociationRecord::status_label() const {
  switch (status) {
    case RecordStatus::Completed: return "completed";
    case RecordStatus::Dropped: return "dropped_round_" + std::to_string(dropped_round);
    case RecordStatus::Degenerate: return "degenerate";
  }
  return "unknown";
}

AssociationRecord AssociationRecord::from_status_label(std::string_view label) {
  AssociationRecord r;
  constexpr std::string_view prefix = "dropped_round_";
  if (label == "completed") {
    r.status = RecordStatus::Completed;
  } else if (label == "degenerate") {
    r.status = RecordStatus::Degenerate;
  } else if (label.substr(0, prefix.size()) == prefix) {
    r.status = RecordStatus::Dropped;
    r.dropped_round = std::stoi(std::string(label.substr(prefix.size())));
  } else {
    throw Error(ErrorCode::ParseError, "unknown status '" + std::string(label) + "'");
  }
  return r;
}

PValueMatrix BranchScores::lower() const {
  return map_z(z, Tail::Lower, [](const ScoreTestResult& r) { return r.p_lower; });
}
PValueMatrix BranchScores::upper() const {
  return map_z(z, Tail::Upper, [](const ScoreTestResult& r) { return r.p_upper; });
}
PValueMatrix BranchScores::two_sided() const {
  return map_z(z, Tail::TwoSided, [](const ScoreTestResult& r) { return r.p_two; });
}

AFResult branch_result(const BranchScores& scores, bool one_sided) {
  if (one_sided) return combine_one_sided(scores.lower(), scores.upper());
  return af_operator(scores.two_sided());
}

MtafEngine::MtafEngine(const ValidatedDataset& dataset, TestOptions options)
    : dataset_(&dataset),
      options_(options),
      projection_(model_covariates(dataset, options)),
      binary_(fits_for(dataset.traits, dataset.traits.columns_of(TraitKind::Binary),
                       model_covariates(dataset, options))),
      continuous_(fits_for(dataset.traits, dataset.traits.columns_of(TraitKind::Continuous),
                           model_covariates(dataset, options))),
      pca_battery_({}) {
  const auto cont = dataset.traits.columns_of(TraitKind::Continuous);
  if (!options_.use_pca || cont.empty()) return;

  Eigen::MatrixXd y(dataset.n(), static_cast<Index>(cont.size()));
  for (std::size_t j = 0; j < cont.size(); ++j) y.col(static_cast<Index>(j)) = dataset.traits.values.col(cont[j]);
  pca_ = principal_components(trait_residuals(y, projection_), options_.pca_scale);

  // Residuals already exclude the covariates, so each component gets an
  // intercept-only null model. Zero-variance components carry no information.
  const auto intercept = CovariateMatrix::intercept_only(dataset.n());
  std::vector<NullFit> fits;
  for (Index j = 0; j < pca_->scores.cols(); ++j) {
    if (pca_->explained_variance[j] <= 0.0) continue;
    fits.push_back(fit_null(pca_->scores.col(j), TraitKind::Continuous, intercept));
  }
  pca_battery_ = ScoreBattery(std::move(fits));
}

Eigen::VectorXd MtafEngine::permuted_source(const GenotypeVector& snp) const {
  ResidualVector e = genotype_residuals(snp, projection_);
  if (options_.mode == PermutationMode::NaiveGenotype) return snp.as_vector();
  return std::move(e.values);
}

BranchMatrices MtafEngine::build_pvalue_matrices(const GenotypeVector& snp, long b,
                                                 const PermutationPlan& plan) const {
  return build_pvalue_matrices(snp, b, plan, options_.threads);
}

BranchMatrices MtafEngine::build_pvalue_matrices(const GenotypeVector& snp, long b,
                                                 const PermutationPlan& plan,
                                                 unsigned threads) const {
  if (b < kMinPermutations)
    throw Error(ErrorCode::PermutationCountTooSmall,
                "B = " + std::to_string(b) + " < " + std::to_string(kMinPermutations));
  const Eigen::VectorXd source = permuted_source(snp);
  const Index n = source.size();
  const Index rows = b + 1;

  BranchMatrices out;
  out.binary.z.resize(rows, binary_.size());
  out.continuous_original.z.resize(rows, continuous_.size());
  out.continuous_pca.z.resize(rows, pca_battery_.size());

  const auto chunks = static_cast<std::size_t>((rows + kChunkRows - 1) / kChunkRows);
  parallel_for(chunks, threads, [&](std::size_t c) {
    const Index start = static_cast<Index>(c) * kChunkRows;
    const Index len = std::min(kChunkRows, rows - start);
    Eigen::MatrixXd g(n, len);
    for (Index r = 0; r < len; ++r) {
      const Index row = start + r;
      auto col = g.col(r);
      col = source;
      if (row == 0 || plan.identity_permutations) continue;
      Xoshiro256 rng(plan.key(row));
      fisher_yates(std::span<double>(col.data(), static_cast<std::size_t>(n)), rng);
    }
    if (binary_.size() > 0) out.binary.z.middleRows(start, len) = binary_.z_scores(g);
    if (continuous_.size() > 0)
      out.continuous_original.z.middleRows(start, len) = continuous_.z_scores(g);
    if (pca_battery_.size() > 0)
      out.continuous_pca.z.middleRows(start, len) = pca_battery_.z_scores(g);
  });
  return out;
}

MethodPValues MtafEngine::evaluate_methods(const BranchMatrices& m) const {
  return evaluate_methods(m, options_.one_sided);
}

MethodPValues MtafEngine::evaluate_methods(const BranchMatrices& m, bool one_sided) const {
  std::optional<AFResult> binary, original, pca;
  if (!m.binary.empty()) binary = branch_result(m.binary, one_sided);
  if (!m.continuous_original.empty()) original = branch_result(m.continuous_original, one_sided);
  if (!m.continuous_pca.empty()) pca = branch_result(m.continuous_pca, one_sided);

  auto finish = [&](const AFResult* continuous) -> double {
    if (binary && continuous) return combine_mixed(*binary, *continuous).reported();
    if (continuous) return continuous->reported();
    return binary->reported();
  };

  MethodPValues out;
  std::optional<AFResult> combined;
  if (original && pca) combined = combine_results(*original, *pca);
  out.mtaf = finish(combined ? &*combined : pick(original));
  out.mtaf_original = finish(pick(original));
  out.mtaf_pca = finish(pca ? &*pca : pick(original));

  BranchScores all{hcat(m.binary.z, m.continuous_original.z)};
  out.minp = minp_operator(all.two_sided()).reported();
  return out;
}

AssociationRecord MtafEngine::test_snp(const GenotypeVector& snp, long b,
                                       const PermutationPlan& plan, unsigned threads) const {
  AssociationRecord rec;
  rec.snp_id = snp.snp_id;
  rec.chrom = snp.chrom;
  rec.pos = snp.pos;
  rec.n_perm = b;
  rec.total_permutations = b;

  const BranchMatrices m = build_pvalue_matrices(snp, b, plan, threads);
  const bool one_sided = options_.one_sided;

  std::optional<AFResult> binary, original, pca, continuous;
  if (!m.binary.empty()) {
    binary = branch_result(m.binary, one_sided);
    rec.branch_pvalues["binary"] = binary->reported();
  }
  if (!m.continuous_original.empty()) {
    original = branch_result(m.continuous_original, one_sided);
    rec.branch_pvalues["continuous_original"] = original->reported();
    continuous = original;
  }
  if (!m.continuous_pca.empty()) {
    pca = branch_result(m.continuous_pca, one_sided);
    rec.branch_pvalues["continuous_pca"] = pca->reported();
    continuous = combine_results(*original, *pca);
  }
  if (binary && continuous) {
    rec.p_value = combine_mixed(*binary, *continuous).reported();
  } else {
    rec.p_value = continuous ? continuous->reported() : binary->reported();
  }

  if (one_sided) {
    const BranchScores all{hcat(m.binary.z, m.continuous_original.z)};
    rec.branch_pvalues["lower"] = af_operator(all.lower()).reported();
    rec.branch_pvalues["upper"] = af_operator(all.upper()).reported();
  }
  return rec;
}

AssociationRecord mtaf_single_snp(const MtafEngine& engine, const GenotypeVector& snp, long b,
                                  const PermutationPlan& plan) {
  return engine.test_snp(snp, b, plan, engine.options().threads);
}

std::vector<AssociationRecord> adaptive_scan(const MtafEngine& engine,
                                             const AdaptiveSchedule& schedule,
                                             std::uint64_t seed) {
  const auto rounds = schedule.rounds();
  const auto& snps = engine.dataset().genotypes;
  const unsigned threads = resolve_threads(engine.options().threads);

  std::vector<AssociationRecord> records(snps.size());
  std::vector<std::size_t> alive(snps.size());
  for (std::size_t i = 0; i < snps.size(); ++i) alive[i] = i;
  std::vector<long> spent(snps.size(), 0);

  for (std::size_t r = 0; r < rounds.size() && !alive.empty(); ++r) {
    const long b = rounds[r];
    const int round = static_cast<int>(r) + 1;
    const bool last = r + 1 == rounds.size();

    auto run = [&](std::size_t idx, unsigned inner) {
      const std::size_t s = alive[idx];
      const auto& snp = snps[s];
      PermutationPlan plan{seed, snp.snp_id, b, round};
      AssociationRecord rec;
      try {
        rec = engine.test_snp(snp, b, plan, inner);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateGenotype) throw;
        rec.snp_id = snp.snp_id;
        rec.chrom = snp.chrom;
        rec.pos = snp.pos;
        rec.p_value = std::numeric_limits<double>::quiet_NaN();
        rec.n_perm = 0;
        rec.status = RecordStatus::Degenerate;
      }
      spent[s] += rec.status == RecordStatus::Degenerate ? 0 : b;
      rec.total_permutations = spent[s];
      records[s] = std::move(rec);
    };

    // Many SNPs: one per worker. Few SNPs (late rounds): split permutations.
    if (alive.size() >= threads) {
      parallel_for(alive.size(), threads, [&](std::size_t i) { run(i, 1); });
    } else {
      for (std::size_t i = 0; i < alive.size(); ++i) run(i, threads);
    }

    std::vector<std::size_t> next;
    const double threshold = schedule.drop_coefficient / static_cast<double>(b);
    for (std::size_t s : alive) {
      auto& rec = records[s];
      if (rec.status == RecordStatus::Degenerate) continue;
      if (last) {
        rec.status = RecordStatus::Completed;
      } else if (rec.p_value > threshold) {
        rec.status = RecordStatus::Dropped;
        rec.dropped_round = round;
      } else {
        next.push_back(s);
      }
    }
    alive = std::move(next);
  }
  return records;
}

}  // namespace mtaf
