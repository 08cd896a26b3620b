#include "mtaf/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "mtaf/error.hpp"
#include "mtaf/parallel.hpp"

namespace mtaf {

std::string_view to_string(TraitMix mix) {
  switch (mix) {
    case TraitMix::Continuous: return "continuous";
    case TraitMix::Binary: return "binary";
    case TraitMix::Half: return "half";
  }
  return "?";
}

std::string_view to_string(Sparsity sparsity) {
  switch (sparsity) {
    case Sparsity::Null: return "null";
    case Sparsity::Sparse: return "sparse";
    case Sparsity::Dense: return "dense";
  }
  return "?";
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::MTAF: return "MTAF";
    case Method::MTAF_original: return "MTAF_original";
    case Method::MTAF_PCA: return "MTAF_PCA";
    case Method::minP: return "minP";
  }
  return "?";
}

TraitMix parse_trait_mix(std::string_view text) {
  if (text == "continuous") return TraitMix::Continuous;
  if (text == "binary") return TraitMix::Binary;
  if (text == "half" || text == "mixed") return TraitMix::Half;
  throw Error(ErrorCode::ParseError, "unknown trait mix '" + std::string(text) + "'");
}

Sparsity parse_sparsity(std::string_view text) {
  if (text == "null") return Sparsity::Null;
  if (text == "sparse") return Sparsity::Sparse;
  if (text == "dense") return Sparsity::Dense;
  throw Error(ErrorCode::ParseError, "unknown sparsity '" + std::string(text) + "'");
}

Method parse_method(std::string_view text) {
  if (text == "MTAF") return Method::MTAF;
  if (text == "MTAF_original") return Method::MTAF_original;
  if (text == "MTAF_PCA") return Method::MTAF_PCA;
  if (text == "minP") return Method::minP;
  throw Error(ErrorCode::ParseError, "unknown method '" + std::string(text) + "'");
}

void SimulationScenario::validate() const {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::InvalidArgument, "scenario '" + name + "': " + what);
  };
  if (n < 10) fail("n must be >= 10");
  if (k < 1) fail("k must be >= 1");
  if (!(rho >= 0.0 && rho < 1.0)) fail("rho must lie in [0, 1)");
  if (!(maf > 0.0 && maf < 0.5)) fail("maf must lie in (0, 0.5)");
  if (effect_low > effect_high) fail("effect_low exceeds effect_high");
  if (replicates < 1) fail("replicates must be positive");
  if (b_perm < kMinPermutations) fail("b_perm must be >= 20");
  if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must lie in (0, 1)");
  if (kinds == TraitMix::Half && k < 2) fail("half-half needs k >= 2");
}

int SimulationScenario::associated_count() const {
  switch (sparsity) {
    case Sparsity::Null: return 0;
    case Sparsity::Sparse: return k == 10 ? 1 : static_cast<int>(std::ceil(0.02 * k - 1e-9));
    case Sparsity::Dense: return k == 10 ? 4 : static_cast<int>(std::ceil(0.20 * k - 1e-9));
  }
  return 0;
}

TraitKind SimulationScenario::kind_of(int j) const {
  switch (kinds) {
    case TraitMix::Continuous: return TraitKind::Continuous;
    case TraitMix::Binary: return TraitKind::Binary;
    case TraitMix::Half: return j % 2 == 0 ? TraitKind::Continuous : TraitKind::Binary;
  }
  return TraitKind::Continuous;
}

GenotypeVector simulate_genotype(int n, double maf, Xoshiro256& rng) {
  GenotypeVector g;
  g.snp_id = "sim";
  g.values.resize(static_cast<std::size_t>(n));
  do {
    for (auto& v : g.values) v = (rng.uniform() < maf) + (rng.uniform() < maf);
  } while (g.is_constant());
  return g;
}

Eigen::MatrixXd compound_symmetric(const Eigen::Ref<const Eigen::VectorXd>& variances,
                                   double rho) {
  const Eigen::VectorXd sd = variances.cwiseSqrt();
  Eigen::MatrixXd sigma = rho * (sd * sd.transpose());
  sigma.diagonal() = variances;
  return sigma;
}

Eigen::MatrixXd simulate_covariance(int k, double rho, Xoshiro256& rng) {
  // Inverse gamma(shape 4, scale 4) is 1 / Gamma(shape 4, rate 4).
  std::gamma_distribution<double> gamma(4.0, 1.0 / 4.0);
  Eigen::VectorXd variances(k);
  for (int j = 0; j < k; ++j) variances[j] = 1.0 / gamma(rng);
  return compound_symmetric(variances, rho);
}

namespace {

Eigen::VectorXd dichotomize_at_median(const Eigen::VectorXd& latent) {
  std::vector<double> sorted(latent.data(), latent.data() + latent.size());
  const std::size_t m = sorted.size() / 2;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(m), sorted.end());
  double median = sorted[m];
  if (sorted.size() % 2 == 0) {
    const double below = *std::max_element(sorted.begin(), sorted.begin() + static_cast<long>(m));
    median = 0.5 * (median + below);
  }
  return (latent.array() > median).cast<double>();
}

}  // namespace

SimulatedData simulate_traits(const GenotypeVector& x, const SimulationScenario& scenario,
                              Xoshiro256& rng) {
  scenario.validate();
  const int n = static_cast<int>(x.values.size());
  const int k = scenario.k;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SimulatedData out;
  out.genotype = x;
  out.sigma = simulate_covariance(k, scenario.rho, rng);

  out.beta = Eigen::VectorXd::Zero(k);
  const int associated = scenario.associated_count();
  for (int j = 0; j < associated; ++j)
    out.beta[j] = scenario.effect_low + (scenario.effect_high - scenario.effect_low) * unit(rng);

  const Eigen::VectorXd xv = x.as_vector();
  Eigen::MatrixXd linear = xv * out.beta.transpose();

  if (scenario.with_covariates) {
    Eigen::MatrixXd z(n, 2);
    for (int m = 0; m < 2; ++m) {
      const double eta = 0.5 + 0.5 * unit(rng);
      Eigen::VectorXd latent(n);
      for (int i = 0; i < n; ++i) latent[i] = xv[i] * eta + normal(rng);
      z.col(m) = dichotomize_at_median(latent);
    }
    Eigen::MatrixXd gamma(k, 2);
    for (int j = 0; j < k; ++j)
      for (int m = 0; m < 2; ++m) gamma(j, m) = 0.5 + 0.5 * unit(rng);
    linear += z * gamma.transpose();
    out.covariates = CovariateMatrix{{"Z1", "Z2"}, z};
  } else {
    out.covariates = CovariateMatrix::intercept_only(n);
  }

  const Eigen::MatrixXd chol = out.sigma.llt().matrixL();
  Eigen::MatrixXd noise(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) noise(i, j) = normal(rng);
  linear += noise * chol.transpose();

  out.traits.values.resize(n, k);
  for (int j = 0; j < k; ++j) {
    const TraitKind kind = scenario.kind_of(j);
    out.traits.names.push_back("Y" + std::to_string(j + 1));
    out.traits.kinds.push_back(kind);
    if (kind == TraitKind::Continuous) {
      out.traits.values.col(j) = linear.col(j);
    } else {
      for (int i = 0; i < n; ++i) {
        const double prob = 1.0 / (1.0 + std::exp(-linear(i, j)));
        out.traits.values(i, j) = unit(rng) < prob ? 1.0 : 0.0;
      }
    }
  }
  return out;
}

SimulatedData simulate_replicate_data(const SimulationScenario& scenario,
                                      std::uint64_t master_seed, long replicate) {
  Xoshiro256 rng(stream_key(master_seed, hash_string(scenario.name),
                            static_cast<std::uint64_t>(replicate), 0));
  const GenotypeVector x = simulate_genotype(scenario.n, scenario.maf, rng);
  return simulate_traits(x, scenario, rng);
}

namespace {

template <typename Fn>
void for_each_replicate(const SimulationScenario& scenario, const StudyOptions& options,
                        bool one_sided, Fn&& fn) {
  scenario.validate();
  parallel_for(static_cast<std::size_t>(scenario.replicates), options.threads,
               [&](std::size_t r) {
                 const auto rep = static_cast<long>(r);
                 const SimulatedData data =
                     simulate_replicate_data(scenario, options.master_seed, rep);
                 const ValidatedDataset ds =
                     validate_dataset({data.genotype}, data.traits, data.covariates);
                 TestOptions topt;
                 topt.one_sided = one_sided;
                 topt.use_pca = true;
                 topt.pca_scale = options.pca_scale;
                 topt.threads = 1;
                 topt.mode = options.mode;
                 const MtafEngine engine(ds, topt);
                 PermutationPlan plan;
                 plan.seed = stream_key(options.master_seed, hash_string(scenario.name),
                                        static_cast<std::uint64_t>(rep), 1);
                 plan.snp_id = data.genotype.snp_id;
                 plan.b = scenario.b_perm;
                 const BranchMatrices m =
                     engine.build_pvalue_matrices(ds.genotypes.front(), scenario.b_perm, plan, 1);
                 fn(r, engine, m);
               });
}

}  // namespace

std::vector<MethodPValues> simulate_replicates(const SimulationScenario& scenario,
                                               const StudyOptions& options) {
  std::vector<MethodPValues> out(static_cast<std::size_t>(scenario.replicates));
  for_each_replicate(scenario, options, scenario.one_sided,
                     [&](std::size_t r, const MtafEngine& engine, const BranchMatrices& m) {
                       out[r] = engine.evaluate_methods(m);
                     });
  return out;
}

std::vector<SidednessPair> simulate_replicates_both_sides(const SimulationScenario& scenario,
                                                          const StudyOptions& options) {
  std::vector<SidednessPair> out(static_cast<std::size_t>(scenario.replicates));
  for_each_replicate(scenario, options, true,
                     [&](std::size_t r, const MtafEngine& engine, const BranchMatrices& m) {
                       out[r].one_sided = engine.evaluate_methods(m, true);
                       out[r].two_sided = engine.evaluate_methods(m, false);
                     });
  return out;
}

double method_pvalue(const MethodPValues& p, Method method) {
  switch (method) {
    case Method::MTAF: return p.mtaf;
    case Method::MTAF_original: return p.mtaf_original;
    case Method::MTAF_PCA: return p.mtaf_pca;
    case Method::minP: return p.minp;
  }
  return 1.0;
}

std::vector<PowerReport> run_study(const std::vector<SimulationScenario>& grid,
                                   const std::vector<Method>& methods,
                                   const StudyOptions& options) {
  std::vector<PowerReport> out;
  for (const auto& scenario : grid) {
    if (scenario.replicates < 1)
      throw Error(ErrorCode::InvalidArgument, "scenario '" + scenario.name + "' has no replicates");
    const auto pvalues = simulate_replicates(scenario, options);
    for (Method method : methods) {
      PowerReport rep;
      rep.scenario = scenario;
      rep.method = method;
      for (const auto& p : pvalues)
        if (method_pvalue(p, method) <= scenario.alpha) ++rep.rejections;
      const double r = static_cast<double>(rep.rejections) / scenario.replicates;
      rep.rejection_rate = r;
      rep.mc_stderr = std::sqrt(r * (1.0 - r) / scenario.replicates);
      out.push_back(std::move(rep));
    }
  }
  return out;
}

namespace {

std::string rho_label(double rho) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.1f", rho);
  return buf;
}

struct EffectRow {
  Sparsity sparsity;
  int k;
  double low;
  double high;
};

}  // namespace

std::vector<SimulationScenario> table_preset(int table, int replicates, long b_perm) {
  std::vector<SimulationScenario> grid;
  auto base = [&](TraitMix mix, bool cov) {
    SimulationScenario s;
    s.kinds = mix;
    s.with_covariates = cov;
    s.replicates = replicates;
    s.b_perm = b_perm;
    return s;
  };
  auto name = [&](const SimulationScenario& s) {
    return "t" + std::to_string(table) + "_" + std::string(to_string(s.kinds)) + "_" +
           std::string(to_string(s.sparsity)) + "_cov" + (s.with_covariates ? "2" : "0") +
           "_rho" + rho_label(s.rho) + "_k" + std::to_string(s.k);
  };

  auto null_grid = [&](TraitMix mix, std::vector<bool> covs, std::vector<int> ks) {
    for (bool cov : covs)
      for (double rho : {0.3, 0.6})
        for (int k : ks) {
          auto s = base(mix, cov);
          s.rho = rho;
          s.k = k;
          s.sparsity = Sparsity::Null;
          s.name = name(s);
          grid.push_back(s);
        }
  };
  auto power_grid = [&](TraitMix mix, bool cov, const std::vector<EffectRow>& rows) {
    for (Sparsity sp : {Sparsity::Sparse, Sparsity::Dense})
      for (double rho : {0.3, 0.6})
        for (const auto& row : rows) {
          if (row.sparsity != sp) continue;
          auto s = base(mix, cov);
          s.rho = rho;
          s.k = row.k;
          s.sparsity = sp;
          s.effect_low = row.low;
          s.effect_high = row.high;
          s.name = name(s);
          grid.push_back(s);
        }
  };

  using S = Sparsity;
  switch (table) {
    case 1: null_grid(TraitMix::Continuous, {false, true}, {10, 50, 100}); break;
    case 2: null_grid(TraitMix::Binary, {false, true}, {10, 50}); break;
    case 3: null_grid(TraitMix::Half, {true}, {10, 50}); break;
    case 4:
      power_grid(TraitMix::Continuous, false,
                 {{S::Sparse, 10, 0.15, 0.25}, {S::Sparse, 50, 0.2, 0.4},
                  {S::Sparse, 100, 0.15, 0.3}, {S::Dense, 10, 0.05, 0.15},
                  {S::Dense, 50, 0.05, 0.12}, {S::Dense, 100, 0.02, 0.1}});
      break;
    case 5:
      power_grid(TraitMix::Continuous, true,
                 {{S::Sparse, 10, 0.15, 0.3}, {S::Sparse, 50, 0.2, 0.4},
                  {S::Sparse, 100, 0.15, 0.3}, {S::Dense, 10, 0.05, 0.2},
                  {S::Dense, 50, 0.05, 0.13}, {S::Dense, 100, 0.03, 0.12}});
      break;
    case 6:
      power_grid(TraitMix::Binary, false,
                 {{S::Sparse, 10, 0.4, 0.6}, {S::Sparse, 50, 0.6, 0.8},
                  {S::Dense, 10, 0.2, 0.3}, {S::Dense, 50, 0.15, 0.3}});
      break;
    case 7:
      power_grid(TraitMix::Binary, true,
                 {{S::Sparse, 10, 0.4, 0.6}, {S::Sparse, 50, 0.5, 0.7},
                  {S::Dense, 10, 0.2, 0.3}, {S::Dense, 50, 0.2, 0.35}});
      break;
    case 8:
      power_grid(TraitMix::Half, true, {{S::Dense, 10, 0.05, 0.3}, {S::Dense, 50, 0.05, 0.25}});
      break;
    default:
      throw Error(ErrorCode::InvalidArgument, "table must be 1..8, got " + std::to_string(table));
  }
  return grid;
}

std::vector<Method> table_methods(int table) {
  if (table == 4 || table == 5)
    return {Method::MTAF_PCA, Method::MTAF_original, Method::MTAF, Method::minP};
  return {Method::MTAF, Method::minP};
}

}  // namespace mtaf
