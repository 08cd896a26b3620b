#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mtaf/data_model.hpp"
#include "mtaf/permutation_engine.hpp"
#include "mtaf/rng.hpp"

namespace mtaf {

enum class TraitMix { Continuous, Binary, Half };
enum class Sparsity { Null, Sparse, Dense };
enum class Method { MTAF, MTAF_original, MTAF_PCA, minP };

std::string_view to_string(TraitMix mix);
std::string_view to_string(Sparsity sparsity);
std::string_view to_string(Method method);
TraitMix parse_trait_mix(std::string_view text);
Sparsity parse_sparsity(std::string_view text);
Method parse_method(std::string_view text);

// One cell of a simulation grid.
struct SimulationScenario {
  std::string name;
  int n = 1000;
  int k = 10;
  TraitMix kinds = TraitMix::Continuous;
  double rho = 0.3;
  Sparsity sparsity = Sparsity::Null;
  double effect_low = 0.0;
  double effect_high = 0.0;
  double maf = 0.3;
  bool with_covariates = false;
  int replicates = 1000;
  long b_perm = 999;
  double alpha = 0.05;
  bool one_sided = true;

  void validate() const;
  /// 2% (sparse) or 20% (dense) of K rounded up; K = 10 uses 1 and 4.
  int associated_count() const;
  /// Kind of trait column j. Half-half scenarios alternate continuous and binary.
  TraitKind kind_of(int j) const;
};

struct PowerReport {
  SimulationScenario scenario;
  Method method = Method::MTAF;
  long rejections = 0;
  double rejection_rate = 0.0;
  double mc_stderr = 0.0;
};

struct SimulatedData {
  GenotypeVector genotype;
  TraitMatrix traits;
  CovariateMatrix covariates;
  Eigen::VectorXd beta;
  Eigen::MatrixXd sigma;
};

/// x_i ~ Binomial(2, maf), redrawn wholesale while constant.
GenotypeVector simulate_genotype(int n, double maf, Xoshiro256& rng);

/// Variances i.i.d. inverse gamma (shape 4, scale 4); correlation compound
/// symmetric with parameter rho.
Eigen::MatrixXd simulate_covariance(int k, double rho, Xoshiro256& rng);
Eigen::MatrixXd compound_symmetric(const Eigen::Ref<const Eigen::VectorXd>& variances,
                                   double rho);

/// Traits given a genotype: Y = x beta (+ Z Gamma) + eps with eps ~ N(0, Sigma);
/// binary columns are Bernoulli(expit(.)) of the same linear predictor.
SimulatedData simulate_traits(const GenotypeVector& x, const SimulationScenario& scenario,
                              Xoshiro256& rng);

/// Genotype plus traits for replicate `replicate` of a scenario.
SimulatedData simulate_replicate_data(const SimulationScenario& scenario,
                                      std::uint64_t master_seed, long replicate);

struct StudyOptions {
  std::uint64_t master_seed = 1;
  unsigned threads = 1;
  PermutationMode mode = PermutationMode::Residual;
  bool pca_scale = false;
};

/// Per-replicate p-values of every method for one scenario.
std::vector<MethodPValues> simulate_replicates(const SimulationScenario& scenario,
                                               const StudyOptions& options);

/// Same replicates evaluated under both sidedness settings.
struct SidednessPair {
  MethodPValues one_sided;
  MethodPValues two_sided;
};
std::vector<SidednessPair> simulate_replicates_both_sides(const SimulationScenario& scenario,
                                                          const StudyOptions& options);

std::vector<PowerReport> run_study(const std::vector<SimulationScenario>& grid,
                                   const std::vector<Method>& methods,
                                   const StudyOptions& options);

double method_pvalue(const MethodPValues& p, Method method);

/// Built-in scenario grids, numbered 1-8.
std::vector<SimulationScenario> table_preset(int table, int replicates, long b_perm);
std::vector<Method> table_methods(int table);

}  // namespace mtaf
