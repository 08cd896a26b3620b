#include "doctest.h"

#include <cmath>

#include "mtaf/error.hpp"
#include "mtaf/simulator.hpp"

using namespace mtaf;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double correlation(const VectorXd& a, const VectorXd& b) {
  const VectorXd x = a.array() - a.mean(), y = b.array() - b.mean();
  return x.dot(y) / (x.norm() * y.norm());
}

}  // namespace

TEST_CASE("genotype frequencies") {
  Xoshiro256 rng(1);
  const auto g = simulate_genotype(1'000'000, 0.3, rng);
  const VectorXd x = g.as_vector();
  CHECK(x.mean() == doctest::Approx(0.6).epsilon(0.002 / 0.6));
  const double twos = static_cast<double>((x.array() == 2.0).count()) / 1e6;
  CHECK(std::abs(twos - 0.09) < 4.0 * std::sqrt(0.09 * 0.91 / 1e6));
}

TEST_CASE("seeded genotypes are reproducible") {
  Xoshiro256 a(42), b(42);
  const auto x = simulate_genotype(5, 0.3, a);
  const auto y = simulate_genotype(5, 0.3, b);
  CHECK(x.values == y.values);
  CHECK_FALSE(x.is_constant());
}

TEST_CASE("covariance construction") {
  const MatrixXd unit = compound_symmetric(VectorXd::Ones(2), 0.3);
  CHECK(unit(0, 0) == 1.0);
  CHECK(unit(0, 1) == doctest::Approx(0.3));
  CHECK(unit(1, 0) == doctest::Approx(0.3));

  Xoshiro256 rng(2);
  double sum = 0.0;
  const int draws = 1'000'000;
  for (int i = 0; i < draws / 2; ++i) {
    const MatrixXd s = simulate_covariance(2, 0.6, rng);
    sum += s(0, 0) + s(1, 1);
  }
  CHECK(sum / draws == doctest::Approx(4.0 / 3.0).epsilon(0.01));

  for (int k : {2, 10, 50, 100}) {
    const MatrixXd s = simulate_covariance(k, 0.6, rng);
    CHECK(s.llt().info() == Eigen::Success);
    CHECK(s(0, 1) == doctest::Approx(0.6 * std::sqrt(s(0, 0) * s(1, 1))));
  }
}

TEST_CASE("null continuous traits have compound-symmetric correlation") {
  SimulationScenario s;
  s.name = "cs";
  s.n = 100000;
  s.k = 3;
  s.rho = 0.3;
  const auto d = simulate_replicate_data(s, 3, 0);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < i; ++j)
      CHECK(std::abs(correlation(d.traits.values.col(i), d.traits.values.col(j)) - 0.3) < 0.01);
  CHECK(d.beta.isZero());
  CHECK(d.covariates.m() == 0);
}

TEST_CASE("null binary traits have prevalence one half") {
  SimulationScenario s;
  s.name = "bin";
  s.n = 100000;
  s.k = 2;
  s.kinds = TraitMix::Binary;
  const auto d = simulate_replicate_data(s, 4, 0);
  for (Index j = 0; j < 2; ++j) {
    CHECK(d.traits.kinds[static_cast<std::size_t>(j)] == TraitKind::Binary);
    CHECK(std::abs(d.traits.values.col(j).mean() - 0.5) < 0.01);
    CHECK(((d.traits.values.col(j).array() == 0.0) || (d.traits.values.col(j).array() == 1.0)).all());
  }
}

TEST_CASE("covariates are confounded with the genotype") {
  SimulationScenario s;
  s.name = "conf";
  s.k = 4;
  s.with_covariates = true;
  const auto d = simulate_replicate_data(s, 5, 0);
  REQUIRE(d.covariates.m() == 2);
  const VectorXd x = d.genotype.as_vector();
  for (Index m = 0; m < 2; ++m) {
    CHECK(correlation(x, d.covariates.values.col(m)) > 0.15);
    // strictly above the median is 1, so at most half the subjects are 1
    CHECK(d.covariates.values.col(m).sum() <= 500.0);
  }
}

TEST_CASE("effects land in the leading columns") {
  SimulationScenario s;
  s.name = "eff";
  s.k = 10;
  s.sparsity = Sparsity::Dense;
  s.effect_low = 0.2;
  s.effect_high = 0.3;
  CHECK(s.associated_count() == 4);
  const auto d = simulate_replicate_data(s, 6, 0);
  for (Index j = 0; j < 4; ++j) {
    CHECK(d.beta[j] >= 0.2);
    CHECK(d.beta[j] <= 0.3);
  }
  CHECK(d.beta.tail(6).isZero());

  s.sparsity = Sparsity::Sparse;
  CHECK(s.associated_count() == 1);
  s.k = 50;
  CHECK(s.associated_count() == 1);
  s.k = 100;
  CHECK(s.associated_count() == 2);
  s.sparsity = Sparsity::Dense;
  CHECK(s.associated_count() == 20);
}

TEST_CASE("half-half scenarios alternate kinds") {
  SimulationScenario s;
  s.kinds = TraitMix::Half;
  s.k = 4;
  CHECK(s.kind_of(0) == TraitKind::Continuous);
  CHECK(s.kind_of(1) == TraitKind::Binary);
  CHECK(s.kind_of(2) == TraitKind::Continuous);
  CHECK(s.kind_of(3) == TraitKind::Binary);
}

TEST_CASE("scenario validation") {
  SimulationScenario s;
  s.rho = 1.0;
  CHECK_THROWS_AS(s.validate(), Error);
  s.rho = 0.3;
  s.maf = 0.5;
  CHECK_THROWS_AS(s.validate(), Error);
  s.maf = 0.3;
  s.effect_low = 0.3;
  s.effect_high = 0.2;
  CHECK_THROWS_AS(s.validate(), Error);
  s.effect_high = 0.4;
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("studies are reproducible and report rates with standard errors") {
  SimulationScenario s;
  s.name = "repro";
  s.n = 300;
  s.k = 4;
  s.kinds = TraitMix::Half;
  s.with_covariates = true;
  s.sparsity = Sparsity::Dense;
  s.effect_low = 0.1;
  s.effect_high = 0.3;
  s.replicates = 30;
  s.b_perm = 99;
  StudyOptions opt;
  opt.master_seed = 8;
  const std::vector<Method> methods = {Method::MTAF, Method::minP};
  const auto a = run_study({s}, methods, opt);
  opt.threads = 3;
  const auto b = run_study({s}, methods, opt);
  REQUIRE(a.size() == 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].rejections == b[i].rejections);
    CHECK(a[i].rejection_rate == b[i].rejection_rate);
    const double r = a[i].rejection_rate;
    CHECK(a[i].mc_stderr == doctest::Approx(std::sqrt(r * (1 - r) / 30)));
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
  }
}

TEST_CASE("one-sided power is not below two-sided power with positive effects") {
  SimulationScenario s;
  s.name = "sided";
  s.n = 1000;
  s.k = 10;
  s.sparsity = Sparsity::Dense;
  s.effect_low = 0.1;
  s.effect_high = 0.2;
  s.rho = 0.3;
  s.replicates = 150;
  s.b_perm = 999;
  const auto pairs = simulate_replicates_both_sides(s, {});
  int one = 0, two = 0, smaller = 0;
  double mean_one = 0.0, mean_two = 0.0;
  for (const auto& p : pairs) {
    one += p.one_sided.mtaf <= 0.05;
    two += p.two_sided.mtaf <= 0.05;
    smaller += p.one_sided.mtaf <= p.two_sided.mtaf;
    mean_one += p.one_sided.mtaf / 150.0;
    mean_two += p.two_sided.mtaf / 150.0;
  }
  CHECK(one / 150.0 >= two / 150.0 - 0.02);
  CHECK(smaller >= 0.6 * 150);
  // Mean p-values are not compared: the one-sided combination is floored at
  // 2/(B+1) and is coarser near the floor, so its mean sits slightly higher.
  MESSAGE("mean one-sided p ", mean_one, ", mean two-sided p ", mean_two);
}

TEST_CASE("table presets") {
  CHECK(table_preset(1, 1000, 999).size() == 12);
  CHECK(table_preset(2, 1000, 999).size() == 8);
  CHECK(table_preset(3, 1000, 999).size() == 4);
  CHECK(table_preset(4, 500, 999).size() == 12);
  CHECK(table_preset(8, 300, 999).size() == 4);
  const auto t8 = table_preset(8, 300, 999);
  for (const auto& s : t8) {
    CHECK(s.kinds == TraitMix::Half);
    CHECK(s.with_covariates);
    CHECK(s.replicates == 300);
  }
  CHECK(t8[2].rho == 0.6);
  CHECK(t8[2].k == 10);
  CHECK(t8[2].effect_low == 0.05);
  CHECK(t8[2].effect_high == 0.3);
  CHECK_THROWS_AS(table_preset(9, 10, 99), Error);
  CHECK(table_methods(4).size() == 4);
  CHECK(table_methods(8) == std::vector<Method>{Method::MTAF, Method::minP});
  CHECK(parse_method("MTAF_PCA") == Method::MTAF_PCA);
  CHECK(parse_sparsity(to_string(Sparsity::Dense)) == Sparsity::Dense);
  CHECK(parse_trait_mix(to_string(TraitMix::Half)) == TraitMix::Half);
}
