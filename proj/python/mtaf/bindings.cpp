#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mtaf/af_combiner.hpp"
#include "mtaf/data_model.hpp"
#include "mtaf/error.hpp"
#include "mtaf/pca_transform.hpp"
#include "mtaf/permutation_engine.hpp"
#include "mtaf/score_engine.hpp"
#include "mtaf/simulator.hpp"

namespace py = pybind11;
using namespace mtaf;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

PValueMatrix two_sided(const MatrixXd& p) { return {p, Tail::TwoSided}; }

CovariateMatrix covariates_from(const std::optional<MatrixXd>& z, Index n) {
  if (!z || z->cols() == 0) return CovariateMatrix::intercept_only(n);
  if (z->rows() != n) throw Error(ErrorCode::DimensionMismatch, "covariates have the wrong number of rows");
  CovariateMatrix c;
  c.values = *z;
  for (Index j = 0; j < z->cols(); ++j) c.names.push_back("z" + std::to_string(j + 1));
  return c;
}

py::dict score_result(const ScoreTestResult& r) {
  py::dict d;
  d["u"] = r.u;
  d["v"] = r.v;
  d["z"] = r.z;
  d["p_lower"] = r.p_lower;
  d["p_upper"] = r.p_upper;
  d["p_two"] = r.p_two;
  return d;
}

py::dict record_dict(const AssociationRecord& r) {
  py::dict d;
  d["snp_id"] = r.snp_id;
  d["p_value"] = r.p_value;
  d["n_perm"] = r.n_perm;
  d["total_permutations"] = r.total_permutations;
  d["status"] = r.status_label();
  py::dict branches;
  for (const auto& [k, v] : r.branch_pvalues) branches[py::str(k)] = v;
  d["branches"] = branches;
  return d;
}

std::vector<py::dict> scan(const MatrixXd& genotypes, const MatrixXd& traits,
                           const std::vector<std::string>& kinds,
                           const std::optional<MatrixXd>& covariates,
                           std::optional<std::vector<std::string>> snp_ids, std::uint64_t seed,
                           long b_init, long growth, long b_max, double drop_coef, bool one_sided,
                           bool use_pca, bool pca_scale, unsigned threads) {
  const Index n = genotypes.rows();
  if (traits.rows() != n) throw Error(ErrorCode::DimensionMismatch, "traits and genotypes differ in rows");
  if (static_cast<Index>(kinds.size()) != traits.cols())
    throw Error(ErrorCode::DimensionMismatch, "one kind per trait column is required");
  if (snp_ids && static_cast<Index>(snp_ids->size()) != genotypes.cols())
    throw Error(ErrorCode::DimensionMismatch, "one id per genotype column is required");

  std::vector<GenotypeVector> snps;
  for (Index s = 0; s < genotypes.cols(); ++s) {
    GenotypeVector g;
    g.snp_id = snp_ids ? (*snp_ids)[static_cast<std::size_t>(s)] : "snp" + std::to_string(s + 1);
    for (Index i = 0; i < n; ++i) {
      const double v = genotypes(i, s);
      if (v != 0.0 && v != 1.0 && v != 2.0)
        throw Error(ErrorCode::ParseError, "genotypes must be coded 0, 1 or 2");
      g.values.push_back(static_cast<int>(v));
    }
    snps.push_back(std::move(g));
  }
  TraitMatrix t;
  t.values = traits;
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    t.names.push_back("trait" + std::to_string(k + 1));
    t.kinds.push_back(parse_trait_kind(kinds[k]));
  }

  const auto data = validate_dataset(snps, t, covariates_from(covariates, n));
  for (const auto& w : data.warnings) PyErr_WarnEx(PyExc_UserWarning, w.c_str(), 1);

  TestOptions opt;
  opt.one_sided = one_sided;
  opt.use_pca = use_pca;
  opt.pca_scale = pca_scale;
  opt.threads = threads;
  AdaptiveSchedule schedule{b_init, growth, b_max, drop_coef};
  schedule.validate();

  std::vector<AssociationRecord> records;
  {
    py::gil_scoped_release release;
    const MtafEngine engine(data, opt);
    records = adaptive_scan(engine, schedule, seed);
  }
  std::vector<py::dict> out(snps.size());
  for (std::size_t i = 0; i < records.size(); ++i) out[data.input_index[i]] = record_dict(records[i]);
  for (const auto& ex : data.excluded) {
    AssociationRecord r;
    r.snp_id = ex.snp.snp_id;
    r.p_value = std::nan("");
    r.status = RecordStatus::Degenerate;
    out[ex.input_index] = record_dict(r);
  }
  return out;
}

std::vector<py::dict> simulate_power(int n, int k, const std::string& kinds, double rho,
                                     const std::string& sparsity, double effect_low,
                                     double effect_high, bool with_covariates, int replicates,
                                     long b_perm, double alpha, bool one_sided, std::uint64_t seed,
                                     unsigned threads) {
  SimulationScenario s;
  s.name = "python";
  s.n = n;
  s.k = k;
  s.kinds = parse_trait_mix(kinds);
  s.rho = rho;
  s.sparsity = parse_sparsity(sparsity);
  s.effect_low = effect_low;
  s.effect_high = effect_high;
  s.with_covariates = with_covariates;
  s.replicates = replicates;
  s.b_perm = b_perm;
  s.alpha = alpha;
  s.one_sided = one_sided;
  StudyOptions opt;
  opt.master_seed = seed;
  opt.threads = threads;

  std::vector<PowerReport> reports;
  {
    py::gil_scoped_release release;
    reports = run_study({s}, {Method::MTAF, Method::MTAF_original, Method::MTAF_PCA, Method::minP}, opt);
  }
  std::vector<py::dict> out;
  for (const auto& r : reports) {
    py::dict d;
    d["method"] = std::string(to_string(r.method));
    d["rejections"] = r.rejections;
    d["rejection_rate"] = r.rejection_rate;
    d["mc_stderr"] = r.mc_stderr;
    out.push_back(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_mtaf, m) {
  m.doc() = "Multi-trait adaptive Fisher association test";

  py::register_exception<Error>(m, "MtafError", PyExc_ValueError);

  m.def("af_operator", [](const MatrixXd& p) { return af_operator(two_sided(p)).pvalues; },
        py::arg("p"), "Adaptive Fisher p-values, one per row; element 0 is the observed row.");
  m.def("minp_operator", [](const MatrixXd& p) { return minp_operator(two_sided(p)).pvalues; },
        py::arg("p"));
  m.def("combine_one_sided",
        [](const MatrixXd& lower, const MatrixXd& upper) {
          return combine_one_sided({lower, Tail::Lower}, {upper, Tail::Upper}).pvalues;
        },
        py::arg("lower"), py::arg("upper"));

  m.def("score_test",
        [](const VectorXd& y, const VectorXd& g, const std::string& kind,
           const std::optional<MatrixXd>& covariates) {
          if (g.size() != y.size()) throw Error(ErrorCode::DimensionMismatch, "y and g differ in length");
          const auto fit = fit_null(y, parse_trait_kind(kind), covariates_from(covariates, y.size()));
          return score_result(score_test(fit, g));
        },
        py::arg("y"), py::arg("g"), py::arg("kind") = "continuous", py::arg("covariates") = py::none());

  m.def("principal_components",
        [](const MatrixXd& x, bool scale) {
          const auto pc = principal_components(x, scale);
          py::dict d;
          d["scores"] = pc.scores;
          d["explained_variance"] = pc.explained_variance;
          d["loadings"] = pc.loadings;
          d["rank"] = pc.rank;
          return d;
        },
        py::arg("residuals"), py::arg("scale") = false);

  m.def("association_scan", &scan, py::arg("genotypes"), py::arg("traits"), py::arg("kinds"),
        py::arg("covariates") = py::none(), py::arg("snp_ids") = py::none(), py::arg("seed") = 1,
        py::arg("b_init") = 100, py::arg("growth") = 10, py::arg("b_max") = 10'000'000,
        py::arg("drop_coef") = 5.0, py::arg("one_sided") = true, py::arg("use_pca") = true,
        py::arg("pca_scale") = false, py::arg("threads") = 0,
        "Adaptive permutation scan; genotypes is n x SNPs, traits is n x K.");

  m.def("simulate_power", &simulate_power, py::arg("n") = 1000, py::arg("k") = 10,
        py::arg("kinds") = "continuous", py::arg("rho") = 0.3, py::arg("sparsity") = "null",
        py::arg("effect_low") = 0.0, py::arg("effect_high") = 0.0, py::arg("with_covariates") = false,
        py::arg("replicates") = 100, py::arg("b_perm") = 999, py::arg("alpha") = 0.05,
        py::arg("one_sided") = true, py::arg("seed") = 1, py::arg("threads") = 0);
}
