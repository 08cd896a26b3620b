// mtaf: multi-trait association scan and simulation driver.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mtaf/cli_io.hpp"
#include "mtaf/error.hpp"
#include "mtaf/permutation_engine.hpp"
#include "mtaf/simulator.hpp"

namespace {

struct TestArgs {
  std::string geno, traits, trait_types, covar, map, out = "mtaf";
  std::uint64_t seed = 1;
  unsigned threads = 1;
  long b_init = 100, b_max = 10'000'000, growth = 10;
  double drop_coef = 5.0;
  double alpha = 5e-8;
  bool two_sided = false, no_pca = false, pca_scale = false;
};

struct SimArgs {
  std::string config, out;
  int table = 0;
  int replicates = -1;
  long b = 999;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

int exit_code(const mtaf::Error& e) {
  switch (e.code()) {
    case mtaf::ErrorCode::AllSnpsConstant: return 3;
    default: return 2;
  }
}

void write_file(const std::string& path, auto&& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  writer(out);
}

int run_test(const TestArgs& a) {
  using namespace mtaf;
  std::optional<std::string> map;
  if (!a.map.empty()) map = a.map;
  const auto geno = io::read_genotypes(a.geno, map);
  const auto traits = io::read_traits(a.traits, a.trait_types);
  CovariateTable covar;
  if (!a.covar.empty()) {
    covar = io::read_covariates(a.covar);
  } else {
    covar.subject_ids = geno.subject_ids;
    covar.covariates = CovariateMatrix::intercept_only(static_cast<Index>(geno.subject_ids.size()));
  }

  const ValidatedDataset data = validate_dataset(geno, traits, covar);
  for (const auto& w : data.warnings) std::cerr << "warning: " << w << '\n';

  TestOptions opt;
  opt.one_sided = !a.two_sided;
  opt.use_pca = !a.no_pca;
  opt.pca_scale = a.pca_scale;
  opt.threads = a.threads;
  AdaptiveSchedule schedule{a.b_init, a.growth, a.b_max, a.drop_coef};
  schedule.validate();

  const MtafEngine engine(data, opt);
  const auto scanned = adaptive_scan(engine, schedule, a.seed);

  // One row per input SNP, in input order; excluded SNPs are reported as degenerate.
  std::vector<AssociationRecord> records(geno.snps.size());
  for (std::size_t i = 0; i < scanned.size(); ++i) records[data.input_index[i]] = scanned[i];
  for (const auto& ex : data.excluded) {
    auto& r = records[ex.input_index];
    r.snp_id = ex.snp.snp_id;
    r.chrom = ex.snp.chrom;
    r.pos = ex.snp.pos;
    r.p_value = std::nan("");
    r.n_perm = 0;
    r.status = RecordStatus::Degenerate;
  }

  write_file(a.out + ".results.csv", [&](std::ostream& o) { io::write_results(o, records); });
  write_file(a.out + ".qq.csv", [&](std::ostream& o) { io::write_qq(o, records); });
  write_file(a.out + ".manhattan.csv", [&](std::ostream& o) { io::write_manhattan(o, records); });

  std::size_t hits = 0;
  for (const auto& r : records) hits += r.p_value <= a.alpha;
  std::cerr << records.size() << " SNPs tested, " << hits << " with p <= " << a.alpha << '\n';
  return 0;
}

int run_simulate(const SimArgs& a) {
  using namespace mtaf;
  std::vector<SimulationScenario> grid;
  std::vector<Method> methods = {Method::MTAF, Method::MTAF_original, Method::MTAF_PCA, Method::minP};
  if (a.replicates == 0) throw Error(ErrorCode::InvalidArgument, "--replicates must be positive");
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw Error(ErrorCode::ParseError, a.config + ": cannot open");
    grid = io::read_scenarios(in, a.config);
    if (a.replicates > 0)
      for (auto& s : grid) s.replicates = a.replicates;
  } else {
    grid = table_preset(a.table, a.replicates > 0 ? a.replicates : 1000, a.b);
    methods = table_methods(a.table);
  }

  StudyOptions opt;
  opt.master_seed = a.seed;
  opt.threads = a.threads;
  const auto reports = run_study(grid, methods, opt);
  if (a.out.empty()) {
    io::write_power_reports(std::cout, reports);
  } else {
    write_file(a.out, [&](std::ostream& o) { io::write_power_reports(o, reports); });
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive Fisher multi-trait association test"};
  app.require_subcommand(1);

  TestArgs t;
  auto* test = app.add_subcommand("test", "Scan SNPs for association with multiple traits");
  test->add_option("--geno", t.geno, "Genotype CSV (subject_id, one column per SNP)")->required();
  test->add_option("--traits", t.traits, "Trait CSV (subject_id, one column per trait)")->required();
  test->add_option("--trait-types", t.trait_types, "trait_name,continuous|binary lines")->required();
  test->add_option("--covar", t.covar, "Covariate CSV; intercept only when omitted");
  test->add_option("--map", t.map, "snp_id,chrom,pos sidecar");
  test->add_option("--out", t.out, "Output prefix")->capture_default_str();
  test->add_option("--seed", t.seed)->capture_default_str();
  test->add_option("--threads", t.threads, "0 = all cores")->capture_default_str();
  test->add_option("--b-init", t.b_init)->capture_default_str();
  test->add_option("--b-max", t.b_max)->capture_default_str();
  test->add_option("--growth", t.growth)->capture_default_str();
  test->add_option("--drop-coef", t.drop_coef)->capture_default_str();
  test->add_option("--alpha", t.alpha, "Threshold for the summary count")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  auto* one = test->add_flag("--one-sided", "Combine lower and upper tails (default)");
  auto* two = test->add_flag("--two-sided", t.two_sided, "Use two-sided per-trait p-values");
  one->excludes(two);
  test->add_flag("--no-pca", t.no_pca, "Skip the principal-component branch");
  test->add_flag("--pca-scale", t.pca_scale, "Standardize residuals before the PCA");

  SimArgs s;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo type I error and power");
  auto* cfg = sim->add_option("--config", s.config, "INI scenario grid");
  auto* tab = sim->add_option("--table", s.table, "Built-in grid 1..8")->check(CLI::Range(1, 8));
  cfg->excludes(tab);
  sim->add_option("--replicates", s.replicates);
  sim->add_option("--b", s.b, "Permutations per replicate")->capture_default_str();
  sim->add_option("--seed", s.seed)->capture_default_str();
  sim->add_option("--threads", s.threads)->capture_default_str();
  sim->add_option("--out", s.out, "Power CSV; stdout when omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*test) return run_test(t);
    if (s.config.empty() && s.table == 0) {
      std::cerr << "simulate: one of --config or --table is required\n";
      return 2;
    }
    return run_simulate(s);
  } catch (const mtaf::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
