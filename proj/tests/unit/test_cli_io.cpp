#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "mtaf/cli_io.hpp"
#include "mtaf/error.hpp"
#include "mtaf/rng.hpp"

using namespace mtaf;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("mtaf_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string err;
};

Run run_cli(const std::string& args) {
  const char* cli = std::getenv("MTAF_CLI");
  REQUIRE_MESSAGE(cli != nullptr, "MTAF_CLI must point at the mtaf executable");
  const fs::path err = scratch() / "stderr.txt";
  const std::string cmd = std::string(cli) + " " + args + " > /dev/null 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

// n subjects, `snps` null SNPs, one continuous and one binary trait, one covariate.
void write_toy(const fs::path& dir, int n, int snps, std::uint64_t seed) {
  Xoshiro256 rng(seed);
  std::ostringstream geno, traits, covar, map;
  geno << "subject_id";
  for (int s = 0; s < snps; ++s) geno << ",rs" << s;
  geno << '\n';
  traits << "subject_id,bmi,case\n";
  covar << "subject_id,age\n";
  map << "snp_id,chrom,pos\n";
  for (int s = 0; s < snps; ++s) map << "rs" << s << ',' << 1 + s % 3 << ',' << 1000 * (s + 1) << '\n';
  for (int i = 0; i < n; ++i) {
    geno << "id" << i;
    for (int s = 0; s < snps; ++s) geno << ',' << (rng.uniform() < 0.3) + (rng.uniform() < 0.3);
    geno << '\n';
    traits << "id" << i << ',' << 20.0 + 3.0 * rng.uniform() << ',' << (rng.uniform() < 0.4) << '\n';
    covar << "id" << i << ',' << 30 + static_cast<int>(rng.bounded(40)) << '\n';
  }
  write(dir / "geno.csv", geno.str());
  write(dir / "traits.csv", traits.str());
  write(dir / "types.csv", "trait_name,kind\nbmi,continuous\ncase,binary\n");
  write(dir / "covar.csv", covar.str());
  write(dir / "geno.map", map.str());
}

std::string toy_args(const fs::path& dir) {
  return "test --geno " + (dir / "geno.csv").string() + " --traits " + (dir / "traits.csv").string() +
         " --trait-types " + (dir / "types.csv").string() + " --covar " + (dir / "covar.csv").string() +
         " --map " + (dir / "geno.map").string();
}

}  // namespace

TEST_CASE("parse genotypes with line-numbered errors") {
  std::istringstream ok("subject_id,rs1,rs2\na,0,1\nb,2,0\n\nc,1,1\n");
  const auto t = io::parse_genotypes(ok, "g.csv");
  CHECK(t.subject_ids == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.snps.size() == 2);
  CHECK(t.snps[1].values == std::vector<int>{1, 0, 1});

  std::istringstream bad("subject_id,rs1\na,0\nb,3\n");
  try {
    io::parse_genotypes(bad, "g.csv");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("g.csv:3:") != std::string::npos);
  }
  std::istringstream missing("subject_id,rs1\na,NA\n");
  try {
    io::parse_genotypes(missing, "g.csv");
    FAIL("expected MissingValue");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingValue);
  }
  std::istringstream ragged("subject_id,rs1,rs2\na,0\n");
  CHECK_THROWS_AS(io::parse_genotypes(ragged, "g.csv"), Error);
}

TEST_CASE("map sidecar fills positions") {
  std::istringstream g("subject_id,rs1,rs2\na,0,1\n");
  auto t = io::parse_genotypes(g, "g");
  std::istringstream m("snp_id,chrom,pos\nrs2,7,12345\n");
  io::apply_map(t, m, "m");
  CHECK_FALSE(t.snps[0].chrom.has_value());
  CHECK(*t.snps[1].chrom == "7");
  CHECK(*t.snps[1].pos == 12345);
}

TEST_CASE("trait parsing checks binary coding and kinds") {
  std::istringstream types("bmi,continuous\ncase,binary\n");
  std::istringstream traits("subject_id,bmi,case\na,1.5,0\nb,2.5,1\n");
  const auto t = io::parse_traits(traits, "t", types, "k");
  CHECK(t.traits.kinds == std::vector<TraitKind>{TraitKind::Continuous, TraitKind::Binary});
  CHECK(t.traits.values(1, 0) == 2.5);

  std::istringstream types2("bmi,continuous\ncase,binary\n");
  std::istringstream bad("subject_id,bmi,case\na,1.5,0\nb,2.5,2\n");
  try {
    io::parse_traits(bad, "t.csv", types2, "k");
    FAIL("expected NonBinaryCoding");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonBinaryCoding);
    CHECK(std::string(e.what()).find("t.csv:3:") != std::string::npos);
  }
  std::istringstream types3("bmi,continuous\n");
  std::istringstream undeclared("subject_id,bmi,case\na,1.5,0\n");
  CHECK_THROWS_AS(io::parse_traits(undeclared, "t", types3, "k"), Error);
  std::istringstream types4("bmi,ordinal\n");
  std::istringstream one("subject_id,bmi\na,1\n");
  CHECK_THROWS_AS(io::parse_traits(one, "t", types4, "k"), Error);
}

TEST_CASE("results round-trip") {
  std::vector<AssociationRecord> recs(3);
  recs[0].snp_id = "rs1";
  recs[0].chrom = "1";
  recs[0].pos = 100;
  recs[0].p_value = 1.0 / 3.0;
  recs[0].n_perm = 1000;
  recs[0].branch_pvalues = {{"binary", 0.25}, {"continuous_original", 0.1 + 0.2}, {"lower", 1e-300}};
  recs[1].snp_id = "rs2";
  recs[1].p_value = 0.77;
  recs[1].n_perm = 100;
  recs[1].status = RecordStatus::Dropped;
  recs[1].dropped_round = 1;
  recs[2].snp_id = "rs3";
  recs[2].p_value = std::nan("");
  recs[2].status = RecordStatus::Degenerate;

  std::stringstream ss;
  io::write_results(ss, recs);
  const auto back = io::read_results(ss, "r");
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].snp_id == recs[i].snp_id);
    CHECK(back[i].chrom == recs[i].chrom);
    CHECK(back[i].pos == recs[i].pos);
    CHECK(back[i].n_perm == recs[i].n_perm);
    CHECK(back[i].status_label() == recs[i].status_label());
    CHECK(back[i].branch_pvalues == recs[i].branch_pvalues);
    if (std::isnan(recs[i].p_value)) CHECK(std::isnan(back[i].p_value));
    else CHECK(back[i].p_value == recs[i].p_value);
  }
}

TEST_CASE("QQ and Manhattan data") {
  std::vector<AssociationRecord> recs(4);
  const double p[] = {0.5, 0.01, std::nan(""), 0.2};
  for (int i = 0; i < 4; ++i) {
    recs[static_cast<std::size_t>(i)].snp_id = "s" + std::to_string(i);
    recs[static_cast<std::size_t>(i)].chrom = "2";
    recs[static_cast<std::size_t>(i)].pos = i;
    recs[static_cast<std::size_t>(i)].p_value = p[i];
  }
  std::stringstream qq;
  io::write_qq(qq, recs);
  std::string line;
  std::getline(qq, line);
  CHECK(line == "expected_neglog10,observed_neglog10");
  const double sorted[] = {0.01, 0.2, 0.5};
  for (int i = 1; i <= 3; ++i) {
    REQUIRE(std::getline(qq, line));
    const auto comma = line.find(',');
    CHECK(std::stod(line.substr(0, comma)) == doctest::Approx(-std::log10((i - 0.5) / 3.0)));
    CHECK(std::stod(line.substr(comma + 1)) == doctest::Approx(-std::log10(sorted[i - 1])));
  }
  CHECK_FALSE(std::getline(qq, line));

  std::stringstream man;
  io::write_manhattan(man, recs);
  std::getline(man, line);
  CHECK(line == "chrom,pos,neglog10_p");
  int rows = 0;
  while (std::getline(man, line)) ++rows;
  CHECK(rows == 3);
}

TEST_CASE("scenario config") {
  std::istringstream ok(
      "[a]\nk=10\nkinds=half\nrho=0.6\nsparsity=dense\neffect_low=0.05\neffect_high=0.3\n"
      "covariates=2\nreplicates=300\nb_perm=999\nsidedness=two\n[b]\nk=50\n");
  const auto grid = io::read_scenarios(ok, "g.ini");
  REQUIRE(grid.size() == 2);
  CHECK(grid[0].name == "a");
  CHECK(grid[0].kinds == TraitMix::Half);
  CHECK(grid[0].with_covariates);
  CHECK_FALSE(grid[0].one_sided);
  CHECK(grid[0].effect_high == 0.3);
  CHECK(grid[1].k == 50);

  std::istringstream unknown("[a]\nkay=10\n");
  CHECK_THROWS_AS(io::read_scenarios(unknown, "g"), Error);
  std::istringstream bad_number("[a]\nrho=high\n");
  CHECK_THROWS_AS(io::read_scenarios(bad_number, "g"), Error);
  std::istringstream invalid("[a]\nrho=1.5\n");
  CHECK_THROWS_AS(io::read_scenarios(invalid, "g"), Error);
  std::istringstream empty("");
  CHECK_THROWS_AS(io::read_scenarios(empty, "g"), Error);
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 0.999999999, 123456.789})
    CHECK(std::stod(io::format_double(v)) == v);
  CHECK(io::format_double(std::nan("")) == "NA");
}

TEST_CASE("cli test command") {
  const fs::path dir = scratch() / "toy";
  fs::create_directories(dir);
  write_toy(dir, 200, 100, 5);

  SUBCASE("null SNPs mostly drop in round 1") {
    const auto r = run_cli(toy_args(dir) + " --out " + (dir / "scan").string() + " --b-max 10000");
    REQUIRE(r.code == 0);
    std::ifstream in(dir / "scan.results.csv");
    const auto recs = io::read_results(in, "scan");
    REQUIRE(recs.size() == 100);
    int dropped = 0;
    for (const auto& rec : recs) dropped += rec.status_label() == "dropped_round_1";
    CHECK(dropped >= 85);
    CHECK(recs[0].snp_id == "rs0");
    CHECK(*recs[4].chrom == "2");
    CHECK(fs::exists(dir / "scan.qq.csv"));
    CHECK(fs::exists(dir / "scan.manhattan.csv"));
  }
  SUBCASE("single round") {
    const auto r = run_cli(toy_args(dir) + " --out " + (dir / "fixed").string() +
                           " --b-init 1000 --b-max 1000 --two-sided --no-pca");
    REQUIRE(r.code == 0);
    std::ifstream in(dir / "fixed.results.csv");
    for (const auto& rec : io::read_results(in, "fixed")) CHECK(rec.n_perm == 1000);
  }
  SUBCASE("non-binary value in a binary trait") {
    std::string text = slurp(dir / "traits.csv");
    const auto pos = text.find('\n', text.find('\n') + 1);  // end of line 2
    text.replace(pos - 1, 1, "2");
    write(dir / "bad_traits.csv", text);
    const auto r = run_cli("test --geno " + (dir / "geno.csv").string() + " --traits " +
                           (dir / "bad_traits.csv").string() + " --trait-types " +
                           (dir / "types.csv").string() + " --out " + (dir / "bad").string());
    CHECK(r.code == 2);
    CHECK(r.err.find("NonBinaryCoding") != std::string::npos);
    CHECK(r.err.find("bad_traits.csv:2:") != std::string::npos);
  }
  SUBCASE("all SNPs constant") {
    std::string flat = "subject_id,rs0\n";
    for (int i = 0; i < 200; ++i) flat += "id" + std::to_string(i) + ",1\n";
    write(dir / "flat.csv", flat);
    const auto r = run_cli("test --geno " + (dir / "flat.csv").string() + " --traits " +
                           (dir / "traits.csv").string() + " --trait-types " +
                           (dir / "types.csv").string() + " --out " + (dir / "flat").string());
    CHECK(r.code == 3);
  }
  SUBCASE("constant SNPs appear as degenerate rows") {
    std::string text = slurp(dir / "geno.csv");
    std::istringstream in(text);
    std::string line, out;
    bool header = true;
    while (std::getline(in, line)) {
      out += line + (header ? ",flat" : ",0") + "\n";
      header = false;
    }
    write(dir / "geno_flat.csv", out);
    const auto r = run_cli("test --geno " + (dir / "geno_flat.csv").string() + " --traits " +
                           (dir / "traits.csv").string() + " --trait-types " +
                           (dir / "types.csv").string() + " --b-max 100 --out " + (dir / "gf").string());
    REQUIRE(r.code == 0);
    std::ifstream res(dir / "gf.results.csv");
    const auto recs = io::read_results(res, "gf");
    REQUIRE(recs.size() == 101);
    CHECK(recs.back().snp_id == "flat");
    CHECK(recs.back().status_label() == "degenerate");
  }
}

TEST_CASE("cli simulate command") {
  const fs::path dir = scratch() / "sim";
  fs::create_directories(dir);
  CHECK(run_cli("simulate --table 8 --replicates 0").code == 2);
  write(dir / "bad.ini", "[a]\nkay=3\n");
  CHECK(run_cli("simulate --config " + (dir / "bad.ini").string()).code == 2);
  write(dir / "tiny.ini", "[tiny]\nn=200\nk=3\nkinds=half\ncovariates=2\nreplicates=5\nb_perm=49\n");
  const auto r = run_cli("simulate --config " + (dir / "tiny.ini").string() + " --out " +
                         (dir / "power.csv").string());
  REQUIRE(r.code == 0);
  std::ifstream in(dir / "power.csv");
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);
}
