#include "mtaf/cli_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mtaf/error.hpp"

namespace mtaf::io {

namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& label, long line, const std::string& what) {
  throw Error(code, label + ":" + std::to_string(line) + ": " + what);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool is_missing(std::string_view s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == ".";
}

// CSV body as (line number, fields) rows; blank lines are skipped.
struct Csv {
  std::vector<std::string> header;
  std::vector<std::pair<long, std::vector<std::string>>> rows;
};

Csv read_csv(std::istream& in, const std::string& label) {
  Csv csv;
  std::string line;
  long number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    auto fields = split(line);
    if (csv.header.empty()) {
      csv.header = std::move(fields);
      continue;
    }
    if (fields.size() != csv.header.size())
      fail(ErrorCode::ParseError, label, number,
           "expected " + std::to_string(csv.header.size()) + " fields, found " +
               std::to_string(fields.size()));
    csv.rows.emplace_back(number, std::move(fields));
  }
  if (csv.header.empty()) fail(ErrorCode::ParseError, label, number, "empty file");
  return csv;
}

double parse_number(std::string_view s, const std::string& label, long line) {
  if (is_missing(s)) fail(ErrorCode::MissingValue, label, line, "missing value");
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    fail(ErrorCode::ParseError, label, line, "not a number: '" + std::string(s) + "'");
  return v;
}

long parse_integer(std::string_view s, const std::string& label, long line) {
  long v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end)
    fail(ErrorCode::ParseError, label, line, "not an integer: '" + std::string(s) + "'");
  return v;
}

std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, path + ": cannot open");
  return in;
}

void check_subject_header(const Csv& csv, const std::string& label) {
  if (csv.header.front() != "subject_id")
    fail(ErrorCode::ParseError, label, 1, "first column must be 'subject_id'");
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "NA";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

GenotypeTable parse_genotypes(std::istream& in, const std::string& label) {
  const Csv csv = read_csv(in, label);
  check_subject_header(csv, label);
  GenotypeTable table;
  const std::size_t snps = csv.header.size() - 1;
  table.snps.resize(snps);
  for (std::size_t s = 0; s < snps; ++s) {
    table.snps[s].snp_id = csv.header[s + 1];
    table.snps[s].values.reserve(csv.rows.size());
  }
  for (const auto& [line, fields] : csv.rows) {
    table.subject_ids.push_back(fields[0]);
    for (std::size_t s = 0; s < snps; ++s) {
      const auto& f = fields[s + 1];
      if (is_missing(f))
        fail(ErrorCode::MissingValue, label, line, "missing genotype for SNP '" + csv.header[s + 1] + "'");
      const long v = parse_integer(f, label, line);
      if (v < 0 || v > 2)
        fail(ErrorCode::ParseError, label, line, "genotype " + f + " outside {0,1,2}");
      table.snps[s].values.push_back(static_cast<int>(v));
    }
  }
  return table;
}

void apply_map(GenotypeTable& table, std::istream& in, const std::string& label) {
  const Csv csv = read_csv(in, label);
  if (csv.header.size() != 3 || csv.header[0] != "snp_id")
    fail(ErrorCode::ParseError, label, 1, "expected header snp_id,chrom,pos");
  std::unordered_map<std::string, std::pair<std::string, std::int64_t>> entries;
  for (const auto& [line, fields] : csv.rows)
    entries[fields[0]] = {fields[1], parse_integer(fields[2], label, line)};
  for (auto& snp : table.snps) {
    auto it = entries.find(snp.snp_id);
    if (it == entries.end()) continue;
    snp.chrom = it->second.first;
    snp.pos = it->second.second;
  }
}

GenotypeTable read_genotypes(const std::string& path, const std::optional<std::string>& map_path) {
  auto in = open(path);
  GenotypeTable table = parse_genotypes(in, path);
  if (map_path) {
    auto map = open(*map_path);
    apply_map(table, map, *map_path);
  }
  return table;
}

TraitTable parse_traits(std::istream& in, const std::string& label, std::istream& types,
                        const std::string& types_label) {
  std::unordered_map<std::string, TraitKind> declared;
  std::string line;
  long number = 0;
  while (std::getline(types, line)) {
    ++number;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() != 2) fail(ErrorCode::ParseError, types_label, number, "expected trait_name,kind");
    if (fields[0] == "trait_name" || fields[0] == "trait") continue;  // optional header
    try {
      declared[fields[0]] = parse_trait_kind(fields[1]);
    } catch (const Error&) {
      fail(ErrorCode::ParseError, types_label, number,
           "unknown trait kind '" + fields[1] + "' (expected continuous|binary)");
    }
  }

  const Csv csv = read_csv(in, label);
  check_subject_header(csv, label);
  TraitTable table;
  const std::size_t k = csv.header.size() - 1;
  for (std::size_t j = 0; j < k; ++j) {
    const auto& name = csv.header[j + 1];
    auto it = declared.find(name);
    if (it == declared.end())
      fail(ErrorCode::ParseError, types_label, number, "no kind declared for trait '" + name + "'");
    table.traits.names.push_back(name);
    table.traits.kinds.push_back(it->second);
  }
  table.traits.values.resize(static_cast<Index>(csv.rows.size()), static_cast<Index>(k));
  Index i = 0;
  for (const auto& [line_no, fields] : csv.rows) {
    table.subject_ids.push_back(fields[0]);
    for (std::size_t j = 0; j < k; ++j) {
      const double v = parse_number(fields[j + 1], label, line_no);
      if (table.traits.kinds[j] == TraitKind::Binary && v != 0.0 && v != 1.0)
        fail(ErrorCode::NonBinaryCoding, label, line_no,
             "binary trait '" + table.traits.names[j] + "' has value " + fields[j + 1]);
      table.traits.values(i, static_cast<Index>(j)) = v;
    }
    ++i;
  }
  return table;
}

TraitTable read_traits(const std::string& path, const std::string& types_path) {
  auto in = open(path);
  auto types = open(types_path);
  return parse_traits(in, path, types, types_path);
}

CovariateTable parse_covariates(std::istream& in, const std::string& label) {
  const Csv csv = read_csv(in, label);
  check_subject_header(csv, label);
  CovariateTable table;
  const std::size_t m = csv.header.size() - 1;
  table.covariates.names.assign(csv.header.begin() + 1, csv.header.end());
  table.covariates.values.resize(static_cast<Index>(csv.rows.size()), static_cast<Index>(m));
  Index i = 0;
  for (const auto& [line, fields] : csv.rows) {
    table.subject_ids.push_back(fields[0]);
    for (std::size_t j = 0; j < m; ++j)
      table.covariates.values(i, static_cast<Index>(j)) = parse_number(fields[j + 1], label, line);
    ++i;
  }
  return table;
}

CovariateTable read_covariates(const std::string& path) {
  auto in = open(path);
  return parse_covariates(in, path);
}

void write_results(std::ostream& out, const std::vector<AssociationRecord>& records) {
  out << "snp_id,chrom,pos,p_value,n_perm,status";
  for (const auto& b : kBranchColumns) out << ",p_" << b;
  out << '\n';
  for (const auto& r : records) {
    out << r.snp_id << ',' << r.chrom.value_or("NA") << ','
        << (r.pos ? std::to_string(*r.pos) : std::string("NA")) << ','
        << format_double(r.p_value) << ',' << r.n_perm << ',' << r.status_label();
    for (const auto& b : kBranchColumns) {
      auto it = r.branch_pvalues.find(b);
      out << ',' << (it == r.branch_pvalues.end() ? std::string("NA") : format_double(it->second));
    }
    out << '\n';
  }
}

std::vector<AssociationRecord> read_results(std::istream& in, const std::string& label) {
  const Csv csv = read_csv(in, label);
  if (csv.header.size() != 6 + kBranchColumns.size() || csv.header[0] != "snp_id")
    fail(ErrorCode::ParseError, label, 1, "not a results file");
  std::vector<AssociationRecord> out;
  for (const auto& [line, f] : csv.rows) {
    AssociationRecord r = AssociationRecord::from_status_label(f[5]);
    r.snp_id = f[0];
    if (f[1] != "NA") r.chrom = f[1];
    if (f[2] != "NA") r.pos = parse_integer(f[2], label, line);
    r.p_value = f[3] == "NA" ? std::numeric_limits<double>::quiet_NaN()
                             : parse_number(f[3], label, line);
    r.n_perm = parse_integer(f[4], label, line);
    for (std::size_t b = 0; b < kBranchColumns.size(); ++b) {
      const auto& v = f[6 + b];
      if (v != "NA") r.branch_pvalues[kBranchColumns[b]] = parse_number(v, label, line);
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_qq(std::ostream& out, const std::vector<AssociationRecord>& records) {
  std::vector<double> p;
  for (const auto& r : records)
    if (!std::isnan(r.p_value)) p.push_back(r.p_value);
  std::sort(p.begin(), p.end());
  const double m = static_cast<double>(p.size());
  out << "expected_neglog10,observed_neglog10\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double expected = -std::log10((static_cast<double>(i + 1) - 0.5) / m);
    out << format_double(expected) << ',' << format_double(-std::log10(p[i])) << '\n';
  }
}

void write_manhattan(std::ostream& out, const std::vector<AssociationRecord>& records) {
  out << "chrom,pos,neglog10_p\n";
  for (const auto& r : records) {
    if (std::isnan(r.p_value)) continue;
    out << r.chrom.value_or("NA") << ',' << (r.pos ? std::to_string(*r.pos) : std::string("NA"))
        << ',' << format_double(-std::log10(r.p_value)) << '\n';
  }
}

std::vector<SimulationScenario> read_scenarios(std::istream& in, const std::string& label) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorCode::ParseError, label, static_cast<long>(e.line()), e.message());
  }
  std::vector<SimulationScenario> out;
  for (const auto& [section, body] : tree) {
    if (body.empty())
      throw Error(ErrorCode::ParseError, label + ": key '" + section + "' outside a [scenario] section");
    SimulationScenario s;
    s.name = section;
    auto where = label + ": [" + section + "]";
    for (const auto& [key, node] : body) {
      const std::string value = node.get_value<std::string>();
      auto number = [&] {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc() || ptr != value.data() + value.size())
          throw Error(ErrorCode::ParseError, where + " " + key + ": not a number '" + value + "'");
        return v;
      };
      try {
        if (key == "n") s.n = static_cast<int>(number());
        else if (key == "k") s.k = static_cast<int>(number());
        else if (key == "kinds") s.kinds = parse_trait_mix(value);
        else if (key == "rho") s.rho = number();
        else if (key == "sparsity") s.sparsity = parse_sparsity(value);
        else if (key == "effect_low") s.effect_low = number();
        else if (key == "effect_high") s.effect_high = number();
        else if (key == "maf") s.maf = number();
        else if (key == "covariates" || key == "with_covariates") s.with_covariates = number() > 0;
        else if (key == "replicates") s.replicates = static_cast<int>(number());
        else if (key == "b_perm") s.b_perm = static_cast<long>(number());
        else if (key == "alpha") s.alpha = number();
        else if (key == "sidedness") {
          if (value != "one" && value != "two")
            throw Error(ErrorCode::ParseError, "sidedness must be one|two");
          s.one_sided = value == "one";
        } else {
          throw Error(ErrorCode::ParseError, "unknown key");
        }
      } catch (const Error& e) {
        throw Error(ErrorCode::ParseError, where + " " + key + ": " + e.what());
      }
    }
    try {
      s.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, label + ": " + e.what());
    }
    out.push_back(std::move(s));
  }
  if (out.empty()) throw Error(ErrorCode::ParseError, label + ": no scenarios");
  return out;
}

void write_power_reports(std::ostream& out, const std::vector<PowerReport>& reports) {
  out << "scenario,kinds,k,rho,sparsity,effect_low,effect_high,covariates,n,replicates,b_perm,"
         "alpha,sidedness,method,rejections,rejection_rate,mc_stderr\n";
  for (const auto& r : reports) {
    const auto& s = r.scenario;
    out << s.name << ',' << to_string(s.kinds) << ',' << s.k << ',' << format_double(s.rho) << ','
        << to_string(s.sparsity) << ',' << format_double(s.effect_low) << ','
        << format_double(s.effect_high) << ',' << (s.with_covariates ? 2 : 0) << ',' << s.n << ','
        << s.replicates << ',' << s.b_perm << ',' << format_double(s.alpha) << ','
        << (s.one_sided ? "one" : "two") << ',' << to_string(r.method) << ',' << r.rejections
        << ',' << format_double(r.rejection_rate) << ',' << format_double(r.mc_stderr) << '\n';
  }
}

}  // namespace mtaf::io
