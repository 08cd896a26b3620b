#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mtaf/data_model.hpp"
#include "mtaf/permutation_engine.hpp"
#include "mtaf/simulator.hpp"

namespace mtaf::io {

// Readers raise Error(ParseError | MissingValue | NonBinaryCoding, "<file>:<line>: ...").

/// `subject_id,<snp_1>,...` with 0/1/2 entries; optional map sidecar
/// `snp_id,chrom,pos`.
GenotypeTable read_genotypes(const std::string& path,
                             const std::optional<std::string>& map_path = std::nullopt);

/// `subject_id,<trait_1>,...` plus a types file of `trait_name,continuous|binary` lines.
TraitTable read_traits(const std::string& path, const std::string& types_path);

/// `subject_id,<cov_1>,...`, numeric.
CovariateTable read_covariates(const std::string& path);

GenotypeTable parse_genotypes(std::istream& in, const std::string& label);
TraitTable parse_traits(std::istream& in, const std::string& label, std::istream& types,
                        const std::string& types_label);
CovariateTable parse_covariates(std::istream& in, const std::string& label);
void apply_map(GenotypeTable& table, std::istream& in, const std::string& label);

inline const std::vector<std::string> kBranchColumns = {
    "binary", "continuous_original", "continuous_pca", "lower", "upper"};

void write_results(std::ostream& out, const std::vector<AssociationRecord>& records);
std::vector<AssociationRecord> read_results(std::istream& in, const std::string& label);

/// Rows i = 1..M in ascending p order: -log10((i - 0.5)/M), -log10(p_(i)).
void write_qq(std::ostream& out, const std::vector<AssociationRecord>& records);
void write_manhattan(std::ostream& out, const std::vector<AssociationRecord>& records);

/// INI-style grid: one `[name]` section of key=value pairs per scenario.
std::vector<SimulationScenario> read_scenarios(std::istream& in, const std::string& label);
void write_power_reports(std::ostream& out, const std::vector<PowerReport>& reports);

std::string format_double(double value);

}  // namespace mtaf::io
