#pragma once

// Genotype / phenotype text files and the integer encoding of nucleotides.
//
// Genotype file: header "variety,<snp_1>,...,<snp_d>", then one row per
// variety with single-character cells from {A,C,G,T,R,Y,S,W,K,M,N}
// (lowercase accepted). Phenotype file: header "variety,<trait_1>,...",
// numeric cells or the literal NA.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace resgene::geno {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FormatOptions {
  char delimiter = ',';
};

// A,T -> 0; G,C -> 2; N -> -1; R,Y,S,W,K,M -> 1. Returns nullopt for any
// other character (after upper-casing).
std::optional<std::int8_t> try_encode_base(char c);

// Throws ParseError naming the row/column when c is outside the alphabet.
std::int8_t encode_base(char c, std::size_t row = 0, std::size_t col = 0);

struct RawGenotypeTable {
  std::vector<std::string> variety_ids;
  std::vector<std::string> snp_ids;
  std::vector<char> cells;  // row-major n x d, upper-cased

  std::size_t n() const { return variety_ids.size(); }
  std::size_t d() const { return snp_ids.size(); }
  char at(std::size_t row, std::size_t col) const {
    return cells[row * d() + col];
  }
};

struct TraitColumn {
  std::string name;
  std::vector<std::string> variety_ids;
  std::vector<std::optional<double>> values;  // nullopt = NA
};

using TraitTable = std::vector<TraitColumn>;

RawGenotypeTable parse_genotypes(std::istream& in,
                                 const FormatOptions& opts = {},
                                 const std::string& source = "<stream>");
RawGenotypeTable load_genotypes(const std::filesystem::path& path,
                                const FormatOptions& opts = {});

TraitTable parse_phenotypes(std::istream& in, const FormatOptions& opts = {},
                            const std::string& source = "<stream>");
TraitTable load_phenotypes(const std::filesystem::path& path,
                           const FormatOptions& opts = {});

// Phenotype values aligned to the dataset's variety order.
struct Trait {
  std::vector<double> values;
  std::vector<bool> present;
};

struct GenotypeDataset {
  std::vector<std::string> variety_ids;
  std::size_t d = 0;
  std::vector<std::int8_t> encoded;  // row-major n x d, values in {-1,0,1,2}
  std::map<std::string, Trait> traits;

  std::size_t n() const { return variety_ids.size(); }
  const std::int8_t* row(std::size_t i) const { return encoded.data() + i * d; }
};

// Rows of one trait with the missing entries dropped.
struct TraitView {
  std::vector<std::size_t> rows;  // indices into the dataset
  std::vector<double> targets;
};

// Encodes every cell and aligns traits by variety id. Varieties without
// phenotype rows keep their genotype row and are simply absent from trait
// views. A phenotype variety absent from the genotype table is an error.
GenotypeDataset build_dataset(const RawGenotypeTable& raw,
                              const TraitTable& traits);

TraitView trait_view(const GenotypeDataset& ds, const std::string& trait);

void write_genotypes(std::ostream& out, const RawGenotypeTable& table,
                     const FormatOptions& opts = {});

// Columns must share one variety order. Values are written in shortest
// round-trip form; missing entries as NA.
void write_phenotypes(std::ostream& out, const TraitTable& traits,
                      const FormatOptions& opts = {});

}  // namespace resgene::geno
