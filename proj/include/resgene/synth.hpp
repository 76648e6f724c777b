#pragma once

// Seeded synthetic genotype/phenotype generator with known effects.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "resgene/geno_io.hpp"

namespace resgene::synth {

class SynthError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SynthSpec {
  std::size_t n = 200;
  std::size_t d = 400;
  std::size_t causal = 20;        // q additive SNPs
  double effect_scale = 1.0;
  std::size_t epistatic_pairs = 0;
  double h2 = 0.5;
  double missing_rate = 0.0;
  std::uint64_t seed = 0;
  std::string trait = "Y";
};

// Throws SynthError when the spec breaks q <= d, h2 in [0, 1] or
// missing_rate in [0, 1).
void validate(const SynthSpec& spec);

struct EpistaticPair {
  std::size_t a = 0;
  std::size_t b = 0;
  double effect = 0;
};

struct GroundTruth {
  std::vector<std::size_t> causal;  // SNP indices, ascending
  std::vector<double> effects;      // aligned with causal
  std::vector<EpistaticPair> pairs;
  std::vector<double> genetic;      // g per variety
  double noise_variance = 0;
  double realized_h2 = 0;  // var(g) / var(y) on the sample
};

struct SynthResult {
  SynthSpec spec;
  geno::RawGenotypeTable genotypes;
  geno::TraitTable phenotypes;  // a single column named spec.trait
  GroundTruth truth;
};

// Per SNP: one reference base from {A,T}, one alternate from {C,G}, and an
// alternate frequency in [0.05, 0.5]. g sums the additive effects and the
// pairwise products on encoded values; noise is projected off g and
// rescaled so var(g) / var(y) equals h2 on the sample. h2 = 0 gives pure
// unit-variance noise.
SynthResult generate(const SynthSpec& spec);

void write_truth_json(std::ostream& out, const SynthResult& result);

// Writes genotypes.csv, phenotypes.csv and truth.json into dir.
void write_files(const std::filesystem::path& dir, const SynthResult& result);

}  // namespace resgene::synth
