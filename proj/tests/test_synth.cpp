#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "resgene/stats.hpp"
#include "resgene/synth.hpp"

using namespace resgene;
using namespace resgene::synth;

namespace {

double variance(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m += x / static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

std::vector<double> phenotype(const SynthResult& r) {
  std::vector<double> y;
  for (const auto& v : r.phenotypes.at(0).values) y.push_back(*v);
  return y;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("spec validation") {
  SynthSpec s;
  s.h2 = 1.5;
  CHECK_THROWS_AS(validate(s), SynthError);
  s = {};
  s.causal = s.d + 1;
  CHECK_THROWS_AS(validate(s), SynthError);
  s = {};
  s.missing_rate = 1.0;
  CHECK_THROWS_AS(validate(s), SynthError);
  s = {};
  s.h2 = -0.1;
  CHECK_THROWS_AS(validate(s), SynthError);
  CHECK_NOTHROW(validate(SynthSpec{}));
}

TEST_CASE("h2 = 1 gives y = g") {
  SynthSpec s;
  s.h2 = 1.0;
  s.seed = 3;
  const auto r = generate(s);
  CHECK(stats::pcc(r.truth.genetic, phenotype(r)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("h2 = 0 leaves y unrelated to g") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthSpec s;
    s.h2 = 0.0;
    s.seed = seed;
    const auto r = generate(s);
    CHECK(std::abs(stats::pcc(r.truth.genetic, phenotype(r))) <= 0.2);
  }
}

TEST_CASE("degenerate genetic variance is rejected") {
  SynthSpec s;
  s.causal = 0;
  s.h2 = 1.0;
  CHECK_THROWS_AS(generate(s), SynthError);
}

TEST_CASE("realized heritability tracks h2") {
  for (double h2 : {0.2, 0.5, 0.8}) {
    SynthSpec s;
    s.n = 600;
    s.d = 300;
    s.h2 = h2;
    s.epistatic_pairs = 5;
    s.seed = 11;
    const auto r = generate(s);
    const double realized = variance(r.truth.genetic) / variance(phenotype(r));
    CHECK(std::abs(realized - h2) <= 0.05);
    CHECK(r.truth.realized_h2 == doctest::Approx(realized).epsilon(1e-9));
  }
}

TEST_CASE("alphabet closure and missing rate") {
  SynthSpec s;
  s.n = 300;
  s.d = 200;
  s.missing_rate = 0.1;
  s.seed = 5;
  const auto r = generate(s);
  std::size_t missing = 0;
  for (char c : r.genotypes.cells) {
    CHECK(geno::try_encode_base(c).has_value());
    missing += c == 'N';
  }
  CHECK(static_cast<double>(missing) / r.genotypes.cells.size() == doctest::Approx(0.1).epsilon(0.1));
  CHECK(r.truth.causal.size() == s.causal);
  CHECK(std::is_sorted(r.truth.causal.begin(), r.truth.causal.end()));
}

TEST_CASE("same seed gives byte-identical files") {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "resgene_synth_test";
  fs::remove_all(base);
  SynthSpec s;
  s.n = 50;
  s.d = 40;
  s.epistatic_pairs = 3;
  s.seed = 42;
  write_files(base / "a", generate(s));
  write_files(base / "b", generate(s));
  for (const char* f : {"genotypes.csv", "phenotypes.csv", "truth.json"}) {
    CHECK(slurp(base / "a" / f) == slurp(base / "b" / f));
    CHECK_FALSE(slurp(base / "a" / f).empty());
  }
  s.seed = 43;
  write_files(base / "c", generate(s));
  CHECK(slurp(base / "a" / "genotypes.csv") != slurp(base / "c" / "genotypes.csv"));
  // The files load back through the genotype and phenotype readers.
  const auto ds = geno::build_dataset(geno::load_genotypes(base / "a" / "genotypes.csv"),
                                      geno::load_phenotypes(base / "a" / "phenotypes.csv"));
  CHECK(ds.n() == 50);
  CHECK(ds.d == 40);
  fs::remove_all(base);
}
