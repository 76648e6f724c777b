#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "resgene/geno_io.hpp"

using namespace resgene::geno;

namespace {

RawGenotypeTable parse_geno(const std::string& text, FormatOptions opts = {}) {
  std::istringstream in(text);
  return parse_genotypes(in, opts, "test.csv");
}

TraitTable parse_pheno(const std::string& text) {
  std::istringstream in(text);
  return parse_phenotypes(in, {}, "pheno.csv");
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("encode_base follows the nucleotide code table") {
  CHECK(encode_base('A') == 0);
  CHECK(encode_base('T') == 0);
  CHECK(encode_base('G') == 2);
  CHECK(encode_base('C') == 2);
  CHECK(encode_base('N') == -1);
  for (char c : std::string("RYSWKM")) CHECK(encode_base(c) == 1);
  CHECK(encode_base('a') == 0);
  CHECK(encode_base('k') == 1);
  CHECK_FALSE(try_encode_base('Z').has_value());
  const auto msg = error_of([] { encode_base('Z', 4, 7); });
  CHECK(msg.find('Z') != std::string::npos);
}

TEST_CASE("every byte encodes into {-1, 0, 1, 2} or is rejected") {
  for (int c = 0; c < 256; ++c) {
    const auto code = try_encode_base(static_cast<char>(c));
    if (code) CHECK((*code >= -1 && *code <= 2));
  }
}

TEST_CASE("load a well-formed genotype table") {
  const auto t = parse_geno("variety,M1,M2,M3,M4\nV1,A,K,G,T\nV2,c,N,R,A\nV3,T,T,T,T\n");
  CHECK(t.n() == 3);
  CHECK(t.d() == 4);
  CHECK(t.snp_ids == std::vector<std::string>{"M1", "M2", "M3", "M4"});
  CHECK(t.at(1, 0) == 'C');

  const auto tab = parse_geno("variety\tM1\tM2\nV1\tA\tG\n", {'\t'});
  CHECK(tab.d() == 2);
  CHECK(tab.at(0, 1) == 'G');
}

TEST_CASE("genotype errors name the offending location") {
  const auto ragged = error_of([] { parse_geno("variety,M1,M2,M3,M4\nV1,A,A,A,A\nV2,A,A,A\n"); });
  CHECK(ragged.find("3") != std::string::npos);  // line of the short row
  CHECK_FALSE(ragged.empty());
  const auto dup = error_of([] { parse_geno("variety,M1\nV1,A\nV1,T\n"); });
  CHECK(dup.find("V1") != std::string::npos);
  const auto bad = error_of([] { parse_geno("variety,M1,M2\nV1,A,Z\n"); });
  CHECK(bad.find("Z") != std::string::npos);
  CHECK(bad.find("M2") != std::string::npos);
  CHECK_THROWS_AS(parse_geno("variety,M1\nV1,AT\n"), ParseError);
}

TEST_CASE("phenotypes parse numbers and NA") {
  const auto traits = parse_pheno("variety,PH,NN\nV1,48.83,NA\nV2,50,3\n");
  REQUIRE(traits.size() == 2);
  CHECK(traits[0].name == "PH");
  CHECK(*traits[0].values[0] == 48.83);
  CHECK_FALSE(traits[1].values[0].has_value());
  CHECK(*traits[1].values[1] == 3.0);
  CHECK_THROWS_AS(parse_pheno("variety,PH\nV1,tall\n"), ParseError);
}

TEST_CASE("build_dataset encodes and aligns by variety") {
  const auto raw = parse_geno("variety,M1,M2,M3\nV1,A,K,T\nV2,N,N,N\n");
  const auto traits = parse_pheno("variety,PH\nV1,48.83\n");
  const auto ds = build_dataset(raw, traits);
  CHECK(ds.n() == 2);
  CHECK(std::vector<int>(ds.row(0), ds.row(0) + 3) == std::vector<int>{0, 1, 0});
  CHECK(std::vector<int>(ds.row(1), ds.row(1) + 3) == std::vector<int>{-1, -1, -1});
  const auto view = trait_view(ds, "PH");
  CHECK(view.rows == std::vector<std::size_t>{0});
  CHECK(view.targets == std::vector<double>{48.83});
  CHECK_THROWS_AS(trait_view(ds, "GY"), DatasetError);

  const auto stranger = parse_pheno("variety,PH\nV9,1\n");
  CHECK_THROWS_AS(build_dataset(raw, stranger), DatasetError);
}

TEST_CASE("encoding commutes with SNP column permutation") {
  const auto raw = parse_geno("variety,M1,M2,M3,M4\nV1,A,K,G,N\nV2,C,T,S,A\n");
  const auto perm = parse_geno("variety,M3,M1,M4,M2\nV1,G,A,N,K\nV2,S,C,A,T\n");
  const auto traits = parse_pheno("variety,PH\nV1,1\nV2,2\n");
  const auto a = build_dataset(raw, traits);
  const auto b = build_dataset(perm, traits);
  const std::size_t order[] = {2, 0, 3, 1};
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 4; ++j) CHECK(b.row(i)[j] == a.row(i)[order[j]]);
  }
}

TEST_CASE("build_dataset is deterministic") {
  const auto raw = parse_geno("variety,M1,M2\nV1,A,K\nV2,C,T\nV3,G,N\n");
  const auto traits = parse_pheno("variety,PH,GY\nV3,1,NA\nV1,2,5\n");
  const auto a = build_dataset(raw, traits);
  const auto b = build_dataset(raw, traits);
  CHECK(a.encoded == b.encoded);
  CHECK(a.variety_ids == b.variety_ids);
  CHECK(trait_view(a, "GY").rows == std::vector<std::size_t>{0});
}

TEST_CASE("writers round-trip through the parsers") {
  const auto raw = parse_geno("variety,M1,M2\nV1,A,K\nV2,C,N\n");
  std::ostringstream g;
  write_genotypes(g, raw);
  const auto back = parse_geno(g.str());
  CHECK(back.cells == raw.cells);
  CHECK(back.variety_ids == raw.variety_ids);

  const auto traits = parse_pheno("variety,PH\nV1,0.1\nV2,NA\n");
  std::ostringstream p;
  write_phenotypes(p, traits);
  const auto tb = parse_pheno(p.str());
  CHECK(*tb[0].values[0] == 0.1);
  CHECK_FALSE(tb[0].values[1].has_value());
}
