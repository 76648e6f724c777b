#include "resgene/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "resgene/rng.hpp"

namespace resgene::synth {
namespace {

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

}  // namespace

void validate(const SynthSpec& spec) {
  if (spec.n < 2) throw SynthError("synth: need n >= 2 varieties");
  if (spec.d < 1) throw SynthError("synth: need d >= 1 SNPs");
  if (spec.causal > spec.d) {
    throw SynthError("synth: causal count q = " + std::to_string(spec.causal) +
                     " exceeds d = " + std::to_string(spec.d));
  }
  if (!(spec.h2 >= 0.0 && spec.h2 <= 1.0)) {
    throw SynthError("synth: h2 must lie in [0, 1]");
  }
  if (!(spec.missing_rate >= 0.0 && spec.missing_rate < 1.0)) {
    throw SynthError("synth: missing rate must lie in [0, 1)");
  }
  if (spec.epistatic_pairs > 0 && spec.d < 2) {
    throw SynthError("synth: epistatic pairs need d >= 2");
  }
  if (!(spec.effect_scale >= 0.0) || !std::isfinite(spec.effect_scale)) {
    throw SynthError("synth: effect scale must be finite and non-negative");
  }
  if (spec.trait.empty()) throw SynthError("synth: empty trait name");
}

SynthResult generate(const SynthSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);
  SynthResult out;
  out.spec = spec;
  auto& table = out.genotypes;

  const std::size_t n = spec.n, d = spec.d;
  std::vector<char> ref(d), alt(d);
  std::vector<double> freq(d);
  for (std::size_t j = 0; j < d; ++j) {
    ref[j] = rng.uniform() < 0.5 ? 'A' : 'T';
    alt[j] = rng.uniform() < 0.5 ? 'C' : 'G';
    freq[j] = 0.05 + 0.45 * rng.uniform();
  }
  for (std::size_t j = 0; j < d; ++j) {
    table.snp_ids.push_back("SNP" + std::to_string(j + 1));
  }
  table.cells.resize(n * d);
  std::vector<double> code(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    table.variety_ids.push_back("V" + std::to_string(i + 1));
    for (std::size_t j = 0; j < d; ++j) {
      const double miss = rng.uniform();
      const double draw = rng.uniform();
      char c = draw < freq[j] ? alt[j] : ref[j];
      if (miss < spec.missing_rate) c = 'N';
      table.cells[i * d + j] = c;
      code[i * d + j] = *geno::try_encode_base(c);
    }
  }

  auto& truth = out.truth;
  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t t = 0; t < spec.causal; ++t) {
    std::swap(perm[t], perm[t + rng.below(d - t)]);
  }
  truth.causal.assign(perm.begin(),
                      perm.begin() + static_cast<std::ptrdiff_t>(spec.causal));
  std::sort(truth.causal.begin(), truth.causal.end());
  for (std::size_t t = 0; t < spec.causal; ++t) {
    truth.effects.push_back(spec.effect_scale * rng.normal());
  }
  for (std::size_t t = 0; t < spec.epistatic_pairs; ++t) {
    EpistaticPair p;
    p.a = rng.below(d);
    do {
      p.b = rng.below(d);
    } while (p.b == p.a);
    if (p.b < p.a) std::swap(p.a, p.b);
    p.effect = spec.effect_scale * rng.normal();
    truth.pairs.push_back(p);
  }

  truth.genetic.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double g = 0;
    const double* row = code.data() + i * d;
    for (std::size_t t = 0; t < truth.causal.size(); ++t) {
      g += truth.effects[t] * row[truth.causal[t]];
    }
    for (const auto& p : truth.pairs) g += p.effect * row[p.a] * row[p.b];
    truth.genetic[i] = g;
  }

  const double var_g = variance(truth.genetic);
  std::vector<double> y(n);
  if (spec.h2 > 0.0 && var_g == 0.0) {
    throw SynthError("synth: degenerate spec, genetic values have zero "
                     "variance but h2 > 0");
  }
  if (spec.h2 == 0.0) {
    for (double& v : y) v = rng.normal();
    truth.noise_variance = 1.0;
  } else if (spec.h2 == 1.0) {
    y = truth.genetic;
  } else {
    std::vector<double> e(n);
    for (double& v : e) v = rng.normal();
    const double mg = mean(truth.genetic), me = mean(e);
    double ge = 0, gg = 0;
    for (std::size_t i = 0; i < n; ++i) {
      e[i] -= me;
      ge += (truth.genetic[i] - mg) * e[i];
      gg += (truth.genetic[i] - mg) * (truth.genetic[i] - mg);
    }
    for (std::size_t i = 0; i < n; ++i) {
      e[i] -= ge / gg * (truth.genetic[i] - mg);
    }
    const double target = var_g * (1.0 - spec.h2) / spec.h2;
    const double var_e = variance(e);
    if (var_e == 0.0) throw SynthError("synth: n too small to draw noise");
    const double scale = std::sqrt(target / var_e);
    for (std::size_t i = 0; i < n; ++i) y[i] = truth.genetic[i] + scale * e[i];
    truth.noise_variance = target;
  }
  const double var_y = variance(y);
  truth.realized_h2 = var_y > 0 ? var_g / var_y : 0.0;

  geno::TraitColumn col;
  col.name = spec.trait;
  col.variety_ids = table.variety_ids;
  for (double v : y) col.values.emplace_back(v);
  out.phenotypes.push_back(std::move(col));
  return out;
}

void write_truth_json(std::ostream& out, const SynthResult& result) {
  const auto& s = result.spec;
  const auto& t = result.truth;
  nlohmann::json j;
  j["spec"] = {{"n", s.n},
               {"d", s.d},
               {"causal", s.causal},
               {"effect_scale", s.effect_scale},
               {"epistatic_pairs", s.epistatic_pairs},
               {"h2", s.h2},
               {"missing_rate", s.missing_rate},
               {"seed", s.seed},
               {"trait", s.trait}};
  j["causal"] = t.causal;
  j["effects"] = t.effects;
  auto pairs = nlohmann::json::array();
  for (const auto& p : t.pairs) {
    pairs.push_back({{"a", p.a}, {"b", p.b}, {"effect", p.effect}});
  }
  j["pairs"] = pairs;
  j["genetic"] = t.genetic;
  j["noise_variance"] = t.noise_variance;
  j["realized_h2"] = t.realized_h2;
  out << j.dump(2) << '\n';
}

void write_files(const std::filesystem::path& dir, const SynthResult& result) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("genotypes.csv");
    geno::write_genotypes(f, result.genotypes);
  }
  {
    auto f = open("phenotypes.csv");
    geno::write_phenotypes(f, result.phenotypes);
  }
  {
    auto f = open("truth.json");
    write_truth_json(f, result);
  }
}

}  // namespace resgene::synth
