#include "resgene/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace resgene::stats {

std::optional<double> try_pcc(std::span<const double> x,
                              std::span<const double> y) {
  if (x.size() != y.size()) {
    throw StatsError("pcc: vectors differ in length (" +
                     std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw StatsError("pcc: need at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  const double r = sxy / (std::sqrt(sxx) * std::sqrt(syy));
  return std::clamp(r, -1.0, 1.0);
}

double pcc(std::span<const double> x, std::span<const double> y) {
  if (auto r = try_pcc(x, y)) return *r;
  throw StatsError("pcc: correlation undefined for a constant vector");
}

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k,
                                                  std::uint64_t seed) {
  if (k < 2) throw StatsError("kfold_split: need k >= 2");
  if (n < k) {
    throw StatsError("kfold_split: n = " + std::to_string(n) +
                     " is smaller than k = " + std::to_string(k));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Fisher-Yates with an explicitly specified generator keeps folds identical
  // across standard libraries (std::shuffle's algorithm is unspecified).
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  std::vector<std::vector<std::size_t>> folds(k);
  const std::size_t base = n / k, extra = n % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                    order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return folds;
}

std::vector<double> rank_models(std::span<const double> scores) {
  const std::size_t m = scores.size();
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  std::vector<double> ranks(m);
  std::size_t i = 0;
  while (i < m) {
    std::size_t j = i;
    while (j + 1 < m && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    // positions i..j (0-based) share ranks i+1..j+1
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::vector<double> average_ranks(const RankTable& ranks) {
  if (ranks.empty()) throw StatsError("average_ranks: empty rank table");
  const std::size_t m = ranks.front().size();
  std::vector<double> avg(m, 0.0);
  for (const auto& row : ranks) {
    if (row.size() != m) throw StatsError("average_ranks: ragged rank table");
    for (std::size_t j = 0; j < m; ++j) avg[j] += row[j];
  }
  for (double& v : avg) v /= static_cast<double>(ranks.size());
  return avg;
}

double friedman_chi2(std::span<const double> avg_ranks, std::size_t n_traits) {
  const double m = static_cast<double>(avg_ranks.size());
  if (avg_ranks.size() < 2) throw StatsError("friedman_chi2: need M >= 2");
  if (n_traits < 1) throw StatsError("friedman_chi2: need N >= 1");
  double sum_sq = 0;
  for (double r : avg_ranks) sum_sq += r * r;
  const double n = static_cast<double>(n_traits);
  return 12.0 * n / (m * (m + 1.0)) *
         (sum_sq - m * (m + 1.0) * (m + 1.0) / 4.0);
}

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 10000;

// Lower regularized gamma by its power series; converges for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a, sum = 1.0 / a, del = sum;
  for (int i = 0; i < kMaxIter; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized gamma by modified Lentz continued fraction; x >= a + 1.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_q(double a, double x) {
  if (!(a > 0.0)) throw StatsError("gamma_q: shape must be positive");
  if (x < 0.0) throw StatsError("gamma_q: x must be non-negative");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_fraction(a, x);
}

double chi2_sf(double x, double df) {
  if (!(df > 0.0)) throw StatsError("chi2_sf: degrees of freedom must be >= 1");
  if (x < 0.0) throw StatsError("chi2_sf: statistic must be non-negative");
  return gamma_q(df / 2.0, x / 2.0);
}

std::string final_ranking_label(std::size_t wins, std::size_t traits) {
  return std::to_string(wins) + "/" + std::to_string(traits);
}

AggregateReport aggregate_report(
    const std::vector<std::string>& traits,
    const std::vector<std::string>& models,
    const std::vector<std::vector<double>>& pcc_table,
    std::optional<std::size_t> reference) {
  if (traits.empty() || models.empty()) {
    throw StatsError("aggregate_report: empty table");
  }
  if (pcc_table.size() != traits.size()) {
    throw StatsError("aggregate_report: one PCC row per trait required");
  }
  const std::size_t m = models.size();
  for (const auto& row : pcc_table) {
    if (row.size() != m) {
      throw StatsError("aggregate_report: one PCC column per model required");
    }
  }

  AggregateReport rep;
  rep.models = models;
  rep.traits = traits;
  rep.reference = reference.value_or(m - 1);
  if (rep.reference >= m) throw StatsError("aggregate_report: bad reference");

  rep.average_pcc.assign(m, 0.0);
  rep.first_place.assign(m, 0);
  for (const auto& row : pcc_table) {
    auto ranks = rank_models(row);
    for (std::size_t j = 0; j < m; ++j) {
      rep.average_pcc[j] += row[j];
      if (ranks[j] == 1.0) ++rep.first_place[j];
    }
    rep.ranks.push_back(std::move(ranks));
  }
  for (double& v : rep.average_pcc) v /= static_cast<double>(traits.size());
  rep.average_rank = average_ranks(rep.ranks);

  const double ref = rep.average_pcc[rep.reference];
  rep.relative_gain.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    if (j == rep.reference) continue;
    if (rep.average_pcc[j] == 0.0) {
      throw StatsError("aggregate_report: model " + models[j] +
                       " has zero average PCC, relative gain undefined");
    }
    rep.relative_gain[j] = 100.0 * (ref / rep.average_pcc[j] - 1.0);
  }

  if (m >= 2) {
    rep.friedman = friedman_chi2(rep.average_rank, traits.size());
    rep.p_value = chi2_sf(*rep.friedman, static_cast<double>(m - 1));
  }
  return rep;
}

}  // namespace resgene::stats
