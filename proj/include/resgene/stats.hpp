#pragma once

// Correlation, fold partitioning, rank statistics and the Friedman test.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace resgene::stats {

class StatsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Pearson correlation. Throws StatsError for length mismatch, fewer than two
// points, or a constant vector.
double pcc(std::span<const double> x, std::span<const double> y);

// nullopt instead of throwing when either side is constant.
std::optional<double> try_pcc(std::span<const double> x,
                              std::span<const double> y);

// Shuffles 0..n-1 with the seed, then deals consecutive blocks; the first
// n % k folds get one extra index.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k,
                                                  std::uint64_t seed);

// Rank 1 goes to the highest value; ties share the average of their ranks.
std::vector<double> rank_models(std::span<const double> scores);

using RankTable = std::vector<std::vector<double>>;  // traits x models

// Column means of a complete table.
std::vector<double> average_ranks(const RankTable& ranks);

// 12N / (M(M+1)) * (sum R_j^2 - M(M+1)^2 / 4)
double friedman_chi2(std::span<const double> avg_ranks, std::size_t n_traits);

// Upper tail of the chi-square distribution, Q(df/2, x/2).
double chi2_sf(double x, double df);

// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);

struct AggregateReport {
  std::vector<std::string> models;
  std::vector<std::string> traits;
  RankTable ranks;
  std::vector<double> average_pcc;
  // Gain of the reference model over each model, in percent; nullopt for
  // the reference itself.
  std::vector<std::optional<double>> relative_gain;
  std::vector<std::size_t> first_place;  // count of rank-1 finishes
  std::vector<double> average_rank;
  std::optional<double> friedman;  // undefined for a single model
  std::optional<double> p_value;
  std::size_t reference = 0;
};

// pcc_table is traits x models. The reference model defaults to the last
// column. A model whose average PCC is zero makes the gain undefined.
AggregateReport aggregate_report(const std::vector<std::string>& traits,
                                 const std::vector<std::string>& models,
                                 const std::vector<std::vector<double>>& pcc_table,
                                 std::optional<std::size_t> reference = {});

std::string final_ranking_label(std::size_t wins, std::size_t traits);

}  // namespace resgene::stats
