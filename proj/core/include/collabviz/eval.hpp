#ifndef COLLABVIZ_EVAL_HPP_
#define COLLABVIZ_EVAL_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "collabviz/embedding.hpp"
#include "collabviz/kendall.hpp"
#include "collabviz/random.hpp"
#include "collabviz/rating_function.hpp"
#include "collabviz/ratings.hpp"
#include "collabviz/sampler.hpp"

namespace collabviz {

struct SplitSpec {
  double test_user_fraction = 0.25;
  double test_item_fraction = 0.25;
  std::size_t train_size = 0;   // training items; 0 = every non-test item
  std::size_t train_users = 0;  // 0 = scale with train_size (all when train_size is 0)
  std::size_t replicas = 25;
  std::uint64_t seed = 0;
  std::size_t max_resamples = 10;  // fresh substreams tried when a split has no test pairs

  void validate() const;
};

/// Held-out rating, indexed into the training matrix of its split.
struct TestRating {
  std::size_t user = 0;
  std::size_t item = 0;
  double value = 0.0;
};

struct Split {
  RatingMatrix train;
  std::vector<TestRating> test;
  std::vector<std::size_t> user_origin;  // train user index -> source index
  std::vector<std::size_t> item_origin;
  std::size_t dropped_users = 0;  // selected but left without training ratings
  std::size_t dropped_items = 0;
  std::size_t dropped_test_pairs = 0;
};

/// Draws test users and items first, then training users and items from the
/// remainder. Ratings between test users and test items are held out; every
/// other rating among the selected users and items trains. Nodes left with
/// no training rating are dropped along with their test pairs. Throws
/// std::runtime_error when no test pair survives.
Split make_split(const RatingMatrix& matrix, const SplitSpec& spec, Rng& rng);

/// Kendall's tau between held-out ratings and embedded user-item distances.
/// Good embeddings score negative.
double score_embedding(const Embedding& emb, std::span<const TestRating> test);

struct SyntheticSpec {
  std::size_t users = 60;
  std::size_t items = 20;
  std::size_t dim = 2;
  std::size_t levels = 5;
  double density = 1.0;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  RatingMatrix matrix;
  Embedding planted;
  RatingFunction rating_function;
};

/// Ratings generated from a planted, normalized embedding: equal-mass
/// thresholds over all user-item distances, Gaussian noise re-quantized to the
/// nearest level, each cell kept with probability `density`.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

enum class Variant { kMcmc, kMcmcSa, kMcmcReg, kRandom };

std::string_view variant_name(Variant v);
/// Accepts "mcmc", "mcmc-sa", "mcmc-reg", "random".
Variant parse_variant(std::string_view name);

struct VariantRun {
  Variant variant = Variant::kMcmcSa;
  SamplerConfig sampler;
};

/// MCMC (annealing off), MCMC-SA, MCMC-REG (annealing on) and random, all
/// derived from `base`.
std::vector<VariantRun> default_variants(const SamplerConfig& base);

struct ExperimentConfig {
  SplitSpec split;
  std::vector<VariantRun> variants;
  std::size_t threads = 0;  // 0 = hardware concurrency
};

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single value
};
Summary summarize(std::span<const double> values);

struct ReplicaInfo {
  std::size_t test_pairs = 0;
  std::size_t train_ratings = 0;
  std::size_t dropped_users = 0;
  std::size_t dropped_items = 0;
  std::size_t resamples = 0;
};

struct EvalReport {
  std::vector<std::string> variants;
  std::vector<std::vector<double>> tau;  // [variant][replica]
  std::vector<double> ideal_tau;         // [replica]
  std::vector<Summary> summaries;        // [variant]
  Summary ideal_summary;
  std::vector<ReplicaInfo> replicas;
};

/// Runs every variant on identical splits for each replica and aggregates.
/// Replicas run in parallel with independent substreams of the split seed.
EvalReport run_experiment(const RatingMatrix& matrix, const ExperimentConfig& config);

}  // namespace collabviz

#endif  // COLLABVIZ_EVAL_HPP_
