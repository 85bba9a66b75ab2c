#ifndef COLLABVIZ_SAMPLER_HPP_
#define COLLABVIZ_SAMPLER_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "collabviz/embedding.hpp"
#include "collabviz/random.hpp"
#include "collabviz/rating_function.hpp"
#include "collabviz/ratings.hpp"

namespace collabviz {

/// Rating-noise presets keyed by the rating discretization.
namespace sigma_r_preset {
inline constexpr double kBinary = 0.25;         // two levels
inline constexpr double kFiveLevel = 0.1;       // 1..5 integer scale
inline constexpr double kTwentyOneLevel = 0.05;  // 0..10 in half steps
}  // namespace sigma_r_preset

/// Preset for a K-level scale: K <= 2 -> 0.25, K <= 10 -> 0.1, else 0.05.
double sigma_r_for_levels(std::size_t levels);

/// Isotropic prior and proposal scales plus the EM/annealing schedule.
/// Defaults are identity covariances, l_b = 1000, l_s = 2000, epsilon = 0.02.
struct SamplerConfig {
  std::size_t dim = 2;
  double sigma_u = 1.0;   // user prior std
  double sigma_g = 1.0;   // item prior std
  double sigma_qu = 1.0;  // user proposal std
  double sigma_qg = 1.0;  // item proposal std
  double sigma_r = sigma_r_preset::kBinary;
  std::size_t burn_in = 1000;  // l_b
  std::size_t saved = 2000;    // l_s
  double epsilon = 0.02;
  std::size_t max_em_iters = 50;
  double stability_tol = 1e-3;
  double budget_secs = 30.0;  // <= 0 disables the wall-clock budget
  std::size_t normalize_stride = 1;
  std::size_t save_stride = 1;
  std::size_t levels = 0;  // quantization count K; 0 = distinct levels in the data
  std::uint64_t seed = 0;
  bool anneal = true;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// Annealing exponent. beta = (1 + epsilon)^t after t advances when enabled.
class AnnealState {
 public:
  AnnealState(double epsilon, bool enabled) : epsilon_(epsilon), enabled_(enabled) {}
  double beta() const noexcept { return beta_; }
  std::size_t steps() const noexcept { return steps_; }
  void advance() noexcept {
    ++steps_;
    if (enabled_) beta_ *= 1.0 + epsilon_;
  }

 private:
  double epsilon_;
  bool enabled_;
  double beta_ = 1.0;
  std::size_t steps_ = 0;
};

/// Independent draws from the zero-mean isotropic priors.
Embedding sample_prior(const SamplerConfig& config, std::size_t users, std::size_t items,
                       Rng& rng);

/// Log transition gain for moving user i to `proposed`, at temperature beta.
/// Evaluated locally over the items user i rated.
double log_gain_user(std::size_t user, std::span<const double> proposed, const Embedding& emb,
                     const RatingMatrix& matrix, const RatingFunction& func,
                     const SamplerConfig& config, double beta);

/// Mirror of log_gain_user for item j over the users who rated it.
double log_gain_item(std::size_t item, std::span<const double> proposed, const Embedding& emb,
                     const RatingMatrix& matrix, const RatingFunction& func,
                     const SamplerConfig& config, double beta);

struct MhStepResult {
  std::size_t point = 0;  // joint index, users first
  bool accepted = false;
  double log_gain = 0.0;
};

/// One Metropolis-Hastings move: pick a point uniformly from all m+n, draw a
/// Gaussian proposal around it, accept with probability min(1, exp(gain)).
/// Throws std::runtime_error if the gain is NaN.
MhStepResult mh_step(Embedding& emb, const RatingMatrix& matrix, const RatingFunction& func,
                     const SamplerConfig& config, double beta, Rng& rng);

/// (distance, rating) pair for every observed rating under `emb`.
std::vector<DistanceRating> rating_pairs(const Embedding& emb, const RatingMatrix& matrix);
void append_rating_pairs(const Embedding& emb, const RatingMatrix& matrix,
                         std::vector<DistanceRating>& out);

struct EmIteration {
  std::size_t iteration = 0;
  double beta = 1.0;  // temperature used during this E-step
  double acceptance_rate = 0.0;
  std::size_t pair_count = 0;
  double sse_before = 0.0;  // pooled pairs under the previous rating function
  double sse_after = 0.0;   // pooled pairs under the refit rating function
  std::vector<double> thresholds;
};

struct RunReport {
  SamplerConfig config;
  std::size_t levels = 0;
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t ratings = 0;
  std::vector<double> initial_thresholds;
  std::vector<EmIteration> iterations;
  std::vector<double> final_thresholds;
  std::string stop_reason;  // "stable", "max_em_iters" or "budget"
  double wall_clock_secs = 0.0;
};

struct EmResult {
  Embedding embedding;
  RatingFunction rating_function;
  RunReport report;
};

/// Alternates annealed MH E-steps with exact M-steps of the rating function
/// until the relative change in pooled training SSE drops below
/// `stability_tol`, `max_em_iters` is reached, or the budget runs out.
EmResult run_em(const RatingMatrix& matrix, const SamplerConfig& config);

}  // namespace collabviz

#endif  // COLLABVIZ_SAMPLER_HPP_
