#include "collabviz/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace collabviz {

namespace {

double log_isotropic_gaussian(std::span<const double> x, std::span<const double> mean,
                              double sigma) {
  // Normalizing constants cancel in every ratio this is used for.
  double sq = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double diff = x[d] - mean[d];
    sq += diff * diff;
  }
  return -sq / (2.0 * sigma * sigma);
}

double log_prior(std::span<const double> x, double sigma) {
  double sq = 0.0;
  for (double c : x) sq += c * c;
  return -sq / (2.0 * sigma * sigma);
}

// Shared body of the user and item gains: `self` is moving, `others` are the
// fixed endpoints of its ratings.
template <typename Endpoint>
double local_log_gain(std::span<const double> current, std::span<const double> proposed,
                      std::span<const Neighbor> ratings, Endpoint&& endpoint,
                      const RatingFunction& func, double prior_sigma, double proposal_sigma,
                      double sigma_r, double beta) {
  const double log_q_ratio = log_isotropic_gaussian(current, proposed, proposal_sigma) -
                             log_isotropic_gaussian(proposed, current, proposal_sigma);
  const double prior_diff = log_prior(proposed, prior_sigma) - log_prior(current, prior_sigma);

  const double inv_two_var = 1.0 / (2.0 * sigma_r * sigma_r);
  double lik_diff = 0.0;
  for (const auto& nb : ratings) {
    const auto other = endpoint(nb.index);
    const double e_new = nb.value - func(distance(proposed, other));
    const double e_old = nb.value - func(distance(current, other));
    lik_diff += (e_old * e_old - e_new * e_new) * inv_two_var;
  }
  return log_q_ratio + beta * prior_diff + beta * lik_diff;
}

}  // namespace

double sigma_r_for_levels(std::size_t levels) {
  if (levels <= 2) return sigma_r_preset::kBinary;
  if (levels <= 10) return sigma_r_preset::kFiveLevel;
  return sigma_r_preset::kTwentyOneLevel;
}

void SamplerConfig::validate() const {
  const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (dim < 1) throw std::invalid_argument("sampler: dim must be >= 1");
  if (!positive(sigma_u) || !positive(sigma_g) || !positive(sigma_qu) || !positive(sigma_qg) ||
      !positive(sigma_r)) {
    throw std::invalid_argument("sampler: all sigma values must be > 0");
  }
  if (burn_in < 1 || saved < 1) throw std::invalid_argument("sampler: l_b and l_s must be >= 1");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("sampler: epsilon must be >= 0");
  }
  if (max_em_iters < 1) throw std::invalid_argument("sampler: max_em_iters must be >= 1");
  if (!(stability_tol >= 0.0)) throw std::invalid_argument("sampler: stability_tol must be >= 0");
  if (normalize_stride < 1 || save_stride < 1) {
    throw std::invalid_argument("sampler: strides must be >= 1");
  }
  if (save_stride > saved) throw std::invalid_argument("sampler: save_stride exceeds l_s");
  if (levels == 1) throw std::invalid_argument("sampler: levels must be 0 (auto) or >= 2");
}

Embedding sample_prior(const SamplerConfig& config, std::size_t users, std::size_t items,
                       Rng& rng) {
  Embedding emb(users, items, config.dim);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < users; ++i) {
    for (double& c : emb.user(i)) c = config.sigma_u * normal(rng);
  }
  for (std::size_t j = 0; j < items; ++j) {
    for (double& c : emb.item(j)) c = config.sigma_g * normal(rng);
  }
  return emb;
}

double log_gain_user(std::size_t user, std::span<const double> proposed, const Embedding& emb,
                     const RatingMatrix& matrix, const RatingFunction& func,
                     const SamplerConfig& config, double beta) {
  return local_log_gain(
      emb.user(user), proposed, matrix.items_of(user),
      [&emb](std::size_t j) { return emb.item(j); }, func, config.sigma_u, config.sigma_qu,
      config.sigma_r, beta);
}

double log_gain_item(std::size_t item, std::span<const double> proposed, const Embedding& emb,
                     const RatingMatrix& matrix, const RatingFunction& func,
                     const SamplerConfig& config, double beta) {
  return local_log_gain(
      emb.item(item), proposed, matrix.users_of(item),
      [&emb](std::size_t i) { return emb.user(i); }, func, config.sigma_g, config.sigma_qg,
      config.sigma_r, beta);
}

MhStepResult mh_step(Embedding& emb, const RatingMatrix& matrix, const RatingFunction& func,
                     const SamplerConfig& config, double beta, Rng& rng) {
  const std::size_t points = emb.point_count();
  std::uniform_int_distribution<std::size_t> pick(0, points - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  MhStepResult result;
  result.point = pick(rng);
  const bool is_user = result.point < emb.user_count();
  const double sigma_q = is_user ? config.sigma_qu : config.sigma_qg;

  const auto current = emb.point(result.point);
  std::vector<double> proposed(emb.dim());
  for (std::size_t d = 0; d < proposed.size(); ++d) {
    proposed[d] = current[d] + sigma_q * normal(rng);
  }

  result.log_gain =
      is_user ? log_gain_user(result.point, proposed, emb, matrix, func, config, beta)
              : log_gain_item(result.point - emb.user_count(), proposed, emb, matrix, func,
                              config, beta);
  if (std::isnan(result.log_gain)) {
    throw std::runtime_error("mh_step: non-finite posterior term at point " +
                             std::to_string(result.point));
  }
  result.accepted = result.log_gain >= 0.0 || std::log(unit(rng)) < result.log_gain;
  if (result.accepted) {
    auto dst = emb.point(result.point);
    std::copy(proposed.begin(), proposed.end(), dst.begin());
  }
  return result;
}

void append_rating_pairs(const Embedding& emb, const RatingMatrix& matrix,
                         std::vector<DistanceRating>& out) {
  for (const auto& e : matrix.entries()) {
    out.push_back({distance(emb.user(e.user), emb.item(e.item)), e.value});
  }
}

std::vector<DistanceRating> rating_pairs(const Embedding& emb, const RatingMatrix& matrix) {
  std::vector<DistanceRating> out;
  out.reserve(matrix.size());
  append_rating_pairs(emb, matrix, out);
  return out;
}

EmResult run_em(const RatingMatrix& matrix, const SamplerConfig& config) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  config.validate();
  if (matrix.empty()) throw std::invalid_argument("run_em: empty rating matrix");

  std::size_t levels = config.levels;
  if (levels == 0) levels = distinct_levels(matrix).size();
  if (levels < 2) {
    throw std::invalid_argument("run_em: need at least 2 distinct rating levels, found " +
                                std::to_string(levels));
  }

  Rng rng = make_rng(config.seed, 0);
  Embedding emb = sample_prior(config, matrix.user_count(), matrix.item_count(), rng);
  normalize(emb);
  RatingFunction func = fit_rating_function(rating_pairs(emb, matrix), levels);

  RunReport report;
  report.config = config;
  report.config.levels = levels;
  report.levels = levels;
  report.users = matrix.user_count();
  report.items = matrix.item_count();
  report.ratings = matrix.size();
  report.initial_thresholds.assign(func.thresholds().begin(), func.thresholds().end());

  AnnealState anneal(config.epsilon, config.anneal);
  std::vector<DistanceRating> pool;
  pool.reserve((config.saved / config.save_stride) * matrix.size());
  const std::size_t total_steps = config.burn_in + config.saved;

  report.stop_reason = "max_em_iters";
  for (std::size_t iter = 0; iter < config.max_em_iters; ++iter) {
    // E-step
    pool.clear();
    const double beta = anneal.beta();
    std::size_t accepted = 0;
    for (std::size_t k = 1; k <= total_steps; ++k) {
      if (mh_step(emb, matrix, func, config, beta, rng).accepted) ++accepted;
      if (k > config.burn_in && (k - config.burn_in) % config.save_stride == 0) {
        append_rating_pairs(emb, matrix, pool);
      }
      if (k % config.normalize_stride == 0) normalize(emb);
    }
    anneal.advance();

    // M-step
    EmIteration rec;
    rec.iteration = iter;
    rec.beta = beta;
    rec.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(total_steps);
    rec.pair_count = pool.size();
    rec.sse_before = sse(func, pool);
    func = fit_rating_function(pool, levels);
    rec.sse_after = sse(func, pool);
    if (!std::isfinite(rec.sse_after) || !emb.all_finite()) {
      throw std::runtime_error("run_em: non-finite state after EM iteration " +
                               std::to_string(iter));
    }
    rec.thresholds.assign(func.thresholds().begin(), func.thresholds().end());
    report.iterations.push_back(std::move(rec));

    const auto n = report.iterations.size();
    if (n >= 2) {
      const double prev = report.iterations[n - 2].sse_after;
      const double curr = report.iterations[n - 1].sse_after;
      const double change = prev > 0.0 ? std::abs(curr - prev) / prev : std::abs(curr - prev);
      if (change < config.stability_tol) {
        report.stop_reason = "stable";
        break;
      }
    }
    const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    if (config.budget_secs > 0.0 && elapsed >= config.budget_secs &&
        iter + 1 < config.max_em_iters) {
      report.stop_reason = "budget";
      break;
    }
  }
  normalize(emb);

  report.final_thresholds.assign(func.thresholds().begin(), func.thresholds().end());
  report.wall_clock_secs = std::chrono::duration<double>(Clock::now() - start).count();
  return EmResult{std::move(emb), std::move(func), std::move(report)};
}

}  // namespace collabviz
