#include "collabviz/eval.hpp"

#include <algorithm>
#include <limits>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "collabviz/imputation.hpp"

namespace collabviz {

namespace {

std::size_t fraction_count(std::size_t total, double fraction) {
  const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(total) * fraction));
  return std::clamp<std::size_t>(k, 1, total > 1 ? total - 1 : 1);
}

constexpr std::uint64_t kSamplerStream = 1000;
constexpr std::uint64_t kRandomStream = 2000;

}  // namespace

void SplitSpec::validate() const {
  if (!(test_user_fraction > 0.0 && test_user_fraction < 1.0) ||
      !(test_item_fraction > 0.0 && test_item_fraction < 1.0)) {
    throw std::invalid_argument("split: test fractions must lie in (0,1)");
  }
  if (replicas < 1) throw std::invalid_argument("split: replicas must be >= 1");
}

Split make_split(const RatingMatrix& matrix, const SplitSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t m = matrix.user_count();
  const std::size_t n = matrix.item_count();
  if (m < 2 || n < 2) throw std::invalid_argument("make_split: need at least 2 users and 2 items");

  std::vector<std::size_t> users(m);
  std::vector<std::size_t> items(n);
  std::iota(users.begin(), users.end(), 0);
  std::iota(items.begin(), items.end(), 0);
  std::shuffle(users.begin(), users.end(), rng);
  std::shuffle(items.begin(), items.end(), rng);

  const std::size_t test_users = fraction_count(m, spec.test_user_fraction);
  const std::size_t test_items = fraction_count(n, spec.test_item_fraction);
  const std::size_t rest_users = m - test_users;
  const std::size_t rest_items = n - test_items;

  std::size_t train_items = rest_items;
  if (spec.train_size > 0) train_items = std::min(spec.train_size, rest_items);
  std::size_t train_users = rest_users;
  if (spec.train_users > 0) {
    train_users = std::min(spec.train_users, rest_users);
  } else if (spec.train_size > 0) {
    const double scaled = static_cast<double>(train_items) * static_cast<double>(rest_users) /
                          static_cast<double>(rest_items);
    train_users = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(scaled)), 1,
                                          rest_users);
  }

  // 0 = unused, 1 = training, 2 = test
  std::vector<int> user_role(m, 0);
  std::vector<int> item_role(n, 0);
  for (std::size_t k = 0; k < test_users; ++k) user_role[users[k]] = 2;
  for (std::size_t k = 0; k < train_users; ++k) user_role[users[test_users + k]] = 1;
  for (std::size_t k = 0; k < test_items; ++k) item_role[items[k]] = 2;
  for (std::size_t k = 0; k < train_items; ++k) item_role[items[test_items + k]] = 1;

  std::vector<std::size_t> user_degree(m, 0);
  std::vector<std::size_t> item_degree(n, 0);
  for (const auto& e : matrix.entries()) {
    const int ur = user_role[e.user];
    const int ir = item_role[e.item];
    if (ur == 0 || ir == 0 || (ur == 2 && ir == 2)) continue;
    ++user_degree[e.user];
    ++item_degree[e.item];
  }

  Split split;
  std::vector<std::size_t> user_new(m, SIZE_MAX);
  std::vector<std::size_t> item_new(n, SIZE_MAX);
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  for (std::size_t i = 0; i < m; ++i) {
    if (user_role[i] == 0) continue;
    if (user_degree[i] == 0) {
      ++split.dropped_users;
      continue;
    }
    user_new[i] = split.user_origin.size();
    split.user_origin.push_back(i);
    user_ids.push_back(matrix.user_id(i));
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (item_role[j] == 0) continue;
    if (item_degree[j] == 0) {
      ++split.dropped_items;
      continue;
    }
    item_new[j] = split.item_origin.size();
    split.item_origin.push_back(j);
    item_ids.push_back(matrix.item_id(j));
  }

  std::vector<Rating> train;
  for (const auto& e : matrix.entries()) {
    const int ur = user_role[e.user];
    const int ir = item_role[e.item];
    if (ur == 0 || ir == 0) continue;
    if (ur == 2 && ir == 2) {
      if (user_new[e.user] == SIZE_MAX || item_new[e.item] == SIZE_MAX) {
        ++split.dropped_test_pairs;
      } else {
        split.test.push_back({user_new[e.user], item_new[e.item], e.value});
      }
      continue;
    }
    train.push_back({user_new[e.user], item_new[e.item], e.value});
  }
  if (split.test.empty()) throw std::runtime_error("make_split: split has no test pairs");

  const std::size_t kept_users = split.user_origin.size();
  const std::size_t kept_items = split.item_origin.size();
  split.train = RatingMatrix(kept_users, kept_items, std::move(train), std::move(user_ids),
                             std::move(item_ids));
  return split;
}

double score_embedding(const Embedding& emb, std::span<const TestRating> test) {
  std::vector<double> ratings;
  std::vector<double> distances;
  ratings.reserve(test.size());
  distances.reserve(test.size());
  for (const auto& t : test) {
    if (t.user >= emb.user_count() || t.item >= emb.item_count()) {
      throw std::out_of_range("score_embedding: test pair references an unknown point");
    }
    ratings.push_back(t.value);
    distances.push_back(distance(emb.user(t.user), emb.item(t.item)));
  }
  return kendall_tau(ratings, distances);
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.levels < 2) throw std::invalid_argument("generate_synthetic: levels must be >= 2");
  if (spec.users < 1 || spec.items < 1 || spec.dim < 1) {
    throw std::invalid_argument("generate_synthetic: users, items and dim must be >= 1");
  }
  if (spec.users * spec.items < spec.levels) {
    throw std::invalid_argument("generate_synthetic: fewer cells than rating levels");
  }
  if (!(spec.density > 0.0 && spec.density <= 1.0)) {
    throw std::invalid_argument("generate_synthetic: density must lie in (0,1]");
  }
  if (!(spec.noise_sd >= 0.0) || !std::isfinite(spec.noise_sd)) {
    throw std::invalid_argument("generate_synthetic: noise_sd must be >= 0");
  }

  Rng rng = make_rng(spec.seed, 0);
  SamplerConfig unit;
  unit.dim = spec.dim;
  Embedding planted = sample_prior(unit, spec.users, spec.items, rng);
  normalize(planted);

  std::vector<double> dist;
  dist.reserve(spec.users * spec.items);
  for (std::size_t i = 0; i < spec.users; ++i) {
    for (std::size_t j = 0; j < spec.items; ++j) {
      dist.push_back(distance(planted.user(i), planted.item(j)));
    }
  }
  std::vector<double> sorted = dist;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> thresholds;
  const std::size_t cells = sorted.size();
  for (std::size_t t = 1; t < spec.levels; ++t) {
    const std::size_t pos = t * cells / spec.levels;
    double theta = 0.5 * (sorted[pos - 1] + sorted[pos]);
    if (theta <= sorted[pos - 1]) theta = sorted[pos];
    if (!thresholds.empty() && theta <= thresholds.back()) {
      theta = std::nextafter(thresholds.back(), std::numeric_limits<double>::infinity());
    }
    if (!(theta > 0.0)) theta = std::numeric_limits<double>::min();
    thresholds.push_back(theta);
  }
  RatingFunction func(std::move(thresholds));

  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> keep(0.0, 1.0);
  const double top = static_cast<double>(spec.levels - 1);
  std::vector<Rating> entries;
  for (std::size_t i = 0; i < spec.users; ++i) {
    for (std::size_t j = 0; j < spec.items; ++j) {
      const double clean = func(dist[i * spec.items + j]);
      const double noisy = clean + spec.noise_sd * noise(rng);
      const double level = std::clamp(std::round((1.0 - noisy) * top), 0.0, top);
      const double value = func.level_value(static_cast<std::size_t>(level));
      if (keep(rng) < spec.density) entries.push_back({i, j, value});
    }
  }
  if (entries.empty()) throw std::invalid_argument("generate_synthetic: no ratings kept");

  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  for (std::size_t i = 0; i < spec.users; ++i) user_ids.push_back("u" + std::to_string(i));
  for (std::size_t j = 0; j < spec.items; ++j) item_ids.push_back("i" + std::to_string(j));
  RatingMatrix matrix(spec.users, spec.items, std::move(entries), std::move(user_ids),
                      std::move(item_ids));
  return SyntheticData{std::move(matrix), std::move(planted), std::move(func)};
}

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kMcmc:
      return "mcmc";
    case Variant::kMcmcSa:
      return "mcmc-sa";
    case Variant::kMcmcReg:
      return "mcmc-reg";
    case Variant::kRandom:
      return "random";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::kMcmc, Variant::kMcmcSa, Variant::kMcmcReg, Variant::kRandom}) {
    if (variant_name(v) == name) return v;
  }
  throw std::invalid_argument("unknown variant '" + std::string(name) +
                              "' (expected mcmc, mcmc-sa, mcmc-reg or random)");
}

std::vector<VariantRun> default_variants(const SamplerConfig& base) {
  SamplerConfig plain = base;
  plain.anneal = false;
  SamplerConfig annealed = base;
  annealed.anneal = true;
  return {{Variant::kMcmc, plain},
          {Variant::kMcmcSa, annealed},
          {Variant::kMcmcReg, annealed},
          {Variant::kRandom, base}};
}

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return s;
}

namespace {

struct ReplicaOutcome {
  std::vector<double> tau;
  double ideal = 0.0;
  ReplicaInfo info;
};

ReplicaOutcome run_replica(const RatingMatrix& matrix, const ExperimentConfig& config,
                           std::size_t replica) {
  const std::uint64_t replica_seed = derive_seed(config.split.seed, replica);
  ReplicaOutcome out;

  Split split;
  for (std::size_t attempt = 0;; ++attempt) {
    Rng rng = make_rng(replica_seed, attempt);
    try {
      split = make_split(matrix, config.split, rng);
      out.info.resamples = attempt;
      break;
    } catch (const std::runtime_error&) {
      if (attempt + 1 >= config.split.max_resamples) throw;
    }
  }
  out.info.test_pairs = split.test.size();
  out.info.train_ratings = split.train.size();
  out.info.dropped_users = split.dropped_users;
  out.info.dropped_items = split.dropped_items;

  std::vector<double> held_out;
  for (const auto& t : split.test) held_out.push_back(t.value);
  out.ideal = ideal_tau(held_out);

  const std::size_t train_levels = distinct_levels(split.train).size();
  for (const auto& run : config.variants) {
    SamplerConfig sampler = run.sampler;
    sampler.seed = derive_seed(replica_seed, kSamplerStream);
    double tau = 0.0;
    switch (run.variant) {
      case Variant::kMcmc:
      case Variant::kMcmcSa: {
        sampler.anneal = run.variant == Variant::kMcmcSa;
        tau = score_embedding(run_em(split.train, sampler).embedding, split.test);
        break;
      }
      case Variant::kMcmcReg: {
        if (sampler.levels == 0) sampler.levels = train_levels;
        const RatingMatrix filled = to_rating_matrix(fill_linear_regression(split.train));
        tau = score_embedding(run_em(filled, sampler).embedding, split.test);
        break;
      }
      case Variant::kRandom: {
        Rng rng = make_rng(replica_seed, kRandomStream);
        Embedding emb = sample_prior(sampler, split.train.user_count(), split.train.item_count(), rng);
        normalize(emb);
        tau = score_embedding(emb, split.test);
        break;
      }
    }
    out.tau.push_back(tau);
  }
  return out;
}

}  // namespace

EvalReport run_experiment(const RatingMatrix& matrix, const ExperimentConfig& config) {
  config.split.validate();
  if (config.variants.empty()) throw std::invalid_argument("run_experiment: no variants");
  for (const auto& v : config.variants) v.sampler.validate();

  const std::size_t replicas = config.split.replicas;
  std::vector<ReplicaOutcome> outcomes(replicas);
  std::size_t threads = config.threads == 0 ? std::thread::hardware_concurrency() : config.threads;
  threads = std::clamp<std::size_t>(threads, 1, replicas);

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::size_t failed_replica = 0;
  const auto worker = [&] {
    while (true) {
      const std::size_t r = next.fetch_add(1);
      if (r >= replicas) return;
      try {
        outcomes[r] = run_replica(matrix, config, r);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) {
          first_error = std::current_exception();
          failed_replica = r;
        }
        next.store(replicas);
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (first_error) {
    try {
      std::rethrow_exception(first_error);
    } catch (const std::exception& e) {
      throw std::runtime_error("run_experiment: replica " + std::to_string(failed_replica) +
                               " failed: " + e.what());
    }
  }

  EvalReport report;
  for (const auto& v : config.variants) report.variants.emplace_back(variant_name(v.variant));
  report.tau.assign(config.variants.size(), {});
  for (const auto& o : outcomes) {
    for (std::size_t v = 0; v < o.tau.size(); ++v) report.tau[v].push_back(o.tau[v]);
    report.ideal_tau.push_back(o.ideal);
    report.replicas.push_back(o.info);
  }
  for (const auto& series : report.tau) report.summaries.push_back(summarize(series));
  report.ideal_summary = summarize(report.ideal_tau);
  return report;
}

}  // namespace collabviz
