#include <cmath>
#include <random>

#include "collabviz/eval.hpp"
#include "collabviz/sampler.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace collabviz;

namespace {

double sq_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

// Unnormalized log posterior of a whole configuration.
double log_posterior(const Embedding& e, const RatingMatrix& m, const RatingFunction& f,
                     const SamplerConfig& c) {
  double lp = 0.0;
  for (std::size_t i = 0; i < e.user_count(); ++i) lp -= sq_norm(e.user(i)) / (2 * c.sigma_u * c.sigma_u);
  for (std::size_t j = 0; j < e.item_count(); ++j) lp -= sq_norm(e.item(j)) / (2 * c.sigma_g * c.sigma_g);
  for (const auto& r : m.entries()) {
    const double err = r.value - f(distance(e.user(r.user), e.item(r.item)));
    lp -= err * err / (2 * c.sigma_r * c.sigma_r);
  }
  return lp;
}

RatingMatrix small_matrix() {
  return RatingMatrix(3, 4,
                      {{0, 0, 1.0},
                       {0, 2, 0.5},
                       {1, 1, 0.0},
                       {1, 2, 1.0},
                       {2, 0, 0.5},
                       {2, 3, 0.0},
                       {1, 3, 0.5}});
}

}  // namespace

TEST_CASE("sampler defaults") {
  const SamplerConfig c;
  CHECK(c.burn_in == 1000);
  CHECK(c.saved == 2000);
  CHECK(c.epsilon == 0.02);
  CHECK(c.sigma_u == 1.0);
  CHECK(c.sigma_g == 1.0);
  CHECK(c.sigma_qu == 1.0);
  CHECK(c.sigma_qg == 1.0);
  CHECK(c.sigma_r == 0.25);
  CHECK(c.stability_tol == 1e-3);
  CHECK(c.max_em_iters == 50);
  CHECK(c.budget_secs == 30.0);
  CHECK(sigma_r_for_levels(2) == 0.25);
  CHECK(sigma_r_for_levels(5) == 0.1);
  CHECK(sigma_r_for_levels(21) == 0.05);
}

TEST_CASE("config validation") {
  const auto bad = [](auto mutate) {
    SamplerConfig c;
    mutate(c);
    return c;
  };
  CHECK_THROWS(bad([](SamplerConfig& c) { c.dim = 0; }).validate());
  CHECK_THROWS(bad([](SamplerConfig& c) { c.sigma_r = 0.0; }).validate());
  CHECK_THROWS(bad([](SamplerConfig& c) { c.sigma_qg = -1.0; }).validate());
  CHECK_THROWS(bad([](SamplerConfig& c) { c.burn_in = 0; }).validate());
  CHECK_THROWS(bad([](SamplerConfig& c) { c.saved = 0; }).validate());
  CHECK_THROWS(bad([](SamplerConfig& c) { c.epsilon = -0.1; }).validate());
  CHECK_NOTHROW(SamplerConfig{}.validate());
}

TEST_CASE("anneal schedule") {
  AnnealState on(0.02, true);
  AnnealState off(0.02, false);
  for (int t = 0; t < 30; ++t) {
    CHECK(on.beta() == doctest::Approx(std::pow(1.02, t)).epsilon(1e-12));
    CHECK(off.beta() == 1.0);
    on.advance();
    off.advance();
  }
}

TEST_CASE("sample_prior moments") {
  SamplerConfig c;
  c.sigma_u = 2.0;
  c.sigma_g = 0.5;
  Rng rng = make_rng(1, 0);
  const std::size_t draws = 100000;
  const Embedding e = sample_prior(c, draws, draws, rng);
  double su = 0.0, sg = 0.0, qu = 0.0, qg = 0.0;
  for (std::size_t k = 0; k < draws; ++k) {
    for (std::size_t d = 0; d < 2; ++d) {
      su += e.user(k)[d];
      qu += e.user(k)[d] * e.user(k)[d];
      sg += e.item(k)[d];
      qg += e.item(k)[d] * e.item(k)[d];
    }
  }
  const double nd = static_cast<double>(draws * 2);
  CHECK(std::abs(su / nd) <= 3 * c.sigma_u / std::sqrt(nd));
  CHECK(std::abs(sg / nd) <= 3 * c.sigma_g / std::sqrt(nd));
  CHECK(std::abs(qu / nd - 4.0) <= 0.05 * 4.0);
  CHECK(std::abs(qg / nd - 0.25) <= 0.05 * 0.25);

  c.sigma_u = 1e-300;
  const Embedding tiny = sample_prior(c, 10, 1, rng);
  for (std::size_t i = 0; i < 10; ++i) CHECK(sq_norm(tiny.user(i)) < 1e-290);
}

TEST_CASE("log gain: identity proposal and empty neighborhoods") {
  SamplerConfig c;
  Rng rng = make_rng(2, 0);
  const RatingMatrix m = small_matrix();
  Embedding e = sample_prior(c, 3, 4, rng);
  const RatingFunction f({0.5, 1.0});
  for (std::size_t i = 0; i < 3; ++i) {
    const std::vector<double> same(e.user(i).begin(), e.user(i).end());
    CHECK(log_gain_user(i, same, e, m, f, c, 3.0) == 0.0);
  }
  const std::vector<double> same_item(e.item(1).begin(), e.item(1).end());
  CHECK(log_gain_item(1, same_item, e, m, f, c, 1.0) == 0.0);

  const RatingMatrix none(2, 2, {});
  const std::vector<double> y{0.3, -1.2};
  const double beta = 1.7;
  const double prior = -(sq_norm(y) - sq_norm(e.user(0))) / 2.0;
  CHECK(log_gain_user(0, y, e, none, f, c, beta) == doctest::Approx(beta * prior).epsilon(1e-14));
  const double prior_g = -(sq_norm(y) - sq_norm(e.item(1))) / 2.0;
  CHECK(log_gain_item(1, y, e, none, f, c, beta) == doctest::Approx(beta * prior_g).epsilon(1e-14));
}

TEST_CASE("log gain: single rating across the step") {
  SamplerConfig c;
  c.sigma_r = 0.25;
  const RatingMatrix m(1, 1, {{0, 0, 1.0}});
  const RatingFunction f({1.0});
  Embedding e(1, 1, 2);
  e.item(0)[0] = 0.0;
  e.item(0)[1] = 0.0;
  e.user(0)[0] = 0.5;  // distance 0.5: f = 1
  e.user(0)[1] = 0.0;
  const std::vector<double> far{2.0, 0.0};  // distance 2: f = 0
  const double prior_diff = -(4.0 - 0.25) / 2.0;
  CHECK(log_gain_user(0, far, e, m, f, c, 1.0) == doctest::Approx(prior_diff - 8.0).epsilon(1e-14));
}

TEST_CASE("item gain mirrors user gain under role swap") {
  SamplerConfig c;
  c.sigma_u = 0.7;
  c.sigma_g = 0.7;
  const RatingMatrix m = small_matrix();
  std::vector<Rating> swapped;
  for (const auto& r : m.entries()) swapped.push_back({r.item, r.user, r.value});
  const RatingMatrix t(4, 3, swapped);
  Rng rng = make_rng(3, 0);
  const Embedding e = sample_prior(c, 3, 4, rng);
  Embedding et(4, 3, 2);
  for (std::size_t j = 0; j < 4; ++j) std::copy(e.item(j).begin(), e.item(j).end(), et.user(j).begin());
  for (std::size_t i = 0; i < 3; ++i) std::copy(e.user(i).begin(), e.user(i).end(), et.item(i).begin());
  const RatingFunction f({0.8, 1.6});
  const std::vector<double> y{0.1, 0.9};
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(log_gain_user(i, y, e, m, f, c, 1.3) == log_gain_item(i, y, et, t, f, c, 1.3));
  }
}

TEST_CASE("local gain equals the full posterior difference") {
  SamplerConfig c;
  c.sigma_u = 1.3;
  c.sigma_g = 0.8;
  c.sigma_r = 0.2;
  const RatingMatrix m = small_matrix();
  const RatingFunction f({0.6, 1.2});
  Rng rng = make_rng(4, 0);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Embedding e = sample_prior(c, 3, 4, rng);
    const std::size_t k = static_cast<std::size_t>(trial) % 7;
    const std::vector<double> y{g(rng), g(rng)};
    Embedding moved = e;
    std::copy(y.begin(), y.end(), moved.point(k).begin());
    const double beta = 1.0 + 0.1 * trial;
    const double expected = beta * (log_posterior(moved, m, f, c) - log_posterior(e, m, f, c));
    const double got = k < 3 ? log_gain_user(k, y, e, m, f, c, beta)
                             : log_gain_item(k - 3, y, e, m, f, c, beta);
    CHECK(std::abs(got - expected) <= 1e-9 * std::max(1.0, std::abs(expected)));
  }
}

TEST_CASE("detailed balance at beta = 1") {
  SamplerConfig c;
  const RatingMatrix m(1, 1, {{0, 0, 0.5}});
  const RatingFunction f({0.7, 1.4});
  Rng rng = make_rng(5, 0);
  std::normal_distribution<double> g(0.0, 1.0);
  const auto q = [&](std::span<const double> to, std::span<const double> from) {
    return std::exp(-squared_distance(to, from) / (2 * c.sigma_qu * c.sigma_qu));
  };
  for (int trial = 0; trial < 200; ++trial) {
    const Embedding x = sample_prior(c, 1, 1, rng);
    const std::vector<double> y{g(rng), g(rng)};
    Embedding xp = x;
    std::copy(y.begin(), y.end(), xp.user(0).begin());
    const double pi_x = std::exp(log_posterior(x, m, f, c));
    const double pi_xp = std::exp(log_posterior(xp, m, f, c));
    const std::vector<double> back(x.user(0).begin(), x.user(0).end());
    const double a_fwd = std::min(1.0, std::exp(log_gain_user(0, y, x, m, f, c, 1.0)));
    const double a_back = std::min(1.0, std::exp(log_gain_user(0, back, xp, m, f, c, 1.0)));
    const double lhs = a_fwd * pi_x * q(y, x.user(0));
    const double rhs = a_back * pi_xp * q(back, xp.user(0));
    CHECK(std::abs(lhs - rhs) <= 1e-12 + 1e-9 * std::max(lhs, rhs));
  }
}

TEST_CASE("mh_step acceptance rule and point selection") {
  SamplerConfig c;
  const RatingMatrix m = small_matrix();
  const RatingFunction f({0.6, 1.2});
  Rng rng = make_rng(6, 0);
  Embedding e = sample_prior(c, 3, 4, rng);
  std::vector<std::size_t> picks(7, 0);
  const std::size_t steps = 70000;
  for (std::size_t s = 0; s < steps; ++s) {
    const Embedding before = e;
    const auto r = mh_step(e, m, f, c, 1.0, rng);
    ++picks[r.point];
    if (r.log_gain >= 0.0) CHECK(r.accepted);
    if (!r.accepted) CHECK(e == before);
  }
  for (std::size_t k = 0; k < 7; ++k) {
    // 10000 expected, binomial sd about 93
    CHECK(std::abs(static_cast<double>(picks[k]) - 10000.0) < 500.0);
  }
}

TEST_CASE("large beta stays finite and refuses downhill moves") {
  SamplerConfig c;
  const RatingMatrix m = small_matrix();
  const RatingFunction f({0.6, 1.2});
  Rng rng = make_rng(7, 0);
  Embedding e = sample_prior(c, 3, 4, rng);
  std::size_t downhill_accepts = 0;
  for (int s = 0; s < 5000; ++s) {
    const auto r = mh_step(e, m, f, c, 1e6, rng);
    CHECK(!std::isnan(r.log_gain));
    if (r.accepted && r.log_gain < -50.0) ++downhill_accepts;
  }
  CHECK(downhill_accepts == 0);
  CHECK(e.all_finite());
}

TEST_CASE("chain without likelihood samples the prior") {
  SamplerConfig c;
  const RatingMatrix none(2, 2, {});
  const RatingFunction f({1.0});
  Rng rng = make_rng(8, 0);
  Embedding e = sample_prior(c, 2, 2, rng);
  std::vector<double> chain;
  for (std::size_t s = 1; s <= 100000; ++s) {
    mh_step(e, none, f, c, 1.0, rng);
    if (s % 25 == 0) chain.insert(chain.end(), e.coords().begin(), e.coords().end());
  }
  Rng direct_rng = make_rng(9, 0);
  const Embedding direct = sample_prior(c, chain.size() / 4, chain.size() / 4, direct_rng);
  std::vector<double> ref(direct.coords().begin(), direct.coords().begin() + chain.size());
  CHECK(oracle::ks_two_sample_p(chain, ref) > 0.01);
}

TEST_CASE("run_em: reproducible, monotone M-steps, report contents") {
  SyntheticSpec spec;
  spec.users = 12;
  spec.items = 6;
  spec.seed = 3;
  const auto data = generate_synthetic(spec);
  SamplerConfig c;
  c.burn_in = 100;
  c.saved = 200;
  c.max_em_iters = 6;
  c.stability_tol = 0.0;
  c.seed = 42;
  c.sigma_r = 0.1;
  const auto a = run_em(data.matrix, c);
  const auto b = run_em(data.matrix, c);
  CHECK(a.embedding == b.embedding);
  CHECK(a.rating_function == b.rating_function);
  REQUIRE(a.report.iterations.size() == 6);
  CHECK(a.report.stop_reason == "max_em_iters");
  CHECK(a.report.levels == distinct_levels(data.matrix).size());
  for (std::size_t t = 0; t < 6; ++t) {
    const auto& it = a.report.iterations[t];
    CHECK(it.beta == doctest::Approx(std::pow(1.02, static_cast<double>(t))).epsilon(1e-12));
    CHECK(it.sse_after <= it.sse_before + 1e-9);
    CHECK(it.pair_count == 200 * data.matrix.size());
    CHECK(it.sse_after == b.report.iterations[t].sse_after);
  }
  c.seed = 43;
  CHECK(!(run_em(data.matrix, c).embedding == a.embedding));

  c.anneal = false;
  for (const auto& it : run_em(data.matrix, c).report.iterations) CHECK(it.beta == 1.0);
}

TEST_CASE("run_em stops when stable and rejects single-level data") {
  SyntheticSpec spec;
  spec.users = 10;
  spec.items = 5;
  const auto data = generate_synthetic(spec);
  SamplerConfig c;
  c.burn_in = 50;
  c.saved = 100;
  c.stability_tol = 1.0;  // any relative change below 100% counts
  const auto r = run_em(data.matrix, c);
  CHECK(r.report.stop_reason == "stable");
  CHECK(r.report.iterations.size() == 2);

  const RatingMatrix flat(2, 2, {{0, 0, 0.5}, {1, 1, 0.5}});
  CHECK_THROWS(run_em(flat, c));
}
