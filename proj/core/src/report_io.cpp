#include "collabviz/report_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace collabviz {

using nlohmann::json;

namespace {

json to_json(const SamplerConfig& c) {
  return json{{"dim", c.dim},
              {"sigma_u", c.sigma_u},
              {"sigma_g", c.sigma_g},
              {"sigma_qu", c.sigma_qu},
              {"sigma_qg", c.sigma_qg},
              {"sigma_r", c.sigma_r},
              {"burn_in", c.burn_in},
              {"saved", c.saved},
              {"epsilon", c.epsilon},
              {"max_em_iters", c.max_em_iters},
              {"stability_tol", c.stability_tol},
              {"budget_secs", c.budget_secs},
              {"normalize_stride", c.normalize_stride},
              {"save_stride", c.save_stride},
              {"levels", c.levels},
              {"seed", c.seed},
              {"anneal", c.anneal}};
}

template <typename T>
void take(const json& j, const char* key, T& field) {
  if (auto it = j.find(key); it != j.end()) field = it->get<T>();
}

std::string rating_function_line(std::span<const double> thresholds) {
  if (thresholds.empty()) return {};
  return RatingFunction(std::vector<double>(thresholds.begin(), thresholds.end())).to_line();
}

json summary_json(const Summary& s) { return json{{"mean", s.mean}, {"stddev", s.stddev}}; }

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string sampler_config_json(const SamplerConfig& config) { return to_json(config).dump(2); }

SamplerConfig sampler_config_from_json(std::string_view text, SamplerConfig base) {
  const json j = json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("sampler config must be a JSON object");
  const json known = to_json(base);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument("unknown sampler config key '" + key + "'");
  }
  take(j, "dim", base.dim);
  take(j, "sigma_u", base.sigma_u);
  take(j, "sigma_g", base.sigma_g);
  take(j, "sigma_qu", base.sigma_qu);
  take(j, "sigma_qg", base.sigma_qg);
  take(j, "sigma_r", base.sigma_r);
  take(j, "burn_in", base.burn_in);
  take(j, "saved", base.saved);
  take(j, "epsilon", base.epsilon);
  take(j, "max_em_iters", base.max_em_iters);
  take(j, "stability_tol", base.stability_tol);
  take(j, "budget_secs", base.budget_secs);
  take(j, "normalize_stride", base.normalize_stride);
  take(j, "save_stride", base.save_stride);
  take(j, "levels", base.levels);
  take(j, "seed", base.seed);
  take(j, "anneal", base.anneal);
  return base;
}

std::string run_report_json(const RunReport& r) {
  json iterations = json::array();
  for (const auto& it : r.iterations) {
    iterations.push_back({{"iteration", it.iteration},
                          {"beta", it.beta},
                          {"acceptance_rate", it.acceptance_rate},
                          {"pair_count", it.pair_count},
                          {"sse_before", it.sse_before},
                          {"sse_after", it.sse_after},
                          {"thresholds", it.thresholds}});
  }
  json out{{"config", to_json(r.config)},
           {"users", r.users},
           {"items", r.items},
           {"ratings", r.ratings},
           {"levels", r.levels},
           {"initial_thresholds", r.initial_thresholds},
           {"iterations", iterations},
           {"final_thresholds", r.final_thresholds},
           {"rating_function", rating_function_line(r.final_thresholds)},
           {"stop_reason", r.stop_reason}};
  return out.dump(2) + "\n";
}

std::string eval_report_json(const EvalReport& r) {
  json variants = json::object();
  for (std::size_t v = 0; v < r.variants.size(); ++v) {
    variants[r.variants[v]] = {{"tau", r.tau[v]}, {"summary", summary_json(r.summaries[v])}};
  }
  json replicas = json::array();
  for (const auto& info : r.replicas) {
    replicas.push_back({{"test_pairs", info.test_pairs},
                        {"train_ratings", info.train_ratings},
                        {"dropped_users", info.dropped_users},
                        {"dropped_items", info.dropped_items},
                        {"resamples", info.resamples}});
  }
  json out{{"replica_count", r.ideal_tau.size()},
           {"variants", variants},
           {"ideal_tau", {{"tau", r.ideal_tau}, {"summary", summary_json(r.ideal_summary)}}},
           {"replicas", replicas}};
  return out.dump(2) + "\n";
}

std::string eval_report_csv(const EvalReport& r) {
  std::string out = "variant,replica,tau\n";
  for (std::size_t v = 0; v < r.variants.size(); ++v) {
    for (std::size_t k = 0; k < r.tau[v].size(); ++k) {
      out += r.variants[v] + ',' + std::to_string(k) + ',' + format_double(r.tau[v][k]) + '\n';
    }
  }
  for (std::size_t k = 0; k < r.ideal_tau.size(); ++k) {
    out += "ideal," + std::to_string(k) + ',' + format_double(r.ideal_tau[k]) + '\n';
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace collabviz
