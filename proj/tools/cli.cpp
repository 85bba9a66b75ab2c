#include "cli.hpp"

#include <chrono>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>

#include "CLI11.hpp"
#include "collabviz/embedding.hpp"
#include "collabviz/imputation.hpp"
#include "collabviz/report_io.hpp"
#include "json.hpp"

namespace collabviz::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <typename T>
void take(const json& j, const char* key, T& field) {
  if (auto it = j.find(key); it != j.end()) field = it->get<T>();
}

void take_path(const json& j, const char* key, fs::path& field) {
  if (auto it = j.find(key); it != j.end()) field = it->get<std::string>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* where) {
  if (!j.is_object()) throw std::invalid_argument(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool found = false;
    for (const char* k : keys) found = found || key == k;
    if (!found) throw std::invalid_argument("unknown " + std::string(where) + " key '" + key + "'");
  }
}

json split_json(const SplitSpec& s) {
  return {{"test_user_fraction", s.test_user_fraction},
          {"test_item_fraction", s.test_item_fraction},
          {"train_size", s.train_size},
          {"train_users", s.train_users},
          {"replicas", s.replicas},
          {"seed", s.seed},
          {"max_resamples", s.max_resamples}};
}

json synth_json(const SyntheticSpec& s) {
  return {{"users", s.users},     {"items", s.items},       {"dim", s.dim},
          {"levels", s.levels},   {"density", s.density},   {"noise_sd", s.noise_sd},
          {"seed", s.seed}};
}

json to_json(const RunConfig& c) {
  return {{"input", c.input.string()},
          {"output_dir", c.output_dir.string()},
          {"labels", c.labels.string()},
          {"output", c.output.string()},
          {"scale", {{"min_raw", c.scale.min_raw}, {"max_raw", c.scale.max_raw},
                     {"step", c.scale.step}}},
          {"sampler", json::parse(sampler_config_json(c.sampler))},
          {"sigma_r_auto", c.sigma_r_auto},
          {"split", split_json(c.split)},
          {"threads", c.threads},
          {"variant", c.variant},
          {"variants", c.variants},
          {"synth", synth_json(c.synth)},
          {"plot", {{"width", c.plot.width}, {"height", c.plot.height},
                    {"point_radius", c.plot.point_radius}}}};
}

// Run report or eval report JSON with the effective configuration attached.
std::string with_run_config(const std::string& report, const RunConfig& config) {
  json j = json::parse(report);
  j["run_config"] = to_json(config);
  return j.dump(2) + "\n";
}

void ensure_dir(const fs::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory '" + dir.string() + "': " + ec.message());
}

RatingMatrix load_input(const RunConfig& config) {
  if (config.input.empty()) throw std::invalid_argument("no input file given (use --input)");
  if (!fs::exists(config.input)) {
    throw DataError("input file '" + config.input.string() + "' does not exist");
  }
  return load_triplets(config.input, config.scale);
}

// Fills in the data-dependent defaults so the echoed config is explicit.
RunConfig resolve(RunConfig config, const RatingMatrix& matrix) {
  if (config.sampler.levels == 0) config.sampler.levels = distinct_levels(matrix).size();
  if (config.sigma_r_auto) {
    config.sampler.sigma_r = sigma_r_for_levels(config.sampler.levels);
    config.sigma_r_auto = false;
  }
  return config;
}

}  // namespace

void RunConfig::validate() const {
  scale.validate();
  sampler.validate();
  split.validate();
  parse_variant(variant);
  if (variants.empty()) throw std::invalid_argument("at least one variant is required");
  for (const auto& v : variants) parse_variant(v);
  if (!(plot.width > 0.0) || !(plot.height > 0.0) || !(plot.point_radius > 0.0)) {
    throw std::invalid_argument("plot width, height and point_radius must be > 0");
  }
}

std::string run_config_json(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

RunConfig run_config_from_json(std::string_view text, RunConfig base) {
  json j = json::parse(text);
  if (j.is_object() && j.contains("run_config")) j = j.at("run_config");
  reject_unknown(j,
                 {"input", "output_dir", "labels", "output", "scale", "sampler", "sigma_r_auto",
                  "split", "threads", "variant", "variants", "synth", "plot"},
                 "run config");
  take_path(j, "input", base.input);
  take_path(j, "output_dir", base.output_dir);
  take_path(j, "labels", base.labels);
  take_path(j, "output", base.output);
  if (auto it = j.find("scale"); it != j.end()) {
    reject_unknown(*it, {"min_raw", "max_raw", "step"}, "scale");
    take(*it, "min_raw", base.scale.min_raw);
    take(*it, "max_raw", base.scale.max_raw);
    take(*it, "step", base.scale.step);
  }
  if (auto it = j.find("sampler"); it != j.end()) {
    base.sampler = sampler_config_from_json(it->dump(), base.sampler);
    if (it->contains("sigma_r")) base.sigma_r_auto = false;
  }
  take(j, "sigma_r_auto", base.sigma_r_auto);
  if (auto it = j.find("split"); it != j.end()) {
    reject_unknown(*it,
                   {"test_user_fraction", "test_item_fraction", "train_size", "train_users",
                    "replicas", "seed", "max_resamples"},
                   "split");
    take(*it, "test_user_fraction", base.split.test_user_fraction);
    take(*it, "test_item_fraction", base.split.test_item_fraction);
    take(*it, "train_size", base.split.train_size);
    take(*it, "train_users", base.split.train_users);
    take(*it, "replicas", base.split.replicas);
    take(*it, "seed", base.split.seed);
    take(*it, "max_resamples", base.split.max_resamples);
  }
  take(j, "threads", base.threads);
  take(j, "variant", base.variant);
  take(j, "variants", base.variants);
  if (auto it = j.find("synth"); it != j.end()) {
    reject_unknown(*it, {"users", "items", "dim", "levels", "density", "noise_sd", "seed"},
                   "synth");
    take(*it, "users", base.synth.users);
    take(*it, "items", base.synth.items);
    take(*it, "dim", base.synth.dim);
    take(*it, "levels", base.synth.levels);
    take(*it, "density", base.synth.density);
    take(*it, "noise_sd", base.synth.noise_sd);
    take(*it, "seed", base.synth.seed);
  }
  if (auto it = j.find("plot"); it != j.end()) {
    reject_unknown(*it, {"width", "height", "point_radius"}, "plot");
    take(*it, "width", base.plot.width);
    take(*it, "height", base.plot.height);
    take(*it, "point_radius", base.plot.point_radius);
  }
  return base;
}

int cmd_embed(const RunConfig& config, std::ostream& log) {
  config.validate();
  const RatingMatrix matrix = load_input(config);
  RunConfig eff = resolve(config, matrix);
  const Variant variant = parse_variant(eff.variant);
  if (variant == Variant::kMcmc) eff.sampler.anneal = false;

  Embedding emb;
  RunReport report;
  const auto take_result = [&](EmResult r) {
    emb = std::move(r.embedding);
    report = std::move(r.report);
  };
  switch (variant) {
    case Variant::kMcmc:
    case Variant::kMcmcSa:
      take_result(run_em(matrix, eff.sampler));
      break;
    case Variant::kMcmcReg:
      take_result(run_em(to_rating_matrix(fill_linear_regression(matrix)), eff.sampler));
      break;
    case Variant::kRandom: {
      Rng rng = make_rng(eff.sampler.seed, 0);
      emb = sample_prior(eff.sampler, matrix.user_count(), matrix.item_count(), rng);
      normalize(emb);
      report.config = eff.sampler;
      report.levels = eff.sampler.levels;
      report.users = matrix.user_count();
      report.items = matrix.item_count();
      report.ratings = matrix.size();
      report.stop_reason = "random";
      break;
    }
  }

  ensure_dir(eff.output_dir);
  save_embedding(eff.output_dir / "embedding.tsv", emb, matrix);
  write_text_file(eff.output_dir / "run_report.json",
                  with_run_config(run_report_json(report), eff));
  log << "embed (" << eff.variant << "): " << matrix.user_count() << " users, "
      << matrix.item_count() << " items, " << matrix.size() << " ratings, K="
      << eff.sampler.levels << "; " << report.iterations.size()
      << " EM iterations, stop: " << report.stop_reason << ", "
      << report.wall_clock_secs << " s\n"
      << "wrote " << (eff.output_dir / "embedding.tsv").string() << " and "
      << (eff.output_dir / "run_report.json").string() << '\n';
  return 0;
}

int cmd_eval(const RunConfig& config, std::ostream& log) {
  config.validate();
  const RatingMatrix matrix = load_input(config);
  const RunConfig eff = resolve(config, matrix);

  ExperimentConfig experiment;
  experiment.split = eff.split;
  experiment.threads = eff.threads;
  const auto all = default_variants(eff.sampler);
  for (const auto& name : eff.variants) {
    const Variant v = parse_variant(name);
    for (const auto& run : all) {
      if (run.variant == v) experiment.variants.push_back(run);
    }
  }
  const auto start = std::chrono::steady_clock::now();
  const EvalReport report = run_experiment(matrix, experiment);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ensure_dir(eff.output_dir);
  write_text_file(eff.output_dir / "eval_report.json",
                  with_run_config(eval_report_json(report), eff));
  write_text_file(eff.output_dir / "eval_report.csv", eval_report_csv(report));
  log << "eval: " << eff.split.replicas << " replicas in " << secs << " s\n";
  for (std::size_t v = 0; v < report.variants.size(); ++v) {
    log << "  " << report.variants[v] << ": mean tau " << report.summaries[v].mean << " (sd "
        << report.summaries[v].stddev << ")\n";
  }
  log << "  ideal: mean tau " << report.ideal_summary.mean << '\n'
      << "wrote " << (eff.output_dir / "eval_report.json").string() << " and "
      << (eff.output_dir / "eval_report.csv").string() << '\n';
  return 0;
}

int cmd_synth(const RunConfig& config, std::ostream& log) {
  const SyntheticData data = generate_synthetic(config.synth);
  // Integer raw ratings 1..K, the scale an embed run needs to read them back.
  RunConfig eff = config;
  eff.scale = RatingScale{1.0, static_cast<double>(config.synth.levels), 1.0};
  eff.input = eff.output_dir / "ratings.csv";

  ensure_dir(eff.output_dir);
  save_triplets(eff.output_dir / "ratings.csv", data.matrix, eff.scale);
  save_embedding(eff.output_dir / "planted_embedding.tsv", data.planted, data.matrix);
  write_text_file(eff.output_dir / "rating_function.txt", data.rating_function.to_line() + "\n");
  write_text_file(eff.output_dir / "synth_config.json", run_config_json(eff));
  log << "synth: " << data.matrix.user_count() << " users, " << data.matrix.item_count()
      << " items, " << data.matrix.size() << " ratings on scale 1.." << config.synth.levels
      << "\nwrote ratings.csv, planted_embedding.tsv, rating_function.txt and synth_config.json"
      << " to " << eff.output_dir.string() << '\n';
  return 0;
}

int cmd_plot(const RunConfig& config, std::ostream& log, std::ostream& warn) {
  if (config.input.empty()) throw std::invalid_argument("no embedding file given (use --input)");
  if (!fs::exists(config.input)) {
    throw DataError("embedding file '" + config.input.string() + "' does not exist");
  }
  const auto rows = load_embedding_rows(config.input);
  std::map<std::string, std::string> labels;
  if (!config.labels.empty()) labels = load_labels(read_text_file(config.labels));
  const std::string svg = render_svg(rows, labels, config.plot, warn);
  const fs::path out = config.output.empty() ? config.output_dir / "embedding.svg" : config.output;
  ensure_dir(out.parent_path());
  write_text_file(out, svg);
  log << "wrote " << out.string() << '\n';
  return 0;
}

namespace {

struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> input;
  std::optional<std::string> output_dir;
  std::optional<std::string> output;
  std::optional<std::string> labels;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> dim;
  std::optional<std::size_t> levels;
  std::vector<std::string> variants;
  std::optional<std::size_t> replicas;
  std::optional<std::size_t> train_size;
  std::optional<std::size_t> train_users;
  std::optional<std::size_t> threads;
  std::optional<double> budget_secs;
  std::optional<double> sigma_r;
  std::optional<std::size_t> burn_in;
  std::optional<std::size_t> saved;
  std::optional<std::size_t> max_em_iters;
  std::optional<std::size_t> normalize_stride;
  std::optional<std::size_t> save_stride;
  bool no_anneal = false;
  std::optional<double> scale_min;
  std::optional<double> scale_max;
  std::optional<double> scale_step;
  std::optional<std::size_t> users;
  std::optional<std::size_t> items;
  std::optional<double> density;
  std::optional<double> noise_sd;
  std::optional<double> width;
  std::optional<double> height;
  std::optional<double> radius;
};

template <typename T, typename U>
void put(const std::optional<T>& flag, U& field) {
  if (flag) field = *flag;
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run config (a run report works too)");
  cmd->add_option("--output-dir", f.output_dir, "Directory for output files");
  cmd->add_option("--seed", f.seed, "RNG seed");
}

void add_sampler(CLI::App* cmd, Flags& f) {
  cmd->add_option("--input", f.input, "Ratings CSV with header user,item,rating");
  cmd->add_option("--dim", f.dim, "Embedding dimension D");
  cmd->add_option("--levels", f.levels, "Rating function levels K (default: distinct ratings)");
  cmd->add_option("--budget-secs", f.budget_secs, "Wall-clock budget per EM run (<= 0: none)");
  cmd->add_option("--sigma-r", f.sigma_r, "Rating noise std (default: preset for K)");
  cmd->add_option("--burn-in", f.burn_in, "Burn-in MH steps per E-step");
  cmd->add_option("--saved", f.saved, "Saved MH steps per E-step");
  cmd->add_option("--max-em-iters", f.max_em_iters, "EM iteration cap");
  cmd->add_option("--normalize-stride", f.normalize_stride, "Normalize every k MH steps");
  cmd->add_option("--save-stride", f.save_stride, "Save pairs every k MH steps");
  cmd->add_flag("--no-anneal", f.no_anneal, "Keep beta at 1");
  cmd->add_option("--scale-min", f.scale_min, "Lowest raw rating");
  cmd->add_option("--scale-max", f.scale_max, "Highest raw rating");
  cmd->add_option("--scale-step", f.scale_step, "Raw rating increment (0: continuous)");
}

RunConfig build_config(const CLI::App* cmd, const Flags& f) {
  RunConfig c;
  if (f.config) c = run_config_from_json(read_text_file(*f.config), c);
  const std::string name = cmd->get_name();
  put(f.input, c.input);
  put(f.output_dir, c.output_dir);
  put(f.output, c.output);
  put(f.labels, c.labels);
  if (f.seed) {
    c.sampler.seed = *f.seed;
    c.split.seed = *f.seed;
    c.synth.seed = *f.seed;
  }
  if (name == "synth") {
    put(f.dim, c.synth.dim);
    put(f.levels, c.synth.levels);
  } else {
    put(f.dim, c.sampler.dim);
    put(f.levels, c.sampler.levels);
  }
  if (!f.variants.empty()) {
    if (name == "embed") {
      if (f.variants.size() != 1) throw std::invalid_argument("embed takes one --variant");
      c.variant = f.variants.front();
    } else {
      c.variants = f.variants;
    }
  }
  put(f.replicas, c.split.replicas);
  put(f.train_size, c.split.train_size);
  put(f.train_users, c.split.train_users);
  put(f.threads, c.threads);
  put(f.budget_secs, c.sampler.budget_secs);
  if (f.sigma_r) {
    c.sampler.sigma_r = *f.sigma_r;
    c.sigma_r_auto = false;
  }
  put(f.burn_in, c.sampler.burn_in);
  put(f.saved, c.sampler.saved);
  put(f.max_em_iters, c.sampler.max_em_iters);
  put(f.normalize_stride, c.sampler.normalize_stride);
  put(f.save_stride, c.sampler.save_stride);
  if (f.no_anneal) c.sampler.anneal = false;
  put(f.scale_min, c.scale.min_raw);
  put(f.scale_max, c.scale.max_raw);
  put(f.scale_step, c.scale.step);
  put(f.users, c.synth.users);
  put(f.items, c.synth.items);
  put(f.density, c.synth.density);
  put(f.noise_sd, c.synth.noise_sd);
  put(f.width, c.plot.width);
  put(f.height, c.plot.height);
  put(f.radius, c.plot.point_radius);
  return c;
}

}  // namespace

int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint user/item embeddings of collaborative rating data"};
  app.name("collabviz");
  app.require_subcommand(1);
  Flags f;

  auto* embed = app.add_subcommand("embed", "Fit one embedding, write TSV and run report");
  add_common(embed, f);
  add_sampler(embed, f);
  embed->add_option("--variant", f.variants, "mcmc, mcmc-sa (default), mcmc-reg or random")
      ->expected(1);

  auto* eval = app.add_subcommand("eval", "Held-out Kendall tau over replicated splits");
  add_common(eval, f);
  add_sampler(eval, f);
  eval->add_option("--variant", f.variants, "Variants to compare (repeatable; default all)");
  eval->add_option("--replicas", f.replicas, "Number of random splits");
  eval->add_option("--train-size", f.train_size, "Training items (0: all non-test items)");
  eval->add_option("--train-users", f.train_users, "Training users (0: scale with items)");
  eval->add_option("--threads", f.threads, "Worker threads (0: hardware concurrency)");

  auto* synth = app.add_subcommand("synth", "Ratings generated from a planted embedding");
  add_common(synth, f);
  synth->add_option("--users", f.users, "User count");
  synth->add_option("--items", f.items, "Item count");
  synth->add_option("--dim", f.dim, "Planted dimension");
  synth->add_option("--levels", f.levels, "Rating levels K");
  synth->add_option("--density", f.density, "Fraction of cells kept");
  synth->add_option("--noise-sd", f.noise_sd, "Rating noise before re-quantization");

  auto* plot = app.add_subcommand("plot", "SVG scatter plot of a 2-D embedding");
  add_common(plot, f);
  plot->add_option("--input", f.input, "Embedding TSV");
  plot->add_option("--labels", f.labels, "CSV item,category");
  plot->add_option("--output", f.output, "SVG path (default: <output-dir>/embedding.svg)");
  plot->add_option("--width", f.width, "Plot area width bound in px");
  plot->add_option("--height", f.height, "Plot area height bound in px");
  plot->add_option("--radius", f.radius, "Item marker radius in px");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  CLI::App* cmd = app.get_subcommands().front();
  try {
    const RunConfig config = build_config(cmd, f);
    if (cmd == embed) return cmd_embed(config, out);
    if (cmd == eval) return cmd_eval(config, out);
    if (cmd == synth) return cmd_synth(config, out);
    return cmd_plot(config, out, err);
  } catch (const std::exception& e) {
    err << "collabviz " << cmd->get_name() << ": error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace collabviz::cli
