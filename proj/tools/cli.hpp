#ifndef COLLABVIZ_TOOLS_CLI_HPP_
#define COLLABVIZ_TOOLS_CLI_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "collabviz/eval.hpp"
#include "collabviz/ratings.hpp"
#include "collabviz/sampler.hpp"
#include "svg_plot.hpp"

namespace collabviz::cli {

/// Everything a command needs. Loaded from JSON, then overridden by flags.
struct RunConfig {
  std::filesystem::path input;  // ratings CSV (embed, eval) or embedding TSV (plot)
  std::filesystem::path output_dir = ".";
  std::filesystem::path labels;  // optional `item,category` CSV for plot
  std::filesystem::path output;  // plot SVG; empty = <output_dir>/embedding.svg

  RatingScale scale{1.0, 5.0, 1.0};
  SamplerConfig sampler;
  bool sigma_r_auto = true;  // pick sigma_r from the data's level count

  SplitSpec split;
  std::size_t threads = 0;

  std::string variant = "mcmc-sa";  // embed
  std::vector<std::string> variants = {"mcmc", "mcmc-sa", "mcmc-reg", "random"};  // eval

  SyntheticSpec synth;
  PlotStyle plot;

  void validate() const;
};

std::string run_config_json(const RunConfig& config);
/// Overlays the keys present in `json` onto `base`. A run report is accepted
/// too; its `run_config` member is used. Unknown keys throw.
RunConfig run_config_from_json(std::string_view json, RunConfig base = {});

// Each command returns 0 on success. Errors propagate as exceptions so the
// caller decides on reporting; run_command wraps them into an exit status.
int cmd_embed(const RunConfig& config, std::ostream& log);
int cmd_eval(const RunConfig& config, std::ostream& log);
int cmd_synth(const RunConfig& config, std::ostream& log);
/// Label problems go to `warn`.
int cmd_plot(const RunConfig& config, std::ostream& log, std::ostream& warn);

/// Full command line: `collabviz <embed|eval|synth|plot> [flags]`.
int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace collabviz::cli

#endif  // COLLABVIZ_TOOLS_CLI_HPP_
