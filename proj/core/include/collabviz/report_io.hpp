#ifndef COLLABVIZ_REPORT_IO_HPP_
#define COLLABVIZ_REPORT_IO_HPP_

#include <filesystem>
#include <string>
#include <string_view>

#include "collabviz/eval.hpp"
#include "collabviz/sampler.hpp"

namespace collabviz {

// JSON keys for SamplerConfig: dim, sigma_u, sigma_g, sigma_qu, sigma_qg,
// sigma_r, burn_in, saved, epsilon, max_em_iters, stability_tol,
// budget_secs, normalize_stride, save_stride, levels, seed, anneal.
std::string sampler_config_json(const SamplerConfig& config);
/// Overlays the keys present in `json` onto `base`. Unknown keys throw.
SamplerConfig sampler_config_from_json(std::string_view json, SamplerConfig base = {});

/// Config echo, per-iteration SSE / acceptance / beta / thresholds, final
/// rating function line and stop reason. Wall-clock time is left out so equal
/// runs give equal bytes.
std::string run_report_json(const RunReport& report);

std::string eval_report_json(const EvalReport& report);
/// Flat `variant,replica,tau` rows; the ideal bound appears as variant "ideal".
std::string eval_report_csv(const EvalReport& report);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace collabviz

#endif  // COLLABVIZ_REPORT_IO_HPP_
