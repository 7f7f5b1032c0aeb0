#include <iostream>

#include "commands.hpp"
#include "common.hpp"
#include "disagg/pipeline.hpp"

namespace disagg::cli {

int cmd_pipeline(const PipelineArgs& args) {
  PipelineConfig cfg;
  cfg.n_batches = args.n_batches;
  cfg.t_model_s = args.tm_ms * 1e-3;
  cfg.t_attn_s = args.ta_ms * 1e-3;
  cfg.n_slices = args.slices;

  const Timeline tl = build_schedule(cfg, args.slots, !args.no_stretch);
  const ValidationReport report = validate(tl);

  if (!args.out.empty()) write_text(args.out, timeline_csv(tl));
  const ojson rj = report_to_json(tl, report);
  if (!args.report.empty()) write_json(args.report, rj);

  std::cout << "n=" << cfg.n_batches << " slot=" << tl.slot_us() << "us"
            << (tl.stretched ? " (stretched)" : "") << " conflicts=" << report.conflicts
            << " bubbles=" << report.bubbles.size() << " migrations=" << report.migrations
            << '\n';
  if (args.out.empty() && args.report.empty()) std::cout << rj.dump(2) << '\n';
  return 0;
}

}  // namespace disagg::cli
