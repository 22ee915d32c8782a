// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#include "polaron/mac_engine.hpp"

namespace polaron {

PipelineReport run_pipeline(std::span<const VectorOp> ops, const PipelineConfig& cfg) {
  PipelineReport report;
  std::map<std::string, std::int64_t> lane_slots;
  std::int64_t total_slots = 0;
  const PrecisionMode* previous = nullptr;
  for (const auto& op : ops) {
    if (op.active_lanes < 0 || op.active_lanes > op.mode.lanes)
      throw std::invalid_argument("active_lanes outside [0, lanes]");
    if (previous && !(previous->format == op.mode.format)) ++report.mode_switches;
    previous = &op.mode;
    PipelineStats& s = report.per_mode[op.mode.format.name()];
    ++s.vector_ops;
    ++s.cycles;
    s.mac_ops += op.active_lanes;
    s.skipped_lanes += op.mode.lanes - op.active_lanes;
    lane_slots[op.mode.format.name()] += op.mode.lanes;
    total_slots += op.mode.lanes;
    report.total.mac_ops += op.active_lanes;
    report.total.skipped_lanes += op.mode.lanes - op.active_lanes;
  }
  for (auto& [name, s] : report.per_mode)
    s.lane_utilization = static_cast<double>(s.mac_ops) / static_cast<double>(lane_slots[name]);
  report.total.vector_ops = static_cast<std::int64_t>(ops.size());
  if (!ops.empty()) {
    report.total.cycles = report.total.vector_ops + kPipelineFill + report.mode_switches * cfg.mode_switch_penalty;
    report.total.lane_utilization =
        static_cast<double>(report.total.mac_ops) / static_cast<double>(total_slots);
  }
  return report;
}

}  // namespace polaron
