// SPDX-FileCopyrightText: © 2026 The specsim authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specsim/config.hpp"

namespace specsim {

// Bump when the report field set or serialization layout changes; emitted in
// every JSON document and CSV row.
inline constexpr int kMetricsSchemaVersion = 1;

// Per-device activity totals, in native cycles of that device. starved is
// the subset of idle spent blocked on the other device's output (the
// verifier out of drafts; the drafter gated by the controller or a full
// queue).
struct DeviceMetrics {
  double busy_cycles = 0.0;
  double idle_cycles = 0.0;
  double starved_cycles = 0.0;
  std::uint64_t ops_executed = 0;
  double compute_energy_pj = 0.0;
  double background_busy_pj = 0.0;

  double total_cycles() const { return busy_cycles + idle_cycles; }
  double utilization() const {
    const double t = total_cycles();
    return t > 0.0 ? busy_cycles / t : 0.0;
  }

  bool operator==(const DeviceMetrics&) const = default;
};

struct EnergyReport {
  double npu_compute_pj = 0.0;  // GPU baseline folds in here
  double pim_compute_pj = 0.0;
  double background_busy_pj = 0.0;
  double background_idle_pj = 0.0;
  double dram_pj = 0.0;
  double offchip_pj = 0.0;
  double aau_pj = 0.0;
  double total_pj = 0.0;
  double per_token_pj = 0.0;
  double tokens_per_joule = 0.0;

  bool operator==(const EnergyReport&) const = default;
};

// One simulated decode run, fully summarized. Emission order and key set are
// fixed so identical runs serialize to identical bytes.
struct MetricsReport {
  std::string variant;
  std::uint64_t seed = 0;
  std::uint64_t generation_length = 0;

  // Token accounting. drafted = every speculative token produced, including
  // ones discarded while still in flight during a rollback. committed equals
  // generation_length on normal termination (a final batch may overshoot;
  // the overshoot is trimmed from the report and the output sequence).
  std::uint64_t committed_tokens = 0;
  std::uint64_t accepted_draft_tokens = 0;
  std::uint64_t committed_corrections = 0;
  std::uint64_t rejected_tokens = 0;
  std::uint64_t purged_tokens = 0;
  std::uint64_t discarded_inflight_tokens = 0;
  std::uint64_t drafted_tokens = 0;

  std::uint64_t batches_drafted = 0;
  std::uint64_t batches_fully_accepted = 0;
  std::uint64_t batches_rejected = 0;
  std::uint64_t batches_purged = 0;
  std::uint64_t batches_discarded_inflight = 0;

  std::uint64_t preverify_count = 0;  // pre-verification operations issued
  std::uint64_t preverify_tokens = 0;
  std::uint64_t preverify_rejections = 0;

  double acceptance_rate = 0.0;  // accepted_draft_tokens / max(drafted, 1)
  double mean_draft_len = 0.0;

  double total_ps = 0.0;
  double wall_time_sec = 0.0;
  double throughput_tokens_per_sec = 0.0;
  double npu_cycles_per_token = 0.0;

  DeviceMetrics npu;  // the verifier device (GPU in the monolithic baseline)
  DeviceMetrics pim;  // the drafting device (unused in that baseline)

  // Drafting cycles spent on batches later purged by a rollback or discarded
  // mid-flight; numerator of pim_wasted_frac.
  double wasted_pim_cycles = 0.0;

  // Fractions of each device's total simulated cycles; busy + idle = 1.
  double npu_busy_frac = 0.0;
  double npu_idle_frac = 0.0;
  double npu_starved_frac = 0.0;
  double pim_busy_frac = 0.0;
  double pim_idle_frac = 0.0;
  double pim_wasted_frac = 0.0;

  EnergyReport energy;

  std::uint64_t feedback_records = 0;
  std::uint64_t max_queue_depth = 0;
  double mean_queue_depth = 0.0;  // time-weighted, in batches

  std::uint64_t edc_stop_decisions = 0;
  std::uint64_t edc_continue_decisions = 0;
  double edc_wait_cycles = 0.0;  // PIM cycles gated by a stop decision

  std::uint64_t tvc_insertions = 0;
  std::uint64_t tvc_budget_violations = 0;

  // Coefficient of variation of the per-iteration PIM share of latency;
  // meaningful for the lockstep baseline only.
  double pim_share_cv = 0.0;

  std::vector<std::string> applied_overrides;

  bool operator==(const MetricsReport&) const = default;
};

// Fills the derived fields (rates, fractions, throughput, energy totals)
// from the raw counters; idempotent.
void finalize_metrics(MetricsReport& r, const ExperimentConfig& cfg);

std::string metrics_to_json(const MetricsReport& r);
std::string metrics_to_json(const std::vector<MetricsReport>& rows);
// Inverse of metrics_to_json for a single report: parse(emit(r)) == r.
MetricsReport metrics_from_json(const std::string& text);
std::vector<MetricsReport> metrics_rows_from_json(const std::string& text);
std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsReport& r);
std::string metrics_to_csv(const std::vector<MetricsReport>& rows);
std::string metrics_to_text(const MetricsReport& r);

}  // namespace specsim
