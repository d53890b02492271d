// SPDX-FileCopyrightText: © 2026 The specsim authors
// SPDX-License-Identifier: Apache-2.0
#include "specsim/metrics.hpp"

#include <algorithm>
#include <cstdio>

#include <nlohmann/json.hpp>

namespace specsim {

namespace {

using Json = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json device_json(const DeviceMetrics& d) {
  Json j;
  j["busy_cycles"] = d.busy_cycles;
  j["idle_cycles"] = d.idle_cycles;
  j["starved_cycles"] = d.starved_cycles;
  j["utilization"] = d.utilization();
  j["ops_executed"] = d.ops_executed;
  j["compute_energy_pj"] = d.compute_energy_pj;
  j["background_busy_pj"] = d.background_busy_pj;
  return j;
}

DeviceMetrics device_from_json(const Json& j) {
  DeviceMetrics d;
  d.busy_cycles = j.at("busy_cycles").get<double>();
  d.idle_cycles = j.at("idle_cycles").get<double>();
  d.starved_cycles = j.at("starved_cycles").get<double>();
  d.ops_executed = j.at("ops_executed").get<std::uint64_t>();
  d.compute_energy_pj = j.at("compute_energy_pj").get<double>();
  d.background_busy_pj = j.at("background_busy_pj").get<double>();
  return d;
}

Json report_json(const MetricsReport& r) {
  Json j;
  j["schema_version"] = kMetricsSchemaVersion;
  j["variant"] = r.variant;
  j["seed"] = r.seed;
  j["generation_length"] = r.generation_length;
  Json tokens;
  tokens["committed"] = r.committed_tokens;
  tokens["accepted_draft"] = r.accepted_draft_tokens;
  tokens["committed_corrections"] = r.committed_corrections;
  tokens["rejected"] = r.rejected_tokens;
  tokens["purged"] = r.purged_tokens;
  tokens["discarded_inflight"] = r.discarded_inflight_tokens;
  tokens["drafted"] = r.drafted_tokens;
  j["tokens"] = tokens;
  Json batches;
  batches["drafted"] = r.batches_drafted;
  batches["fully_accepted"] = r.batches_fully_accepted;
  batches["rejected"] = r.batches_rejected;
  batches["purged"] = r.batches_purged;
  batches["discarded_inflight"] = r.batches_discarded_inflight;
  j["batches"] = batches;
  Json pv;
  pv["count"] = r.preverify_count;
  pv["tokens"] = r.preverify_tokens;
  pv["rejections"] = r.preverify_rejections;
  j["preverify"] = pv;
  Json rates;
  rates["acceptance_rate"] = r.acceptance_rate;
  rates["mean_draft_len"] = r.mean_draft_len;
  j["rates"] = rates;
  Json time;
  time["total_ps"] = r.total_ps;
  time["wall_time_sec"] = r.wall_time_sec;
  time["throughput_tokens_per_sec"] = r.throughput_tokens_per_sec;
  time["npu_cycles_per_token"] = r.npu_cycles_per_token;
  j["time"] = time;
  Json devices;
  devices["npu"] = device_json(r.npu);
  devices["pim"] = device_json(r.pim);
  j["devices"] = devices;
  Json fracs;
  fracs["npu_busy_frac"] = r.npu_busy_frac;
  fracs["npu_idle_frac"] = r.npu_idle_frac;
  fracs["npu_starved_frac"] = r.npu_starved_frac;
  fracs["pim_busy_frac"] = r.pim_busy_frac;
  fracs["pim_idle_frac"] = r.pim_idle_frac;
  fracs["pim_wasted_frac"] = r.pim_wasted_frac;
  fracs["wasted_pim_cycles"] = r.wasted_pim_cycles;
  j["fractions"] = fracs;
  Json energy;
  energy["npu_compute_pj"] = r.energy.npu_compute_pj;
  energy["pim_compute_pj"] = r.energy.pim_compute_pj;
  energy["background_busy_pj"] = r.energy.background_busy_pj;
  energy["background_idle_pj"] = r.energy.background_idle_pj;
  energy["dram_pj"] = r.energy.dram_pj;
  energy["offchip_pj"] = r.energy.offchip_pj;
  energy["aau_pj"] = r.energy.aau_pj;
  energy["total_pj"] = r.energy.total_pj;
  energy["per_token_pj"] = r.energy.per_token_pj;
  energy["tokens_per_joule"] = r.energy.tokens_per_joule;
  j["energy"] = energy;
  Json queues;
  queues["feedback_records"] = r.feedback_records;
  queues["max_queue_depth"] = r.max_queue_depth;
  queues["mean_queue_depth"] = r.mean_queue_depth;
  j["queues"] = queues;
  Json ctl;
  ctl["edc_stop_decisions"] = r.edc_stop_decisions;
  ctl["edc_continue_decisions"] = r.edc_continue_decisions;
  ctl["edc_wait_cycles"] = r.edc_wait_cycles;
  ctl["tvc_insertions"] = r.tvc_insertions;
  ctl["tvc_budget_violations"] = r.tvc_budget_violations;
  j["controllers"] = ctl;
  j["pim_share_cv"] = r.pim_share_cv;
  j["applied_overrides"] = r.applied_overrides;
  return j;
}

MetricsReport report_from_json(const Json& j) {
  MetricsReport r;
  r.variant = j.at("variant").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.generation_length = j.at("generation_length").get<std::uint64_t>();
  const Json& tokens = j.at("tokens");
  r.committed_tokens = tokens.at("committed").get<std::uint64_t>();
  r.accepted_draft_tokens = tokens.at("accepted_draft").get<std::uint64_t>();
  r.committed_corrections =
      tokens.at("committed_corrections").get<std::uint64_t>();
  r.rejected_tokens = tokens.at("rejected").get<std::uint64_t>();
  r.purged_tokens = tokens.at("purged").get<std::uint64_t>();
  r.discarded_inflight_tokens =
      tokens.at("discarded_inflight").get<std::uint64_t>();
  r.drafted_tokens = tokens.at("drafted").get<std::uint64_t>();
  const Json& batches = j.at("batches");
  r.batches_drafted = batches.at("drafted").get<std::uint64_t>();
  r.batches_fully_accepted =
      batches.at("fully_accepted").get<std::uint64_t>();
  r.batches_rejected = batches.at("rejected").get<std::uint64_t>();
  r.batches_purged = batches.at("purged").get<std::uint64_t>();
  r.batches_discarded_inflight =
      batches.at("discarded_inflight").get<std::uint64_t>();
  const Json& pv = j.at("preverify");
  r.preverify_count = pv.at("count").get<std::uint64_t>();
  r.preverify_tokens = pv.at("tokens").get<std::uint64_t>();
  r.preverify_rejections = pv.at("rejections").get<std::uint64_t>();
  const Json& rates = j.at("rates");
  r.acceptance_rate = rates.at("acceptance_rate").get<double>();
  r.mean_draft_len = rates.at("mean_draft_len").get<double>();
  const Json& time = j.at("time");
  r.total_ps = time.at("total_ps").get<double>();
  r.wall_time_sec = time.at("wall_time_sec").get<double>();
  r.throughput_tokens_per_sec =
      time.at("throughput_tokens_per_sec").get<double>();
  r.npu_cycles_per_token = time.at("npu_cycles_per_token").get<double>();
  const Json& devices = j.at("devices");
  r.npu = device_from_json(devices.at("npu"));
  r.pim = device_from_json(devices.at("pim"));
  const Json& fracs = j.at("fractions");
  r.npu_busy_frac = fracs.at("npu_busy_frac").get<double>();
  r.npu_idle_frac = fracs.at("npu_idle_frac").get<double>();
  r.npu_starved_frac = fracs.at("npu_starved_frac").get<double>();
  r.pim_busy_frac = fracs.at("pim_busy_frac").get<double>();
  r.pim_idle_frac = fracs.at("pim_idle_frac").get<double>();
  r.pim_wasted_frac = fracs.at("pim_wasted_frac").get<double>();
  r.wasted_pim_cycles = fracs.at("wasted_pim_cycles").get<double>();
  const Json& energy = j.at("energy");
  r.energy.npu_compute_pj = energy.at("npu_compute_pj").get<double>();
  r.energy.pim_compute_pj = energy.at("pim_compute_pj").get<double>();
  r.energy.background_busy_pj =
      energy.at("background_busy_pj").get<double>();
  r.energy.background_idle_pj =
      energy.at("background_idle_pj").get<double>();
  r.energy.dram_pj = energy.at("dram_pj").get<double>();
  r.energy.offchip_pj = energy.at("offchip_pj").get<double>();
  r.energy.aau_pj = energy.at("aau_pj").get<double>();
  r.energy.total_pj = energy.at("total_pj").get<double>();
  r.energy.per_token_pj = energy.at("per_token_pj").get<double>();
  r.energy.tokens_per_joule = energy.at("tokens_per_joule").get<double>();
  const Json& queues = j.at("queues");
  r.feedback_records = queues.at("feedback_records").get<std::uint64_t>();
  r.max_queue_depth = queues.at("max_queue_depth").get<std::uint64_t>();
  r.mean_queue_depth = queues.at("mean_queue_depth").get<double>();
  const Json& ctl = j.at("controllers");
  r.edc_stop_decisions = ctl.at("edc_stop_decisions").get<std::uint64_t>();
  r.edc_continue_decisions =
      ctl.at("edc_continue_decisions").get<std::uint64_t>();
  r.edc_wait_cycles = ctl.at("edc_wait_cycles").get<double>();
  r.tvc_insertions = ctl.at("tvc_insertions").get<std::uint64_t>();
  r.tvc_budget_violations =
      ctl.at("tvc_budget_violations").get<std::uint64_t>();
  r.pim_share_cv = j.at("pim_share_cv").get<double>();
  r.applied_overrides =
      j.at("applied_overrides").get<std::vector<std::string>>();
  return r;
}

}  // namespace

void finalize_metrics(MetricsReport& r, const ExperimentConfig& cfg) {
  r.acceptance_rate = static_cast<double>(r.accepted_draft_tokens) /
                      static_cast<double>(std::max<std::uint64_t>(
                          r.drafted_tokens, 1));
  r.mean_draft_len = r.batches_drafted > 0
                         ? static_cast<double>(r.drafted_tokens) /
                               static_cast<double>(r.batches_drafted)
                         : 0.0;
  r.wall_time_sec = r.total_ps * 1.0e-12;
  r.throughput_tokens_per_sec =
      r.wall_time_sec > 0.0
          ? static_cast<double>(r.committed_tokens) / r.wall_time_sec
          : 0.0;
  const double npu_wall_cycles = r.wall_time_sec * cfg.hardware.npu_freq_hz;
  r.npu_cycles_per_token =
      r.committed_tokens > 0
          ? npu_wall_cycles / static_cast<double>(r.committed_tokens)
          : 0.0;

  auto frac = [](double part, double whole) {
    return whole > 0.0 ? part / whole : 0.0;
  };
  r.npu_busy_frac = frac(r.npu.busy_cycles, r.npu.total_cycles());
  r.npu_idle_frac = frac(r.npu.idle_cycles, r.npu.total_cycles());
  r.npu_starved_frac = frac(r.npu.starved_cycles, r.npu.total_cycles());
  r.pim_busy_frac = frac(r.pim.busy_cycles, r.pim.total_cycles());
  r.pim_idle_frac = frac(r.pim.idle_cycles, r.pim.total_cycles());
  r.pim_wasted_frac = frac(r.wasted_pim_cycles, r.pim.total_cycles());

  const EnergyCoefficients& e = cfg.energy;
  r.energy.npu_compute_pj = r.npu.compute_energy_pj;
  r.energy.pim_compute_pj = r.pim.compute_energy_pj;
  r.energy.background_busy_pj =
      r.npu.background_busy_pj + r.pim.background_busy_pj;
  r.energy.background_idle_pj =
      r.npu.idle_cycles * e.npu_background_pj_per_cycle +
      r.pim.idle_cycles * e.pim_background_pj_per_cycle;
  r.energy.total_pj = r.energy.npu_compute_pj + r.energy.pim_compute_pj +
                      r.energy.background_busy_pj +
                      r.energy.background_idle_pj + r.energy.dram_pj +
                      r.energy.offchip_pj + r.energy.aau_pj;
  r.energy.per_token_pj =
      r.committed_tokens > 0
          ? r.energy.total_pj / static_cast<double>(r.committed_tokens)
          : 0.0;
  r.energy.tokens_per_joule =
      r.energy.total_pj > 0.0
          ? static_cast<double>(r.committed_tokens) /
                (r.energy.total_pj * 1.0e-12)
          : 0.0;
}

std::string metrics_to_json(const MetricsReport& r) {
  return report_json(r).dump(2) + "\n";
}

std::string metrics_to_json(const std::vector<MetricsReport>& rows) {
  Json j;
  j["schema_version"] = kMetricsSchemaVersion;
  j["runs"] = Json::array();
  for (const auto& r : rows) j["runs"].push_back(report_json(r));
  return j.dump(2) + "\n";
}

MetricsReport metrics_from_json(const std::string& text) {
  const Json j = Json::parse(text);
  return report_from_json(j);
}

std::vector<MetricsReport> metrics_rows_from_json(const std::string& text) {
  const Json j = Json::parse(text);
  std::vector<MetricsReport> rows;
  if (j.contains("runs")) {
    for (const auto& row : j.at("runs")) rows.push_back(report_from_json(row));
  } else {
    rows.push_back(report_from_json(j));
  }
  return rows;
}

std::string metrics_csv_header() {
  return "schema_version,variant,seed,committed_tokens,"
         "accepted_draft_tokens,committed_corrections,rejected_tokens,"
         "purged_tokens,discarded_inflight_tokens,drafted_tokens,"
         "batches_drafted,acceptance_rate,mean_draft_len,total_ps,"
         "wall_time_sec,throughput_tokens_per_sec,npu_cycles_per_token,"
         "npu_busy_frac,npu_idle_frac,npu_starved_frac,pim_busy_frac,"
         "pim_idle_frac,pim_wasted_frac,energy_total_pj,"
         "energy_per_token_pj,tokens_per_joule,preverify_count,"
         "preverify_tokens,tvc_insertions,tvc_budget_violations,"
         "edc_stop_decisions,edc_continue_decisions,max_queue_depth,"
         "mean_queue_depth,pim_share_cv";
}

std::string metrics_csv_row(const MetricsReport& r) {
  std::string s;
  s += std::to_string(kMetricsSchemaVersion);
  s += ',' + r.variant;
  s += ',' + std::to_string(r.seed);
  s += ',' + std::to_string(r.committed_tokens);
  s += ',' + std::to_string(r.accepted_draft_tokens);
  s += ',' + std::to_string(r.committed_corrections);
  s += ',' + std::to_string(r.rejected_tokens);
  s += ',' + std::to_string(r.purged_tokens);
  s += ',' + std::to_string(r.discarded_inflight_tokens);
  s += ',' + std::to_string(r.drafted_tokens);
  s += ',' + std::to_string(r.batches_drafted);
  s += ',' + fmt(r.acceptance_rate);
  s += ',' + fmt(r.mean_draft_len);
  s += ',' + fmt(r.total_ps);
  s += ',' + fmt(r.wall_time_sec);
  s += ',' + fmt(r.throughput_tokens_per_sec);
  s += ',' + fmt(r.npu_cycles_per_token);
  s += ',' + fmt(r.npu_busy_frac);
  s += ',' + fmt(r.npu_idle_frac);
  s += ',' + fmt(r.npu_starved_frac);
  s += ',' + fmt(r.pim_busy_frac);
  s += ',' + fmt(r.pim_idle_frac);
  s += ',' + fmt(r.pim_wasted_frac);
  s += ',' + fmt(r.energy.total_pj);
  s += ',' + fmt(r.energy.per_token_pj);
  s += ',' + fmt(r.energy.tokens_per_joule);
  s += ',' + std::to_string(r.preverify_count);
  s += ',' + std::to_string(r.preverify_tokens);
  s += ',' + std::to_string(r.tvc_insertions);
  s += ',' + std::to_string(r.tvc_budget_violations);
  s += ',' + std::to_string(r.edc_stop_decisions);
  s += ',' + std::to_string(r.edc_continue_decisions);
  s += ',' + std::to_string(r.max_queue_depth);
  s += ',' + fmt(r.mean_queue_depth);
  s += ',' + fmt(r.pim_share_cv);
  return s;
}

std::string metrics_to_csv(const std::vector<MetricsReport>& rows) {
  std::string s = metrics_csv_header() + "\n";
  for (const auto& r : rows) s += metrics_csv_row(r) + "\n";
  return s;
}

std::string metrics_to_text(const MetricsReport& r) {
  char buf[256];
  std::string s;
  auto line = [&](const char* k, const std::string& v) {
    std::snprintf(buf, sizeof buf, "  %-26s %s\n", k, v.c_str());
    s += buf;
  };
  s += "run " + r.variant + " seed " + std::to_string(r.seed) + "\n";
  line("committed tokens", std::to_string(r.committed_tokens));
  line("drafted tokens", std::to_string(r.drafted_tokens));
  line("acceptance rate", fmt(r.acceptance_rate));
  line("mean draft len", fmt(r.mean_draft_len));
  line("wall time (ms)", fmt(r.total_ps * 1.0e-9));
  line("tokens/s", fmt(r.throughput_tokens_per_sec));
  line("verifier cycles/token", fmt(r.npu_cycles_per_token));
  line("verifier busy frac", fmt(r.npu_busy_frac));
  line("verifier starved frac", fmt(r.npu_starved_frac));
  line("drafter busy frac", fmt(r.pim_busy_frac));
  line("drafter wasted frac", fmt(r.pim_wasted_frac));
  line("energy/token (pJ)", fmt(r.energy.per_token_pj));
  line("tokens/joule", fmt(r.energy.tokens_per_joule));
  line("preverify count/tokens", std::to_string(r.preverify_count) + "/" +
                                     std::to_string(r.preverify_tokens));
  line("controller stops", std::to_string(r.edc_stop_decisions));
  return s;
}

}  // namespace specsim
