// SPDX-FileCopyrightText: © 2026 The specsim authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: single runs, the variant ablation ladder,
// parameter sweeps, baseline comparison tables, timing-model dumps, and
// workload trace export.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "specsim/config.hpp"
#include "specsim/engine.hpp"
#include "specsim/metrics.hpp"
#include "specsim/rng.hpp"
#include "specsim/timing.hpp"
#include "specsim/workload.hpp"

namespace {

using Json = nlohmann::ordered_json;
using specsim::ExperimentConfig;
using specsim::MetricsReport;

// Exit codes (documented in README and --help): 0 all runs terminated
// normally, 1 usage, 2 config rejected, 3 I/O failure, 4 simulation error.
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitSim = 4;

struct Args {
  std::string config_path;
  std::string variant;
  std::uint64_t seed = 0;
  std::string seeds;  // "1..5", "1,3,9", or a mix
  std::vector<std::string> overrides;
  std::string output;
  std::string format;
  std::string event_trace;
  std::string debug_dump;
  CLI::App* sub = nullptr;  // to test whether --seed/--variant were given
};

bool given(const Args& a, const std::string& flag) {
  if (a.sub == nullptr) return false;
  const CLI::Option* opt = a.sub->get_option_no_throw(flag);
  return opt != nullptr && opt->count() > 0;
}

std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
  std::vector<std::uint64_t> out;
  std::string tok;
  std::istringstream in(spec);
  auto num = [&](const std::string& s) -> std::uint64_t {
    size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (...) {
      used = 0;
    }
    if (used != s.size() || s.empty())
      throw CLI::ValidationError("--seeds",
                                 "'" + s + "' is not a seed number");
    return v;
  };
  while (std::getline(in, tok, ',')) {
    const size_t dots = tok.find("..");
    if (dots == std::string::npos) {
      out.push_back(num(tok));
      continue;
    }
    const std::uint64_t lo = num(tok.substr(0, dots));
    const std::uint64_t hi = num(tok.substr(dots + 2));
    if (hi < lo || hi - lo > 100000)
      throw CLI::ValidationError("--seeds", "bad range '" + tok + "'");
    for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
  }
  if (out.empty())
    throw CLI::ValidationError("--seeds", "no seeds in '" + spec + "'");
  return out;
}

ExperimentConfig base_config(const Args& a) {
  ExperimentConfig cfg = a.config_path.empty()
                             ? specsim::load_config("")
                             : specsim::load_config_file(a.config_path);
  for (const std::string& ov : a.overrides) specsim::apply_override(cfg, ov);
  if (given(a, "--variant"))
    cfg.variant = specsim::variant_from_string(a.variant);
  if (given(a, "--seed")) cfg.seed = a.seed;
  return cfg;
}

std::vector<std::uint64_t> seed_list(const Args& a,
                                     const ExperimentConfig& cfg) {
  if (given(a, "--seeds")) return parse_seeds(a.seeds);
  return {cfg.seed};
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw specsim::IoError("cannot open output file '" + path + "'");
  out << content;
  out.flush();
  if (!out) throw specsim::IoError("write failed for '" + path + "'");
}

std::string pick_format(const Args& a, const char* dflt) {
  if (a.format.empty()) return dflt;
  return a.format;  // CLI11 validator restricts to json|csv|text
}

int variant_rank(const std::string& name) {
  const auto vs = specsim::all_variants();
  for (size_t i = 0; i < vs.size(); ++i)
    if (name == specsim::to_string(vs[i])) return static_cast<int>(i);
  return static_cast<int>(vs.size());
}

void sort_rows(std::vector<MetricsReport>& rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const MetricsReport& x, const MetricsReport& y) {
                     const int rx = variant_rank(x.variant);
                     const int ry = variant_rank(y.variant);
                     if (rx != ry) return rx < ry;
                     return x.seed < y.seed;
                   });
}

std::string emit_rows(const std::vector<MetricsReport>& rows,
                      const std::string& fmt) {
  if (fmt == "json") return specsim::metrics_to_json(rows);
  if (fmt == "csv") return specsim::metrics_to_csv(rows);
  std::string out;
  for (const MetricsReport& r : rows) {
    out += specsim::metrics_to_text(r);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// run

std::string debug_dump_doc(const ExperimentConfig& cfg,
                           const specsim::RunResult& res) {
  Json doc;
  doc["schema_version"] = specsim::kMetricsSchemaVersion;
  Json counts = Json::object();
  for (const std::string& line : res.event_trace) {
    const Json ev = Json::parse(line);
    const std::string kind = ev.value("event", "?");
    counts[kind] = counts.value(kind, std::uint64_t{0}) + 1;
  }
  doc["event_counts"] = counts;
  doc["committed_tokens"] = res.committed_tokens.size();
  doc["report"] = Json::parse(specsim::metrics_to_json(res.metrics));
  doc["resolved_config"] = specsim::serialize(cfg);
  return doc.dump(2) + "\n";
}

int cmd_run(const Args& a) {
  const ExperimentConfig cfg = base_config(a);
  const bool want_trace = !a.event_trace.empty() || !a.debug_dump.empty();
  const specsim::RunResult res = specsim::simulate(cfg, want_trace);
  if (!a.event_trace.empty()) {
    std::string doc;
    for (const std::string& line : res.event_trace) {
      doc += line;
      doc += '\n';
    }
    write_output(a.event_trace, doc);
  }
  if (!a.debug_dump.empty())
    write_output(a.debug_dump, debug_dump_doc(cfg, res));
  const std::string fmt = pick_format(a, "json");
  if (fmt == "json")
    write_output(a.output, specsim::metrics_to_json(res.metrics));
  else if (fmt == "csv")
    write_output(a.output, specsim::metrics_to_csv({res.metrics}));
  else
    write_output(a.output, specsim::metrics_to_text(res.metrics));
  return 0;
}

// ---------------------------------------------------------------------------
// ablate: every variant x every seed.

int cmd_ablate(const Args& a) {
  const ExperimentConfig base = base_config(a);
  const auto seeds = seed_list(a, base);
  std::vector<MetricsReport> rows;
  for (specsim::Variant v : specsim::all_variants()) {
    for (std::uint64_t s : seeds) {
      ExperimentConfig cfg = base;
      cfg.variant = v;
      cfg.seed = s;
      rows.push_back(specsim::simulate(cfg).metrics);
    }
  }
  sort_rows(rows);
  write_output(a.output, emit_rows(rows, pick_format(a, "csv")));
  return 0;
}

// ---------------------------------------------------------------------------
// sweep: comma-separated override values expand into a cartesian grid; each
// grid point runs once per seed. Rows keep grid declaration order, then
// (variant, seed) within a point, so output is independent of scheduling.

std::vector<std::vector<std::string>> sweep_points(
    const std::vector<std::string>& raw) {
  std::vector<std::vector<std::string>> axes;
  for (const std::string& ov : raw) {
    const size_t eq = ov.find('=');
    if (eq == std::string::npos)
      throw specsim::ConfigError("override '" + ov + "': expected key=value");
    const std::string key = ov.substr(0, eq);
    const std::string vals = ov.substr(eq + 1);
    std::vector<std::string> axis;
    std::string v;
    std::istringstream in(vals);
    while (std::getline(in, v, ',')) axis.push_back(key + "=" + v);
    if (axis.empty()) axis.push_back(ov);
    axes.push_back(std::move(axis));
  }
  std::vector<std::vector<std::string>> points{{}};
  for (const auto& axis : axes) {
    std::vector<std::vector<std::string>> next;
    next.reserve(points.size() * axis.size());
    for (const auto& p : points) {
      for (const std::string& alt : axis) {
        std::vector<std::string> q = p;
        q.push_back(alt);
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  return points;
}

int cmd_sweep(const Args& a) {
  Args no_overrides = a;
  no_overrides.overrides.clear();
  const ExperimentConfig base = base_config(no_overrides);
  const auto seeds = seed_list(a, base);
  std::vector<MetricsReport> rows;
  for (const auto& point : sweep_points(a.overrides)) {
    std::vector<MetricsReport> block;
    for (std::uint64_t s : seeds) {
      ExperimentConfig cfg = base;
      for (const std::string& ov : point) specsim::apply_override(cfg, ov);
      cfg.seed = s;
      block.push_back(specsim::simulate(cfg).metrics);
    }
    sort_rows(block);
    rows.insert(rows.end(), block.begin(), block.end());
  }
  write_output(a.output, emit_rows(rows, pick_format(a, "csv")));
  return 0;
}

// ---------------------------------------------------------------------------
// compare: the full system against the monolithic and lockstep baselines,
// with ratio columns against a named baseline (default gpu_only).

int cmd_compare(const Args& a) {
  Args base_args = a;
  base_args.variant.clear();  // --variant names the ratio baseline here
  const ExperimentConfig base = base_config(base_args);
  const std::string baseline =
      given(a, "--variant") ? a.variant : std::string("gpu_only");
  std::vector<specsim::Variant> set = {specsim::Variant::GpuOnly,
                                       specsim::Variant::OpSync,
                                       specsim::Variant::Full};
  if (std::none_of(set.begin(), set.end(), [&](specsim::Variant v) {
        return baseline == specsim::to_string(v);
      }))
    set.push_back(specsim::variant_from_string(baseline));
  const auto seeds = seed_list(a, base);

  std::vector<MetricsReport> rows;
  for (specsim::Variant v : set) {
    for (std::uint64_t s : seeds) {
      ExperimentConfig cfg = base;
      cfg.variant = v;
      cfg.seed = s;
      rows.push_back(specsim::simulate(cfg).metrics);
    }
  }
  sort_rows(rows);

  struct Agg {
    double tps = 0.0;
    double tpj = 0.0;
    double accept = 0.0;
    int n = 0;
  };
  std::map<std::string, Agg> agg;
  for (const MetricsReport& r : rows) {
    Agg& g = agg[r.variant];
    g.tps += r.throughput_tokens_per_sec;
    g.tpj += r.energy.tokens_per_joule;
    g.accept += r.acceptance_rate;
    g.n += 1;
  }
  for (auto& [_, g] : agg) {
    g.tps /= g.n;
    g.tpj /= g.n;
    g.accept /= g.n;
  }
  const Agg& ref = agg.at(baseline);

  std::vector<std::string> order;
  for (specsim::Variant v : set) order.push_back(specsim::to_string(v));
  std::sort(order.begin(), order.end(), [](const auto& x, const auto& y) {
    return variant_rank(x) < variant_rank(y);
  });

  const std::string fmt = pick_format(a, "text");
  if (fmt == "json") {
    Json doc;
    doc["schema_version"] = specsim::kMetricsSchemaVersion;
    doc["baseline"] = baseline;
    doc["seeds"] = seeds;
    Json table = Json::array();
    for (const std::string& name : order) {
      const Agg& g = agg.at(name);
      Json row;
      row["variant"] = name;
      row["throughput_tokens_per_sec"] = g.tps;
      row["speedup_vs_baseline"] = ref.tps > 0.0 ? g.tps / ref.tps : 0.0;
      row["tokens_per_joule"] = g.tpj;
      row["energy_efficiency_vs_baseline"] =
          ref.tpj > 0.0 ? g.tpj / ref.tpj : 0.0;
      row["acceptance_rate"] = g.accept;
      table.push_back(row);
    }
    doc["table"] = table;
    doc["runs"] = Json::parse(specsim::metrics_to_json(rows));
    write_output(a.output, doc.dump(2) + "\n");
  } else if (fmt == "csv") {
    std::ostringstream out;
    out << "schema_version,variant,throughput_tokens_per_sec,"
           "speedup_vs_"
        << baseline << ",tokens_per_joule,energy_efficiency_vs_" << baseline
        << ",acceptance_rate\n";
    out.precision(17);
    for (const std::string& name : order) {
      const Agg& g = agg.at(name);
      out << specsim::kMetricsSchemaVersion << ',' << name << ',' << g.tps
          << ',' << (ref.tps > 0.0 ? g.tps / ref.tps : 0.0) << ',' << g.tpj
          << ',' << (ref.tpj > 0.0 ? g.tpj / ref.tpj : 0.0) << ','
          << g.accept << '\n';
    }
    write_output(a.output, out.str());
  } else {
    std::ostringstream out;
    out << "baseline: " << baseline << "  seeds:";
    for (std::uint64_t s : seeds) out << ' ' << s;
    out << "\n";
    char line[256];
    std::snprintf(line, sizeof line, "%-14s %14s %9s %16s %9s %8s\n",
                  "variant", "tokens/sec", "speedup", "tokens/joule", "EE",
                  "accept");
    out << line;
    for (const std::string& name : order) {
      const Agg& g = agg.at(name);
      std::snprintf(line, sizeof line,
                    "%-14s %14.2f %8.2fx %16.4f %8.2fx %7.1f%%\n",
                    name.c_str(), g.tps,
                    ref.tps > 0.0 ? g.tps / ref.tps : 0.0, g.tpj,
                    ref.tpj > 0.0 ? g.tpj / ref.tpj : 0.0, g.accept * 100.0);
      out << line;
    }
    write_output(a.output, out.str());
  }
  return 0;
}

// ---------------------------------------------------------------------------
// cost-dump: 50 randomized operating points through the timing model, with
// the hardware/model parameters echoed so an external checker can recompute
// every cycle count.

constexpr int kCostPoints = 50;

int cmd_cost_dump(const Args& a) {
  const ExperimentConfig cfg = base_config(a);
  const specsim::DeviceParams npu = specsim::npu_params(cfg.hardware);
  const specsim::DeviceParams pim = specsim::pim_params(cfg.hardware);
  specsim::RandomStream rng(specsim::mix64(cfg.seed ^ 0xC0570D0Dull));

  Json doc;
  doc["schema_version"] = specsim::kMetricsSchemaVersion;
  doc["seed"] = cfg.seed;
  Json hw;
  hw["npu_matrix_ops_per_cycle"] = cfg.hardware.npu_matrix_ops_per_cycle;
  hw["npu_vector_ops_per_cycle"] = cfg.hardware.npu_vector_ops_per_cycle;
  hw["npu_freq_hz"] = cfg.hardware.npu_freq_hz;
  hw["npu_weights_resident"] = cfg.hardware.npu_weights_resident;
  hw["pim_units"] = cfg.hardware.pim_units;
  hw["pim_ops_per_cycle_per_unit"] = cfg.hardware.pim_ops_per_cycle_per_unit;
  hw["pim_freq_hz"] = cfg.hardware.pim_freq_hz;
  hw["pim_onchip_bw_bytes_per_sec"] =
      cfg.hardware.pim_onchip_bw_bytes_per_sec;
  hw["offchip_bw_bytes_per_sec"] = cfg.hardware.offchip_bw_bytes_per_sec;
  hw["gtsu_switch_cycles"] = cfg.hardware.gtsu_switch_cycles;
  doc["hardware"] = hw;
  Json md;
  md["dlm_hidden"] = cfg.model.dlm_hidden;
  md["dlm_layers"] = cfg.model.dlm_layers;
  md["dlm_params_bytes"] = cfg.model.dlm_params_bytes;
  md["tlm_hidden"] = cfg.model.tlm_hidden;
  md["tlm_layers"] = cfg.model.tlm_layers;
  md["tlm_params_bytes"] = cfg.model.tlm_params_bytes;
  doc["model"] = md;

  Json points = Json::array();
  for (int i = 0; i < kCostPoints; ++i) {
    const std::uint64_t m = 1 + rng.next_u64() % 64;
    const std::uint64_t k = 64 + rng.next_u64() % 8129;
    const std::uint64_t n = 64 + rng.next_u64() % 8129;
    const bool resident = (rng.next_u64() & 1) != 0;
    const std::uint64_t kv = rng.next_u64() % 4097;
    const int draft =
        1 + static_cast<int>(rng.next_u64() %
                             static_cast<std::uint64_t>(
                                 cfg.workload.max_draft_len));
    const specsim::OpCost g_npu = specsim::gemm_cycles(npu, m, k, n, resident);
    const specsim::OpCost g_pim = specsim::gemm_cycles(pim, m, k, n, resident);
    const specsim::OpCost d =
        specsim::dlm_draft_cycles(pim, cfg.model, draft, kv);
    const specsim::OpCost v = specsim::tlm_verify_cycles(
        npu, cfg.model, draft, kv, !cfg.hardware.npu_weights_resident);
    const specsim::OpCost att =
        specsim::tlm_attention_cycles(pim, cfg.model, draft, kv);
    const specsim::OpCost pv = specsim::pim_preverify_cycles(
        pim, cfg.model, draft, kv, cfg.hardware.gtsu_switch_cycles);
    const specsim::OpCost comm = specsim::attention_comm_cycles(
        cfg.hardware, cfg.model.dlm_hidden, cfg.model.dlm_layers, draft,
        false);
    Json p;
    p["m"] = m;
    p["k"] = k;
    p["n"] = n;
    p["weight_resident"] = resident;
    p["kv_len"] = kv;
    p["draft_len"] = draft;
    p["npu_gemm_cycles"] = g_npu.cycles;
    p["npu_gemm_compute_cycles"] = g_npu.compute_cycles;
    p["npu_gemm_memory_cycles"] = g_npu.memory_cycles;
    p["pim_gemm_cycles"] = g_pim.cycles;
    p["dlm_draft_pim_cycles"] = d.cycles;
    p["tlm_verify_npu_cycles"] = v.cycles;
    p["tlm_attention_pim_cycles"] = att.cycles;
    p["pim_preverify_cycles"] = pv.cycles;
    p["attention_comm_npu_cycles"] = comm.cycles;
    points.push_back(p);
  }
  doc["points"] = points;

  const std::string fmt = pick_format(a, "json");
  if (fmt == "csv") {
    std::ostringstream out;
    out << "m,k,n,weight_resident,kv_len,draft_len,npu_gemm_cycles,"
           "npu_gemm_compute_cycles,npu_gemm_memory_cycles,pim_gemm_cycles,"
           "dlm_draft_pim_cycles,tlm_verify_npu_cycles,"
           "tlm_attention_pim_cycles,pim_preverify_cycles,"
           "attention_comm_npu_cycles\n";
    for (const Json& p : points) {
      out << p["m"] << ',' << p["k"] << ',' << p["n"] << ','
          << (p["weight_resident"].get<bool>() ? 1 : 0) << ',' << p["kv_len"]
          << ',' << p["draft_len"] << ',' << p["npu_gemm_cycles"] << ','
          << p["npu_gemm_compute_cycles"] << ','
          << p["npu_gemm_memory_cycles"] << ',' << p["pim_gemm_cycles"]
          << ',' << p["dlm_draft_pim_cycles"] << ','
          << p["tlm_verify_npu_cycles"] << ','
          << p["tlm_attention_pim_cycles"] << ',' << p["pim_preverify_cycles"]
          << ',' << p["attention_comm_npu_cycles"] << '\n';
    }
    write_output(a.output, out.str());
  } else {
    write_output(a.output, doc.dump(2) + "\n");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// trace-export: synthesize the stochastic workload into the CSV trace format
// the replay mode ingests. Long enough to replay one full generation,
// including the final batch's overshoot.

int cmd_trace_export(const Args& a) {
  const ExperimentConfig cfg = base_config(a);
  const std::uint64_t len =
      cfg.generation_length +
      static_cast<std::uint64_t>(cfg.workload.max_draft_len);
  const auto records = specsim::Workload::synthesize_trace(cfg, len);
  write_output(a.output, specsim::export_trace(records));
  return 0;
}

void add_common(CLI::App* sub, Args& a, bool with_variant, bool with_seeds) {
  a.sub = sub;
  sub->add_option("--config", a.config_path,
                  "Config file of 'key = value' lines; defaults apply when "
                  "omitted");
  if (with_variant)
    sub->add_option("--variant", a.variant, "System variant")
        ->check(CLI::IsMember({"gpu_only", "op_sync", "async", "async_aau",
                               "async_aau_edc", "full"}));
  sub->add_option("--seed", a.seed, "Seed (overrides the config's)");
  if (with_seeds)
    sub->add_option("--seeds", a.seeds,
                    "Seed list: '1..5', '1,3,9', or a mix");
  sub->add_option("--override", a.overrides,
                  "Config override key=value (repeatable)")
      ->type_size(1)
      ->allow_extra_args(false);
  sub->add_option("--output", a.output, "Output path ('-' or empty: stdout)");
  sub->add_option("--format", a.format, "json | csv | text")
      ->check(CLI::IsMember({"json", "csv", "text"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Discrete-event simulator of a mobile NPU+PIM system running "
      "speculative decoding"};
  app.require_subcommand(1);

  Args run_a, abl_a, swp_a, cmp_a, cost_a, trc_a;
  int rc = 0;

  CLI::App* run = app.add_subcommand("run", "Simulate one (variant, seed)");
  add_common(run, run_a, true, false);
  run->add_option("--event-trace", run_a.event_trace,
                  "Write the event log (JSON lines) to this path");
  run->add_option("--debug-dump", run_a.debug_dump,
                  "Write a diagnostic bundle (resolved config, event "
                  "counts, report) to this path");
  run->callback([&] { rc = cmd_run(run_a); });

  CLI::App* abl = app.add_subcommand(
      "ablate", "Run every variant across the seed list");
  add_common(abl, abl_a, false, true);
  abl->callback([&] { rc = cmd_ablate(abl_a); });

  CLI::App* swp = app.add_subcommand(
      "sweep",
      "Grid sweep: comma-separated --override values expand into a "
      "cartesian grid, each point run per seed");
  add_common(swp, swp_a, true, true);
  swp->callback([&] { rc = cmd_sweep(swp_a); });

  CLI::App* cmp = app.add_subcommand(
      "compare",
      "Aggregate full vs gpu_only vs op_sync with ratio columns against a "
      "baseline (--variant, default gpu_only)");
  add_common(cmp, cmp_a, true, true);
  cmp->callback([&] { rc = cmd_compare(cmp_a); });

  CLI::App* cost = app.add_subcommand(
      "cost-dump",
      "Evaluate the timing model on 50 seed-determined operating points");
  add_common(cost, cost_a, false, false);
  cost->callback([&] { rc = cmd_cost_dump(cost_a); });

  CLI::App* trc = app.add_subcommand(
      "trace-export", "Synthesize a workload trace as CSV for replay");
  add_common(trc, trc_a, false, false);
  trc->callback([&] { rc = cmd_trace_export(trc_a); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const specsim::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const specsim::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const specsim::SimError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSim;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitSim;
  }
  return rc;
}
