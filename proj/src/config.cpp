// SPDX-FileCopyrightText: © 2026 The specsim authors
// SPDX-License-Identifier: Apache-2.0
#include "specsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace specsim {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

double parse_f64(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t.empty()) fail("config: field '" + key + "' has an empty value");
  char* end = nullptr;
  const double x = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size())
    fail("config: field '" + key + "' has a malformed number '" + t + "'");
  if (!std::isfinite(x))
    fail("config: field '" + key + "' must be finite");
  return x;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  const double x = parse_f64(key, v);
  if (x < 0.0 || x != std::floor(x) || x > 1.8e19)
    fail("config: field '" + key + "' must be a non-negative integer");
  return static_cast<std::uint64_t>(x);
}

int parse_int(const std::string& key, const std::string& v) {
  const double x = parse_f64(key, v);
  if (x != std::floor(x) || x < -2.0e9 || x > 2.0e9)
    fail("config: field '" + key + "' must be an integer");
  return static_cast<int>(x);
}

bool parse_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "1" || t == "true" || t == "yes") return true;
  if (t == "0" || t == "false" || t == "no") return false;
  fail("config: field '" + key + "' must be a boolean (0/1/true/false)");
}

std::string fmt_f64(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define F64_FIELD(key, expr)                                               \
  Field{key, [](ExperimentConfig& c, const std::string& v) {               \
          c.expr = parse_f64(key, v);                                      \
        },                                                                 \
        [](const ExperimentConfig& c) { return fmt_f64(c.expr); }}
#define U64_FIELD(key, expr)                                               \
  Field{key, [](ExperimentConfig& c, const std::string& v) {               \
          c.expr = parse_u64(key, v);                                      \
        },                                                                 \
        [](const ExperimentConfig& c) { return std::to_string(c.expr); }}
#define INT_FIELD(key, expr)                                               \
  Field{key, [](ExperimentConfig& c, const std::string& v) {               \
          c.expr = parse_int(key, v);                                      \
        },                                                                 \
        [](const ExperimentConfig& c) { return std::to_string(c.expr); }}
#define BOOL_FIELD(key, expr)                                              \
  Field{key, [](ExperimentConfig& c, const std::string& v) {               \
          c.expr = parse_bool(key, v);                                     \
        },                                                                 \
        [](const ExperimentConfig& c) {                                    \
          return std::string(c.expr ? "1" : "0");                          \
        }}

const std::vector<Field>& field_registry() {
  static const std::vector<Field> fields = {
      Field{"variant",
            [](ExperimentConfig& c, const std::string& v) {
              c.variant = variant_from_string(trim(v));
            },
            [](const ExperimentConfig& c) {
              return std::string(to_string(c.variant));
            }},
      U64_FIELD("seed", seed),
      U64_FIELD("generation_length", generation_length),

      Field{"model.scale",
            [](ExperimentConfig& c, const std::string& v) {
              c.model.scale = scale_from_string(trim(v));
            },
            [](const ExperimentConfig& c) {
              return std::string(to_string(c.model.scale));
            }},
      U64_FIELD("model.dlm_hidden", model.dlm_hidden),
      U64_FIELD("model.dlm_layers", model.dlm_layers),
      U64_FIELD("model.dlm_params_bytes", model.dlm_params_bytes),
      U64_FIELD("model.tlm_hidden", model.tlm_hidden),
      U64_FIELD("model.tlm_layers", model.tlm_layers),
      U64_FIELD("model.tlm_params_bytes", model.tlm_params_bytes),
      U64_FIELD("model.vocab_size", model.vocab_size),
      F64_FIELD("model.h_max", model.h_max),

      F64_FIELD("hardware.npu_matrix_ops_per_cycle",
                hardware.npu_matrix_ops_per_cycle),
      F64_FIELD("hardware.npu_vector_ops_per_cycle",
                hardware.npu_vector_ops_per_cycle),
      F64_FIELD("hardware.npu_freq_hz", hardware.npu_freq_hz),
      U64_FIELD("hardware.npu_spm_bytes", hardware.npu_spm_bytes),
      BOOL_FIELD("hardware.npu_weights_resident",
                 hardware.npu_weights_resident),
      INT_FIELD("hardware.pim_units", hardware.pim_units),
      F64_FIELD("hardware.pim_ops_per_cycle_per_unit",
                hardware.pim_ops_per_cycle_per_unit),
      F64_FIELD("hardware.pim_freq_hz", hardware.pim_freq_hz),
      F64_FIELD("hardware.pim_onchip_bw_bytes_per_sec",
                hardware.pim_onchip_bw_bytes_per_sec),
      F64_FIELD("hardware.offchip_bw_bytes_per_sec",
                hardware.offchip_bw_bytes_per_sec),
      U64_FIELD("hardware.gtsu_switch_cycles", hardware.gtsu_switch_cycles),
      U64_FIELD("hardware.queue_transfer_cycles",
                hardware.queue_transfer_cycles),
      BOOL_FIELD("hardware.aau_enabled", hardware.aau_enabled),
      INT_FIELD("hardware.dram.trp", hardware.dram.trp),
      INT_FIELD("hardware.dram.trcd", hardware.dram.trcd),
      INT_FIELD("hardware.dram.tras", hardware.dram.tras),
      INT_FIELD("hardware.dram.trrd_l", hardware.dram.trrd_l),
      INT_FIELD("hardware.dram.twr", hardware.dram.twr),
      INT_FIELD("hardware.dram.tccd_s", hardware.dram.tccd_s),
      INT_FIELD("hardware.dram.tccd_l", hardware.dram.tccd_l),
      INT_FIELD("hardware.dram.trefi", hardware.dram.trefi),
      INT_FIELD("hardware.dram.tfaw", hardware.dram.tfaw),
      INT_FIELD("hardware.dram.trfc", hardware.dram.trfc),

      F64_FIELD("workload.difficulty_walk_step",
                workload.difficulty_walk_step),
      F64_FIELD("workload.entropy_noise_sd", workload.entropy_noise_sd),
      F64_FIELD("workload.accept_slope", workload.accept_slope),
      F64_FIELD("workload.accept_floor", workload.accept_floor),
      F64_FIELD("workload.accept_ceiling", workload.accept_ceiling),
      F64_FIELD("workload.lookahead_decay", workload.lookahead_decay),
      INT_FIELD("workload.max_draft_len", workload.max_draft_len),
      Field{"workload.algorithm",
            [](ExperimentConfig& c, const std::string& v) {
              c.workload.algorithm = algorithm_from_string(trim(v));
            },
            [](const ExperimentConfig& c) {
              return std::string(to_string(c.workload.algorithm));
            }},
      Field{"workload.threshold",
            [](ExperimentConfig& c, const std::string& v) {
              c.workload.threshold = parse_f64("workload.threshold", v);
              c.workload.threshold_set = true;
            },
            [](const ExperimentConfig& c) {
              return fmt_f64(c.workload.threshold);
            }},
      Field{"workload.trace_path",
            [](ExperimentConfig& c, const std::string& v) {
              c.workload.trace_path = trim(v);
            },
            [](const ExperimentConfig& c) { return c.workload.trace_path; }},

      INT_FIELD("policy.max_batches_per_verify",
                policy.max_batches_per_verify),
      U64_FIELD("policy.queue_capacity", policy.queue_capacity),
      U64_FIELD("policy.event_cap", policy.event_cap),
      INT_FIELD("policy.warmup_iterations", policy.warmup_iterations),

      F64_FIELD("energy.npu_dynamic_pj_per_op", energy.npu_dynamic_pj_per_op),
      F64_FIELD("energy.pim_dynamic_pj_per_op", energy.pim_dynamic_pj_per_op),
      F64_FIELD("energy.dram_pj_per_byte", energy.dram_pj_per_byte),
      F64_FIELD("energy.offchip_pj_per_byte", energy.offchip_pj_per_byte),
      F64_FIELD("energy.npu_background_pj_per_cycle",
                energy.npu_background_pj_per_cycle),
      F64_FIELD("energy.pim_background_pj_per_cycle",
                energy.pim_background_pj_per_cycle),
      F64_FIELD("energy.aau_pj_per_op", energy.aau_pj_per_op),

      F64_FIELD("baseline.gpu_ops_per_cycle", baseline.gpu_ops_per_cycle),
      F64_FIELD("baseline.gpu_vector_ops_per_cycle",
                baseline.gpu_vector_ops_per_cycle),
      F64_FIELD("baseline.gpu_freq_hz", baseline.gpu_freq_hz),
      F64_FIELD("baseline.gpu_mem_bw_bytes_per_sec",
                baseline.gpu_mem_bw_bytes_per_sec),
      BOOL_FIELD("baseline.opsync_attention_on_pim",
                 baseline.opsync_attention_on_pim),
  };
  return fields;
}

const Field* find_field(const std::string& key) {
  for (const auto& f : field_registry())
    if (f.key == key) return &f;
  return nullptr;
}

void apply_scale_preset(ModelConfig& m) {
  switch (m.scale) {
    case ModelScale::Small:  // OPT-1.3B drafting for OPT-6.7B
      m.dlm_hidden = 2048;
      m.dlm_layers = 24;
      m.tlm_hidden = 4096;
      m.tlm_layers = 32;
      m.vocab_size = 50272;
      break;
    case ModelScale::Medium:  // LLaMA2-7B drafting for LLaMA2-13B
      m.dlm_hidden = 4096;
      m.dlm_layers = 32;
      m.tlm_hidden = 5120;
      m.tlm_layers = 40;
      m.vocab_size = 32000;
      break;
    case ModelScale::Large:  // 8B-class drafting for a 30B-class target
      m.dlm_hidden = 4096;
      m.dlm_layers = 32;
      m.tlm_hidden = 8192;
      m.tlm_layers = 48;
      m.vocab_size = 256000;
      break;
  }
  m.dlm_params_bytes = 0;
  m.tlm_params_bytes = 0;
  m.h_max = 0.0;
}

double default_threshold(DraftAlgorithm a) {
  // Calibrated so the synthetic reference workload drafts ~4 tokens per
  // batch on average (scripts/calibrate_theta.py reproduces these).
  switch (a) {
    case DraftAlgorithm::SpecDecPP:
      return 0.62;
    case DraftAlgorithm::Svip:
      return 0.72;
    case DraftAlgorithm::AdaEdl:
      return 0.21;
    case DraftAlgorithm::BanditSpec:
      return 0.5;  // unused: the bandit picks the arm length
  }
  return 0.5;
}

void derive(ExperimentConfig& c) {
  if (c.model.dlm_params_bytes == 0)
    c.model.dlm_params_bytes =
        12ull * c.model.dlm_layers * c.model.dlm_hidden * c.model.dlm_hidden;
  if (c.model.tlm_params_bytes == 0)
    c.model.tlm_params_bytes =
        12ull * c.model.tlm_layers * c.model.tlm_hidden * c.model.tlm_hidden;
  if (c.model.h_max <= 0.0)
    c.model.h_max = std::log(static_cast<double>(c.model.vocab_size));
  if (!c.workload.threshold_set) {
    c.workload.threshold = default_threshold(c.workload.algorithm);
    c.workload.threshold_set = true;
  }
}

struct Assignment {
  std::string key;
  std::string value;
  int line;
};

std::vector<Assignment> tokenize(const std::string& text) {
  std::vector<Assignment> out;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const size_t hash = raw.find('#');
    std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    const size_t eq = s.find('=');
    if (eq == std::string::npos)
      fail("config line " + std::to_string(line) +
           ": expected 'key = value', got '" + s + "'");
    Assignment a;
    a.key = trim(s.substr(0, eq));
    a.value = trim(s.substr(eq + 1));
    a.line = line;
    if (a.key.empty())
      fail("config line " + std::to_string(line) + ": missing key");
    out.push_back(std::move(a));
  }
  return out;
}

void check_positive(double v, const char* name) {
  if (!(v > 0.0)) fail(std::string("config: field '") + name +
                       "' must be positive");
}

}  // namespace

const char* to_string(Variant v) {
  switch (v) {
    case Variant::GpuOnly:
      return "gpu_only";
    case Variant::OpSync:
      return "op_sync";
    case Variant::Async:
      return "async";
    case Variant::AsyncAau:
      return "async_aau";
    case Variant::AsyncAauEdc:
      return "async_aau_edc";
    case Variant::Full:
      return "full";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  for (Variant v : all_variants())
    if (s == to_string(v)) return v;
  fail("config: unknown variant '" + s +
       "' (expected gpu_only|op_sync|async|async_aau|async_aau_edc|full)");
}

std::vector<Variant> all_variants() {
  return {Variant::GpuOnly,  Variant::OpSync,      Variant::Async,
          Variant::AsyncAau, Variant::AsyncAauEdc, Variant::Full};
}

const char* to_string(ModelScale s) {
  switch (s) {
    case ModelScale::Small:
      return "small";
    case ModelScale::Medium:
      return "medium";
    case ModelScale::Large:
      return "large";
  }
  return "?";
}

ModelScale scale_from_string(const std::string& s) {
  if (s == "small") return ModelScale::Small;
  if (s == "medium") return ModelScale::Medium;
  if (s == "large") return ModelScale::Large;
  fail("config: unknown model.scale '" + s +
       "' (expected small|medium|large)");
}

const char* to_string(DraftAlgorithm a) {
  switch (a) {
    case DraftAlgorithm::SpecDecPP:
      return "specdecpp";
    case DraftAlgorithm::Svip:
      return "svip";
    case DraftAlgorithm::AdaEdl:
      return "adaedl";
    case DraftAlgorithm::BanditSpec:
      return "banditspec";
  }
  return "?";
}

DraftAlgorithm algorithm_from_string(const std::string& s) {
  if (s == "specdecpp") return DraftAlgorithm::SpecDecPP;
  if (s == "svip") return DraftAlgorithm::Svip;
  if (s == "adaedl") return DraftAlgorithm::AdaEdl;
  if (s == "banditspec") return DraftAlgorithm::BanditSpec;
  fail("config: unknown workload.algorithm '" + s +
       "' (expected specdecpp|svip|adaedl|banditspec)");
}

ExperimentConfig load_config(const std::string& text) {
  ExperimentConfig cfg;
  const auto assignments = tokenize(text);

  // model.scale presets are applied first so explicit model.* keys win
  // regardless of where they appear in the document.
  for (const auto& a : assignments) {
    if (a.key == "model.scale") {
      cfg.model.scale = scale_from_string(a.value);
    }
  }
  apply_scale_preset(cfg.model);

  for (const auto& a : assignments) {
    if (a.key == "model.scale") continue;
    const Field* f = find_field(a.key);
    if (!f)
      fail("config line " + std::to_string(a.line) + ": unknown key '" +
           a.key + "'");
    try {
      f->set(cfg, a.value);
    } catch (const ConfigError& e) {
      fail("config line " + std::to_string(a.line) + ": " + e.what());
    }
  }

  derive(cfg);
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_config(buf.str());
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    fail("override '" + assignment + "': expected key=value");
  const std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  if (key == "model.scale") {
    cfg.model.scale = scale_from_string(value);
    apply_scale_preset(cfg.model);
  } else {
    const Field* f = find_field(key);
    if (!f) fail("override: unknown key '" + key + "'");
    f->set(cfg, value);
    // Redo derivations for fields reset to their sentinel.
    if (key == "model.vocab_size") cfg.model.h_max = 0.0;
    if (key == "workload.algorithm") cfg.workload.threshold_set = false;
  }
  derive(cfg);
  validate(cfg);
  cfg.applied_overrides.push_back(key + "=" + value);
}

std::string serialize(const ExperimentConfig& cfg) {
  std::ostringstream out;
  for (const auto& f : field_registry()) {
    out << f.key << " = " << f.get(cfg) << "\n";
  }
  return out.str();
}

void validate(const ExperimentConfig& cfg) {
  const auto& h = cfg.hardware;
  check_positive(h.npu_matrix_ops_per_cycle, "hardware.npu_matrix_ops_per_cycle");
  check_positive(h.npu_vector_ops_per_cycle, "hardware.npu_vector_ops_per_cycle");
  check_positive(h.npu_freq_hz, "hardware.npu_freq_hz");
  check_positive(h.pim_ops_per_cycle_per_unit,
                 "hardware.pim_ops_per_cycle_per_unit");
  check_positive(h.pim_freq_hz, "hardware.pim_freq_hz");
  check_positive(h.pim_onchip_bw_bytes_per_sec,
                 "hardware.pim_onchip_bw_bytes_per_sec");
  check_positive(h.offchip_bw_bytes_per_sec, "hardware.offchip_bw_bytes_per_sec");
  if (h.pim_units < 1)
    fail("config: field 'hardware.pim_units' must be at least 1");

  const auto& m = cfg.model;
  if (m.dlm_hidden < 1 || m.tlm_hidden < 1)
    fail("config: model hidden sizes must be at least 1");
  if (m.dlm_layers < 1 || m.tlm_layers < 1)
    fail("config: model layer counts must be at least 1");
  if (m.vocab_size < 2)
    fail("config: field 'model.vocab_size' must be at least 2");
  check_positive(m.h_max, "model.h_max");

  const auto& w = cfg.workload;
  if (w.difficulty_walk_step < 0.0 || w.difficulty_walk_step > 1.0)
    fail("config: field 'workload.difficulty_walk_step' must be in [0,1]");
  if (w.entropy_noise_sd < 0.0)
    fail("config: field 'workload.entropy_noise_sd' must be non-negative");
  if (w.accept_slope < 0.0)
    fail("config: field 'workload.accept_slope' must be non-negative");
  if (w.accept_floor < 0.0 || w.accept_ceiling > 1.0 ||
      w.accept_floor > w.accept_ceiling)
    fail("config: workload.accept_floor/accept_ceiling must satisfy "
         "0 <= floor <= ceiling <= 1");
  if (w.lookahead_decay <= 0.0 || w.lookahead_decay > 1.0)
    fail("config: field 'workload.lookahead_decay' must be in (0,1]");
  if (w.max_draft_len < 1 || w.max_draft_len > 64)
    fail("config: field 'workload.max_draft_len' must be in [1,64]");
  if (w.threshold < 0.0)
    fail("config: field 'workload.threshold' must be non-negative");

  const auto& p = cfg.policy;
  if (p.max_batches_per_verify < 1)
    fail("config: field 'policy.max_batches_per_verify' must be at least 1");
  if (p.event_cap < 1000)
    fail("config: field 'policy.event_cap' must be at least 1000");
  if (p.warmup_iterations < 0)
    fail("config: field 'policy.warmup_iterations' must be non-negative");

  const auto& e = cfg.energy;
  for (double v : {e.npu_dynamic_pj_per_op, e.pim_dynamic_pj_per_op,
                   e.dram_pj_per_byte, e.offchip_pj_per_byte,
                   e.npu_background_pj_per_cycle,
                   e.pim_background_pj_per_cycle, e.aau_pj_per_op}) {
    if (v < 0.0) fail("config: energy coefficients must be non-negative");
  }

  const auto& b = cfg.baseline;
  check_positive(b.gpu_ops_per_cycle, "baseline.gpu_ops_per_cycle");
  check_positive(b.gpu_vector_ops_per_cycle, "baseline.gpu_vector_ops_per_cycle");
  check_positive(b.gpu_freq_hz, "baseline.gpu_freq_hz");
  check_positive(b.gpu_mem_bw_bytes_per_sec, "baseline.gpu_mem_bw_bytes_per_sec");

  if (cfg.generation_length < 1)
    fail("config: field 'generation_length' must be at least 1");
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  // Semantic equality over every serialized field.
  return serialize(a) == serialize(b);
}

}  // namespace specsim
