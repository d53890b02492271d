// SPDX-FileCopyrightText: © 2026 The specsim authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace specsim {

// Error with the offending line / field baked into the message.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

class SimError : public std::runtime_error {
 public:
  explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

enum class Variant {
  GpuOnly,
  OpSync,
  Async,
  AsyncAau,
  AsyncAauEdc,
  Full,
};

const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);
std::vector<Variant> all_variants();

enum class ModelScale { Small, Medium, Large };

const char* to_string(ModelScale s);
ModelScale scale_from_string(const std::string& s);

enum class DraftAlgorithm { SpecDecPP, Svip, AdaEdl, BanditSpec };

const char* to_string(DraftAlgorithm a);
DraftAlgorithm algorithm_from_string(const std::string& s);

struct HardwareConfig {
  // NPU: systolic matrix unit plus a vector unit, both INT8 ops/cycle.
  double npu_matrix_ops_per_cycle = 16000.0;  // 16 TOPS at 1 GHz
  double npu_vector_ops_per_cycle = 8200.0;   // 8.2 TOPS at 1 GHz
  double npu_freq_hz = 1.0e9;
  std::uint64_t npu_spm_bytes = 8ull * 1024 * 1024;
  bool npu_weights_resident = false;  // verifier weights stream per pass

  // PIM: per-rank compute units sharing the in-DRAM data path.
  int pim_units = 16;
  double pim_ops_per_cycle_per_unit = 8.0;  // 102.4 GOPS total at 800 MHz
  double pim_freq_hz = 800.0e6;
  double pim_onchip_bw_bytes_per_sec = 256.0e9;

  double offchip_bw_bytes_per_sec = 51.2e9;

  std::uint64_t gtsu_switch_cycles = 400;    // PIM cycles per rank-mode switch
  std::uint64_t queue_transfer_cycles = 200;  // NPU cycles per queue message
  bool aau_enabled = true;  // in-situ nonlinear unit next to the PIM ranks

  // LPDDR5 command timings, recorded for documentation only (the simulator
  // models bandwidth, not per-command DRAM state).
  struct DramTiming {
    int trp = 32;
    int trcd = 32;
    int tras = 64;
    int trrd_l = 8;
    int twr = 24;
    int tccd_s = 4;
    int tccd_l = 6;
    int trefi = 6240;
    int tfaw = 64;
    int trfc = 560;
  } dram;
};

struct ModelConfig {
  ModelScale scale = ModelScale::Medium;
  std::uint64_t dlm_hidden = 4096;
  std::uint64_t dlm_layers = 32;
  std::uint64_t dlm_params_bytes = 0;  // 0 -> derived as 12*layers*hidden^2
  std::uint64_t tlm_hidden = 5120;
  std::uint64_t tlm_layers = 40;
  std::uint64_t tlm_params_bytes = 0;
  std::uint64_t vocab_size = 32000;
  double h_max = 0.0;  // 0 -> derived as ln(vocab_size)
};

struct WorkloadConfig {
  double difficulty_walk_step = 0.04;
  double entropy_noise_sd = 0.35;     // nats
  double accept_slope = 0.55;         // beta
  double accept_floor = 0.05;         // p_min
  double accept_ceiling = 0.98;       // p_max
  double lookahead_decay = 0.85;      // gamma, per unverified batch of depth
  int max_draft_len = 8;
  DraftAlgorithm algorithm = DraftAlgorithm::AdaEdl;
  double threshold = 0.37;  // theta; per-algorithm defaults applied on load
  bool threshold_set = false;
  std::string trace_path;  // non-empty -> replay instead of synthesis
};

struct PolicyConfig {
  int max_batches_per_verify = 1;
  std::uint64_t queue_capacity = 0;  // 0 = unbounded
  std::uint64_t event_cap = 50'000'000;
  int warmup_iterations = 4;  // profiling passes that seed the cycle tables
};

struct EnergyCoefficients {
  double npu_dynamic_pj_per_op = 0.5;
  double pim_dynamic_pj_per_op = 1.0;
  double dram_pj_per_byte = 15.0;
  double offchip_pj_per_byte = 40.0;
  double npu_background_pj_per_cycle = 2000.0;
  double pim_background_pj_per_cycle = 500.0;
  double aau_pj_per_op = 0.8;
};

struct BaselineConfig {
  // Single-accelerator reference: same class of compute as the NPU attached
  // to plain LPDDR5 without PIM assistance.
  double gpu_ops_per_cycle = 16000.0;
  double gpu_vector_ops_per_cycle = 8200.0;
  double gpu_freq_hz = 1.335e9;
  double gpu_mem_bw_bytes_per_sec = 51.2e9;
  bool opsync_attention_on_pim = true;
};

struct ExperimentConfig {
  Variant variant = Variant::Full;
  std::uint64_t seed = 1;
  std::uint64_t generation_length = 1024;
  HardwareConfig hardware;
  ModelConfig model;
  WorkloadConfig workload;
  PolicyConfig policy;
  EnergyCoefficients energy;
  BaselineConfig baseline;

  // Overrides applied after parsing, echoed into reports.
  std::vector<std::string> applied_overrides;
};

// Parse a key=value document (see docs/config-schema.md). An empty document
// yields the default Medium-scale configuration. Line order is irrelevant:
// model.scale presets are applied before explicit model.* keys.
ExperimentConfig load_config(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// Apply one "key=value" override on top of an existing config, re-running
// derivations and validation. Unknown keys raise ConfigError.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

// Emit a complete document that load_config() parses back to an equal config.
std::string serialize(const ExperimentConfig& cfg);

// Validation used by load/apply; raises ConfigError naming the field.
void validate(const ExperimentConfig& cfg);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace specsim
