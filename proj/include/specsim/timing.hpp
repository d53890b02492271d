// SPDX-FileCopyrightText: © 2026 The specsim authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

#include "specsim/config.hpp"

namespace specsim {

enum class Device { Npu, Pim, Gpu };

const char* to_string(Device d);

// Roofline view of one execution engine. bytes_per_cycle is the governing
// memory link: off-chip LPDDR for the NPU/GPU, the in-DRAM path for PIM.
struct DeviceParams {
  Device device = Device::Npu;
  double ops_per_cycle = 1.0;         // INT8 ops on the matrix path
  double vector_ops_per_cycle = 1.0;  // nonlinear/reduction path
  double bytes_per_cycle = 1.0;
  double freq_hz = 1.0;
  bool offchip_link = true;  // moved bytes also cross the off-chip interface
};

DeviceParams npu_params(const HardwareConfig& hw);
DeviceParams pim_params(const HardwareConfig& hw);
DeviceParams gpu_params(const BaselineConfig& b);

// Cost of one scheduled operation, in cycles of the executing device.
// cycles == max(compute_cycles, memory_cycles) + extra_cycles, where
// extra_cycles is the additive non-roofline part (rank-mode switches).
struct OpCost {
  Device device = Device::Npu;
  std::uint64_t cycles = 0;
  std::uint64_t compute_cycles = 0;
  std::uint64_t memory_cycles = 0;
  std::uint64_t extra_cycles = 0;
  std::uint64_t compute_ops = 0;
  std::uint64_t aau_ops = 0;
  std::uint64_t dram_bytes_moved = 0;
  std::uint64_t offchip_bytes_moved = 0;
  double energy_pj = 0.0;  // total; components below sum to it
  double compute_energy_pj = 0.0;
  double background_energy_pj = 0.0;
  double dram_energy_pj = 0.0;
  double offchip_energy_pj = 0.0;
  double aau_energy_pj = 0.0;
};

// INT8 GEMM, 1 byte/element, 2 ops per MAC. weight_resident skips the K*N
// weight bytes (weights already on the device); activations always move.
OpCost gemm_cycles(const DeviceParams& dev, std::uint64_t m, std::uint64_t k,
                   std::uint64_t n, bool weight_resident);

// Autoregressive drafting: draft_len sequential tokens, each a full pass of
// projection/FFN GEMMs plus attention score/weighted-sum GEMVs over kv_len.
// Cost is linear in draft_len for fixed kv_len by construction.
OpCost dlm_draft_cycles(const DeviceParams& dev, const ModelConfig& m,
                        int draft_len, std::uint64_t kv_len);

// Batched verification forward: projection/FFN GEMMs with M = batch_len,
// plus KV-cache streaming of kv_len. stream_weights adds the full parameter
// footprint to the memory side (one pass per invocation).
OpCost tlm_verify_cycles(const DeviceParams& dev, const ModelConfig& m,
                         int batch_len, std::uint64_t kv_len,
                         bool stream_weights);

// Attention slice of the verification forward alone: per-layer score and
// weighted-sum GEMMs of batch_len rows over kv_len, with the KV cache
// resident on the executing device. The lockstep baseline runs this on PIM
// concurrently with the projection/FFN GEMMs on the NPU.
OpCost tlm_attention_cycles(const DeviceParams& dev, const ModelConfig& m,
                            int batch_len, std::uint64_t kv_len);

// Verifier forward executed on the PIM ranks (weights in-DRAM, so no
// off-chip traffic), bracketed by one rank-mode switch on entry and one on
// exit.
OpCost pim_preverify_cycles(const DeviceParams& pim, const ModelConfig& m,
                            int preverify_len, std::uint64_t kv_len,
                            std::uint64_t gtsu_switch_cycles);

// Attention nonlinears for tokens drafted on PIM: with the in-situ unit the
// transfer disappears (cycles 0, per-element op energy); without it the
// intermediate activations (tokens*hidden*4 per layer) cross the off-chip
// link, costed in NPU cycles.
OpCost attention_comm_cycles(const HardwareConfig& hw, std::uint64_t hidden,
                             std::uint64_t layers, int tokens,
                             bool aau_enabled);

// Fills op.energy_pj: dynamic per-op and per-byte terms plus the executing
// device's background draw over the op's cycles.
double energy_of(OpCost& op, const EnergyCoefficients& e);

inline std::uint64_t cycles_to_ps(std::uint64_t cycles, double freq_hz) {
  return static_cast<std::uint64_t>(
      std::llround(static_cast<double>(cycles) * 1.0e12 / freq_hz));
}

}  // namespace specsim
