// SPDX-FileCopyrightText: © 2026 The specsim authors
// SPDX-License-Identifier: Apache-2.0
#include "specsim/timing.hpp"

#include <algorithm>

namespace specsim {

namespace {

std::uint64_t ceil_div_rate(std::uint64_t amount, double rate) {
  if (amount == 0) return 0;
  return static_cast<std::uint64_t>(
      std::ceil(static_cast<double>(amount) / rate));
}

// Accumulated raw resource demand of a composite op. The roofline is applied
// to the totals: compute and memory of one model pass overlap fully.
struct Tally {
  std::uint64_t matrix_ops = 0;
  std::uint64_t vector_ops = 0;
  std::uint64_t bytes = 0;

  void gemm(std::uint64_t m, std::uint64_t k, std::uint64_t n,
            bool weight_resident) {
    if (m == 0 || k == 0 || n == 0) return;
    matrix_ops += 2 * m * k * n;
    bytes += (weight_resident ? 0 : k * n) + m * k + m * n;
  }
};

OpCost finish(const DeviceParams& dev, const Tally& t,
              std::uint64_t extra_cycles) {
  OpCost op;
  op.device = dev.device;
  op.compute_ops = t.matrix_ops + t.vector_ops;
  op.compute_cycles = ceil_div_rate(t.matrix_ops, dev.ops_per_cycle) +
                      ceil_div_rate(t.vector_ops, dev.vector_ops_per_cycle);
  op.memory_cycles = ceil_div_rate(t.bytes, dev.bytes_per_cycle);
  op.extra_cycles = extra_cycles;
  op.cycles = std::max(op.compute_cycles, op.memory_cycles) + extra_cycles;
  op.dram_bytes_moved = t.bytes;
  op.offchip_bytes_moved = dev.offchip_link ? t.bytes : 0;
  return op;
}

// One transformer block: QKV, output projection, two FFN GEMMs.
void block_gemms(Tally& t, std::uint64_t m, std::uint64_t h,
                 bool weight_resident) {
  t.gemm(m, h, 3 * h, weight_resident);
  t.gemm(m, h, h, weight_resident);
  t.gemm(m, h, 4 * h, weight_resident);
  t.gemm(m, 4 * h, h, weight_resident);
}

// Nonlinear work per token per layer (norms, activation), 5 ops/element over
// ~6*hidden elements. Attention softmax is carried by the comm/in-situ path.
std::uint64_t vector_ops_per_token_layer(std::uint64_t h) { return 5 * 6 * h; }

OpCost verifier_forward(const DeviceParams& dev, const ModelConfig& m,
                        int batch_len, std::uint64_t kv_len,
                        bool stream_weights, std::uint64_t extra_cycles) {
  Tally t;
  const std::uint64_t h = m.tlm_hidden;
  const std::uint64_t batch = static_cast<std::uint64_t>(batch_len);
  for (std::uint64_t layer = 0; layer < m.tlm_layers; ++layer) {
    block_gemms(t, batch, h, /*weight_resident=*/true);
    t.vector_ops += batch * vector_ops_per_token_layer(h);
  }
  if (stream_weights) t.bytes += m.tlm_params_bytes;
  t.bytes += 2 * m.tlm_layers * kv_len * h;  // KV-cache read
  t.bytes += 2 * m.tlm_layers * batch * h;   // KV-cache append
  return finish(dev, t, extra_cycles);
}

}  // namespace

const char* to_string(Device d) {
  switch (d) {
    case Device::Npu:
      return "npu";
    case Device::Pim:
      return "pim";
    case Device::Gpu:
      return "gpu";
  }
  return "?";
}

DeviceParams npu_params(const HardwareConfig& hw) {
  DeviceParams d;
  d.device = Device::Npu;
  d.ops_per_cycle = hw.npu_matrix_ops_per_cycle;
  d.vector_ops_per_cycle = hw.npu_vector_ops_per_cycle;
  d.bytes_per_cycle = hw.offchip_bw_bytes_per_sec / hw.npu_freq_hz;
  d.freq_hz = hw.npu_freq_hz;
  d.offchip_link = true;
  return d;
}

DeviceParams pim_params(const HardwareConfig& hw) {
  DeviceParams d;
  d.device = Device::Pim;
  d.ops_per_cycle =
      static_cast<double>(hw.pim_units) * hw.pim_ops_per_cycle_per_unit;
  d.vector_ops_per_cycle = d.ops_per_cycle;  // reductions share the array
  d.bytes_per_cycle = hw.pim_onchip_bw_bytes_per_sec / hw.pim_freq_hz;
  d.freq_hz = hw.pim_freq_hz;
  d.offchip_link = false;
  return d;
}

DeviceParams gpu_params(const BaselineConfig& b) {
  DeviceParams d;
  d.device = Device::Gpu;
  d.ops_per_cycle = b.gpu_ops_per_cycle;
  d.vector_ops_per_cycle = b.gpu_vector_ops_per_cycle;
  d.bytes_per_cycle = b.gpu_mem_bw_bytes_per_sec / b.gpu_freq_hz;
  d.freq_hz = b.gpu_freq_hz;
  d.offchip_link = true;
  return d;
}

OpCost gemm_cycles(const DeviceParams& dev, std::uint64_t m, std::uint64_t k,
                   std::uint64_t n, bool weight_resident) {
  Tally t;
  t.gemm(m, k, n, weight_resident);
  return finish(dev, t, 0);
}

OpCost dlm_draft_cycles(const DeviceParams& dev, const ModelConfig& m,
                        int draft_len, std::uint64_t kv_len) {
  Tally t;
  const std::uint64_t h = m.dlm_hidden;
  const std::uint64_t tokens = static_cast<std::uint64_t>(draft_len);
  for (std::uint64_t layer = 0; layer < m.dlm_layers; ++layer) {
    block_gemms(t, 1, h, /*weight_resident=*/false);
    t.gemm(1, h, kv_len, /*weight_resident=*/false);  // attention scores
    t.gemm(1, kv_len, h, /*weight_resident=*/false);  // weighted sum
    t.vector_ops += vector_ops_per_token_layer(h);
  }
  t.matrix_ops *= tokens;
  t.vector_ops *= tokens;
  t.bytes *= tokens;
  return finish(dev, t, 0);
}

OpCost tlm_verify_cycles(const DeviceParams& dev, const ModelConfig& m,
                         int batch_len, std::uint64_t kv_len,
                         bool stream_weights) {
  return verifier_forward(dev, m, batch_len, kv_len, stream_weights, 0);
}

OpCost tlm_attention_cycles(const DeviceParams& dev, const ModelConfig& m,
                            int batch_len, std::uint64_t kv_len) {
  // Scores and weighted-sum only; the KV operand streams (cache read), and
  // the cache append stays with the projection phase.
  Tally t;
  const std::uint64_t h = m.tlm_hidden;
  const std::uint64_t batch = static_cast<std::uint64_t>(batch_len);
  for (std::uint64_t layer = 0; layer < m.tlm_layers; ++layer) {
    t.gemm(batch, h, kv_len, /*weight_resident=*/false);
    t.gemm(batch, kv_len, h, /*weight_resident=*/false);
  }
  return finish(dev, t, 0);
}

OpCost pim_preverify_cycles(const DeviceParams& pim, const ModelConfig& m,
                            int preverify_len, std::uint64_t kv_len,
                            std::uint64_t gtsu_switch_cycles) {
  return verifier_forward(pim, m, preverify_len, kv_len,
                          /*stream_weights=*/true, 2 * gtsu_switch_cycles);
}

OpCost attention_comm_cycles(const HardwareConfig& hw, std::uint64_t hidden,
                             std::uint64_t layers, int tokens,
                             bool aau_enabled) {
  OpCost op;
  op.device = Device::Npu;
  const std::uint64_t elements =
      static_cast<std::uint64_t>(tokens) * hidden * 4 * layers;
  if (aau_enabled) {
    op.aau_ops = elements;
    return op;
  }
  const DeviceParams npu = npu_params(hw);
  op.memory_cycles = ceil_div_rate(elements, npu.bytes_per_cycle);
  op.cycles = op.memory_cycles;
  op.dram_bytes_moved = elements;
  op.offchip_bytes_moved = elements;
  return op;
}

double energy_of(OpCost& op, const EnergyCoefficients& e) {
  const double ops = static_cast<double>(op.compute_ops);
  const double cycles = static_cast<double>(op.cycles);
  switch (op.device) {
    case Device::Npu:
    case Device::Gpu:  // treated as NPU-class silicon for energy purposes
      op.compute_energy_pj = e.npu_dynamic_pj_per_op * ops;
      op.background_energy_pj = e.npu_background_pj_per_cycle * cycles;
      break;
    case Device::Pim:
      op.compute_energy_pj = e.pim_dynamic_pj_per_op * ops;
      op.background_energy_pj = e.pim_background_pj_per_cycle * cycles;
      break;
  }
  op.dram_energy_pj = e.dram_pj_per_byte * static_cast<double>(op.dram_bytes_moved);
  op.offchip_energy_pj =
      e.offchip_pj_per_byte * static_cast<double>(op.offchip_bytes_moved);
  op.aau_energy_pj = e.aau_pj_per_op * static_cast<double>(op.aau_ops);
  op.energy_pj = op.compute_energy_pj + op.background_energy_pj +
                 op.dram_energy_pj + op.offchip_energy_pj + op.aau_energy_pj;
  return op.energy_pj;
}

}  // namespace specsim
