# SPDX-FileCopyrightText: © 2026 The specsim authors
# SPDX-License-Identifier: Apache-2.0
"""Recompute the pinned cost-model golden values from first principles.

Closed-form per-layer sums, written independently of the C++ cost model so
the two can disagree. Run with no arguments; prints one `name = value` line
per golden. The unit tests freeze these numbers as integer constants.

Conventions shared with the simulator (documented in the README):
  - INT8 GEMM: 2*M*K*N ops, 1 byte per element; moved bytes are
    K*N (weights, skipped when resident) + M*K + M*N.
  - Roofline: cycles = max(ceil(ops / ops_per_cycle) summed per engine,
    ceil(bytes / bytes_per_cycle)), applied to whole-pass totals.
  - Vector (nonlinear) work: 5 ops/element over 6*hidden elements per token
    per layer, on the vector engine.
  - A transformer block is four GEMMs: QKV (h x 3h), output (h x h),
    FFN up (h x 4h), FFN down (4h x h).
"""

import math

# Device parameters (defaults of the simulator's Medium configuration).
NPU_MATRIX = 16000.0  # INT8 ops / cycle
NPU_VECTOR = 8200.0
NPU_BPC = 51.2e9 / 1.0e9  # off-chip bytes / cycle at 1 GHz

PIM_OPS = 16 * 8.0  # units * ops/unit/cycle; matrix and vector share it
PIM_BPC = 256.0e9 / 800.0e6  # in-DRAM bytes / cycle at 800 MHz

# Medium model.
DLM_H, DLM_L = 4096, 32
TLM_H, TLM_L = 5120, 40
TLM_PARAMS = 12 * TLM_L * TLM_H * TLM_H

# Default energy coefficients.
NPU_PJ_OP = 0.5
DRAM_PJ_B = 15.0
OFFCHIP_PJ_B = 40.0
NPU_BG_PJ_CYC = 2000.0


def ceil_rate(amount, rate):
    return 0 if amount == 0 else math.ceil(amount / rate)


def gemm(m, k, n, resident):
    ops = 2 * m * k * n
    bytes_ = (0 if resident else k * n) + m * k + m * n
    return ops, bytes_


def block(m, h, resident):
    """QKV + output projection + FFN up/down for one layer."""
    ops = bytes_ = 0
    for k, n in ((h, 3 * h), (h, h), (h, 4 * h), (4 * h, h)):
        o, b = gemm(m, k, n, resident)
        ops += o
        bytes_ += b
    return ops, bytes_


def roofline(matrix_ops, vector_ops, bytes_, matrix_rate, vector_rate, bpc):
    compute = ceil_rate(matrix_ops, matrix_rate) + ceil_rate(vector_ops, vector_rate)
    memory = ceil_rate(bytes_, bpc)
    return max(compute, memory), compute, memory


def gemm_npu_4_4096_4096():
    ops, bytes_ = gemm(4, 4096, 4096, resident=False)
    cycles, compute, memory = roofline(ops, 0, bytes_, NPU_MATRIX, NPU_VECTOR, NPU_BPC)
    return cycles, compute, memory, ops, bytes_


def dlm_draft(draft_len, kv_len):
    ops = bytes_ = vec = 0
    for _ in range(DLM_L):
        o, b = block(1, DLM_H, resident=False)
        ops += o
        bytes_ += b
        for k, n in ((DLM_H, kv_len), (kv_len, DLM_H)):  # scores, weighted sum
            o, b = gemm(1, k, n, resident=False)
            ops += o
            bytes_ += b
        vec += 5 * 6 * DLM_H
    ops, vec, bytes_ = ops * draft_len, vec * draft_len, bytes_ * draft_len
    cycles, _, _ = roofline(ops, vec, bytes_, PIM_OPS, PIM_OPS, PIM_BPC)
    return cycles


def verifier_forward(batch, kv_len, matrix_rate, vector_rate, bpc):
    ops = bytes_ = vec = 0
    for _ in range(TLM_L):
        o, b = block(batch, TLM_H, resident=True)
        ops += o
        bytes_ += b
        vec += batch * 5 * 6 * TLM_H
    bytes_ += TLM_PARAMS                      # weight streaming
    bytes_ += 2 * TLM_L * kv_len * TLM_H      # KV-cache read
    bytes_ += 2 * TLM_L * batch * TLM_H       # KV-cache append
    cycles, _, _ = roofline(ops, vec, bytes_, matrix_rate, vector_rate, bpc)
    return cycles


def attention_comm(tokens, hidden, layers):
    return ceil_rate(tokens * hidden * 4 * layers, NPU_BPC)


def energy_gemm_npu():
    cycles, _, _, ops, bytes_ = gemm_npu_4_4096_4096()
    return (NPU_PJ_OP * ops + NPU_BG_PJ_CYC * cycles + DRAM_PJ_B * bytes_
            + OFFCHIP_PJ_B * bytes_)


def main():
    cycles, compute, memory, _, _ = gemm_npu_4_4096_4096()
    print(f"gemm_npu_4x4096x4096_compute_cycles = {compute}")
    print(f"gemm_npu_4x4096x4096_memory_cycles = {memory}")
    print(f"gemm_npu_4x4096x4096_cycles = {cycles}")
    print(f"dlm_draft_len1_kv512_cycles = {dlm_draft(1, 512)}")
    print(f"dlm_draft_len2_kv512_cycles = {dlm_draft(2, 512)}")
    v1 = verifier_forward(1, 512, NPU_MATRIX, NPU_VECTOR, NPU_BPC)
    v8 = verifier_forward(8, 512, NPU_MATRIX, NPU_VECTOR, NPU_BPC)
    print(f"tlm_verify_batch1_kv512_cycles = {v1}")
    print(f"tlm_verify_batch8_kv512_cycles = {v8}")
    print(f"tlm_verify_batch8_over_batch1 = {v8 / v1:.6f}")
    pv1 = verifier_forward(1, 512, PIM_OPS, PIM_OPS, PIM_BPC)
    print(f"pim_preverify_len1_kv512_gtsu0_cycles = {pv1}")
    print(f"attention_comm_t1_h4096_l32_cycles = {attention_comm(1, 4096, 32)}")
    print(f"energy_gemm_npu_4x4096x4096_pj = {energy_gemm_npu():.1f}")


if __name__ == "__main__":
    main()
