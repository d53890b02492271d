#!/usr/bin/env python3
"""Independent recomputation of a `specsim cost-dump` document.

Re-derives every cycle count in the dump from the echoed hardware and model
parameters using straight-line arithmetic (no shared code with the
simulator), and fails if any value differs by even one cycle.

Usage: cost_oracle.py <cost_dump.json>
"""
import json
import math
import sys


def ceil_div_rate(amount, rate):
    if amount == 0:
        return 0
    return math.ceil(amount / rate)


class Device:
    def __init__(self, ops, vops, bpc):
        self.ops = float(ops)
        self.vops = float(vops)
        self.bpc = float(bpc)

    def roofline(self, matrix_ops, vector_ops, byts, extra=0):
        compute = ceil_div_rate(matrix_ops, self.ops) + ceil_div_rate(
            vector_ops, self.vops)
        memory = ceil_div_rate(byts, self.bpc)
        return max(compute, memory) + extra, compute, memory


def gemm(m, k, n, resident):
    """Returns (matrix_ops, bytes) of one GEMM."""
    if m == 0 or k == 0 or n == 0:
        return 0, 0
    return 2 * m * k * n, (0 if resident else k * n) + m * k + m * n


def block(m, h, resident):
    ops = byts = 0
    for kk, nn in ((h, 3 * h), (h, h), (h, 4 * h), (4 * h, h)):
        o, b = gemm(m, kk, nn, resident)
        ops += o
        byts += b
    return ops, byts


def vec_per_token_layer(h):
    return 5 * 6 * h


def verifier(dev, tlm_h, tlm_layers, tlm_params, batch, kv, stream, extra):
    ops = vops = byts = 0
    for _ in range(tlm_layers):
        o, b = block(batch, tlm_h, True)
        ops += o
        byts += b
        vops += batch * vec_per_token_layer(tlm_h)
    if stream:
        byts += tlm_params
    byts += 2 * tlm_layers * kv * tlm_h
    byts += 2 * tlm_layers * batch * tlm_h
    return dev.roofline(ops, vops, byts, extra)[0]


def drafter(dev, dlm_h, dlm_layers, tokens, kv):
    ops = vops = byts = 0
    for _ in range(dlm_layers):
        o, b = block(1, dlm_h, False)
        ops += o
        byts += b
        o, b = gemm(1, dlm_h, kv, False)
        ops += o
        byts += b
        o, b = gemm(1, kv, dlm_h, False)
        ops += o
        byts += b
        vops += vec_per_token_layer(dlm_h)
    return dev.roofline(ops * tokens, vops * tokens, byts * tokens)[0]


def attention(dev, tlm_h, tlm_layers, batch, kv):
    ops = byts = 0
    for _ in range(tlm_layers):
        o, b = gemm(batch, tlm_h, kv, False)
        ops += o
        byts += b
        o, b = gemm(batch, kv, tlm_h, False)
        ops += o
        byts += b
    return dev.roofline(ops, 0, byts)[0]


def main():
    doc = json.load(open(sys.argv[1]))
    hw = doc["hardware"]
    md = doc["model"]
    npu = Device(hw["npu_matrix_ops_per_cycle"], hw["npu_vector_ops_per_cycle"],
                 hw["offchip_bw_bytes_per_sec"] / hw["npu_freq_hz"])
    pim_rate = hw["pim_units"] * hw["pim_ops_per_cycle_per_unit"]
    pim = Device(pim_rate, pim_rate,
                 hw["pim_onchip_bw_bytes_per_sec"] / hw["pim_freq_hz"])
    gtsu = hw["gtsu_switch_cycles"]
    resident_default = hw["npu_weights_resident"]

    bad = 0
    for i, p in enumerate(doc["points"]):
        m, k, n = p["m"], p["k"], p["n"]
        res = p["weight_resident"]
        kv, dl = p["kv_len"], p["draft_len"]

        ops, byts = gemm(m, k, n, res)
        g_cycles, g_comp, g_mem = npu.roofline(ops, 0, byts)
        p_cycles, _, _ = pim.roofline(ops, 0, byts)

        expect = {
            "npu_gemm_cycles": g_cycles,
            "npu_gemm_compute_cycles": g_comp,
            "npu_gemm_memory_cycles": g_mem,
            "pim_gemm_cycles": p_cycles,
            "dlm_draft_pim_cycles": drafter(pim, md["dlm_hidden"],
                                            md["dlm_layers"], dl, kv),
            "tlm_verify_npu_cycles": verifier(
                npu, md["tlm_hidden"], md["tlm_layers"],
                md["tlm_params_bytes"], dl, kv, not resident_default, 0),
            "tlm_attention_pim_cycles": attention(pim, md["tlm_hidden"],
                                                  md["tlm_layers"], dl, kv),
            "pim_preverify_cycles": verifier(
                pim, md["tlm_hidden"], md["tlm_layers"],
                md["tlm_params_bytes"], dl, kv, True, 2 * gtsu),
            "attention_comm_npu_cycles": ceil_div_rate(
                dl * md["dlm_hidden"] * 4 * md["dlm_layers"], npu.bpc),
        }
        for key, want in expect.items():
            got = p[key]
            if got != want:
                bad += 1
                print(f"point {i}: {key} dumped {got} recomputed {want}")

    n_pts = len(doc["points"])
    if bad:
        print(f"FAIL: {bad} mismatching values across {n_pts} points")
        return 1
    print(f"OK: {n_pts} points, every cycle count matches")
    return 0


if __name__ == "__main__":
    sys.exit(main())
