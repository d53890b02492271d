// SPDX-FileCopyrightText: © 2026 The specsim authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specsim/config.hpp"
#include "specsim/metrics.hpp"

namespace specsim {

struct RunResult {
  MetricsReport metrics;
  std::vector<std::uint64_t> committed_tokens;
  std::vector<std::string> event_trace;  // filled when capture_trace is set
};

// Run one decode simulation to generation_length committed tokens. The
// committed sequence is checked against the reference stream before
// returning; a mismatch raises SimError (it would mean the queue/rollback
// machinery corrupted the output). Deterministic: equal configs and seeds
// produce identical results, including the event trace.
RunResult simulate(const ExperimentConfig& cfg, bool capture_trace = false);

}  // namespace specsim
