// SPDX-FileCopyrightText: © 2026 The specsim authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specsim/config.hpp"
#include "specsim/rng.hpp"

namespace specsim {

struct TraceRecord {
  std::uint64_t step_index = 0;
  double entropy = 0.0;
  bool accepted = false;
};

// CSV with the exact header "step_index,entropy,accepted"; step indices are
// 0-based and consecutive; accepted is 0 or 1. Errors name the line.
std::vector<TraceRecord> ingest_trace(const std::string& text);
std::vector<TraceRecord> ingest_trace_file(const std::string& path);
std::string export_trace(const std::vector<TraceRecord>& records);

// Bounded random walk driving token difficulty: uniform step in
// [-step, +step], reflected back into [0,1].
double next_difficulty(double state, double step, RandomStream& rng);

// Per-token entropy: difficulty scaled to [0, h_max] plus gaussian noise,
// clamped to the valid range.
double draft_entropy(double difficulty, double h_max, double noise_sd,
                     RandomStream& rng);

// Probability that a drafted token with this entropy is accepted when it is
// `lookahead_depth` unverified batches ahead of verification.
double acceptance_probability(const WorkloadConfig& w, double h_max,
                              double entropy, int lookahead_depth);

// UCB1 over a fixed set of draft-length arms; rewards are in [0,1].
class BanditState {
 public:
  explicit BanditState(std::vector<int> arms = {2, 4, 6, 8});
  int choose();                         // returns the arm (a draft length)
  void reward(int arm, double value);   // value in [0,1]
  const std::vector<int>& arms() const { return arms_; }
  std::uint64_t plays(int arm) const;

 private:
  std::vector<int> arms_;
  std::vector<std::uint64_t> count_;
  std::vector<double> total_;
  std::uint64_t rounds_ = 0;
};

// Stop rule evaluated after each drafted token. entropies holds the batch so
// far (at least one element). bandit_target is the arm chosen for this batch
// (banditspec only; ignored otherwise). Always stops at max_draft_len.
bool adaptive_stop(const WorkloadConfig& w, double h_max,
                   const std::vector<double>& entropies, int bandit_target);

// One workload instance per simulation: owns the difficulty walk, the
// entropy stream (or the replay trace) and the bandit. Verification
// outcomes are keyed by (batch_id, position) so every verifier sees the
// same coin for the same drafted token.
class Workload {
 public:
  Workload(const ExperimentConfig& cfg);
  Workload(const ExperimentConfig& cfg, std::vector<TraceRecord> trace);

  bool replaying() const { return replay_; }

  // Entropy of the token drafted for `position`; advances the walk in
  // synthetic mode.
  double next_entropy(std::uint64_t position);

  // Acceptance coin for a drafted token, stable across verification order.
  bool token_accepted(double entropy, int lookahead_depth,
                      std::uint64_t batch_id, std::uint64_t position) const;

  // Committed sequence ground truth: position index doubles as token id.
  std::uint64_t oracle_token(std::uint64_t position) const { return position; }

  // banditspec: arm for the next batch; other algorithms return 0.
  int begin_batch();
  bool should_stop(const std::vector<double>& entropies,
                   int bandit_target) const;
  // Terminal feedback for a batch drafted with `chosen_arm` tokens.
  void batch_outcome(int chosen_arm, int accepted_tokens);

  double difficulty() const { return difficulty_; }
  void set_difficulty(double d) { difficulty_ = d; }

  // Deterministic synthetic trace of `length` depth-zero steps, exported by
  // the trace-export command and replayable via workload.trace_path.
  static std::vector<TraceRecord> synthesize_trace(const ExperimentConfig& cfg,
                                                   std::uint64_t length);

 private:
  WorkloadConfig w_;
  double h_max_;
  std::uint64_t seed_;
  RandomStream rng_;
  double difficulty_ = 0.5;
  bool replay_ = false;
  std::vector<TraceRecord> trace_;
  BanditState bandit_;
};

}  // namespace specsim
