// SPDX-FileCopyrightText: © 2026 The specsim authors
// SPDX-License-Identifier: Apache-2.0
#include "specsim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace specsim {

namespace {

constexpr std::uint64_t kAcceptDomain = 0xACCE57ED00000001ULL;

[[noreturn]] void trace_fail(int line, const std::string& msg) {
  throw ConfigError("trace line " + std::to_string(line) + ": " + msg);
}

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

}  // namespace

std::vector<TraceRecord> ingest_trace(const std::string& text) {
  std::istringstream in(text);
  std::string row;
  int line = 0;
  std::vector<TraceRecord> out;
  if (!std::getline(in, row)) throw ConfigError("trace: empty input");
  ++line;
  if (!row.empty() && row.back() == '\r') row.pop_back();
  if (row != "step_index,entropy,accepted")
    trace_fail(line, "expected header 'step_index,entropy,accepted'");
  while (std::getline(in, row)) {
    ++line;
    if (!row.empty() && row.back() == '\r') row.pop_back();
    if (row.empty()) continue;
    std::uint64_t step = 0;
    double entropy = 0.0;
    int accepted = -1;
    char tail = 0;
    const int n = std::sscanf(row.c_str(), "%llu,%lf,%d%c",
                              reinterpret_cast<unsigned long long*>(&step),
                              &entropy, &accepted, &tail);
    if (n != 3) trace_fail(line, "malformed row '" + row + "'");
    if (step != out.size())
      trace_fail(line, "step_index " + std::to_string(step) +
                           " out of order (expected " +
                           std::to_string(out.size()) + ")");
    if (!(entropy >= 0.0))
      trace_fail(line, "entropy must be non-negative");
    if (accepted != 0 && accepted != 1)
      trace_fail(line, "accepted must be 0 or 1, got " +
                           std::to_string(accepted));
    out.push_back({step, entropy, accepted == 1});
  }
  return out;
}

std::vector<TraceRecord> ingest_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return ingest_trace(buf.str());
}

std::string export_trace(const std::vector<TraceRecord>& records) {
  std::ostringstream out;
  out << "step_index,entropy,accepted\n";
  char buf[64];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%.17g", r.entropy);
    out << r.step_index << ',' << buf << ',' << (r.accepted ? 1 : 0) << '\n';
  }
  return out.str();
}

double next_difficulty(double state, double step, RandomStream& rng) {
  double x = state + rng.uniform(-step, step);
  if (x < 0.0) x = -x;
  if (x > 1.0) x = 2.0 - x;
  return clamp01(x);
}

double draft_entropy(double difficulty, double h_max, double noise_sd,
                     RandomStream& rng) {
  const double noise = noise_sd > 0.0 ? rng.gaussian(0.0, noise_sd) : 0.0;
  return std::min(h_max, std::max(0.0, difficulty * h_max + noise));
}

double acceptance_probability(const WorkloadConfig& w, double h_max,
                              double entropy, int lookahead_depth) {
  double p = 1.0 - w.accept_slope * entropy / h_max;
  p = std::min(w.accept_ceiling, std::max(w.accept_floor, p));
  return p * std::pow(w.lookahead_decay, lookahead_depth);
}

BanditState::BanditState(std::vector<int> arms) : arms_(std::move(arms)) {
  count_.assign(arms_.size(), 0);
  total_.assign(arms_.size(), 0.0);
}

int BanditState::choose() {
  // Unplayed arms first, in order; after that classic UCB1.
  for (size_t i = 0; i < arms_.size(); ++i)
    if (count_[i] == 0) return arms_[i];
  size_t best = 0;
  double best_score = -1.0;
  for (size_t i = 0; i < arms_.size(); ++i) {
    const double mean = total_[i] / static_cast<double>(count_[i]);
    const double bonus = std::sqrt(2.0 * std::log(static_cast<double>(rounds_)) /
                                   static_cast<double>(count_[i]));
    const double score = mean + bonus;
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return arms_[best];
}

void BanditState::reward(int arm, double value) {
  for (size_t i = 0; i < arms_.size(); ++i) {
    if (arms_[i] == arm) {
      ++count_[i];
      ++rounds_;
      total_[i] += std::min(1.0, std::max(0.0, value));
      return;
    }
  }
}

std::uint64_t BanditState::plays(int arm) const {
  for (size_t i = 0; i < arms_.size(); ++i)
    if (arms_[i] == arm) return count_[i];
  return 0;
}

bool adaptive_stop(const WorkloadConfig& w, double h_max,
                   const std::vector<double>& entropies, int bandit_target) {
  const int len = static_cast<int>(entropies.size());
  if (len >= w.max_draft_len) return true;
  const double h_last = entropies.back();
  switch (w.algorithm) {
    case DraftAlgorithm::SpecDecPP: {
      // Stop when the estimated probability that the batch already contains
      // a rejection exceeds theta.
      double all_accept = 1.0;
      for (double h : entropies)
        all_accept *= clamp01(1.0 - w.accept_slope * h / h_max);
      return 1.0 - all_accept > w.threshold;
    }
    case DraftAlgorithm::Svip:
      return h_last > w.threshold * h_max;
    case DraftAlgorithm::AdaEdl:
      return 1.0 - std::sqrt(std::min(1.0, h_last / h_max)) < w.threshold;
    case DraftAlgorithm::BanditSpec:
      return len >= std::min(bandit_target, w.max_draft_len);
  }
  return true;
}

Workload::Workload(const ExperimentConfig& cfg)
    : w_(cfg.workload),
      h_max_(cfg.model.h_max),
      seed_(cfg.seed),
      rng_(mix64(cfg.seed ^ 0x5EEDF00D)),
      bandit_() {
  if (!w_.trace_path.empty()) {
    trace_ = ingest_trace_file(w_.trace_path);
    replay_ = true;
  }
}

Workload::Workload(const ExperimentConfig& cfg, std::vector<TraceRecord> trace)
    : w_(cfg.workload),
      h_max_(cfg.model.h_max),
      seed_(cfg.seed),
      rng_(mix64(cfg.seed ^ 0x5EEDF00D)),
      replay_(true),
      trace_(std::move(trace)),
      bandit_() {}

double Workload::next_entropy(std::uint64_t position) {
  if (replay_) {
    if (position >= trace_.size())
      throw SimError("trace ends at step " + std::to_string(trace_.size()) +
                     " but position " + std::to_string(position) +
                     " was drafted; provide a longer trace");
    return trace_[position].entropy;
  }
  difficulty_ = next_difficulty(difficulty_, w_.difficulty_walk_step, rng_);
  return draft_entropy(difficulty_, h_max_, w_.entropy_noise_sd, rng_);
}

bool Workload::token_accepted(double entropy, int lookahead_depth,
                              std::uint64_t batch_id,
                              std::uint64_t position) const {
  double p;
  if (replay_) {
    const bool flag =
        position < trace_.size() ? trace_[position].accepted : false;
    p = (flag ? 1.0 : 0.0) *
        std::pow(w_.lookahead_decay, lookahead_depth);
  } else {
    p = acceptance_probability(w_, h_max_, entropy, lookahead_depth);
  }
  return keyed_unit(seed_ ^ kAcceptDomain, batch_id, position) < p;
}

int Workload::begin_batch() {
  if (w_.algorithm == DraftAlgorithm::BanditSpec) return bandit_.choose();
  return 0;
}

bool Workload::should_stop(const std::vector<double>& entropies,
                           int bandit_target) const {
  return adaptive_stop(w_, h_max_, entropies, bandit_target);
}

void Workload::batch_outcome(int chosen_arm, int accepted_tokens) {
  if (w_.algorithm != DraftAlgorithm::BanditSpec || chosen_arm <= 0) return;
  bandit_.reward(chosen_arm, static_cast<double>(accepted_tokens) /
                                 static_cast<double>(chosen_arm));
}

std::vector<TraceRecord> Workload::synthesize_trace(
    const ExperimentConfig& cfg, std::uint64_t length) {
  ExperimentConfig local = cfg;
  local.workload.trace_path.clear();
  Workload w(local);
  std::vector<TraceRecord> out;
  out.reserve(length);
  for (std::uint64_t pos = 0; pos < length; ++pos) {
    TraceRecord r;
    r.step_index = pos;
    r.entropy = w.next_entropy(pos);
    // Depth-zero acceptance coin; batch id 0 marks the synthetic export.
    r.accepted = w.token_accepted(r.entropy, 0, 0, pos);
    out.push_back(r);
  }
  return out;
}

}  // namespace specsim
