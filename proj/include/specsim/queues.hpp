// SPDX-FileCopyrightText: © 2026 The specsim authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "specsim/config.hpp"

namespace specsim {

enum class BatchStatus {
  Unverified,
  PreverifiedAccepted,  // fully accepted by pre-verification, commit pending
  Committed,
  Rejected,
  Purged,
};

const char* to_string(BatchStatus s);

enum class FeedbackSource { Npu, Preverify };

struct DraftBatch {
  std::uint64_t batch_id = 0;  // strictly monotone across a run
  std::vector<std::uint64_t> tokens;  // token ids; id == global position
  std::vector<double> entropies;
  double avg_entropy = 0;  // arithmetic mean of entropies at draft time
  std::uint64_t base_kv_len = 0;  // speculative prefix before first token
  int lookahead_depth_at_creation = 0;
  std::uint32_t pht_index_snapshot = 0;
  int entropy_bucket = 0;  // bucket of the original draft-time mean entropy
  BatchStatus status = BatchStatus::Unverified;
  std::uint64_t draft_cycles = 0;  // PIM cycles spent drafting (waste audit)

  int len() const { return static_cast<int>(tokens.size()); }
};

struct FeedbackRecord {
  std::uint64_t batch_id = 0;
  FeedbackSource source = FeedbackSource::Npu;
  int examined_len = 0;         // leading tokens actually verified
  int accepted_prefix_len = 0;  // accepted among the examined prefix
  bool fully_accepted = false;  // the whole batch is accepted
  bool has_correction = false;  // rejection carries the corrected token
  std::uint64_t correction_token = 0;
};

struct ApplyResult {
  std::uint64_t committed_draft_tokens = 0;
  std::uint64_t committed_corrections = 0;
  std::uint64_t rejected_tokens = 0;
  std::uint64_t purged_tokens = 0;
  std::uint64_t purged_batches = 0;  // victims that never received a verdict
  std::uint64_t purged_draft_cycles = 0;  // device time wasted on purged work
  bool rollback = false;
  std::vector<std::uint64_t> purged_batch_ids;
};

// Running totals for the conservation audit: every pushed token must end in
// exactly one of the terminal buckets.
struct QueueCounters {
  std::uint64_t pushed_tokens = 0;
  std::uint64_t committed_draft_tokens = 0;
  std::uint64_t committed_corrections = 0;
  std::uint64_t rejected_tokens = 0;
  std::uint64_t purged_tokens = 0;
};

// The three cross-device queues: the unverified-draft FIFO, the verification
// feedback path (apply_feedback is the receiving end), and the
// pre-verification mark FIFO. Also owns the committed token sequence, so
// rollback can never corrupt the output without failing the audit.
class QueueSet {
 public:
  explicit QueueSet(std::uint64_t capacity = 0) : capacity_(capacity) {}

  bool full() const {
    return capacity_ != 0 && pending_.size() >= capacity_;
  }

  // Batch ids must be strictly increasing; the batch must be unverified.
  void push_draft(DraftBatch batch);

  // Commits any resolved leading batches, then removes and returns up to
  // max_batches oldest unverified batches for verification. An oldest batch
  // that is marked for pre-verification blocks popping until it resolves.
  std::vector<std::uint64_t> pop_for_verify(int max_batches);

  // Terminal feedback (NPU verification, or pre-verification that either
  // rejected or covered the whole batch). Partial pre-verification of a
  // strict prefix splits the batch instead: the accepted run commits once
  // every older batch has resolved, and the remainder stays unverified.
  ApplyResult apply_feedback(const FeedbackRecord& r);

  void mark_for_preverify(std::uint64_t batch_id);
  bool marked_for_preverify(std::uint64_t batch_id) const;

  const DraftBatch* find(std::uint64_t batch_id) const;  // live batches only
  // Oldest batch awaiting verification that is still in the pending FIFO.
  std::optional<std::uint64_t> oldest_pending_unverified() const;
  bool head_blocked_by_preverify() const;

  int unverified_count() const;  // live batches still awaiting a verdict
  std::uint64_t speculative_len() const;  // next free global position

  std::uint64_t committed_len() const { return committed_len_; }
  const std::vector<std::uint64_t>& committed_tokens() const {
    return committed_;
  }
  const QueueCounters& counters() const { return counters_; }
  std::uint64_t live_tokens() const;
  std::size_t pending_size() const { return pending_.size(); }
  std::size_t inflight_size() const { return inflight_.size(); }

  // Structural self-check: live batches and pending runs tile the
  // speculative suffix contiguously, FIFO ids are ordered, and every
  // pre-verification mark references a live unverified batch.
  void check_invariants() const;

 private:
  struct PendingRun {  // pre-verified prefix split off an unresolved chain
    std::uint64_t from_pos;
    std::vector<std::uint64_t> tokens;
    std::uint64_t origin_batch;
  };

  struct Resolution {
    int accepted_prefix = 0;
    bool fully_accepted = false;
    bool has_correction = false;
    std::uint64_t correction_token = 0;
  };

  struct Live {
    DraftBatch batch;
    bool inflight = false;  // popped for NPU verification
    std::optional<Resolution> resolution;
  };

  static std::uint64_t effective_span(const Live& live);
  Live* find_live(std::uint64_t batch_id);
  void purge_younger(std::uint64_t batch_id, ApplyResult& res);
  void sweep(ApplyResult& res);
  void finalize_head(Live& head, ApplyResult& res);

  std::uint64_t capacity_ = 0;
  std::uint64_t committed_len_ = 0;
  std::vector<std::uint64_t> committed_;
  std::map<std::uint64_t, Live> live_;       // batch_id -> state
  std::deque<std::uint64_t> pending_;        // awaiting pop, id order
  std::deque<std::uint64_t> inflight_;       // popped, id order
  std::deque<std::uint64_t> preverify_;      // marked batch ids, id order
  std::vector<PendingRun> pending_runs_;     // position order
  QueueCounters counters_;
  std::uint64_t last_id_ = 0;
  bool any_push_ = false;
};

}  // namespace specsim
