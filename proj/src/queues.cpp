// SPDX-FileCopyrightText: © 2026 The specsim authors
// SPDX-License-Identifier: Apache-2.0
#include "specsim/queues.hpp"

#include <algorithm>
#include <string>

namespace specsim {
namespace {

[[noreturn]] void violate(const std::string& what) {
  throw SimError("queue invariant violated: " + what);
}

}  // namespace

const char* to_string(BatchStatus s) {
  switch (s) {
    case BatchStatus::Unverified: return "unverified";
    case BatchStatus::PreverifiedAccepted: return "preverified_accepted";
    case BatchStatus::Committed: return "committed";
    case BatchStatus::Rejected: return "rejected";
    case BatchStatus::Purged: return "purged";
  }
  return "?";
}

void QueueSet::push_draft(DraftBatch batch) {
  if (batch.status != BatchStatus::Unverified) violate("push of non-unverified batch");
  if (batch.tokens.empty()) violate("push of empty batch");
  if (batch.entropies.size() != batch.tokens.size())
    violate("entropy count does not match token count");
  if (any_push_ && batch.batch_id <= last_id_)
    violate("batch ids must be strictly increasing");
  if (full()) violate("push into full queue");
  if (batch.base_kv_len != speculative_len())
    violate("batch base " + std::to_string(batch.base_kv_len) +
            " does not extend speculative prefix " +
            std::to_string(speculative_len()));
  last_id_ = batch.batch_id;
  any_push_ = true;
  counters_.pushed_tokens += static_cast<std::uint64_t>(batch.len());
  const std::uint64_t id = batch.batch_id;
  pending_.push_back(id);
  live_.emplace(id, Live{std::move(batch), false, std::nullopt});
}

std::vector<std::uint64_t> QueueSet::pop_for_verify(int max_batches) {
  ApplyResult scratch;
  sweep(scratch);  // commit any resolved leading batches in place
  std::vector<std::uint64_t> out;
  while (static_cast<int>(out.size()) < max_batches && !pending_.empty()) {
    const std::uint64_t id = pending_.front();
    if (marked_for_preverify(id)) break;  // wait for pre-verification
    Live* live = find_live(id);
    if (live == nullptr) violate("pending id without live batch");
    if (live->batch.status != BatchStatus::Unverified) break;
    pending_.pop_front();
    live->inflight = true;
    inflight_.push_back(id);
    out.push_back(id);
  }
  return out;
}

ApplyResult QueueSet::apply_feedback(const FeedbackRecord& r) {
  ApplyResult res;
  Live* live = find_live(r.batch_id);
  if (live == nullptr) violate("feedback for unknown batch " + std::to_string(r.batch_id));
  DraftBatch& b = live->batch;
  if (b.status != BatchStatus::Unverified) violate("feedback for resolved batch");
  if (r.examined_len <= 0 || r.examined_len > b.len())
    violate("feedback examined length out of range");
  if (r.accepted_prefix_len < 0 || r.accepted_prefix_len > r.examined_len)
    violate("accepted prefix exceeds examined length");
  if (r.source == FeedbackSource::Npu) {
    if (!live->inflight) violate("device feedback for batch not under verification");
    if (r.examined_len != b.len()) violate("device verification must cover the batch");
  } else {
    if (live->inflight) violate("pre-verification of a batch under device verification");
    if (!marked_for_preverify(r.batch_id)) violate("pre-verification without mark");
    preverify_.erase(std::find(preverify_.begin(), preverify_.end(), r.batch_id));
  }

  const bool rejected = r.accepted_prefix_len < r.examined_len;
  if (rejected && !r.has_correction) violate("rejection without correction token");
  if (!rejected && r.has_correction) violate("correction token on acceptance");

  if (!rejected && r.examined_len < b.len()) {
    // Accepted strict prefix from pre-verification: split it off as a
    // pending run and leave the remainder unverified.
    if (r.fully_accepted) violate("full acceptance with partial coverage");
    PendingRun run;
    run.from_pos = b.base_kv_len;
    run.origin_batch = b.batch_id;
    run.tokens.assign(b.tokens.begin(), b.tokens.begin() + r.examined_len);
    b.tokens.erase(b.tokens.begin(), b.tokens.begin() + r.examined_len);
    b.entropies.erase(b.entropies.begin(), b.entropies.begin() + r.examined_len);
    b.base_kv_len += static_cast<std::uint64_t>(r.examined_len);
    pending_runs_.push_back(std::move(run));
    sweep(res);
    return res;
  }

  // Terminal resolution.
  if (r.fully_accepted != !rejected) violate("full-acceptance flag inconsistent with prefix");
  Resolution sol;
  sol.accepted_prefix = r.accepted_prefix_len;
  sol.fully_accepted = r.fully_accepted;
  sol.has_correction = r.has_correction;
  sol.correction_token = r.correction_token;
  live->resolution = sol;
  if (r.fully_accepted && r.source == FeedbackSource::Preverify)
    b.status = BatchStatus::PreverifiedAccepted;
  if (rejected) {
    // Terminal immediately, even though the commit of the surviving prefix
    // waits until every older batch resolves: nothing may re-verify, re-mark,
    // or draft on top of the rejected tail in the meantime. The device hands
    // the batch back; it keeps custody of its tokens in the pending FIFO
    // until the commit sweep reaches it.
    b.status = BatchStatus::Rejected;
    res.rollback = true;
    purge_younger(r.batch_id, res);
    if (live->inflight) {
      live->inflight = false;
      inflight_.erase(
          std::find(inflight_.begin(), inflight_.end(), r.batch_id));
      pending_.push_front(r.batch_id);
    }
  }
  sweep(res);
  return res;
}

void QueueSet::mark_for_preverify(std::uint64_t batch_id) {
  Live* live = find_live(batch_id);
  if (live == nullptr) violate("pre-verify mark for unknown batch");
  if (live->inflight) violate("pre-verify mark for batch under device verification");
  if (live->batch.status != BatchStatus::Unverified)
    violate("pre-verify mark for resolved batch");
  if (marked_for_preverify(batch_id)) violate("duplicate pre-verify mark");
  preverify_.push_back(batch_id);
}

bool QueueSet::marked_for_preverify(std::uint64_t batch_id) const {
  return std::find(preverify_.begin(), preverify_.end(), batch_id) != preverify_.end();
}

const DraftBatch* QueueSet::find(std::uint64_t batch_id) const {
  auto it = live_.find(batch_id);
  return it == live_.end() ? nullptr : &it->second.batch;
}

std::optional<std::uint64_t> QueueSet::oldest_pending_unverified() const {
  for (std::uint64_t id : pending_) {
    auto it = live_.find(id);
    if (it != live_.end() && it->second.batch.status == BatchStatus::Unverified)
      return id;
  }
  return std::nullopt;
}

bool QueueSet::head_blocked_by_preverify() const {
  return !pending_.empty() && marked_for_preverify(pending_.front());
}

int QueueSet::unverified_count() const {
  int n = 0;
  for (const auto& [id, live] : live_)
    // A batch whose device verdict is recorded but not yet committed is no
    // longer awaiting verification; it must not count against the
    // controller's in-flight register.
    if (live.batch.status == BatchStatus::Unverified && !live.resolution) ++n;
  return n;
}

// Span a live batch contributes to the speculative sequence. A batch already
// resolved as rejected keeps custody of all its tokens until finalize, but
// only the accepted prefix plus the correction extend the frontier.
std::uint64_t QueueSet::effective_span(const Live& live) {
  if (live.batch.status == BatchStatus::Rejected && live.resolution)
    return static_cast<std::uint64_t>(live.resolution->accepted_prefix) +
           (live.resolution->has_correction ? 1 : 0);
  return static_cast<std::uint64_t>(live.batch.len());
}

std::uint64_t QueueSet::speculative_len() const {
  std::uint64_t n = committed_len_;
  for (const auto& run : pending_runs_) n += run.tokens.size();
  for (const auto& [id, live] : live_) n += effective_span(live);
  return n;
}

std::uint64_t QueueSet::live_tokens() const {
  std::uint64_t n = 0;
  for (const auto& run : pending_runs_) n += run.tokens.size();
  for (const auto& [id, live] : live_)
    n += static_cast<std::uint64_t>(live.batch.len());
  return n;
}

QueueSet::Live* QueueSet::find_live(std::uint64_t batch_id) {
  auto it = live_.find(batch_id);
  return it == live_.end() ? nullptr : &it->second;
}

void QueueSet::purge_younger(std::uint64_t batch_id, ApplyResult& res) {
  Live* self = find_live(batch_id);
  const std::uint64_t cut =
      self->batch.base_kv_len +
      static_cast<std::uint64_t>(self->resolution->accepted_prefix);
  std::vector<std::uint64_t> victims;
  for (const auto& [id, live] : live_)
    if (id > batch_id) victims.push_back(id);
  for (std::uint64_t id : victims) {
    Live& live = live_.find(id)->second;
    const std::uint64_t n = static_cast<std::uint64_t>(live.batch.len());
    counters_.purged_tokens += n;
    res.purged_tokens += n;
    // A victim that already carries a verdict was reported to the caller
    // when that verdict arrived; count as purged only the batches that die
    // unheard so each batch surfaces in exactly one outcome tally.
    if (!live.resolution) res.purged_batches += 1;
    res.purged_draft_cycles += live.batch.draft_cycles;
    res.purged_batch_ids.push_back(id);
    auto drop = [id](std::deque<std::uint64_t>& q) {
      auto it = std::find(q.begin(), q.end(), id);
      if (it != q.end()) q.erase(it);
    };
    drop(pending_);
    drop(inflight_);
    drop(preverify_);
    live_.erase(id);
  }
  // Pre-verified runs past the rejection point are invalid too.
  auto it = pending_runs_.begin();
  while (it != pending_runs_.end()) {
    if (it->from_pos >= cut) {
      const std::uint64_t n = it->tokens.size();
      counters_.purged_tokens += n;
      res.purged_tokens += n;
      it = pending_runs_.erase(it);
    } else {
      ++it;
    }
  }
}

void QueueSet::finalize_head(Live& head, ApplyResult& res) {
  DraftBatch& b = head.batch;
  const Resolution& sol = *head.resolution;
  for (int i = 0; i < sol.accepted_prefix; ++i) committed_.push_back(b.tokens[i]);
  committed_len_ += static_cast<std::uint64_t>(sol.accepted_prefix);
  counters_.committed_draft_tokens += static_cast<std::uint64_t>(sol.accepted_prefix);
  res.committed_draft_tokens += static_cast<std::uint64_t>(sol.accepted_prefix);
  if (sol.fully_accepted) {
    b.status = BatchStatus::Committed;
  } else {
    const std::uint64_t tail =
        static_cast<std::uint64_t>(b.len() - sol.accepted_prefix);
    counters_.rejected_tokens += tail;
    res.rejected_tokens += tail;
    if (sol.has_correction) {
      committed_.push_back(sol.correction_token);
      committed_len_ += 1;
      counters_.committed_corrections += 1;
      res.committed_corrections += 1;
    }
    b.status = BatchStatus::Rejected;
  }
  auto drop = [&](std::deque<std::uint64_t>& q) {
    auto it = std::find(q.begin(), q.end(), b.batch_id);
    if (it != q.end()) q.erase(it);
  };
  drop(pending_);
  drop(inflight_);
  if (marked_for_preverify(b.batch_id)) violate("finalize of a marked batch");
  live_.erase(b.batch_id);
}

void QueueSet::sweep(ApplyResult& res) {
  for (;;) {
    if (!pending_runs_.empty() &&
        pending_runs_.front().from_pos == committed_len_) {
      PendingRun& run = pending_runs_.front();
      for (std::uint64_t tok : run.tokens) committed_.push_back(tok);
      const std::uint64_t n = run.tokens.size();
      committed_len_ += n;
      counters_.committed_draft_tokens += n;
      res.committed_draft_tokens += n;
      pending_runs_.erase(pending_runs_.begin());
      continue;
    }
    if (!live_.empty()) {
      Live& head = live_.begin()->second;
      if (head.resolution.has_value() &&
          head.batch.base_kv_len == committed_len_) {
        finalize_head(head, res);
        continue;
      }
    }
    break;
  }
}

void QueueSet::check_invariants() const {
  auto increasing = [](const std::deque<std::uint64_t>& q) {
    for (std::size_t i = 1; i < q.size(); ++i)
      if (q[i - 1] >= q[i]) return false;
    return true;
  };
  if (!increasing(pending_)) violate("pending FIFO out of order");
  if (!increasing(inflight_)) violate("inflight list out of order");
  if (!inflight_.empty() && !pending_.empty() &&
      inflight_.back() >= pending_.front())
    violate("batch under verification is younger than a pending batch");
  for (std::uint64_t id : preverify_) {
    auto it = live_.find(id);
    if (it == live_.end()) violate("pre-verify mark for dead batch");
    if (it->second.batch.status != BatchStatus::Unverified)
      violate("pre-verify mark for resolved batch");
    if (it->second.inflight) violate("pre-verify mark for inflight batch");
    if (std::find(pending_.begin(), pending_.end(), id) == pending_.end())
      violate("pre-verify mark for batch outside pending FIFO");
  }
  for (const auto& [id, live] : live_) {
    const bool queued =
        std::find(pending_.begin(), pending_.end(), id) != pending_.end();
    const bool inflight =
        std::find(inflight_.begin(), inflight_.end(), id) != inflight_.end();
    if (queued == inflight) violate("live batch must be pending xor inflight");
    if (inflight != live.inflight) violate("inflight flag out of sync");
    if (live.batch.status == BatchStatus::PreverifiedAccepted &&
        !(live.resolution && live.resolution->fully_accepted))
      violate("pre-verified acceptance without resolution");
    if (live.batch.status == BatchStatus::Rejected &&
        !(live.resolution && !live.resolution->fully_accepted &&
          !live.inflight))
      violate("rejected batch live without a deferred resolution");
    if (live.batch.status == BatchStatus::Purged ||
        live.batch.status == BatchStatus::Committed)
      violate("terminal batch still live");
  }
  // The committed prefix, pending runs, and live batches must tile the
  // speculative sequence contiguously.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> spans;  // pos, len
  for (const auto& run : pending_runs_)
    spans.emplace_back(run.from_pos, run.tokens.size());
  for (const auto& [id, live] : live_)
    spans.emplace_back(live.batch.base_kv_len, effective_span(live));
  std::sort(spans.begin(), spans.end());
  std::uint64_t pos = committed_len_;
  for (const auto& [start, len] : spans) {
    if (start != pos)
      violate("speculative gap at position " + std::to_string(pos));
    pos += len;
  }
  if (committed_.size() != committed_len_) violate("committed length out of sync");
  const std::uint64_t accounted = counters_.committed_draft_tokens +
                                  counters_.rejected_tokens +
                                  counters_.purged_tokens + live_tokens();
  if (accounted != counters_.pushed_tokens)
    violate("token conservation broken: pushed " +
            std::to_string(counters_.pushed_tokens) + " accounted " +
            std::to_string(accounted));
}

}  // namespace specsim
