// SPDX-FileCopyrightText: © 2026 The specsim authors
// SPDX-License-Identifier: Apache-2.0
#include "specsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>
#include <string>

#include <nlohmann/json.hpp>

#include "specsim/edc.hpp"
#include "specsim/queues.hpp"
#include "specsim/timing.hpp"
#include "specsim/tvc.hpp"
#include "specsim/workload.hpp"

namespace specsim {
namespace {

using Json = nlohmann::ordered_json;

double cycles_between(std::uint64_t from_ps, std::uint64_t to_ps,
                      double freq_hz) {
  return static_cast<double>(to_ps - from_ps) * freq_hz * 1.0e-12;
}

// Activity accrual for one device: every state change charges the elapsed
// span to the bucket that was active. starved is also counted into idle.
struct DeviceClock {
  enum class Tag { Idle, Busy, Starved };

  double freq_hz = 1.0;
  std::uint64_t last_ps = 0;
  Tag tag = Tag::Idle;
  bool starved_on_controller = false;
  DeviceMetrics* m = nullptr;
  double controller_wait_cycles = 0.0;

  void accrue(std::uint64_t now_ps) {
    const double c = cycles_between(last_ps, now_ps, freq_hz);
    last_ps = now_ps;
    if (c <= 0.0) return;
    switch (tag) {
      case Tag::Busy:
        m->busy_cycles += c;
        break;
      case Tag::Starved:
        m->idle_cycles += c;
        m->starved_cycles += c;
        if (starved_on_controller) controller_wait_cycles += c;
        break;
      case Tag::Idle:
        m->idle_cycles += c;
        break;
    }
  }

  void set(std::uint64_t now_ps, Tag t, bool controller = false) {
    accrue(now_ps);
    tag = t;
    starved_on_controller = (t == Tag::Starved) && controller;
  }
};

enum class EventType : int {
  // Enum order is the tie-break priority at equal timestamps.
  DraftArrival = 0,
  FeedbackArrival = 1,
  DraftDone = 2,
  VerifyDone = 3,
  PreverifyDone = 4,
};

struct Event {
  std::uint64_t t_ps = 0;
  EventType type = EventType::DraftArrival;
  std::uint64_t seq = 0;

  DraftBatch batch;            // DraftDone / DraftArrival
  std::uint64_t epoch = 0;     // rollback epoch the draft was built against
  std::vector<FeedbackRecord> records;  // FeedbackArrival
  std::vector<std::uint64_t> verify_ids;  // VerifyDone
  bool has_observation = false;  // cycle sample riding with the feedback
  bool observation_is_preverify = false;
  double observed_cycles = 0.0;
  int observed_len = 0;
  std::uint64_t pv_target = 0;  // PreverifyDone
  int pv_len = 0;
  double pv_cycles = 0.0;
};

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    if (a.t_ps != b.t_ps) return a.t_ps > b.t_ps;
    if (a.type != b.type) return static_cast<int>(a.type) > static_cast<int>(b.type);
    return a.seq > b.seq;
  }
};

// Event-driven simulation of the drafting device (PIM) and verification
// device (NPU) coupled by the message queues.
class AsyncEngine {
 public:
  AsyncEngine(const ExperimentConfig& cfg, bool capture)
      : cfg_(cfg),
        npu_p_(npu_params(cfg.hardware)),
        pim_p_(pim_params(cfg.hardware)),
        queues_(cfg.policy.queue_capacity),
        tvc_(cfg.hardware.pim_freq_hz / cfg.hardware.npu_freq_hz),
        workload_(cfg),
        capture_(capture) {
    aau_on_ = cfg.variant != Variant::Async && cfg.hardware.aau_enabled;
    edc_gated_ = cfg.variant == Variant::AsyncAauEdc || cfg.variant == Variant::Full;
    tvc_on_ = cfg.variant == Variant::Full;
    transfer_ps_ =
        cycles_to_ps(cfg.hardware.queue_transfer_cycles, cfg.hardware.npu_freq_hz);
    npu_clock_.freq_hz = cfg.hardware.npu_freq_hz;
    npu_clock_.m = &result_.metrics.npu;
    pim_clock_.freq_hz = cfg.hardware.pim_freq_hz;
    pim_clock_.m = &result_.metrics.pim;
    if (tvc_on_) {
      // Profiling seed: one reference pre-verification pass costed offline,
      // so the first insertion has a (conservative) per-token ratio.
      const OpCost probe = pim_preverify_cycles(
          pim_p_, cfg.model, 1, 0, cfg.hardware.gtsu_switch_cycles);
      tvc_.observe_preverify(static_cast<double>(probe.cycles), 1);
    }
  }

  RunResult run() {
    schedule(0);
    std::uint64_t now = 0;
    while (!done_) {
      if (heap_.empty())
        throw SimError("simulation stalled: no events and generation incomplete");
      Event e = heap_.top();
      heap_.pop();
      if (++events_ > cfg_.policy.event_cap)
        throw SimError("event budget exceeded");
      now = e.t_ps;
      accrue_depth(now);
      handle(e);
      if (queues_.committed_len() >= cfg_.generation_length) {
        done_ = true;
        break;
      }
      schedule(now);
      if (queues_.committed_len() >= cfg_.generation_length) {
        done_ = true;
        break;
      }
    }
    finalize(now);
    return std::move(result_);
  }

 private:
  void trace(std::uint64_t t, const char* kind, Json fields) {
    if (!capture_) return;
    Json j;
    j["t_ps"] = t;
    j["event"] = kind;
    j.update(fields);
    result_.event_trace.push_back(j.dump());
  }

  void accrue_depth(std::uint64_t now) {
    depth_area_ += static_cast<double>(queues_.pending_size()) *
                   static_cast<double>(now - depth_last_ps_);
    depth_last_ps_ = now;
  }

  void push_event(Event e) {
    e.seq = ++seq_;
    heap_.push(std::move(e));
  }

  void add_op_energy(DeviceMetrics& dev, const OpCost& op) {
    dev.ops_executed += 1;
    dev.compute_energy_pj += op.compute_energy_pj;
    dev.background_busy_pj += op.background_energy_pj;
    result_.metrics.energy.dram_pj += op.dram_energy_pj;
    result_.metrics.energy.offchip_pj += op.offchip_energy_pj;
    result_.metrics.energy.aau_pj += op.aau_energy_pj;
  }

  void handle(Event& e) {
    switch (e.type) {
      case EventType::DraftDone: {
        pim_clock_.set(e.t_ps, DeviceClock::Tag::Idle);
        pim_busy_ = false;
        if (tvc_on_)
          tvc_.observe_draft(static_cast<double>(e.batch.draft_cycles),
                             e.batch.len());
        if (e.epoch != rollback_epoch_) {
          discard_draft(e.batch, e.t_ps);
          break;
        }
        trace(e.t_ps, "draft_done",
              {{"batch", e.batch.batch_id},
               {"len", e.batch.len()},
               {"cycles", e.batch.draft_cycles}});
        Event arrival;
        arrival.t_ps = e.t_ps + transfer_ps_;
        arrival.type = EventType::DraftArrival;
        arrival.batch = std::move(e.batch);
        arrival.epoch = e.epoch;
        push_event(std::move(arrival));
        pim_transfer_wait_ = true;
        break;
      }
      case EventType::DraftArrival: {
        pim_transfer_wait_ = false;
        if (e.epoch != rollback_epoch_) {
          discard_draft(e.batch, e.t_ps);
          break;
        }
        e.batch.pht_index_snapshot = edc_.on_draft(e.batch.entropy_bucket);
        trace(e.t_ps, "draft_arrival",
              {{"batch", e.batch.batch_id},
               {"len", e.batch.len()},
               {"base", e.batch.base_kv_len}});
        queues_.push_draft(std::move(e.batch));
        result_.metrics.max_queue_depth =
            std::max(result_.metrics.max_queue_depth,
                     static_cast<std::uint64_t>(queues_.pending_size()));
        break;
      }
      case EventType::VerifyDone: {
        npu_clock_.set(e.t_ps, DeviceClock::Tag::Idle);
        npu_busy_ = false;
        verify_iterations_ += 1;
        Event fb;
        fb.t_ps = e.t_ps + transfer_ps_;
        fb.type = EventType::FeedbackArrival;
        fb.has_observation = true;
        fb.observed_cycles = current_verify_cycles_;
        fb.observed_len = current_verify_len_;
        for (std::uint64_t id : e.verify_ids) {
          const DraftBatch* b = queues_.find(id);
          if (b == nullptr) throw SimError("verified batch vanished");
          FeedbackRecord rec = judge(*b, b->len());
          const bool rejected = !rec.fully_accepted;
          fb.records.push_back(rec);
          if (rejected) break;  // younger popped batches die in the purge
        }
        trace(e.t_ps, "verify_done",
              {{"batches", e.verify_ids.size()},
               {"len", current_verify_len_},
               {"cycles", current_verify_cycles_}});
        feedback_in_transit_ += 1;
        push_event(std::move(fb));
        break;
      }
      case EventType::PreverifyDone: {
        pim_clock_.set(e.t_ps, DeviceClock::Tag::Idle);
        pim_busy_ = false;
        const DraftBatch* b = queues_.find(e.pv_target);
        if (b == nullptr || !queues_.marked_for_preverify(e.pv_target)) {
          trace(e.t_ps, "preverify_discarded", {{"batch", e.pv_target}});
          break;  // target purged while the pass ran
        }
        Event fb;
        fb.t_ps = e.t_ps + transfer_ps_;
        fb.type = EventType::FeedbackArrival;
        fb.has_observation = true;
        fb.observation_is_preverify = true;
        fb.observed_cycles = e.pv_cycles;
        fb.observed_len = e.pv_len;
        FeedbackRecord rec = judge(*b, e.pv_len);
        rec.source = FeedbackSource::Preverify;
        fb.records.push_back(rec);
        trace(e.t_ps, "preverify_done",
              {{"batch", e.pv_target},
               {"len", e.pv_len},
               {"cycles", e.pv_cycles}});
        feedback_in_transit_ += 1;
        pim_transfer_wait_ = true;
        push_event(std::move(fb));
        break;
      }
      case EventType::FeedbackArrival: {
        feedback_in_transit_ -= 1;
        if (e.has_observation && tvc_on_) {
          if (e.observation_is_preverify)
            tvc_.observe_preverify(e.observed_cycles, e.observed_len);
          else
            tvc_.observe_npu_verify(e.observed_cycles, e.observed_len);
        }
        if (e.observation_is_preverify) pim_transfer_wait_ = false;
        for (const FeedbackRecord& rec : e.records) {
          const DraftBatch* b = queues_.find(rec.batch_id);
          if (b == nullptr) continue;  // purged by an earlier record
          apply_record(rec, *b, e.t_ps);
        }
        break;
      }
    }
  }

  // Verification outcome for the first examined tokens of a batch. Outcome
  // coins are keyed by (batch id, position), so the same tokens resolve the
  // same way on either device and in any order.
  FeedbackRecord judge(const DraftBatch& b, int examined) {
    FeedbackRecord rec;
    rec.batch_id = b.batch_id;
    rec.examined_len = examined;
    int prefix = 0;
    while (prefix < examined) {
      const std::uint64_t pos = b.tokens[static_cast<std::size_t>(prefix)];
      const double H = b.entropies[static_cast<std::size_t>(prefix)];
      if (!workload_.token_accepted(H, b.lookahead_depth_at_creation,
                                    b.batch_id, pos))
        break;
      ++prefix;
    }
    rec.accepted_prefix_len = prefix;
    if (prefix < examined) {
      rec.has_correction = true;
      rec.correction_token = workload_.oracle_token(
          b.tokens[static_cast<std::size_t>(prefix)]);
    } else {
      rec.fully_accepted = (examined == b.len());
    }
    return rec;
  }

  void apply_record(const FeedbackRecord& r, const DraftBatch& before,
                    std::uint64_t now) {
    const std::uint32_t snapshot = before.pht_index_snapshot;
    const int bucket = before.entropy_bucket;
    const int full_len = before.len();
    const ApplyResult res = queues_.apply_feedback(r);
    queues_.check_invariants();
    result_.metrics.feedback_records += 1;
    const bool rejected = r.accepted_prefix_len < r.examined_len;
    const bool partial = !rejected && r.examined_len < full_len;
    if (partial) {
      trace(now, "feedback",
            {{"batch", r.batch_id},
             {"outcome", "preverified_prefix"},
             {"accepted", r.examined_len}});
    } else if (r.fully_accepted) {
      edc_.on_full_accept(snapshot, bucket);
      result_.metrics.batches_fully_accepted += 1;
      finish_bandit(r.batch_id, full_len);
      trace(now, "feedback",
            {{"batch", r.batch_id},
             {"outcome", "accepted"},
             {"accepted", full_len}});
    } else {
      edc_.on_reject(snapshot, queues_.unverified_count());
      result_.metrics.batches_rejected += 1;
      if (r.source == FeedbackSource::Preverify)
        result_.metrics.preverify_rejections += 1;
      rollback_epoch_ += 1;
      next_position_ = queues_.speculative_len();
      finish_bandit(r.batch_id, r.accepted_prefix_len);
      wasted_pim_cycles_ += static_cast<double>(res.purged_draft_cycles);
      trace(now, "feedback",
            {{"batch", r.batch_id},
             {"outcome", "rejected"},
             {"accepted", r.accepted_prefix_len},
             {"purged_batches", res.purged_batch_ids},
             {"purged_cycles", res.purged_draft_cycles}});
    }
    result_.metrics.batches_purged += res.purged_batches;
    for (std::uint64_t id : res.purged_batch_ids) arms_.erase(id);
  }

  void finish_bandit(std::uint64_t batch_id, int accepted) {
    auto it = arms_.find(batch_id);
    if (it == arms_.end()) return;
    workload_.batch_outcome(it->second, accepted);
    arms_.erase(it);
  }

  void discard_draft(const DraftBatch& b, std::uint64_t now) {
    result_.metrics.discarded_inflight_tokens +=
        static_cast<std::uint64_t>(b.len());
    result_.metrics.batches_discarded_inflight += 1;
    wasted_pim_cycles_ += static_cast<double>(b.draft_cycles);
    arms_.erase(b.batch_id);
    trace(now, "draft_discarded",
          {{"batch", b.batch_id}, {"cycles", b.draft_cycles}});
  }

  bool pim_free() const { return !pim_busy_ && !pim_transfer_wait_; }

  bool queue_full() const {
    return cfg_.policy.queue_capacity != 0 &&
           queues_.pending_size() >= cfg_.policy.queue_capacity;
  }

  void schedule(std::uint64_t now) {
    // Verifier first, so a pre-verification sized in the same instant sees
    // the freshly opened verification window.
    if (!npu_busy_) {
      if (feedback_in_transit_ == 0) {
        std::vector<std::uint64_t> ids =
            queues_.pop_for_verify(cfg_.policy.max_batches_per_verify);
        if (!ids.empty()) {
          start_verify(now, std::move(ids));
        } else {
          npu_clock_.set(now, DeviceClock::Tag::Starved);
        }
      } else {
        npu_clock_.set(now, DeviceClock::Tag::Idle);
      }
    }
    if (pim_free()) pim_decide(now);
  }

  void start_verify(std::uint64_t now, std::vector<std::uint64_t> ids) {
    int total_len = 0;
    std::uint64_t kv = 0;
    bool first = true;
    for (std::uint64_t id : ids) {
      const DraftBatch* b = queues_.find(id);
      if (b == nullptr) throw SimError("popped batch vanished");
      if (first) kv = b->base_kv_len;
      first = false;
      total_len += b->len();
    }
    OpCost cost = tlm_verify_cycles(npu_p_, cfg_.model, total_len, kv,
                                    !cfg_.hardware.npu_weights_resident);
    energy_of(cost, cfg_.energy);
    add_op_energy(result_.metrics.npu, cost);
    npu_clock_.set(now, DeviceClock::Tag::Busy);
    npu_busy_ = true;
    current_verify_len_ = total_len;
    current_verify_cycles_ = static_cast<double>(cost.cycles);
    current_verify_start_ps_ = now;
    Event done;
    done.t_ps = now + cycles_to_ps(cost.cycles, npu_p_.freq_hz);
    done.type = EventType::VerifyDone;
    done.verify_ids = std::move(ids);
    trace(now, "verify_start", {{"len", total_len}, {"kv", kv}});
    push_event(std::move(done));
  }

  void pim_decide(std::uint64_t now) {
    if (edc_gated_ && !edc_.should_continue()) {
      result_.metrics.edc_stop_decisions += 1;
      if (tvc_on_) {
        if (try_preverify(now)) return;
        // No profitable pre-verification window: keep drafting rather than
        // idle the drafter.
        if (!queue_full()) {
          start_draft(now);
          return;
        }
        pim_clock_.set(now, DeviceClock::Tag::Starved);
        return;
      }
      trace(now, "edc_stop", {{"queued", queues_.pending_size()}});
      pim_clock_.set(now, DeviceClock::Tag::Starved, /*controller=*/true);
      return;
    }
    if (edc_gated_) result_.metrics.edc_continue_decisions += 1;
    if (queue_full()) {
      // Capacity-blocked drafter: a pre-verification slot is free work.
      if (tvc_on_ && try_preverify(now)) return;
      pim_clock_.set(now, DeviceClock::Tag::Starved);
      return;
    }
    start_draft(now);
  }

  bool try_preverify(std::uint64_t now) {
    if (!tvc_.ready() || verify_iterations_ < static_cast<std::uint64_t>(
                                                  cfg_.policy.warmup_iterations))
      return false;
    if (!npu_busy_) return false;  // no verification window to fill
    auto target = queues_.oldest_pending_unverified();
    if (!target.has_value() || queues_.marked_for_preverify(*target))
      return false;
    const DraftBatch* b = queues_.find(*target);
    const double elapsed =
        cycles_between(current_verify_start_ps_, now, npu_p_.freq_hz);
    // Reserve room for the next draft only while a draft could actually use
    // this window; a capacity-blocked drafter frees the whole remainder.
    const std::int64_t left =
        queue_full()
            ? static_cast<std::int64_t>(
                  tvc_.verify_table().predict_cycles(current_verify_len_)) -
                  static_cast<std::int64_t>(elapsed * tvc_.freq_ratio())
            : tvc_.pim_cycles_left(current_verify_len_, elapsed);
    const int pv_len = tvc_.preverify_len(left, b->len());
    if (pv_len < 1) return false;
    const std::int64_t predicted = static_cast<std::int64_t>(
        tvc_.preverify_table().predict_cycles(pv_len));
    if (predicted > left) result_.metrics.tvc_budget_violations += 1;
    queues_.mark_for_preverify(*target);
    OpCost cost = pim_preverify_cycles(pim_p_, cfg_.model, pv_len,
                                       b->base_kv_len,
                                       cfg_.hardware.gtsu_switch_cycles);
    energy_of(cost, cfg_.energy);
    add_op_energy(result_.metrics.pim, cost);
    pim_clock_.set(now, DeviceClock::Tag::Busy);
    pim_busy_ = true;
    result_.metrics.tvc_insertions += 1;
    result_.metrics.preverify_count += 1;
    result_.metrics.preverify_tokens += static_cast<std::uint64_t>(pv_len);
    Event done;
    done.t_ps = now + cycles_to_ps(cost.cycles, pim_p_.freq_hz);
    done.type = EventType::PreverifyDone;
    done.pv_target = *target;
    done.pv_len = pv_len;
    done.pv_cycles = static_cast<double>(cost.cycles);
    trace(now, "preverify_start",
          {{"batch", *target}, {"len", pv_len}, {"budget", left}});
    push_event(std::move(done));
    return true;
  }

  void start_draft(std::uint64_t now) {
    const int arm = workload_.begin_batch();
    DraftBatch b;
    b.batch_id = ++batch_seq_;
    b.base_kv_len = next_position_;
    b.lookahead_depth_at_creation = edc_.llr();
    for (;;) {
      const double h = workload_.next_entropy(next_position_);
      b.entropies.push_back(h);
      b.tokens.push_back(next_position_);
      ++next_position_;
      if (workload_.should_stop(b.entropies, arm)) break;
    }
    b.avg_entropy =
        std::accumulate(b.entropies.begin(), b.entropies.end(), 0.0) /
        static_cast<double>(b.entropies.size());
    b.entropy_bucket = Edc::bucketize(b.avg_entropy, cfg_.model.h_max);
    if (arm != 0) arms_[b.batch_id] = arm;

    OpCost cost = dlm_draft_cycles(pim_p_, cfg_.model, b.len(), b.base_kv_len);
    energy_of(cost, cfg_.energy);
    add_op_energy(result_.metrics.pim, cost);
    b.draft_cycles = cost.cycles;
    OpCost comm = attention_comm_cycles(cfg_.hardware, cfg_.model.dlm_hidden,
                                        cfg_.model.dlm_layers, b.len(), aau_on_);
    energy_of(comm, cfg_.energy);
    // The transfer ties up the off-chip link, not the verifier core; only
    // the movement and in-situ terms count.
    result_.metrics.energy.dram_pj += comm.dram_energy_pj;
    result_.metrics.energy.offchip_pj += comm.offchip_energy_pj;
    result_.metrics.energy.aau_pj += comm.aau_energy_pj;

    result_.metrics.drafted_tokens += static_cast<std::uint64_t>(b.len());
    result_.metrics.batches_drafted += 1;
    pim_clock_.set(now, DeviceClock::Tag::Busy);
    pim_busy_ = true;
    Event done;
    done.t_ps = now + cycles_to_ps(cost.cycles, pim_p_.freq_hz) +
                cycles_to_ps(comm.cycles, npu_p_.freq_hz);
    done.type = EventType::DraftDone;
    done.epoch = rollback_epoch_;
    trace(now, "draft_start",
          {{"batch", b.batch_id},
           {"len", b.len()},
           {"depth", b.lookahead_depth_at_creation}});
    done.batch = std::move(b);
    push_event(std::move(done));
  }

  void finalize(std::uint64_t end_ps) {
    accrue_depth(end_ps);
    npu_clock_.accrue(end_ps);
    pim_clock_.accrue(end_ps);
    MetricsReport& m = result_.metrics;
    m.variant = to_string(cfg_.variant);
    m.seed = cfg_.seed;
    m.generation_length = cfg_.generation_length;
    m.applied_overrides = cfg_.applied_overrides;
    const QueueCounters& qc = queues_.counters();
    m.accepted_draft_tokens = qc.committed_draft_tokens;
    m.committed_corrections = qc.committed_corrections;
    m.rejected_tokens = qc.rejected_tokens;
    m.purged_tokens = qc.purged_tokens;
    m.total_ps = static_cast<double>(end_ps);
    m.mean_queue_depth =
        end_ps > 0 ? depth_area_ / static_cast<double>(end_ps) : 0.0;
    m.edc_wait_cycles = pim_clock_.controller_wait_cycles;
    m.wasted_pim_cycles = wasted_pim_cycles_;
    queues_.check_invariants();
    result_.committed_tokens = queues_.committed_tokens();
    // A final batch may overshoot the requested length; the surplus is
    // dropped from the output.
    if (result_.committed_tokens.size() > cfg_.generation_length)
      result_.committed_tokens.resize(cfg_.generation_length);
    m.committed_tokens = result_.committed_tokens.size();
    for (std::size_t i = 0; i < result_.committed_tokens.size(); ++i) {
      if (result_.committed_tokens[i] != workload_.oracle_token(i))
        throw SimError("committed sequence diverged at position " +
                       std::to_string(i));
    }
    finalize_metrics(m, cfg_);
  }

  ExperimentConfig cfg_;
  DeviceParams npu_p_;
  DeviceParams pim_p_;
  QueueSet queues_;
  Edc edc_;
  Tvc tvc_;
  Workload workload_;
  bool capture_ = false;

  bool aau_on_ = true;
  bool edc_gated_ = false;
  bool tvc_on_ = false;
  std::uint64_t transfer_ps_ = 0;

  RunResult result_;
  DeviceClock npu_clock_;
  DeviceClock pim_clock_;
  std::priority_queue<Event, std::vector<Event>, EventAfter> heap_;
  std::uint64_t seq_ = 0;
  std::uint64_t events_ = 0;
  bool done_ = false;

  bool npu_busy_ = false;
  bool pim_busy_ = false;
  bool pim_transfer_wait_ = false;
  int feedback_in_transit_ = 0;
  std::uint64_t batch_seq_ = 0;
  std::uint64_t next_position_ = 0;
  std::uint64_t rollback_epoch_ = 0;
  std::uint64_t verify_iterations_ = 0;
  int current_verify_len_ = 0;
  double current_verify_cycles_ = 0.0;
  std::uint64_t current_verify_start_ps_ = 0;
  std::map<std::uint64_t, int> arms_;
  double depth_area_ = 0.0;
  double wasted_pim_cycles_ = 0.0;
  std::uint64_t depth_last_ps_ = 0;
};

// Shared by the lockstep baselines: walk the acceptance coins for a freshly
// drafted batch, commit the accepted prefix plus one verifier token (the
// correction on rejection, the batch-end bonus on full acceptance — the
// devices run in lockstep, so it is available for free).
struct LockstepCommit {
  int prefix = 0;
  bool full = false;
};

LockstepCommit lockstep_commit(Workload& workload,
                               const std::vector<double>& entropies,
                               std::uint64_t batch_id, std::uint64_t pos0,
                               std::vector<std::uint64_t>& committed) {
  const int len = static_cast<int>(entropies.size());
  LockstepCommit out;
  while (out.prefix < len) {
    if (!workload.token_accepted(
            entropies[static_cast<std::size_t>(out.prefix)], 0, batch_id,
            pos0 + static_cast<std::uint64_t>(out.prefix)))
      break;
    ++out.prefix;
  }
  for (int i = 0; i < out.prefix; ++i)
    committed.push_back(workload.oracle_token(pos0 + i));
  out.full = out.prefix == len;
  committed.push_back(
      workload.oracle_token(pos0 + static_cast<std::uint64_t>(out.prefix)));
  return out;
}

void finish_lockstep(RunResult& result, Workload& workload,
                     const ExperimentConfig& cfg, std::uint64_t end_ps) {
  MetricsReport& m = result.metrics;
  m.variant = to_string(cfg.variant);
  m.seed = cfg.seed;
  m.generation_length = cfg.generation_length;
  m.applied_overrides = cfg.applied_overrides;
  if (result.committed_tokens.size() > cfg.generation_length)
    result.committed_tokens.resize(cfg.generation_length);
  m.committed_tokens = result.committed_tokens.size();
  m.total_ps = static_cast<double>(end_ps);
  for (std::size_t i = 0; i < result.committed_tokens.size(); ++i)
    if (result.committed_tokens[i] != workload.oracle_token(i))
      throw SimError("committed sequence diverged at position " +
                     std::to_string(i));
  finalize_metrics(m, cfg);
}

// Lockstep draft-then-verify baseline on the heterogeneous pair: the PIM
// drafts, then verification is split at operator granularity — attention
// over the KV cache stays on the PIM while the projection/FFN GEMMs run on
// the NPU — with a barrier at iteration end. The faster side of the split
// idles until the barrier; activations cross the link once per layer.
RunResult run_op_sync(const ExperimentConfig& cfg, bool capture) {
  RunResult result;
  MetricsReport& m = result.metrics;
  const DeviceParams npu_p = npu_params(cfg.hardware);
  const DeviceParams pim_p = pim_params(cfg.hardware);
  Workload workload(cfg);
  const std::uint64_t transfer_ps =
      cycles_to_ps(cfg.hardware.queue_transfer_cycles, cfg.hardware.npu_freq_hz);
  const bool split = cfg.baseline.opsync_attention_on_pim;
  std::uint64_t now = 0;
  std::uint64_t batch_id = 0;
  std::vector<double> shares;
  while (result.committed_tokens.size() < cfg.generation_length) {
    if (++batch_id > cfg.policy.event_cap)
      throw SimError("event budget exceeded");
    const int arm = workload.begin_batch();
    const std::uint64_t pos0 = result.committed_tokens.size();
    std::vector<double> entropies;
    std::uint64_t pos = pos0;
    for (;;) {
      entropies.push_back(workload.next_entropy(pos));
      ++pos;
      if (workload.should_stop(entropies, arm)) break;
    }
    const int len = static_cast<int>(entropies.size());

    // Draft phase: PIM autoregression; its attention nonlinears shuttle
    // over the link every step (this baseline has no in-situ unit).
    OpCost draft = dlm_draft_cycles(pim_p, cfg.model, len, pos0);
    energy_of(draft, cfg.energy);
    OpCost draft_comm =
        attention_comm_cycles(cfg.hardware, cfg.model.dlm_hidden,
                              cfg.model.dlm_layers, len, /*aau_enabled=*/false);
    energy_of(draft_comm, cfg.energy);
    draft_comm.energy_pj -= draft_comm.background_energy_pj;
    draft_comm.background_energy_pj = 0.0;  // link time, not core time

    // Verification phase, split across the devices under a barrier. The
    // NPU side keeps the cache append (the attention output it just
    // received); the PIM side reads the cache for scores and weighted sum.
    OpCost npu_op = tlm_verify_cycles(npu_p, cfg.model, len, split ? 0 : pos0,
                                      !cfg.hardware.npu_weights_resident);
    energy_of(npu_op, cfg.energy);
    OpCost pim_op;
    OpCost verify_comm;
    if (split) {
      pim_op = tlm_attention_cycles(pim_p, cfg.model, len, pos0);
      energy_of(pim_op, cfg.energy);
      verify_comm = attention_comm_cycles(cfg.hardware, cfg.model.tlm_hidden,
                                          cfg.model.tlm_layers, len,
                                          /*aau_enabled=*/false);
      energy_of(verify_comm, cfg.energy);
      verify_comm.energy_pj -= verify_comm.background_energy_pj;
      verify_comm.background_energy_pj = 0.0;
    }

    const std::uint64_t draft_ps =
        cycles_to_ps(draft.cycles, pim_p.freq_hz) +
        cycles_to_ps(draft_comm.cycles, npu_p.freq_hz);
    const std::uint64_t npu_phase_ps =
        cycles_to_ps(npu_op.cycles + verify_comm.cycles, npu_p.freq_hz);
    const std::uint64_t pim_phase_ps =
        cycles_to_ps(pim_op.cycles, pim_p.freq_hz);
    const std::uint64_t verify_ps = std::max(npu_phase_ps, pim_phase_ps);
    const std::uint64_t iter_ps =
        draft_ps + transfer_ps + verify_ps + transfer_ps;

    // Accrual: the verifier starves through drafting and the draft hop;
    // each split side idles from its own finish to the barrier and through
    // the feedback hop.
    const double to_npu = npu_p.freq_hz * 1e-12;
    const double to_pim = pim_p.freq_hz * 1e-12;
    const double npu_busy =
        static_cast<double>(npu_op.cycles + verify_comm.cycles);
    const double pim_busy = static_cast<double>(draft.cycles + pim_op.cycles);
    m.npu.busy_cycles += npu_busy;
    m.npu.idle_cycles += static_cast<double>(iter_ps) * to_npu - npu_busy;
    m.npu.starved_cycles +=
        static_cast<double>(draft_ps + transfer_ps) * to_npu;
    m.pim.busy_cycles += pim_busy;
    m.pim.idle_cycles += static_cast<double>(iter_ps) * to_pim - pim_busy;

    m.pim.ops_executed += split ? 2 : 1;
    m.pim.compute_energy_pj +=
        draft.compute_energy_pj + pim_op.compute_energy_pj;
    m.pim.background_busy_pj +=
        draft.background_energy_pj + pim_op.background_energy_pj;
    m.npu.ops_executed += 1;
    m.npu.compute_energy_pj += npu_op.compute_energy_pj;
    m.npu.background_busy_pj += npu_op.background_energy_pj;
    m.energy.dram_pj += draft.dram_energy_pj + draft_comm.dram_energy_pj +
                        npu_op.dram_energy_pj + pim_op.dram_energy_pj +
                        verify_comm.dram_energy_pj;
    m.energy.offchip_pj += draft.offchip_energy_pj +
                           draft_comm.offchip_energy_pj +
                           npu_op.offchip_energy_pj +
                           pim_op.offchip_energy_pj +
                           verify_comm.offchip_energy_pj;

    m.drafted_tokens += static_cast<std::uint64_t>(len);
    m.batches_drafted += 1;

    const LockstepCommit c = lockstep_commit(workload, entropies, batch_id,
                                             pos0, result.committed_tokens);
    m.accepted_draft_tokens += static_cast<std::uint64_t>(c.prefix);
    m.committed_corrections += 1;
    if (c.full) {
      m.batches_fully_accepted += 1;
    } else {
      m.rejected_tokens += static_cast<std::uint64_t>(len - c.prefix);
      m.batches_rejected += 1;
    }
    workload.batch_outcome(arm, c.prefix);
    m.feedback_records += 1;
    shares.push_back(static_cast<double>(draft_ps + pim_phase_ps) /
                     static_cast<double>(iter_ps));
    if (capture) {
      Json j;
      j["t_ps"] = now;
      j["event"] = "iteration";
      j["len"] = len;
      j["accepted"] = c.prefix;
      j["draft_ps"] = draft_ps;
      j["verify_ps"] = verify_ps;
      result.event_trace.push_back(j.dump());
    }
    now += iter_ps;
  }
  if (!shares.empty()) {
    const double mean =
        std::accumulate(shares.begin(), shares.end(), 0.0) /
        static_cast<double>(shares.size());
    double var = 0.0;
    for (double s : shares) var += (s - mean) * (s - mean);
    var /= static_cast<double>(shares.size());
    m.pim_share_cv = mean > 0.0 ? std::sqrt(var) / mean : 0.0;
  }
  finish_lockstep(result, workload, cfg, now);
  return result;
}

// Monolithic single-accelerator baseline: the same device drafts (adaptive
// length, no look-ahead) and then verifies, strictly alternating, with
// weights streamed from DRAM every pass and no transfer hops.
RunResult run_gpu_only(const ExperimentConfig& cfg, bool capture) {
  RunResult result;
  MetricsReport& m = result.metrics;
  const DeviceParams gpu = gpu_params(cfg.baseline);
  Workload workload(cfg);
  std::uint64_t now = 0;
  std::uint64_t batch_id = 0;
  while (result.committed_tokens.size() < cfg.generation_length) {
    if (++batch_id > cfg.policy.event_cap)
      throw SimError("event budget exceeded");
    const int arm = workload.begin_batch();
    const std::uint64_t pos0 = result.committed_tokens.size();
    std::vector<double> entropies;
    std::uint64_t pos = pos0;
    for (;;) {
      entropies.push_back(workload.next_entropy(pos));
      ++pos;
      if (workload.should_stop(entropies, arm)) break;
    }
    const int len = static_cast<int>(entropies.size());

    OpCost draft = dlm_draft_cycles(gpu, cfg.model, len, pos0);
    energy_of(draft, cfg.energy);
    OpCost verify = tlm_verify_cycles(gpu, cfg.model, len, pos0,
                                      /*stream_weights=*/true);
    energy_of(verify, cfg.energy);

    m.npu.busy_cycles += static_cast<double>(draft.cycles + verify.cycles);
    m.npu.ops_executed += 2;
    m.npu.compute_energy_pj +=
        draft.compute_energy_pj + verify.compute_energy_pj;
    m.npu.background_busy_pj +=
        draft.background_energy_pj + verify.background_energy_pj;
    m.energy.dram_pj += draft.dram_energy_pj + verify.dram_energy_pj;
    m.energy.offchip_pj += draft.offchip_energy_pj + verify.offchip_energy_pj;

    m.drafted_tokens += static_cast<std::uint64_t>(len);
    m.batches_drafted += 1;

    const LockstepCommit c = lockstep_commit(workload, entropies, batch_id,
                                             pos0, result.committed_tokens);
    m.accepted_draft_tokens += static_cast<std::uint64_t>(c.prefix);
    m.committed_corrections += 1;
    if (c.full) {
      m.batches_fully_accepted += 1;
    } else {
      m.rejected_tokens += static_cast<std::uint64_t>(len - c.prefix);
      m.batches_rejected += 1;
    }
    workload.batch_outcome(arm, c.prefix);
    m.feedback_records += 1;
    if (capture) {
      Json j;
      j["t_ps"] = now;
      j["event"] = "iteration";
      j["len"] = len;
      j["accepted"] = c.prefix;
      result.event_trace.push_back(j.dump());
    }
    now += cycles_to_ps(draft.cycles + verify.cycles, gpu.freq_hz);
  }
  finish_lockstep(result, workload, cfg, now);
  return result;
}

}  // namespace

RunResult simulate(const ExperimentConfig& cfg, bool capture_trace) {
  validate(cfg);
  switch (cfg.variant) {
    case Variant::GpuOnly:
      return run_gpu_only(cfg, capture_trace);
    case Variant::OpSync:
      return run_op_sync(cfg, capture_trace);
    default:
      return AsyncEngine(cfg, capture_trace).run();
  }
}

}  // namespace specsim
