// SPDX-FileCopyrightText: © 2026 The specsim authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>

namespace specsim {

// Entropy-aware drafting controller. Predicts whether the next speculative
// batch is worth drafting from two 8-entry entropy-bucket histories (all
// drafted batches vs. fully accepted ones), a 3-bit count of batches still
// awaiting verification, and a 512-entry table of 2-bit confidence counters
// indexed by a hash of those histories.
class Edc {
 public:
  static constexpr int kHistory = 8;
  static constexpr int kPhtSize = 512;
  static constexpr int kLlrMax = 7;

  Edc() { pht_.fill(2); }

  // Entropy bucket: floor(8 * avg / h_max), clamped to [0, 7].
  static int bucketize(double avg_entropy, double h_max);

  // (g_old << 6) | (g_recent << 3) | llr, where g_recent / g_old are the
  // truncating means of the newer and older halves of the drafted-entropy
  // history.
  std::uint32_t pht_index() const;

  // Draft another batch iff the indexed counter is confident, or nothing is
  // in flight at all.
  bool should_continue() const {
    return pht_[pht_index()] >= 2 || llr_ == 0;
  }

  // A drafted batch entered the unverified queue. Returns the table index
  // snapshot taken before the histories mutate; verification feedback for
  // this batch trains that entry.
  std::uint32_t on_draft(int entropy_bucket);

  // Terminal verification outcomes. Partial pre-verification that only
  // shrinks a batch reports nothing here.
  void on_full_accept(std::uint32_t snapshot, int entropy_bucket);
  void on_reject(std::uint32_t snapshot, int surviving_unverified);

  int llr() const { return llr_; }
  const std::array<int, kHistory>& drafted_history() const { return leht_; }
  const std::array<int, kHistory>& accepted_history() const { return lceht_; }
  int pht(std::uint32_t index) const { return pht_[index]; }

 private:
  static void shift_in(std::array<int, kHistory>& h, int bucket);

  std::array<int, kHistory> leht_{};   // entropy buckets, [0] most recent
  std::array<int, kHistory> lceht_{};  // fully-accepted batches only
  int llr_ = 0;                        // batches awaiting verification
  std::array<int, kPhtSize> pht_{};    // 2-bit saturating counters
};

}  // namespace specsim
