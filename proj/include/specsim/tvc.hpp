// SPDX-FileCopyrightText: © 2026 The specsim authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>

namespace specsim {

// Ring of recent cycles-per-token ratios in 16-bit fixed point. Entries are
// floor(observed_cycles * 2^16 / len); predictions truncate back to whole
// cycles. All arithmetic truncates toward zero so a table fed an exactly
// linear cost model predicts with zero error.
class RatioTable {
 public:
  static constexpr int kEntries = 4;
  static constexpr int kFracBits = 16;

  void observe(double cycles, int len);
  bool warmed() const { return count_ > 0; }
  int valid_entries() const { return count_; }
  std::uint64_t entry_fp(int i) const { return fp_[static_cast<std::size_t>(i)]; }
  std::uint64_t mean_fp() const;                // truncating mean of valid entries
  std::uint64_t predict_cycles(int len) const;  // (mean_fp * len) >> 16

 private:
  std::array<std::uint64_t, kEntries> fp_{};
  int count_ = 0;
  int next_ = 0;
};

// Cost calibrator for look-ahead pre-verification. Tracks per-token cycle
// ratios of device verification (normalized into PIM cycles via the clock
// ratio), PIM drafting, and PIM pre-verification, plus a rolling estimate of
// upcoming draft length. From those it sizes the pre-verification slice that
// fits in the idle window of the current verification pass.
class Tvc {
 public:
  explicit Tvc(double pim_to_npu_freq_ratio)
      : freq_ratio_(pim_to_npu_freq_ratio) {
    draft_lens_.fill(kInitialDraftLen);
  }

  // Observed device verification of batch_len tokens, in device cycles;
  // stored normalized to PIM cycles.
  void observe_npu_verify(double npu_cycles, int batch_len) {
    nvct_.observe(npu_cycles * freq_ratio_, batch_len);
  }
  void observe_draft(double pim_cycles, int draft_len);
  void observe_preverify(double pim_cycles, int len) {
    pvct_.observe(pim_cycles, len);
  }

  bool ready() const {
    return nvct_.warmed() && pdct_.warmed() && pvct_.warmed();
  }

  // PIM cycles left idle once the next draft finishes, while the device is
  // elapsed_npu_cycles into verifying a batch of verify_batch_len tokens.
  // Negative when drafting alone already overruns the verification window.
  std::int64_t pim_cycles_left(int verify_batch_len,
                               double elapsed_npu_cycles) const;

  // Tokens of pre-verification that fit in cycles_left, capped by the oldest
  // unverified batch. Worth inserting only when >= 1.
  int preverify_len(std::int64_t cycles_left, int oldest_unverified_len) const;

  int next_draft_len_estimate() const;

  const RatioTable& verify_table() const { return nvct_; }
  const RatioTable& draft_table() const { return pdct_; }
  const RatioTable& preverify_table() const { return pvct_; }
  double freq_ratio() const { return freq_ratio_; }

 private:
  static constexpr int kDraftLenWindow = 4;
  static constexpr int kInitialDraftLen = 4;

  double freq_ratio_;
  RatioTable nvct_;  // device verification, PIM-normalized
  RatioTable pdct_;  // PIM drafting
  RatioTable pvct_;  // PIM pre-verification
  std::array<int, kDraftLenWindow> draft_lens_{};
  int draft_len_next_ = 0;
};

}  // namespace specsim
