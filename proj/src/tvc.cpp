// SPDX-FileCopyrightText: © 2026 The specsim authors
// SPDX-License-Identifier: Apache-2.0
#include "specsim/tvc.hpp"

#include <cmath>

#include "specsim/config.hpp"

namespace specsim {

void RatioTable::observe(double cycles, int len) {
  if (len <= 0) throw SimError("ratio observation with non-positive length");
  if (cycles < 0.0) throw SimError("ratio observation with negative cycles");
  const double fp = std::floor(cycles * static_cast<double>(1u << kFracBits) /
                               static_cast<double>(len));
  fp_[static_cast<std::size_t>(next_)] = static_cast<std::uint64_t>(fp);
  next_ = (next_ + 1) % kEntries;
  if (count_ < kEntries) ++count_;
}

std::uint64_t RatioTable::mean_fp() const {
  if (count_ == 0) return 0;
  std::uint64_t sum = 0;
  for (int i = 0; i < count_; ++i) sum += fp_[static_cast<std::size_t>(i)];
  return sum / static_cast<std::uint64_t>(count_);
}

std::uint64_t RatioTable::predict_cycles(int len) const {
  return (mean_fp() * static_cast<std::uint64_t>(len)) >> kFracBits;
}

void Tvc::observe_draft(double pim_cycles, int draft_len) {
  pdct_.observe(pim_cycles, draft_len);
  draft_lens_[static_cast<std::size_t>(draft_len_next_)] = draft_len;
  draft_len_next_ = (draft_len_next_ + 1) % kDraftLenWindow;
}

std::int64_t Tvc::pim_cycles_left(int verify_batch_len,
                                  double elapsed_npu_cycles) const {
  const std::int64_t verify_total =
      static_cast<std::int64_t>(nvct_.predict_cycles(verify_batch_len));
  const std::int64_t elapsed =
      static_cast<std::int64_t>(elapsed_npu_cycles * freq_ratio_);
  const std::int64_t next_draft = static_cast<std::int64_t>(
      pdct_.predict_cycles(next_draft_len_estimate()));
  return verify_total - (elapsed + next_draft);
}

int Tvc::preverify_len(std::int64_t cycles_left,
                       int oldest_unverified_len) const {
  if (cycles_left <= 0) return 0;
  const std::uint64_t ratio = pvct_.mean_fp();
  if (ratio == 0) return 0;
  const std::uint64_t fit =
      (static_cast<std::uint64_t>(cycles_left) << RatioTable::kFracBits) /
      ratio;
  const std::uint64_t cap = static_cast<std::uint64_t>(
      oldest_unverified_len < 0 ? 0 : oldest_unverified_len);
  return static_cast<int>(fit < cap ? fit : cap);
}

int Tvc::next_draft_len_estimate() const {
  int sum = 0;
  for (int len : draft_lens_) sum += len;
  return sum / kDraftLenWindow;
}

}  // namespace specsim
