// SPDX-FileCopyrightText: © 2026 The specsim authors
// SPDX-License-Identifier: Apache-2.0
#include "specsim/edc.hpp"

#include <algorithm>

namespace specsim {

int Edc::bucketize(double avg_entropy, double h_max) {
  if (h_max <= 0.0) return 0;
  const int b = static_cast<int>(kHistory * avg_entropy / h_max);
  return std::clamp(b, 0, kHistory - 1);
}

std::uint32_t Edc::pht_index() const {
  const int g_recent = (leht_[0] + leht_[1] + leht_[2] + leht_[3]) / 4;
  const int g_old = (leht_[4] + leht_[5] + leht_[6] + leht_[7]) / 4;
  return static_cast<std::uint32_t>((g_old << 6) | (g_recent << 3) | llr_);
}

void Edc::shift_in(std::array<int, kHistory>& h, int bucket) {
  for (int i = kHistory - 1; i > 0; --i) h[i] = h[i - 1];
  h[0] = bucket;
}

std::uint32_t Edc::on_draft(int entropy_bucket) {
  const std::uint32_t snapshot = pht_index();
  shift_in(leht_, entropy_bucket);
  llr_ = std::min(llr_ + 1, kLlrMax);
  return snapshot;
}

void Edc::on_full_accept(std::uint32_t snapshot, int entropy_bucket) {
  llr_ = std::max(llr_ - 1, 0);
  shift_in(lceht_, entropy_bucket);
  pht_[snapshot] = std::min(pht_[snapshot] + 1, 3);
}

void Edc::on_reject(std::uint32_t snapshot, int surviving_unverified) {
  pht_[snapshot] = std::max(pht_[snapshot] - 1, 0);
  leht_ = lceht_;  // resync the drafted history to what actually held up
  llr_ = std::clamp(surviving_unverified, 0, kLlrMax);
}

}  // namespace specsim
