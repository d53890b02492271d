// SPDX-FileCopyrightText: © 2026 The specsim authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <string>

#include "specsim/config.hpp"

using namespace specsim;

namespace {

std::string error_of(const std::string& doc) {
  try {
    (void)load_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("empty document yields the default Medium configuration") {
  const ExperimentConfig cfg = load_config("");
  CHECK(cfg.model.scale == ModelScale::Medium);
  CHECK(cfg.model.dlm_hidden == 4096);
  CHECK(cfg.model.dlm_layers == 32);
  CHECK(cfg.model.tlm_hidden == 5120);
  CHECK(cfg.model.tlm_layers == 40);
  CHECK(cfg.variant == Variant::Full);
  CHECK(cfg.seed == 1);
  // Derived fields.
  CHECK(cfg.model.dlm_params_bytes == 12ull * 32 * 4096 * 4096);
  CHECK(cfg.model.tlm_params_bytes == 12ull * 40 * 5120 * 5120);
  CHECK(cfg.model.h_max == doctest::Approx(std::log(32000.0)));
}

TEST_CASE("scale presets apply before explicit model keys, in any order") {
  // Explicit key before the scale line still wins.
  const ExperimentConfig a = load_config(
      "model.tlm_layers = 12\n"
      "model.scale = small\n");
  CHECK(a.model.dlm_hidden == 2048);   // from the preset
  CHECK(a.model.tlm_layers == 12);     // explicit override
  CHECK(a.model.vocab_size == 50272);  // from the preset

  const ExperimentConfig b = load_config(
      "model.scale = small\n"
      "model.tlm_layers = 12\n");
  CHECK(serialize(a) == serialize(b));
}

TEST_CASE("comments, blank lines, and whitespace are tolerated") {
  const ExperimentConfig cfg = load_config(
      "# leading comment\n"
      "\n"
      "  seed =  7   # trailing comment\n"
      "variant= async\n");
  CHECK(cfg.seed == 7);
  CHECK(cfg.variant == Variant::Async);
}

TEST_CASE("serialize then load round-trips to an equal config") {
  ExperimentConfig cfg = load_config(
      "model.scale = large\n"
      "seed = 99\n"
      "variant = op_sync\n"
      "workload.algorithm = banditspec\n"
      "workload.accept_slope = 0.125\n"
      "hardware.aau_enabled = 0\n"
      "policy.queue_capacity = 5\n");
  const ExperimentConfig back = load_config(serialize(cfg));
  CHECK(back == cfg);
  CHECK(serialize(back) == serialize(cfg));
}

TEST_CASE("unknown keys fail with the line number and key name") {
  const std::string msg = error_of("seed = 1\nworkload.stop_threshold = 2\n");
  CHECK(msg.find("line 2") != std::string::npos);
  CHECK(msg.find("workload.stop_threshold") != std::string::npos);
}

TEST_CASE("malformed lines and values fail naming the offender") {
  CHECK(error_of("this is not an assignment\n").find("line 1") !=
        std::string::npos);
  CHECK(error_of("seed = banana\n").find("seed") != std::string::npos);
  CHECK(error_of("seed = -3\n").find("non-negative") != std::string::npos);
  CHECK(error_of("hardware.aau_enabled = maybe\n").find("boolean") !=
        std::string::npos);
  CHECK(error_of("variant = turbo\n").find("turbo") != std::string::npos);
}

TEST_CASE("validation failures name the field") {
  CHECK(error_of("workload.lookahead_decay = 0\n")
            .find("workload.lookahead_decay") != std::string::npos);
  CHECK(error_of("workload.max_draft_len = 0\n")
            .find("workload.max_draft_len") != std::string::npos);
  CHECK(error_of("workload.accept_floor = 0.9\n"
                 "workload.accept_ceiling = 0.1\n")
            .find("accept_floor") != std::string::npos);
  CHECK(error_of("generation_length = 0\n").find("generation_length") !=
        std::string::npos);
  CHECK(error_of("hardware.pim_units = 0\n").find("hardware.pim_units") !=
        std::string::npos);
}

TEST_CASE("per-algorithm default thresholds apply when unset") {
  CHECK(load_config("workload.algorithm = specdecpp\n").workload.threshold ==
        doctest::Approx(0.62));
  CHECK(load_config("workload.algorithm = svip\n").workload.threshold ==
        doctest::Approx(0.72));
  CHECK(load_config("workload.algorithm = adaedl\n").workload.threshold ==
        doctest::Approx(0.21));
  CHECK(load_config("workload.algorithm = banditspec\n").workload.threshold ==
        doctest::Approx(0.5));
  // An explicit threshold wins over the algorithm default.
  const ExperimentConfig cfg = load_config(
      "workload.algorithm = svip\nworkload.threshold = 0.33\n");
  CHECK(cfg.workload.threshold == doctest::Approx(0.33));
}

TEST_CASE("apply_override mutates, re-derives, and records") {
  ExperimentConfig cfg = load_config("");
  apply_override(cfg, "seed=5");
  CHECK(cfg.seed == 5);
  REQUIRE(cfg.applied_overrides.size() == 1);
  CHECK(cfg.applied_overrides[0] == "seed=5");

  // Switching the algorithm re-applies that algorithm's default threshold.
  apply_override(cfg, "workload.threshold=0.9");
  apply_override(cfg, "workload.algorithm=svip");
  CHECK(cfg.workload.threshold == doctest::Approx(0.72));

  // Changing the vocabulary re-derives the entropy ceiling.
  apply_override(cfg, "model.vocab_size=1000");
  CHECK(cfg.model.h_max == doctest::Approx(std::log(1000.0)));

  CHECK_THROWS_AS(apply_override(cfg, "nonsense.key=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "no equals sign"), ConfigError);
  // A rejected override leaves no record.
  CHECK(cfg.applied_overrides.size() == 4);
}

TEST_CASE("override of model.scale re-applies the preset") {
  ExperimentConfig cfg = load_config("model.tlm_layers = 7\n");
  CHECK(cfg.model.tlm_layers == 7);
  apply_override(cfg, "model.scale=medium");
  CHECK(cfg.model.tlm_layers == 40);  // preset resets explicit values
}

TEST_CASE("variant and algorithm names round-trip through to_string") {
  for (Variant v : all_variants()) CHECK(variant_from_string(to_string(v)) == v);
  for (DraftAlgorithm a :
       {DraftAlgorithm::SpecDecPP, DraftAlgorithm::Svip, DraftAlgorithm::AdaEdl,
        DraftAlgorithm::BanditSpec})
    CHECK(algorithm_from_string(to_string(a)) == a);
  CHECK(all_variants().size() == 6);
}
