#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "bipath/augment.hpp"
#include "bipath/model.hpp"
#include "bipath/optical_flow.hpp"

namespace bipath {

struct TrainerConfig {
  double lr = 1e-5;
  int epochs = 30;
  int batch = 1;
  double sigma = 4.0;  // density kernel std, px
  double tau = 1.0;    // flow threshold, px
  double night_threshold = 0.1;
  std::uint64_t seed = 0;
  // Targets are multiplied by this factor for training; predictions are divided by it.
  double density_scale = 100.0;
  int val_count = 0;  // trailing training sequences held out for validation
  bool augment = true;
  // Anneal the learning rate to zero over the run along a half cosine.
  bool lr_cosine = false;

  void validate() const;
};

struct RunConfig {
  AugmentConfig augment;
  DisParams dis;
  ModelConfig model;
  TrainerConfig trainer;

  void validate() const;
};

/// Parses `key = value` lines ('#' starts a comment). Unknown keys and bad values throw
/// std::invalid_argument naming the line; absent keys keep their defaults.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::filesystem::path& path);

/// Applies one `key = value` assignment.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// Every key with its current value, in a stable order, re-parseable by parse_config_text.
std::string format_config(const RunConfig& cfg);

}  // namespace bipath
