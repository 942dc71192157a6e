#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "bipath/augment.hpp"
#include "bipath/config.hpp"
#include "bipath/model.hpp"
#include "bipath/synthetic_gen.hpp"

namespace bipath {

namespace fs = std::filesystem;

/// Errors in command-line usage map to exit code 1, everything else to 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---- dataset ----

/// A decoded sequence with raw (unthresholded) flow per frame.
/// Frame t uses the pair (t, t+1); the last frame reuses the final pair.
struct SequenceData {
  std::string id;
  std::vector<Image> frames;
  std::vector<DotMap> dots;
  std::vector<FlowField> flow;
  std::vector<Image> f_sub;
};

/// Per-frame flow for a list of frames, following the pairing rule above.
void attach_flow(SequenceData& seq, const DisParams& dis);

SequenceData sequence_from_generated(const GeneratedSequence& g, const std::string& id, const DisParams& dis);

/// Reads frames and annotations; reuses .flo caches when their stamp matches `dis`.
SequenceData load_sequence(const fs::path& dir, const DisParams& dis);

/// Training groups for one flow encoding, with flow thresholded at tau.
std::vector<SampleGroup> make_groups(const SequenceData& seq, FlowEncoding mode, double tau);
std::vector<SampleGroup> make_groups(const std::vector<SequenceData>& seqs, FlowEncoding mode, double tau);

std::string flow_stamp(const DisParams& dis, FlowEncoding mode, double tau);

// ---- training ----

struct EpochMetrics {
  int epoch = 0;
  std::string split;
  double count_mae = 0, count_mse = 0;
  double pixel_mae = 0, pixel_mse = 0;
  double loss = 0;
};

std::string metrics_header();
std::string metrics_row(const EpochMetrics& m);

struct Prediction {
  DensityMap density;  // persons per pixel
  double count = 0;
};

class Trainer {
 public:
  explicit Trainer(const RunConfig& cfg);

  BiPathModel<float>& model() { return *model_; }
  const RunConfig& config() const noexcept { return cfg_; }

  /// One forward/backward pass on a group; gradients accumulate scaled by `weight`. Returns the loss.
  double accumulate(const SampleGroup& g, double weight = 1.0);
  void step();
  /// accumulate + step on a single group.
  double train_step(const SampleGroup& g);

  Prediction predict(const SampleGroup& g) const;
  EpochMetrics evaluate(const std::vector<SampleGroup>& groups, int epoch, const std::string& split) const;

  /// Full schedule: returns one train row and (if `val` nonempty) one val row per epoch.
  /// The best checkpoint by val count-MAE (train when no val) is saved to `checkpoint` when nonempty.
  std::vector<EpochMetrics> fit(const std::vector<SampleGroup>& train, const std::vector<SampleGroup>& val,
                                const fs::path& checkpoint = {}, const fs::path& metrics_csv = {});

 private:
  SampleGroup prepare(const SampleGroup& g);

  RunConfig cfg_;
  std::unique_ptr<BiPathModel<float>> model_;
  std::unique_ptr<Adam<float>> adam_;
  std::mt19937_64 rng_;
};

/// Crops the top-left window whose sides are multiples of 8.
SampleGroup crop_to_multiple_of_8(const SampleGroup& g);

/// Writes `ckpt` and its `ckpt.cfg` config sidecar.
void save_model(const BiPathModel<float>& model, const RunConfig& cfg, const fs::path& ckpt);
/// Rebuilds the model from the sidecar config and loads the weights.
std::unique_ptr<Trainer> load_model(const fs::path& ckpt);

/// Mean luminance of an RGB frame, used for night routing.
double mean_luminance(const Image& rgb);

// ---- commands ----

struct FlowOptions {
  fs::path seq;
  std::string flow_type = "dis";
  FlowEncoding encode = FlowEncoding::polar;
  double tau = 1.0;
  int jobs = 1;
  DisParams dis;
};
/// Returns the number of pair/frame outputs written (0 when everything was up to date).
int cmd_flow(const FlowOptions& opt);

struct GenOptions {
  fs::path out;
  fs::path spec;  // optional scene config
  int count = 1;
  double night_fraction = 0;
};
void cmd_gen_synthetic(const GenOptions& opt);

/// Scene defaults plus overrides from a `key = value` file; night_luminance is returned separately.
SceneSpec parse_scene_spec(const std::string& text, double* night_luminance = nullptr);

struct TrainOptions {
  std::vector<fs::path> data;
  std::vector<fs::path> val;
  fs::path config;
  fs::path out;
  int epochs = 0;  // 0 keeps the config value
  bool no_flow = false;
  bool no_gamma = false;
  std::string scale_range;
  std::string attention;
  std::string encode;
  int jobs = 1;
};
RunConfig train_config(const TrainOptions& opt);
std::vector<EpochMetrics> cmd_train(const TrainOptions& opt);

struct EvalOptions {
  fs::path ckpt;
  std::vector<fs::path> data;
  fs::path ckpt_night;
  double night_threshold = -1;  // negative keeps the config value
  fs::path out;
};
/// Returns the aggregate row (split "eval").
EpochMetrics cmd_eval(const EvalOptions& opt);

struct PredictOptions {
  fs::path ckpt;
  fs::path seq;
  fs::path out;
};
void cmd_predict(const PredictOptions& opt);

struct AblateOptions {
  std::vector<fs::path> data;
  std::vector<fs::path> val;
  fs::path config;
  fs::path out;
  int epochs = 0;
};
/// Writes ablation.csv and ablation.md under `out`; returns the table text.
std::string cmd_ablate(const AblateOptions& opt);

}  // namespace bipath
