#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "bipath/cli.hpp"
#include "bipath/data_io.hpp"

namespace bipath {

std::string metrics_header() { return "epoch,split,count_mae,count_mse,pixel_mae,pixel_mse,loss"; }

std::string metrics_row(const EpochMetrics& m) {
  auto num = [](double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
  };
  return std::to_string(m.epoch) + "," + m.split + "," + num(m.count_mae) + "," + num(m.count_mse) + "," +
         num(m.pixel_mae) + "," + num(m.pixel_mse) + "," + num(m.loss);
}

double mean_luminance(const Image& rgb) { return mean_value(luminance(rgb)); }

SampleGroup crop_to_multiple_of_8(const SampleGroup& g) {
  const int w = g.width() / 8 * 8, h = g.height() / 8 * 8;
  if (w == 0 || h == 0) throw std::invalid_argument("frame smaller than 8x8");
  if (w == g.width() && h == g.height()) return g;
  SampleGroup out;
  out.sequence_id = g.sequence_id;
  out.frame_index = g.frame_index;
  out.image = crop(g.image, 0, 0, w, h);
  out.flow = g.flow;
  out.flow.planes = crop(g.flow.planes, 0, 0, w, h);
  out.dots = DotMap(w, h);
  for (const Dot& d : g.dots.dots())
    if (d.x < w && d.y < h) out.dots.add(d.x, d.y);
  return out;
}

Trainer::Trainer(const RunConfig& cfg) : cfg_(cfg), rng_(cfg.trainer.seed * 0x9E3779B97F4A7C15ull + cfg.augment.seed) {
  cfg_.validate();
  model_ = std::make_unique<BiPathModel<float>>(cfg_.model, cfg_.trainer.seed);
  AdamOptions opt;
  opt.lr = cfg_.trainer.lr;
  adam_ = std::make_unique<Adam<float>>(model_->params(), opt);
}

namespace {

Tensor flow_tensor(const BiPathModel<float>& model, const SampleGroup& g) {
  if (!model.config().flow_enabled) return {};
  if (g.flow.mode != model.config().flow_mode) {
    throw std::invalid_argument("flow input is " + to_string(g.flow.mode) + " encoded but the model expects " +
                                to_string(model.config().flow_mode));
  }
  return to_tensor(g.flow.planes);
}

DensityMap to_density(const Tensor& t, double scale) {
  DensityMap d(t.dim(3), t.dim(2));
  for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] = static_cast<float>(t[i] / scale);
  return d;
}

}  // namespace

double Trainer::accumulate(const SampleGroup& g, double weight) {
  Tape<float> tape;
  const Var<float> pred = model_->forward(tape, to_tensor(g.image), flow_tensor(*model_, g));
  const DensityMap gt = rasterize_density(g.dots, cfg_.trainer.sigma);
  Tensor target({1, 1, g.height(), g.width()});
  for (std::size_t i = 0; i < gt.values.size(); ++i) {
    target[i] = static_cast<float>(gt.values[i] * cfg_.trainer.density_scale);
  }
  const Var<float> loss = mse_loss(pred, tape.constant(std::move(target)));
  const double value = loss.value()[0];
  if (!std::isfinite(value)) {
    throw NumericError("non-finite loss on " + g.sequence_id + " frame " + std::to_string(g.frame_index));
  }
  tape.backward(loss, Tensor({1}, static_cast<float>(weight)));
  return value;
}

void Trainer::step() {
  adam_->step();
  adam_->zero_grad();
}

double Trainer::train_step(const SampleGroup& g) {
  const double loss = accumulate(g);
  step();
  return loss;
}

Prediction Trainer::predict(const SampleGroup& g) const {
  Tape<float> tape;
  const Var<float> pred = model_->forward(tape, to_tensor(g.image), flow_tensor(*model_, g));
  Prediction out;
  out.density = to_density(pred.value(), cfg_.trainer.density_scale);
  out.count = count(out.density);
  return out;
}

EpochMetrics Trainer::evaluate(const std::vector<SampleGroup>& groups, int epoch, const std::string& split) const {
  if (groups.empty()) throw std::invalid_argument("evaluate: no frames");
  EpochMetrics m;
  m.epoch = epoch;
  m.split = split;
  std::vector<std::pair<double, double>> pairs;
  const double s = cfg_.trainer.density_scale;
  for (const SampleGroup& raw : groups) {
    const SampleGroup g = crop_to_multiple_of_8(raw);
    const Prediction p = predict(g);
    const DensityMap gt = rasterize_density(g.dots, cfg_.trainer.sigma);
    pairs.emplace_back(p.count, static_cast<double>(g.dots.size()));
    const ErrorPair e = pixel_mae_mse(p.density, gt);
    m.pixel_mae += e.mae;
    m.pixel_mse += e.mse;
    m.loss += e.mse * e.mse * s * s;
  }
  const double n = static_cast<double>(groups.size());
  const ErrorPair c = count_mae_mse(pairs);
  m.count_mae = c.mae;
  m.count_mse = c.mse;
  m.pixel_mae /= n;
  m.pixel_mse /= n;
  m.loss /= n;
  return m;
}

SampleGroup Trainer::prepare(const SampleGroup& g) {
  if (!cfg_.trainer.augment) return crop_to_multiple_of_8(g);
  return apply_pipeline(g, cfg_.augment, rng_);
}

std::vector<EpochMetrics> Trainer::fit(const std::vector<SampleGroup>& train, const std::vector<SampleGroup>& val,
                                       const fs::path& checkpoint, const fs::path& metrics_csv) {
  if (train.empty()) throw std::invalid_argument("training set is empty");
  std::vector<EpochMetrics> rows;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  std::string csv = metrics_header() + "\n";
  const int batch = cfg_.trainer.batch;
  const long steps_per_epoch = (static_cast<long>(order.size()) + batch - 1) / batch;
  const double total_steps = static_cast<double>(steps_per_epoch) * cfg_.trainer.epochs;
  long done = 0;

  for (int epoch = 1; epoch <= cfg_.trainer.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng_);
    EpochMetrics tm;
    tm.epoch = epoch;
    tm.split = "train";
    int pending = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const SampleGroup g = prepare(train[order[k]]);
      const double loss = accumulate(g, 1.0 / batch);
      if (++pending == batch || k + 1 == order.size()) {
        if (cfg_.trainer.lr_cosine) {
          adam_->set_lr(0.5 * cfg_.trainer.lr * (1 + std::cos(std::numbers::pi * static_cast<double>(done) / total_steps)));
        }
        ++done;
        step();
        pending = 0;
      }
      tm.loss += loss;
    }
    tm.loss /= static_cast<double>(order.size());
    // Train-split count and pixel metrics are measured on the unaugmented frames after the epoch.
    const EpochMetrics train_eval = evaluate(train, epoch, "train");
    tm.count_mae = train_eval.count_mae;
    tm.count_mse = train_eval.count_mse;
    tm.pixel_mae = train_eval.pixel_mae;
    tm.pixel_mse = train_eval.pixel_mse;
    rows.push_back(tm);
    csv += metrics_row(tm) + "\n";

    double score = tm.count_mae;
    if (!val.empty()) {
      const EpochMetrics vm = evaluate(val, epoch, "val");
      rows.push_back(vm);
      csv += metrics_row(vm) + "\n";
      score = vm.count_mae;
    }
    if (!checkpoint.empty() && score < best) {
      best = score;
      save_model(*model_, cfg_, checkpoint);
    }
    if (!metrics_csv.empty()) write_text_atomic(metrics_csv, csv);
  }
  return rows;
}

void save_model(const BiPathModel<float>& model, const RunConfig& cfg, const fs::path& ckpt) {
  fs::path sidecar = ckpt;
  sidecar += ".cfg";
  write_text_atomic(sidecar, format_config(cfg));
  save_checkpoint(model, ckpt);
}

std::unique_ptr<Trainer> load_model(const fs::path& ckpt) {
  fs::path sidecar = ckpt;
  sidecar += ".cfg";
  if (!fs::exists(sidecar)) throw std::runtime_error("missing config sidecar " + sidecar.string());
  auto trainer = std::make_unique<Trainer>(parse_config(sidecar));
  load_checkpoint(trainer->model(), ckpt);
  return trainer;
}

}  // namespace bipath
