#include <CLI11.hpp>
#include <iostream>

#include "bipath/cli.hpp"
#include "bipath/data_io.hpp"

using namespace bipath;

int main(int argc, char** argv) {
  CLI::App app{"bi-path flow-based crowd counting"};
  app.require_subcommand(1);

  FlowOptions flow;
  std::string encode = "polar";
  auto* c_flow = app.add_subcommand("flow", "precompute DIS flow caches and flow-branch inputs for a sequence");
  c_flow->add_option("--seq", flow.seq, "sequence directory")->required();
  c_flow->add_option("--flow-type", flow.flow_type, "flow method")->capture_default_str();
  c_flow->add_option("--encode", encode, "polar or cartesian")->capture_default_str();
  c_flow->add_option("--tau", flow.tau, "threshold on flow magnitude, px")->capture_default_str();
  c_flow->add_option("--jobs", flow.jobs, "worker threads")->capture_default_str();

  GenOptions gen;
  auto* c_gen = app.add_subcommand("gen-synthetic", "render procedural sequences with ground truth");
  c_gen->add_option("--out", gen.out, "output directory")->required();
  c_gen->add_option("--spec", gen.spec, "scene config file");
  c_gen->add_option("--count", gen.count, "number of sequences")->capture_default_str();
  c_gen->add_option("--night-fraction", gen.night_fraction, "fraction rendered dark")->capture_default_str();

  TrainOptions train;
  auto* c_train = app.add_subcommand("train", "train a model");
  c_train->add_option("--data", train.data, "training sequence directories")->required();
  c_train->add_option("--val", train.val, "validation sequence directories");
  c_train->add_option("--config", train.config, "run config file");
  c_train->add_option("--epochs", train.epochs, "override epoch count");
  c_train->add_option("--out", train.out, "checkpoint path")->required();
  c_train->add_flag("--no-flow", train.no_flow, "image-only model");
  c_train->add_flag("--no-gamma", train.no_gamma, "disable gamma augmentation");
  c_train->add_option("--scale-range", train.scale_range, "LO,HI");
  c_train->add_option("--attention", train.attention, "fused or per_stream");
  c_train->add_option("--encode", train.encode, "polar or cartesian");

  EvalOptions eval;
  auto* c_eval = app.add_subcommand("eval", "evaluate checkpoints on sequences");
  c_eval->add_option("--ckpt", eval.ckpt, "checkpoint")->required();
  c_eval->add_option("--data", eval.data, "sequence directories")->required();
  c_eval->add_option("--ckpt-night", eval.ckpt_night, "checkpoint for dark frames");
  c_eval->add_option("--night-threshold", eval.night_threshold, "mean luminance below which frames go to the night model");
  c_eval->add_option("--out", eval.out, "output directory")->required();

  PredictOptions predict;
  auto* c_predict = app.add_subcommand("predict", "write density maps for one sequence");
  c_predict->add_option("--ckpt", predict.ckpt, "checkpoint")->required();
  c_predict->add_option("--seq", predict.seq, "sequence directory")->required();
  c_predict->add_option("--out", predict.out, "output directory")->required();

  AblateOptions ablate;
  auto* c_ablate = app.add_subcommand("ablate", "flow x gamma x scale sweep");
  c_ablate->add_option("--data", ablate.data, "training sequence directories")->required();
  c_ablate->add_option("--val", ablate.val, "validation sequence directories");
  c_ablate->add_option("--config", ablate.config, "run config file");
  c_ablate->add_option("--epochs", ablate.epochs, "override epoch count");
  c_ablate->add_option("--out", ablate.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*c_flow) {
      try {
        flow.encode = parse_flow_encoding(encode);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const int written = cmd_flow(flow);
      std::cout << "wrote " << written << " file(s)\n";
    } else if (*c_gen) {
      cmd_gen_synthetic(gen);
    } else if (*c_train) {
      for (const auto& row : cmd_train(train)) std::cout << metrics_row(row) << "\n";
    } else if (*c_eval) {
      std::cout << metrics_header() << "\n" << metrics_row(cmd_eval(eval)) << "\n";
    } else if (*c_predict) {
      cmd_predict(predict);
    } else if (*c_ablate) {
      std::cout << cmd_ablate(ablate);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
