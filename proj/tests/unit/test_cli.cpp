#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "bipath/config.hpp"
#include "bipath/data_io.hpp"
#include "temp_dir.hpp"

using namespace bipath;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BIPATH_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

void write(const fs::path& p, const std::string& text) { write_text_atomic(p, text); }

constexpr const char* kSmallScene = "width = 64\nheight = 64\nframes = 3\nn_persons = 5\njitter = 0.5\n";
constexpr const char* kTinyModel =
    "width = 0.03125\ncrop = 32\nepochs = 2\nlr = 1e-3\ninit_std = 0.05\nscale_range = 0.8,1.2\nseed = 4\n";

}  // namespace

TEST_CASE("cli exit codes") {
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("") != 0);
  CHECK(run_cli("teleport") != 0);
  CHECK(run_cli("flow --seq /nonexistent/dir") != 0);
  CHECK(run_cli("gen-synthetic --out /tmp/x --count 0") != 0);
}

TEST_CASE("gen-synthetic layout, night split and reproducibility") {
  TempDir dir;
  write(dir / "scene.cfg", kSmallScene);
  const std::string spec = " --spec " + (dir / "scene.cfg").string();
  REQUIRE(run_cli("gen-synthetic --out " + (dir / "a").string() + spec + " --count 4 --night-fraction 0.5") == 0);
  REQUIRE(run_cli("gen-synthetic --out " + (dir / "b").string() + spec + " --count 4 --night-fraction 0.5") == 0);
  CHECK(tree(dir / "a") == tree(dir / "b"));
  CHECK(fs::exists(dir / "a.run.json"));
  CHECK(run_cli("gen-synthetic --out " + (dir / "a").string() + spec + " --count 4") != 0);

  int nights = 0;
  double day_lum = 0, night_lum = 0;
  for (int k = 1; k <= 4; ++k) {
    const fs::path seq = dir / "a" / ("seq000" + std::to_string(k));
    const SequenceLayout layout(seq);
    REQUIRE(layout.frame_count() == 3);
    CHECK(fs::exists(seq / "gtflow000002.flo"));
    const bool night = slurp(layout.manifest_path()).find("night = true") != std::string::npos;
    nights += night;
    double lum = 0;
    for (int t = 1; t <= 3; ++t) lum += mean_value(luminance(read_png(layout.frame_path(t))));
    (night ? night_lum : day_lum) += lum;
    CHECK(read_dots_csv(layout.dots_path(1), 64, 64).size() == 5);
  }
  CHECK(nights == 2);
  CHECK(night_lum < 0.15 * day_lum);
}

TEST_CASE("flow caches are written once and encoded in range") {
  TempDir dir;
  write(dir / "scene.cfg", kSmallScene);
  REQUIRE(run_cli("gen-synthetic --out " + (dir / "d").string() + " --spec " + (dir / "scene.cfg").string()) == 0);
  const fs::path seq = dir / "d" / "seq0001";
  REQUIRE(run_cli("flow --seq " + seq.string() + " --encode polar --jobs 2") == 0);
  int flo = 0;
  for (const auto& e : fs::directory_iterator(seq))
    if (e.path().filename().string().rfind("flow", 0) == 0 && e.path().extension() == ".flo") ++flo;
  CHECK(flo == 2);

  const SequenceLayout layout(seq);
  const auto stamp = fs::last_write_time(layout.flo_path(1));
  const auto input_stamp = fs::last_write_time(layout.flow_input_path(1));
  const std::string before = slurp(layout.flow_input_path(1));
  REQUIRE(run_cli("flow --seq " + seq.string() + " --encode polar") == 0);
  CHECK(fs::last_write_time(layout.flo_path(1)) == stamp);
  CHECK(fs::last_write_time(layout.flow_input_path(1)) == input_stamp);
  CHECK(slurp(layout.flow_input_path(1)) == before);

  for (int t = 1; t <= 3; ++t) {
    const FlowInput in = read_flow_input(layout.flow_input_path(t));
    CHECK(in.mode == FlowEncoding::polar);
    for (float v : in.planes.data) REQUIRE((v >= 0.0f && v <= 1.0f));
  }
  CHECK(run_cli("flow --seq " + seq.string() + " --flow-type pwc") != 0);
}

TEST_CASE("train, eval and predict") {
  TempDir dir;
  write(dir / "scene.cfg", kSmallScene);
  write(dir / "model.cfg", kTinyModel);
  REQUIRE(run_cli("gen-synthetic --out " + (dir / "d").string() + " --spec " + (dir / "scene.cfg").string() +
                  " --count 3 --night-fraction 0.34") == 0);
  const std::string data = " --data " + (dir / "d/seq0001").string() + " " + (dir / "d/seq0002").string();
  const std::string val = " --val " + (dir / "d/seq0003").string();
  const std::string cfg = " --config " + (dir / "model.cfg").string();

  REQUIRE(run_cli("train" + data + val + cfg + " --out " + (dir / "m1.ckpt").string()) == 0);
  REQUIRE(run_cli("train" + data + val + cfg + " --out " + (dir / "m2.ckpt").string()) == 0);
  CHECK(fs::exists(dir / "m1.ckpt.cfg"));
  const auto rows = csv_rows(dir / "m1.ckpt.metrics.csv");
  CHECK(rows.size() == 4);
  CHECK(slurp(dir / "m1.ckpt.metrics.csv") == slurp(dir / "m2.ckpt.metrics.csv"));
  CHECK(slurp(dir / "m1.ckpt") == slurp(dir / "m2.ckpt"));

  REQUIRE(run_cli("train" + data + cfg + " --no-flow --out " + (dir / "img.ckpt").string()) == 0);
  REQUIRE(run_cli("eval --ckpt " + (dir / "img.ckpt").string() + " --data " + (dir / "d/seq0003").string() +
                  " --out " + (dir / "eval_img").string()) == 0);
  CHECK(run_cli("train --data " + (dir / "nothing").string() + cfg + " --out " + (dir / "x.ckpt").string()) != 0);

  // Routing with threshold 0 never picks the night model.
  const std::string eval_data = " --data " + (dir / "d/seq0001").string() + " " + (dir / "d/seq0003").string();
  REQUIRE(run_cli("eval --ckpt " + (dir / "m1.ckpt").string() + eval_data + " --out " + (dir / "e1").string()) == 0);
  REQUIRE(run_cli("eval --ckpt " + (dir / "m1.ckpt").string() + " --ckpt-night " + (dir / "img.ckpt").string() +
                  " --night-threshold 0" + eval_data + " --out " + (dir / "e2").string()) == 0);
  CHECK(slurp(dir / "e1/frames.csv") == slurp(dir / "e2/frames.csv"));
  CHECK(slurp(dir / "e1/metrics.csv") == slurp(dir / "e2/metrics.csv"));
  REQUIRE(run_cli("eval --ckpt " + (dir / "m1.ckpt").string() + " --ckpt-night " + (dir / "img.ckpt").string() +
                  " --night-threshold 0.5" + eval_data + " --out " + (dir / "e3").string()) == 0);
  const auto routed = csv_rows(dir / "e3/frames.csv");
  REQUIRE(routed.size() == 6);
  CHECK(routed[0][3] == "day");
  CHECK(routed[5][3] == "night");

  // Eval metrics agree with metrics recomputed from the saved prediction maps.
  const fs::path seq3 = dir / "d/seq0003";
  REQUIRE(run_cli("predict --ckpt " + (dir / "m1.ckpt").string() + " --seq " + seq3.string() + " --out " +
                  (dir / "p").string()) == 0);
  const auto counts = csv_rows(dir / "p/counts.csv");
  CHECK(counts.size() == 3);
  const auto frames = csv_rows(dir / "e1/frames.csv");
  const RunConfig rc = parse_config(dir / "m1.ckpt.cfg");
  for (int t = 1; t <= 3; ++t) {
    const DensityMap pred = read_density(dir / "p" / frame_name("pred", t, ".raw"));
    const DotMap dots = read_dots_csv(SequenceLayout(seq3).dots_path(t), 64, 64);
    const ErrorPair e = pixel_mae_mse(pred, rasterize_density(dots, rc.trainer.sigma));
    const auto& row = frames[3 + t - 1];
    CHECK(std::stod(row[4]) == doctest::Approx(count(pred)).epsilon(1e-9));
    CHECK(std::stod(row[6]) == doctest::Approx(e.mae).epsilon(1e-9));
    CHECK(std::stod(row[7]) == doctest::Approx(e.mse).epsilon(1e-9));
    CHECK(std::stod(counts[t - 1][1]) == doctest::Approx(count(pred)).epsilon(1e-9));

    const Image png = read_png(dir / "p" / frame_name("pred", t, ".png"));
    const auto raw_max = std::max_element(pred.values.begin(), pred.values.end()) - pred.values.begin();
    CHECK(png.data[static_cast<std::size_t>(raw_max)] == 1.0f);
  }
  const std::string first = slurp(dir / "p" / frame_name("pred", 1, ".raw"));
  REQUIRE(run_cli("predict --ckpt " + (dir / "m1.ckpt").string() + " --seq " + seq3.string() + " --out " +
                  (dir / "p2").string()) == 0);
  CHECK(slurp(dir / "p2" / frame_name("pred", 1, ".raw")) == first);
}
