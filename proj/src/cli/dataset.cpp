#include <charconv>
#include <fstream>
#include <sstream>

#include "bipath/cli.hpp"
#include "bipath/data_io.hpp"

namespace bipath {

namespace {

std::string dis_line(const DisParams& dis) {
  char eps[32];
  auto r = std::to_chars(eps, eps + sizeof eps, dis.densify_eps);
  std::ostringstream os;
  os << "dis patch_size=" << dis.patch_size << " patch_stride=" << dis.patch_stride << " iterations=" << dis.iterations
     << " pyramid_factor=" << dis.pyramid_factor << " min_level_dim=" << dis.min_level_dim
     << " densify_eps=" << std::string(eps, r.ptr);
  return os.str();
}

}  // namespace

std::string flow_stamp(const DisParams& dis, FlowEncoding mode, double tau) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, tau);
  return dis_line(dis) + "\nencode=" + to_string(mode) + " tau=" + std::string(buf, r.ptr) + "\n";
}

void attach_flow(SequenceData& seq, const DisParams& dis) {
  const int n = static_cast<int>(seq.frames.size());
  if (n < 2) throw std::invalid_argument("sequence " + seq.id + " needs at least two frames for flow");
  std::vector<FlowField> pair_flow;
  std::vector<Image> pair_sub;
  for (int t = 0; t + 1 < n; ++t) {
    pair_flow.push_back(dis_flow(seq.frames[t], seq.frames[t + 1], dis));
    pair_sub.push_back(frame_difference(seq.frames[t], seq.frames[t + 1]));
  }
  seq.flow.clear();
  seq.f_sub.clear();
  for (int t = 0; t < n; ++t) {
    const int p = std::min(t, n - 2);
    seq.flow.push_back(pair_flow[p]);
    seq.f_sub.push_back(pair_sub[p]);
  }
}

SequenceData sequence_from_generated(const GeneratedSequence& g, const std::string& id, const DisParams& dis) {
  SequenceData seq;
  seq.id = id;
  seq.frames = g.frames;
  seq.dots = g.dots;
  attach_flow(seq, dis);
  return seq;
}

SequenceData load_sequence(const fs::path& dir, const DisParams& dis) {
  const SequenceLayout layout(dir);
  const int n = layout.frame_count();
  if (n < 2) throw std::runtime_error("sequence " + dir.string() + " needs at least two frames");
  SequenceData seq;
  seq.id = dir.filename().string();
  if (seq.id.empty()) seq.id = dir.parent_path().filename().string();
  for (int i = 1; i <= n; ++i) {
    Image frame = read_png(layout.frame_path(i));
    seq.dots.push_back(read_dots_csv(layout.dots_path(i), frame.width, frame.height));
    if (!seq.frames.empty() && !frame.same_size(seq.frames.front())) {
      throw std::runtime_error("frame " + layout.frame_path(i).string() + " differs in size from frame 1");
    }
    seq.frames.push_back(std::move(frame));
  }

  bool cached = false;
  const fs::path stamp = dir / "flow.stamp";
  if (fs::exists(stamp)) {
    std::ifstream in(stamp);
    std::string first;
    std::getline(in, first);
    cached = first == dis_line(dis);
    for (int i = 1; cached && i < n; ++i) cached = fs::exists(layout.flo_path(i));
  }
  if (!cached) {
    attach_flow(seq, dis);
    return seq;
  }
  for (int t = 0; t < n; ++t) {
    const int p = std::min(t, n - 2);
    FlowField f = read_flo(layout.flo_path(p + 1));
    if (f.width != seq.frames[0].width || f.height != seq.frames[0].height) {
      throw std::runtime_error("cached flow " + layout.flo_path(p + 1).string() + " does not match the frame size");
    }
    seq.flow.push_back(std::move(f));
    seq.f_sub.push_back(frame_difference(seq.frames[p], seq.frames[p + 1]));
  }
  return seq;
}

std::vector<SampleGroup> make_groups(const SequenceData& seq, FlowEncoding mode, double tau) {
  std::vector<SampleGroup> out;
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    SampleGroup g;
    g.image = seq.frames[t];
    g.flow = encode_flow(threshold_filter(seq.flow[t], tau), seq.f_sub[t], mode);
    g.dots = seq.dots[t];
    g.sequence_id = seq.id;
    g.frame_index = static_cast<int>(t) + 1;
    g.check();
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<SampleGroup> make_groups(const std::vector<SequenceData>& seqs, FlowEncoding mode, double tau) {
  std::vector<SampleGroup> out;
  for (const SequenceData& s : seqs) {
    auto g = make_groups(s, mode, tau);
    out.insert(out.end(), std::make_move_iterator(g.begin()), std::make_move_iterator(g.end()));
  }
  return out;
}

}  // namespace bipath
