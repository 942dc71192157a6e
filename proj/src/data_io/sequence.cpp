#include <algorithm>
#include <cctype>
#include <cstdio>

#include "bipath/data_io.hpp"

namespace bipath {

std::string frame_name(const char* prefix, int index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%06d%s", prefix, index, ext);
  return buf;
}

fs::path SequenceLayout::frame_path(int index) const { return dir_ / frame_name("img", index, ".png"); }
fs::path SequenceLayout::dots_path(int index) const { return dir_ / frame_name("img", index, ".csv"); }
fs::path SequenceLayout::flo_path(int index) const { return dir_ / frame_name("flow", index, ".flo"); }
fs::path SequenceLayout::flow_input_path(int index) const { return dir_ / frame_name("flowin", index, ".bin"); }

int SequenceLayout::frame_count() const {
  if (!fs::is_directory(dir_)) throw std::runtime_error("sequence directory " + dir_.string() + " does not exist");
  int n = 0;
  while (fs::exists(frame_path(n + 1))) ++n;
  if (n == 0) throw std::runtime_error("sequence " + dir_.string() + " has no frames (expected img000001.png)");
  for (const auto& entry : fs::directory_iterator(dir_)) {
    const std::string name = entry.path().filename().string();
    const bool digits = name.size() == 13 && std::all_of(name.begin() + 3, name.begin() + 9, ::isdigit);
    if (digits && name.rfind("img", 0) == 0 && entry.path().extension() == ".png") {
      const int index = std::stoi(name.substr(3, 6));
      if (index > n) throw std::runtime_error("sequence " + dir_.string() + ": frame indices are not contiguous");
    }
  }
  for (int i = 1; i <= n; ++i) {
    if (!fs::exists(dots_path(i))) throw std::runtime_error("missing annotation file " + dots_path(i).string());
  }
  return n;
}

}  // namespace bipath
