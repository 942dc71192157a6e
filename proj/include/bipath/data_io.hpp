#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "bipath/density_metrics.hpp"
#include "bipath/image.hpp"
#include "bipath/model.hpp"
#include "bipath/optical_flow.hpp"

namespace bipath {

namespace fs = std::filesystem;

/// Malformed or truncated file contents.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> read_bytes(const fs::path& path);
/// Writes through a sibling temp file and renames it over `path`.
void write_bytes_atomic(const fs::path& path, const std::vector<std::uint8_t>& bytes);
void write_text_atomic(const fs::path& path, const std::string& text);

// Middlebury .flo
std::vector<std::uint8_t> encode_flo(const FlowField& flow);
FlowField decode_flo(const std::vector<std::uint8_t>& bytes);
void write_flo(const fs::path& path, const FlowField& flow);
FlowField read_flo(const fs::path& path);

/// Dots as `x,y` lines. Line numbers in errors are 1-based.
DotMap parse_dots_csv(const std::string& text, int width, int height);
DotMap read_dots_csv(const fs::path& path, int width, int height);
std::string format_dots_csv(const DotMap& dots);

// Model checkpoints
constexpr std::uint32_t kCheckpointVersion = 1;
std::vector<std::uint8_t> encode_checkpoint(const BiPathModel<float>& model);
void decode_checkpoint(BiPathModel<float>& model, const std::vector<std::uint8_t>& bytes);
void save_checkpoint(const BiPathModel<float>& model, const fs::path& path);
void load_checkpoint(BiPathModel<float>& model, const fs::path& path);

// Density maps: raw u32 w, u32 h, then float32 row-major; PNG preview scaled by the map maximum.
std::vector<std::uint8_t> encode_density(const DensityMap& map);
DensityMap decode_density(const std::vector<std::uint8_t>& bytes);
void write_density(const fs::path& path, const DensityMap& map);
DensityMap read_density(const fs::path& path);
void write_density_png(const fs::path& path, const DensityMap& map);

// Flow-branch input planes: u32 w, u32 h, u8 mode, f32 M, then three float32 planes.
std::vector<std::uint8_t> encode_flow_input(const FlowInput& input);
FlowInput decode_flow_input(const std::vector<std::uint8_t>& bytes);
void write_flow_input(const fs::path& path, const FlowInput& input);
FlowInput read_flow_input(const fs::path& path);

// 8-bit PNG, RGB or gray
Image read_png(const fs::path& path);
void write_png(const fs::path& path, const Image& image);

/// On-disk sequence: img000001.png + img000001.csv per frame, optional caches, sequence.cfg.
class SequenceLayout {
 public:
  explicit SequenceLayout(fs::path dir) : dir_(std::move(dir)) {}

  const fs::path& dir() const noexcept { return dir_; }
  fs::path frame_path(int index) const;
  fs::path dots_path(int index) const;
  fs::path flo_path(int index) const;
  fs::path flow_input_path(int index) const;
  fs::path manifest_path() const { return dir_ / "sequence.cfg"; }

  /// Number of frames; throws unless frames run contiguously from 1 and each has annotations.
  int frame_count() const;

 private:
  fs::path dir_;
};

std::string frame_name(const char* prefix, int index, const char* ext);

}  // namespace bipath
