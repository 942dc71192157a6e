#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "bipath/data_io.hpp"

namespace bipath::detail {

// Little-endian packing. Hosts are assumed little-endian; static_assert guards it.
static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

class ByteWriter {
 public:
  template <class V>
  void put(V value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(V));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  template <class V>
  V get() {
    V value;
    get_bytes(&value, sizeof(V));
    return value;
  }
  void get_bytes(void* out, std::size_t n) {
    if (n > bytes_.size() - pos_) throw FormatError(what_ + ": truncated at byte " + std::to_string(bytes_.size()));
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  void expect_end() const {
    if (pos_ != bytes_.size()) throw FormatError(what_ + ": " + std::to_string(remaining()) + " trailing bytes");
  }
  /// Fails early when the declared payload cannot fit in what is left.
  void require(std::size_t n) const {
    if (n > remaining()) throw FormatError(what_ + ": truncated, payload needs " + std::to_string(n) + " bytes");
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace bipath::detail
