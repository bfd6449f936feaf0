#pragma once

// Little-endian scalar (de)serialization shared by the volume reader and the
// codebook container.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>
#include <type_traits>
#include <utility>

namespace nea::bytes {

template <typename T>
  requires std::is_arithmetic_v<T>
T load_le(const std::byte* p) noexcept {
  T value;
  std::memcpy(&value, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto* raw = reinterpret_cast<unsigned char*>(&value);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
      std::swap(raw[i], raw[sizeof(T) - 1 - i]);
    }
  }
  return value;
}

template <typename T>
  requires std::is_arithmetic_v<T>
void store_le(std::byte* p, T value) noexcept {
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto* raw = reinterpret_cast<unsigned char*>(&value);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
      std::swap(raw[i], raw[sizeof(T) - 1 - i]);
    }
  }
  std::memcpy(p, &value, sizeof(T));
}

/// Append-only little-endian buffer.
class Writer {
 public:
  template <typename T>
  void put(T value) {
    const auto at = buf_.size();
    buf_.resize(at + sizeof(T));
    store_le(buf_.data() + at, value);
  }

  void put_bytes(std::span<const std::byte> data) {
    buf_.insert(buf_.end(), data.begin(), data.end());
  }

  std::size_t size() const noexcept { return buf_.size(); }
  std::span<const std::byte> view() const noexcept { return buf_; }
  std::vector<std::byte>& data() noexcept { return buf_; }

 private:
  std::vector<std::byte> buf_;
};

/// Bounds-checked little-endian cursor. `ok()` turns false on the first
/// over-read and every later get returns zero.
class Reader {
 public:
  explicit Reader(std::span<const std::byte> data) : data_(data) {}

  template <typename T>
  T get() noexcept {
    if (!ok_ || data_.size() - pos_ < sizeof(T)) {
      ok_ = false;
      return T{};
    }
    T v = load_le<T>(data_.data() + pos_);
    pos_ += sizeof(T);
    return v;
  }

  bool ok() const noexcept { return ok_; }
  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

 private:
  std::span<const std::byte> data_;
  std::size_t pos_ = 0;
  bool ok_ = true;
};

}  // namespace nea::bytes
