#include "nea/entropy.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <queue>

#include "nea/error.hpp"

namespace nea {

namespace {

constexpr int kValueClasses = 17;  // bit width of |v|, 0..16
constexpr int kRunClasses = 9;     // bit width of the zero run, 0..8
constexpr int kEob = kRunClasses * kValueClasses;
constexpr int kAlphabet = kEob + 1;
constexpr int kMaxCodeLength = 15;
constexpr std::uint32_t kMaxRun = 255;

int bit_width(std::uint32_t v) { return static_cast<int>(std::bit_width(v)); }

struct Symbol {
  int id;
  std::uint32_t run;
  std::int32_t value;
};

class BitWriter {
 public:
  void put(std::uint32_t bits, int count) {
    for (int i = count - 1; i >= 0; --i) {
      acc_ = static_cast<std::uint8_t>((acc_ << 1) | ((bits >> i) & 1U));
      if (++fill_ == 8) flush();
    }
  }
  std::vector<std::byte> finish() {
    if (fill_ > 0) {
      acc_ = static_cast<std::uint8_t>(acc_ << (8 - fill_));
      flush();
    }
    return std::move(out_);
  }
  std::vector<std::byte>& bytes() { return out_; }

 private:
  void flush() {
    out_.push_back(static_cast<std::byte>(acc_));
    acc_ = 0;
    fill_ = 0;
  }
  std::vector<std::byte> out_;
  std::uint8_t acc_ = 0;
  int fill_ = 0;
};

class BitReader {
 public:
  BitReader(std::span<const std::byte> data, std::size_t byte_pos) : data_(data), pos_(byte_pos * 8) {}

  std::uint32_t get(int count) {
    std::uint32_t v = 0;
    for (int i = 0; i < count; ++i) v = (v << 1) | bit();
    return v;
  }
  std::uint32_t bit() {
    if (pos_ >= data_.size() * 8) fail(Errc::DecodeFailure, "entropy stream truncated");
    const auto byte = std::to_integer<std::uint32_t>(data_[pos_ / 8]);
    const std::uint32_t b = (byte >> (7 - pos_ % 8)) & 1U;
    ++pos_;
    return b;
  }

 private:
  std::span<const std::byte> data_;
  std::size_t pos_;
};

std::vector<Symbol> symbolize(std::span<const std::int16_t> values) {
  std::vector<Symbol> out;
  std::uint32_t run = 0;
  for (const std::int16_t v : values) {
    if (v == 0) {
      ++run;
      continue;
    }
    while (run > kMaxRun) {
      out.push_back({bit_width(kMaxRun) * kValueClasses, kMaxRun, 0});
      run -= kMaxRun;
    }
    const auto mag = static_cast<std::uint32_t>(v < 0 ? -static_cast<std::int32_t>(v) : v);
    out.push_back({bit_width(run) * kValueClasses + bit_width(mag), run, v});
    run = 0;
  }
  out.push_back({kEob, 0, 0});
  return out;
}

// Huffman code lengths for the nonzero frequencies. Ties resolve on node
// creation order, so the result is deterministic.
std::array<int, kAlphabet> code_lengths(const std::array<std::uint64_t, kAlphabet>& freq) {
  std::array<int, kAlphabet> lengths{};
  std::vector<int> used;
  for (int s = 0; s < kAlphabet; ++s) {
    if (freq[s] > 0) used.push_back(s);
  }
  if (used.size() == 1) {
    lengths[used[0]] = 1;
    return lengths;
  }
  struct Node {
    std::uint64_t weight;
    int order;
    int left, right;  // -1 for leaves
    int symbol;
  };
  std::vector<Node> nodes;
  using Entry = std::pair<std::uint64_t, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (const int s : used) {
    nodes.push_back({freq[s], static_cast<int>(nodes.size()), -1, -1, s});
    heap.push({freq[s], nodes.back().order});
  }
  while (heap.size() > 1) {
    const auto a = heap.top();
    heap.pop();
    const auto b = heap.top();
    heap.pop();
    const int id = static_cast<int>(nodes.size());
    nodes.push_back({a.first + b.first, id, a.second, b.second, -1});
    heap.push({a.first + b.first, id});
  }
  std::vector<std::pair<int, int>> stack{{heap.top().second, 0}};
  while (!stack.empty()) {
    const auto [node, depth] = stack.back();
    stack.pop_back();
    if (nodes[node].left < 0) {
      lengths[nodes[node].symbol] = depth;
    } else {
      stack.push_back({nodes[node].left, depth + 1});
      stack.push_back({nodes[node].right, depth + 1});
    }
  }
  return lengths;
}

std::array<int, kAlphabet> limited_code_lengths(std::array<std::uint64_t, kAlphabet> freq) {
  for (;;) {
    auto lengths = code_lengths(freq);
    if (*std::max_element(lengths.begin(), lengths.end()) <= kMaxCodeLength) return lengths;
    for (auto& f : freq) {
      if (f > 0) f = (f + 1) / 2;
    }
  }
}

// Canonical code assignment: shorter codes first, symbol id within a length.
std::array<std::uint32_t, kAlphabet> canonical_codes(const std::array<int, kAlphabet>& lengths) {
  std::array<std::uint32_t, kAlphabet> codes{};
  std::uint32_t code = 0;
  for (int len = 1; len <= kMaxCodeLength; ++len) {
    for (int s = 0; s < kAlphabet; ++s) {
      if (lengths[s] == len) codes[s] = code++;
    }
    code <<= 1;
  }
  return codes;
}

}  // namespace

std::vector<std::byte> rle_huffman_encode(std::span<const std::int16_t> values) {
  const auto symbols = symbolize(values);
  std::array<std::uint64_t, kAlphabet> freq{};
  for (const auto& s : symbols) ++freq[s.id];
  const auto lengths = limited_code_lengths(freq);
  const auto codes = canonical_codes(lengths);

  BitWriter w;
  int used = 0;
  for (const int len : lengths) used += len > 0;
  w.put(static_cast<std::uint32_t>(used), 8);
  for (int s = 0; s < kAlphabet; ++s) {
    if (lengths[s] == 0) continue;
    w.put(static_cast<std::uint32_t>(s), 8);
    w.put(static_cast<std::uint32_t>(lengths[s]), 4);
  }
  for (const auto& s : symbols) {
    w.put(codes[s.id], lengths[s.id]);
    if (s.id == kEob) break;
    const int run_class = s.id / kValueClasses;
    const int value_class = s.id % kValueClasses;
    if (run_class > 1) w.put(s.run, run_class - 1);  // top bit implied
    if (value_class > 0) {
      const auto mag = static_cast<std::uint32_t>(s.value < 0 ? -s.value : s.value);
      w.put(s.value < 0 ? 1U : 0U, 1);
      if (value_class > 1) w.put(mag, value_class - 1);
    }
  }
  return w.finish();
}

std::vector<std::int16_t> rle_huffman_decode(std::span<const std::byte> stream, std::size_t n) {
  BitReader r(stream, 0);
  const int used = static_cast<int>(r.get(8));
  if (used < 1 || used > kAlphabet) fail(Errc::DecodeFailure, "entropy table has invalid symbol count");

  std::array<int, kAlphabet> lengths{};
  int previous = -1;
  std::uint64_t kraft = 0;
  for (int e = 0; e < used; ++e) {
    const int s = static_cast<int>(r.get(8));
    const int len = static_cast<int>(r.get(4));
    if (s >= kAlphabet || s <= previous) fail(Errc::DecodeFailure, "entropy table symbols not increasing");
    if (len < 1) fail(Errc::DecodeFailure, "entropy table has zero code length");
    lengths[s] = len;
    previous = s;
    kraft += std::uint64_t{1} << (kMaxCodeLength - len);
  }
  if (kraft > (std::uint64_t{1} << kMaxCodeLength)) fail(Errc::DecodeFailure, "entropy table oversubscribed");

  // Canonical decode tables.
  std::array<std::uint32_t, kMaxCodeLength + 2> first_code{}, count{}, offset{};
  std::vector<int> sorted;
  for (int len = 1; len <= kMaxCodeLength; ++len) {
    offset[len] = static_cast<std::uint32_t>(sorted.size());
    for (int s = 0; s < kAlphabet; ++s) {
      if (lengths[s] == len) sorted.push_back(s);
    }
    count[len] = static_cast<std::uint32_t>(sorted.size()) - offset[len];
  }
  std::uint32_t code = 0;
  for (int len = 1; len <= kMaxCodeLength; ++len) {
    first_code[len] = code;
    code = (code + count[len]) << 1;
  }

  std::vector<std::int16_t> out;
  out.reserve(n);
  for (;;) {
    std::uint32_t acc = 0;
    int symbol = -1;
    for (int len = 1; len <= kMaxCodeLength; ++len) {
      acc = (acc << 1) | r.bit();
      if (count[len] > 0 && acc >= first_code[len] && acc - first_code[len] < count[len]) {
        symbol = sorted[offset[len] + (acc - first_code[len])];
        break;
      }
    }
    if (symbol < 0) fail(Errc::DecodeFailure, "invalid entropy code");
    if (symbol == kEob) break;

    const int run_class = symbol / kValueClasses;
    const int value_class = symbol % kValueClasses;
    std::uint32_t run = 0;
    if (run_class == 1) {
      run = 1;
    } else if (run_class > 1) {
      run = (1U << (run_class - 1)) | r.get(run_class - 1);
    }
    if (run > n - out.size()) fail(Errc::DecodeFailure, "entropy stream decodes past the block length");
    out.insert(out.end(), run, 0);
    if (value_class == 0) continue;
    if (out.size() >= n) fail(Errc::DecodeFailure, "entropy stream decodes past the block length");
    const bool negative = r.bit() != 0;
    std::uint32_t mag = 1U << (value_class - 1);
    if (value_class > 1) mag |= r.get(value_class - 1);
    const std::int32_t v = negative ? -static_cast<std::int32_t>(mag) : static_cast<std::int32_t>(mag);
    if (v < -32768 || v > 32767) fail(Errc::DecodeFailure, "entropy value outside 16-bit range");
    out.push_back(static_cast<std::int16_t>(v));
  }
  out.resize(n, 0);
  return out;
}

}  // namespace nea
