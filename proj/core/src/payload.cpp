// Copyright 2026 The feelsim Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include "feelsim/payload.hpp"

#include <cmath>
#include <stdexcept>

namespace feelsim {
namespace {

class BitWriter {
 public:
  void put(std::uint64_t value, std::size_t width) {
    for (std::size_t b = width; b-- > 0;) {
      if (count_ % 8 == 0) bytes_.push_back(0);
      if ((value >> b) & 1U) bytes_.back() |= static_cast<std::uint8_t>(0x80U >> (count_ % 8));
      ++count_;
    }
  }
  std::size_t count() const { return count_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t count_ = 0;
};

class BitReader {
 public:
  explicit BitReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}
  std::uint64_t get(std::size_t width) {
    std::uint64_t v = 0;
    for (std::size_t b = 0; b < width; ++b) {
      if (pos_ / 8 >= bytes_.size()) throw std::invalid_argument("payload: truncated bit stream");
      const bool bit = (bytes_[pos_ / 8] >> (7 - pos_ % 8)) & 1U;
      v = (v << 1) | static_cast<std::uint64_t>(bit);
      ++pos_;
    }
    return v;
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

LocalPayload encode_local_payload(const QuantizedUpdate& update) {
  const std::size_t dim = update.mask.dim();
  const std::size_t pos_bits = ceil_log2(dim);
  const auto level_bits = static_cast<std::size_t>(update.bits - 1);
  const std::uint64_t s = update.max_level();

  LocalPayload out;
  out.header = update.scale;
  BitWriter w;
  for (std::size_t p : update.mask.positions()) w.put(p, pos_bits);

  int saturated = 0;
  for (std::size_t i = 0; i < update.levels.size(); ++i) {
    const std::uint64_t level = update.levels[i];
    if (level == s) {
      if (++saturated > 1) {
        throw std::invalid_argument("encode_local_payload: more than one saturated level");
      }
      w.put(1, 1);
      w.put(0, level_bits);
      if (update.signs[i] < 0) out.header = -update.scale;
    } else {
      w.put(level != 0 && update.signs[i] < 0 ? 1 : 0, 1);
      w.put(level, level_bits);
    }
  }
  out.bit_count = w.count();
  out.bytes = w.take();
  return out;
}

QuantizedUpdate decode_local_payload(const LocalPayload& payload, std::size_t dim, int bits,
                                     std::size_t count) {
  const std::size_t pos_bits = ceil_log2(dim);
  const auto level_bits = static_cast<std::size_t>(bits - 1);
  BitReader r(payload.bytes);

  std::vector<std::size_t> positions(count);
  for (auto& p : positions) p = static_cast<std::size_t>(r.get(pos_bits));

  QuantizedUpdate q;
  q.mask = MaskVector(dim, std::move(positions));
  q.bits = bits;
  q.scale = std::abs(payload.header);
  q.signs.assign(count, 1);
  q.levels.assign(count, 0);
  for (std::size_t i = 0; i < count; ++i) {
    const bool negative = r.get(1) != 0;
    const std::uint64_t level = r.get(level_bits);
    if (negative && level == 0) {
      q.levels[i] = q.max_level();
      q.signs[i] = std::signbit(payload.header) ? -1 : 1;
    } else {
      q.levels[i] = level;
      q.signs[i] = negative ? -1 : 1;
    }
  }
  return q;
}

}  // namespace feelsim
