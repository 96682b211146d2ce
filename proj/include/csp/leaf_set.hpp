// Copyright 2026 The csp Authors
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

#ifndef CSP_LEAF_SET_HPP_
#define CSP_LEAF_SET_HPP_

#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace csp {

// Fixed-width bitset over leaf positions (0 .. leaf_count-1). All binary
// operations require both operands to have the same width.
class LeafSet {
 public:
  LeafSet() = default;
  explicit LeafSet(std::size_t width)
      : width_(width), words_((width + 63) / 64, 0) {}

  std::size_t width() const { return width_; }

  bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  void reset(std::size_t i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  void set_all() {
    for (auto& w : words_) w = ~std::uint64_t{0};
    trim();
  }
  void clear() {
    for (auto& w : words_) w = 0;
  }

  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  bool none() const {
    for (auto w : words_)
      if (w) return false;
    return true;
  }
  bool any() const { return !none(); }

  LeafSet& operator|=(const LeafSet& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
    return *this;
  }
  LeafSet& operator&=(const LeafSet& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
    return *this;
  }
  // this := this \ o
  LeafSet& subtract(const LeafSet& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~o.words_[i];
    return *this;
  }

  bool is_subset_of(const LeafSet& o) const {
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & ~o.words_[i]) return false;
    return true;
  }
  bool intersects(const LeafSet& o) const {
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & o.words_[i]) return true;
    return false;
  }
  // |this \ o|
  std::size_t count_minus(const LeafSet& o) const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < words_.size(); ++i)
      c += static_cast<std::size_t>(std::popcount(words_[i] & ~o.words_[i]));
    return c;
  }

  // Calls fn(i) for every set position in ascending order.
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t wi = 0; wi < words_.size(); ++wi) {
      std::uint64_t w = words_[wi];
      while (w) {
        const int b = std::countr_zero(w);
        fn(wi * 64 + static_cast<std::size_t>(b));
        w &= w - 1;
      }
    }
  }

  std::vector<std::size_t> positions() const {
    std::vector<std::size_t> out;
    out.reserve(count());
    for_each([&](std::size_t i) { out.push_back(i); });
    return out;
  }

  std::size_t hash() const { return HashWords([&](std::size_t i) { return words_[i]; }); }
  // hash() of (*this | o) without forming it.
  std::size_t hash_union(const LeafSet& o) const {
    return HashWords([&](std::size_t i) { return words_[i] | o.words_[i]; });
  }
  bool equals_union(const LeafSet& a, const LeafSet& b) const {
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] != (a.words_[i] | b.words_[i])) return false;
    return true;
  }

  friend bool operator==(const LeafSet&, const LeafSet&) = default;

  friend LeafSet operator|(LeafSet a, const LeafSet& b) { return a |= b; }

 private:
  template <typename Word>
  std::size_t HashWords(Word word) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ width_;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      h ^= word(i) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      h *= 0xbf58476d1ce4e5b9ULL;
    }
    return static_cast<std::size_t>(h);
  }

  void trim() {
    if (width_ % 64 != 0 && !words_.empty())
      words_.back() &= (std::uint64_t{1} << (width_ % 64)) - 1;
  }

  std::size_t width_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace csp

#endif  // CSP_LEAF_SET_HPP_
