// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>
#include <type_traits>

namespace woad {

/// 64-bit FNV-1a, used for checkpoint and corpus fingerprints.
class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  void add(const T& value) {
    bytes(&value, sizeof(T));
  }

  void add(std::string_view s) { bytes(s.data(), s.size()); }

  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace woad
