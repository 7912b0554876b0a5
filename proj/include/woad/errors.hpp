// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace woad {

/// Malformed input file. `locus` is a byte offset for binary formats and a
/// 1-based line number for text formats.
class ParseError : public std::runtime_error {
 public:
  enum class Unit { Byte, Line };

  ParseError(std::string source, Unit unit, std::uint64_t locus, const std::string& message)
      : std::runtime_error(source + (unit == Unit::Byte ? ": byte " : ":") + std::to_string(locus) +
                           ": " + message),
        source(std::move(source)),
        unit(unit),
        locus(locus) {}

  std::string source;
  Unit unit;
  std::uint64_t locus;
};

}  // namespace woad
