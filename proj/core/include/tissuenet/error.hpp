// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tissuenet {

/// Coarse failure classes. The CLI prints the category as a stable,
/// machine-parseable token, so values must not be renamed.
enum class ErrorCategory {
  config,     // inconsistent sizes or options supplied by the caller
  geometry,   // convolution / pooling geometry yields no output
  partition,  // channel partition does not sum to the layer width
  state,      // call order violated (e.g. backward before forward)
  domain,     // numeric argument outside its domain
  policy,     // hybrid unit selection could not complete
  parse,      // malformed configuration text
  io,         // file missing or unreadable
  format,     // file readable but content violates the format
  numeric,    // non-finite values during training
};

std::string_view to_string(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message);

  ErrorCategory category() const noexcept { return category_; }
  /// Message without the category prefix, for re-wrapping with context.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCategory category_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorCategory category, const std::string& message);

}  // namespace tissuenet
