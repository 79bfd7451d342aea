// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#include "tissuenet/error.hpp"

namespace tissuenet {

std::string_view to_string(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::config: return "config";
    case ErrorCategory::geometry: return "geometry";
    case ErrorCategory::partition: return "partition";
    case ErrorCategory::state: return "state";
    case ErrorCategory::domain: return "domain";
    case ErrorCategory::policy: return "policy";
    case ErrorCategory::parse: return "parse";
    case ErrorCategory::io: return "io";
    case ErrorCategory::format: return "format";
    case ErrorCategory::numeric: return "numeric";
  }
  return "unknown";
}

Error::Error(ErrorCategory category, const std::string& message)
    : std::runtime_error(std::string(to_string(category)) + ": " + message),
      category_(category),
      detail_(message) {}

void fail(ErrorCategory category, const std::string& message) {
  throw Error(category, message);
}

}  // namespace tissuenet
