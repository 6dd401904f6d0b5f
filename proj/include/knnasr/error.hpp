// Copyright 2026 The knnasr Authors
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace knnasr {

/// Failure classes. The CLI maps these onto process exit codes.
enum class Errc {
  invalid_argument,  // caller violated a precondition
  dim_mismatch,
  non_finite,
  out_of_range,      // token id >= vocab, bad entry id, ...
  not_found,         // unknown speaker, missing file
  io,
  // Strict reader failures.
  bad_magic,
  truncated,
  count_mismatch,
  invalid_value,
  trailing_data,
  internal,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

  /// True for errors raised by the strict binary readers.
  bool is_format_error() const noexcept {
    return code_ == Errc::bad_magic || code_ == Errc::truncated || code_ == Errc::count_mismatch ||
           code_ == Errc::invalid_value || code_ == Errc::trailing_data;
  }

 private:
  Errc code_;
};

}  // namespace knnasr
