// Copyright 2026 QITS Contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QITS_ERRORS_HPP
#define QITS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qits {

/// Invalid configuration value; `key` is the dotted path of the offending
/// entry ("source.pair_rate_per_s"), empty when the error is not tied to a
/// specific key.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

  private:
    std::string key_;
};

/// Malformed or inconsistent input data (timestamp files, CSV).
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A least-squares fit failed to converge or was degenerate.
class FitError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace qits

#endif
