/*
 * Copyright 2026 Tunelab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tunelab {

/// Flat `key = value` configuration file. Lines starting with `#` (after
/// optional whitespace) and blank lines are ignored; values may be quoted.
/// Duplicate keys are an error, as are unknown keys when the caller asks
/// for strict consumption via unused_keys().
class KeyValueFile {
 public:
  static KeyValueFile parse_file(const std::string& path);
  static KeyValueFile parse_text(const std::string& text,
                                 const std::string& origin = "<memory>");

  bool has(const std::string& key) const;

  std::string require_string(const std::string& key) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  std::int64_t require_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Keys in declaration order.
  std::vector<std::string> keys() const;

  /// Keys never touched by any getter so far; callers reject these to catch
  /// configuration typos early.
  std::vector<std::string> unused_keys() const;

 private:
  struct Item {
    std::string key;
    std::string value;
    mutable bool used = false;
  };
  const Item* find(const std::string& key) const;
  std::int64_t to_int(const Item& item) const;

  std::string origin_;
  std::vector<Item> items_;
};

}  // namespace tunelab
