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

#include "tunelab/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "tunelab/error.hpp"

namespace tunelab {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

KeyValueFile KeyValueFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    fail(ErrorCode::Io, "config: cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), path);
}

KeyValueFile KeyValueFile::parse_text(const std::string& text,
                                      const std::string& origin) {
  KeyValueFile kv;
  kv.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::InvalidArgument,
           "config: missing '=' at " + origin + ":" + std::to_string(lineno));
    }
    Item item;
    item.key = trim(t.substr(0, eq));
    item.value = trim(t.substr(eq + 1));
    if (item.key.empty()) {
      fail(ErrorCode::InvalidArgument,
           "config: empty key at " + origin + ":" + std::to_string(lineno));
    }
    if (item.value.size() >= 2 && item.value.front() == '"' &&
        item.value.back() == '"') {
      item.value = item.value.substr(1, item.value.size() - 2);
    }
    for (const Item& existing : kv.items_) {
      if (existing.key == item.key) {
        fail(ErrorCode::InvalidArgument,
             "config: duplicate key '" + item.key + "' in " + origin);
      }
    }
    kv.items_.push_back(std::move(item));
  }
  return kv;
}

const KeyValueFile::Item* KeyValueFile::find(const std::string& key) const {
  for (const Item& item : items_) {
    if (item.key == key) {
      item.used = true;
      return &item;
    }
  }
  return nullptr;
}

bool KeyValueFile::has(const std::string& key) const {
  return find(key) != nullptr;
}

std::string KeyValueFile::require_string(const std::string& key) const {
  const Item* item = find(key);
  if (item == nullptr) {
    fail(ErrorCode::InvalidArgument,
         "config: missing required key '" + key + "' in " + origin_);
  }
  return item->value;
}

std::string KeyValueFile::get_string(const std::string& key,
                                     const std::string& fallback) const {
  const Item* item = find(key);
  return item == nullptr ? fallback : item->value;
}

std::int64_t KeyValueFile::to_int(const Item& item) const {
  try {
    std::size_t used = 0;
    std::int64_t v = std::stoll(item.value, &used);
    if (used != item.value.size()) throw std::invalid_argument(item.value);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidArgument, "config: key '" + item.key +
                                         "' is not an integer: '" +
                                         item.value + "'");
  }
}

std::int64_t KeyValueFile::require_int(const std::string& key) const {
  const Item* item = find(key);
  if (item == nullptr) {
    fail(ErrorCode::InvalidArgument,
         "config: missing required key '" + key + "' in " + origin_);
  }
  return to_int(*item);
}

std::int64_t KeyValueFile::get_int(const std::string& key,
                                   std::int64_t fallback) const {
  const Item* item = find(key);
  return item == nullptr ? fallback : to_int(*item);
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
  const Item* item = find(key);
  if (item == nullptr) return fallback;
  try {
    std::size_t used = 0;
    double v = std::stod(item->value, &used);
    if (used != item->value.size()) throw std::invalid_argument(item->value);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidArgument, "config: key '" + key +
                                         "' is not a number: '" +
                                         item->value + "'");
  }
}

bool KeyValueFile::get_bool(const std::string& key, bool fallback) const {
  const Item* item = find(key);
  if (item == nullptr) return fallback;
  std::string v = item->value;
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(ErrorCode::InvalidArgument,
       "config: key '" + key + "' is not a boolean: '" + item->value + "'");
}

std::vector<std::string> KeyValueFile::keys() const {
  std::vector<std::string> out;
  out.reserve(items_.size());
  for (const Item& item : items_) out.push_back(item.key);
  return out;
}

std::vector<std::string> KeyValueFile::unused_keys() const {
  std::vector<std::string> out;
  for (const Item& item : items_) {
    if (!item.used) out.push_back(item.key);
  }
  return out;
}

}  // namespace tunelab
