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

#include "tunelab/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "tunelab/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload assumes a little-endian host");

namespace tunelab {

namespace {

constexpr const char* kMagic = "tunelab-checkpoint v1";

std::map<std::string, std::string> parse_kv_line(const std::string& line) {
  std::map<std::string, std::string> kv;
  std::istringstream in(line);
  std::string field;
  while (in >> field) {
    auto eq = field.find('=');
    if (eq == std::string::npos) continue;
    kv[field.substr(0, eq)] = field.substr(eq + 1);
  }
  return kv;
}

std::size_t parse_size(const std::string& s, const char* what) {
  try {
    return static_cast<std::size_t>(std::stoull(s));
  } catch (const std::exception&) {
    fail(ErrorCode::Io, std::string("checkpoint: bad ") + what + ": " + s);
  }
}

void validate_id(const std::string& id) {
  if (id.empty()) {
    fail(ErrorCode::InvalidArgument, "checkpoint: empty parameter id");
  }
  for (char ch : id) {
    if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '=') {
      fail(ErrorCode::InvalidArgument,
           "checkpoint: parameter id contains reserved characters: " + id);
    }
  }
}

}  // namespace

void save_checkpoint(const std::vector<const Parameter*>& params,
                     const std::string& path) {
  std::ostringstream manifest;
  manifest << kMagic << "\n";
  std::size_t offset = 0;
  for (const Parameter* p : params) {
    if (p == nullptr) {
      fail(ErrorCode::InvalidArgument, "checkpoint: null parameter");
    }
    validate_id(p->id);
    manifest << "param id=" << p->id << " block=" << p->block.str()
             << " shape=" << p->value.rows() << "x" << p->value.cols()
             << " offset=" << offset << " frozen=" << (p->frozen ? 1 : 0)
             << "\n";
    offset += p->value.size();
  }
  manifest << "payload doubles=" << offset << "\n";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    fail(ErrorCode::Io, "checkpoint: cannot open for writing: " + path);
  }
  const std::string header = manifest.str();
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const Parameter* p : params) {
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  out.flush();
  if (!out) {
    fail(ErrorCode::Io, "checkpoint: write failed: " + path);
  }
}

std::vector<CheckpointEntry> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(ErrorCode::Io, "checkpoint: cannot open: " + path);
  }
  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    fail(ErrorCode::Io, "checkpoint: bad magic line in " + path);
  }
  std::vector<CheckpointEntry> entries;
  std::size_t payload_doubles = 0;
  std::size_t running_offset = 0;
  bool saw_payload = false;
  while (std::getline(in, line)) {
    if (line.rfind("param ", 0) == 0) {
      auto kv = parse_kv_line(line.substr(6));
      for (const char* key : {"id", "block", "shape", "offset", "frozen"}) {
        if (kv.find(key) == kv.end()) {
          fail(ErrorCode::Io,
               std::string("checkpoint: manifest line missing ") + key);
        }
      }
      CheckpointEntry e;
      e.id = kv["id"];
      e.block = BlockLabel::parse(kv["block"]);
      const std::string& shape = kv["shape"];
      auto x = shape.find('x');
      if (x == std::string::npos) {
        fail(ErrorCode::Io, "checkpoint: bad shape: " + shape);
      }
      e.rows = parse_size(shape.substr(0, x), "shape");
      e.cols = parse_size(shape.substr(x + 1), "shape");
      std::size_t offset = parse_size(kv["offset"], "offset");
      if (offset != running_offset) {
        fail(ErrorCode::Io, "checkpoint: non-contiguous offset for '" + e.id +
                                "'");
      }
      running_offset += e.rows * e.cols;
      e.frozen = kv["frozen"] == "1";
      entries.push_back(std::move(e));
    } else if (line.rfind("payload ", 0) == 0) {
      auto kv = parse_kv_line(line.substr(8));
      if (kv.find("doubles") == kv.end()) {
        fail(ErrorCode::Io, "checkpoint: payload line missing size");
      }
      payload_doubles = parse_size(kv["doubles"], "payload size");
      saw_payload = true;
      break;
    } else if (line.empty()) {
      continue;
    } else {
      fail(ErrorCode::Io, "checkpoint: unexpected manifest line: " + line);
    }
  }
  if (!saw_payload) {
    fail(ErrorCode::Io, "checkpoint: missing payload marker in " + path);
  }
  std::size_t expected = 0;
  for (const CheckpointEntry& e : entries) expected += e.rows * e.cols;
  if (expected != payload_doubles) {
    fail(ErrorCode::Io, "checkpoint: payload size disagrees with manifest");
  }
  for (CheckpointEntry& e : entries) {
    e.data.resize(e.rows * e.cols);
    in.read(reinterpret_cast<char*>(e.data.data()),
            static_cast<std::streamsize>(e.data.size() * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) !=
        e.data.size() * sizeof(double)) {
      fail(ErrorCode::Io, "checkpoint: truncated payload in " + path);
    }
  }
  return entries;
}

std::vector<CheckpointEntry> snapshot(
    const std::vector<const Parameter*>& params) {
  std::vector<CheckpointEntry> entries;
  entries.reserve(params.size());
  for (const Parameter* p : params) {
    if (p == nullptr) {
      fail(ErrorCode::InvalidArgument, "snapshot: null parameter");
    }
    CheckpointEntry e;
    e.id = p->id;
    e.block = p->block;
    e.rows = p->value.rows();
    e.cols = p->value.cols();
    e.frozen = p->frozen;
    e.data.assign(p->value.data(), p->value.data() + p->value.size());
    entries.push_back(std::move(e));
  }
  return entries;
}

void restore(const std::vector<CheckpointEntry>& entries,
             const std::vector<Parameter*>& params) {
  std::map<std::string, const CheckpointEntry*> by_id;
  for (const CheckpointEntry& e : entries) by_id[e.id] = &e;
  for (Parameter* p : params) {
    auto it = by_id.find(p->id);
    if (it == by_id.end()) {
      fail(ErrorCode::InvalidArgument,
           "restore: checkpoint has no entry for parameter '" + p->id + "'");
    }
    const CheckpointEntry& e = *it->second;
    if (e.rows != p->value.rows() || e.cols != p->value.cols()) {
      fail(ErrorCode::Shape,
           "restore: shape mismatch for parameter '" + p->id + "'");
    }
    std::memcpy(p->value.data(), e.data.data(),
                e.data.size() * sizeof(double));
  }
}

}  // namespace tunelab
