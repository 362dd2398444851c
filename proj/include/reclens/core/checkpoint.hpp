// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 reclens authors
//
// Self-describing checkpoint container shared by recommenders, adapters and
// the reference language model. Layout:
//
//   8 bytes   magic "RLCK0001"
//   8 bytes   little-endian u64: header length in bytes
//   header    JSON: { "kind": str, "meta": {...}, "tensors": [{name,rows,cols}] }
//   payload   raw little-endian f64 blobs, one per tensor, in header order
//
// Doubles are written verbatim, so a reload reproduces bit-identical values.

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reclens/core/error.hpp"
#include "reclens/core/hash.hpp"
#include "reclens/core/mat.hpp"

namespace reclens {

struct Checkpoint {
  std::string kind;
  nlohmann::json meta;
  std::vector<std::pair<std::string, Mat>> tensors;

  void add(const std::string& name, const Mat& m) { tensors.emplace_back(name, m); }

  const Mat& tensor(const std::string& name) const {
    for (const auto& [n, m] : tensors)
      if (n == name) return m;
    throw ParseError("checkpoint is missing tensor '" + name + "'");
  }

  bool has_tensor(const std::string& name) const {
    for (const auto& [n, m] : tensors)
      if (n == name) return true;
    return false;
  }

  std::string serialize() const {
    nlohmann::json header;
    header["kind"] = kind;
    header["meta"] = meta;
    auto tl = nlohmann::json::array();
    for (const auto& [name, m] : tensors)
      tl.push_back({{"name", name}, {"rows", m.rows}, {"cols", m.cols}});
    header["tensors"] = tl;
    const std::string hs = header.dump();

    std::string out;
    out.reserve(16 + hs.size() + total_bytes());
    out.append("RLCK0001", 8);
    uint64_t hlen = hs.size();
    char lenbuf[8];
    std::memcpy(lenbuf, &hlen, 8);
    out.append(lenbuf, 8);
    out.append(hs);
    for (const auto& [name, m] : tensors) {
      const char* p = reinterpret_cast<const char*>(m.data.data());
      out.append(p, m.data.size() * sizeof(double));
    }
    return out;
  }

  static Checkpoint deserialize(const std::string& bytes) {
    if (bytes.size() < 16 || bytes.compare(0, 8, "RLCK0001") != 0)
      throw ParseError("not a checkpoint file (bad magic)");
    uint64_t hlen = 0;
    std::memcpy(&hlen, bytes.data() + 8, 8);
    if (16 + hlen > bytes.size()) throw ParseError("checkpoint header truncated");
    nlohmann::json header;
    try {
      header = nlohmann::json::parse(bytes.substr(16, hlen));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("checkpoint header is not valid JSON: ") + e.what());
    }
    Checkpoint ck;
    ck.kind = header.at("kind").get<std::string>();
    ck.meta = header.value("meta", nlohmann::json::object());
    size_t off = 16 + hlen;
    for (const auto& t : header.at("tensors")) {
      Mat m(t.at("rows").get<int>(), t.at("cols").get<int>());
      const size_t nb = m.data.size() * sizeof(double);
      if (off + nb > bytes.size()) throw ParseError("checkpoint payload truncated");
      std::memcpy(m.data.data(), bytes.data() + off, nb);
      off += nb;
      ck.tensors.emplace_back(t.at("name").get<std::string>(), std::move(m));
    }
    return ck;
  }

  // Fingerprint of the serialized bytes; consumers reference artifacts by
  // this value rather than by path alone.
  std::string fingerprint() const { return fingerprint_bytes(serialize()); }

  void save(const std::string& path) const {
    const std::string bytes = serialize();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write on checkpoint: " + path);
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PrerequisiteError("checkpoint not found: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize(ss.str());
  }

 private:
  size_t total_bytes() const {
    size_t n = 0;
    for (const auto& [name, m] : tensors) n += m.data.size() * sizeof(double);
    return n;
  }
};

}  // namespace reclens
