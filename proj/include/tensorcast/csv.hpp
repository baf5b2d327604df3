/* Copyright 2026 The TensorCast Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tensorcast/types.hpp"

namespace tensorcast::csv {

// Two-column unsigned CSV, `a,b` per line, optional one-line header.
struct U64Pairs {
  std::vector<std::uint64_t> first;
  std::vector<std::uint64_t> second;
};

namespace detail {

inline bool parse_u64(const std::string& field, std::uint64_t& out) {
  if (field.empty()) return false;
  std::uint64_t v = 0;
  for (char c : field) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  out = v;
  return true;
}

inline std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline U64Pairs load_u64_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) tensorcast::detail::fail("cannot open " + path);

  U64Pairs out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = detail::strip(line);
    if (s.empty()) continue;
    const std::size_t comma = s.find(',');
    if (comma == std::string::npos) {
      tensorcast::detail::fail(path + ":" + std::to_string(line_no) +
                               ": expected two comma-separated fields");
    }
    std::uint64_t a = 0, b = 0;
    const bool ok = detail::parse_u64(detail::strip(s.substr(0, comma)), a) &&
                    detail::parse_u64(detail::strip(s.substr(comma + 1)), b);
    if (!ok) {
      if (line_no == 1) continue;  // header row
      tensorcast::detail::fail(path + ":" + std::to_string(line_no) +
                               ": malformed unsigned field");
    }
    out.first.push_back(a);
    out.second.push_back(b);
  }
  if (out.first.empty()) {
    tensorcast::detail::fail(path + ": no data rows");
  }
  return out;
}

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path);
  if (!out) tensorcast::detail::fail("cannot write " + path);
  out << contents;
}

}  // namespace tensorcast::csv
