// Copyright 2026 The claimscope Authors.
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

// Minimal RFC 4180 reader and writer. Quoted fields may span lines.

#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace claimscope::csv {

class CsvReader {
 public:
  explicit CsvReader(std::istream &in) : in_(in) {}

  // Next record, or nullopt at end of input. Throws on an unterminated quote.
  std::optional<std::vector<std::string>> next() {
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool any = false;
    line_ = next_line_;
    int c;
    while ((c = in_.get()) != std::char_traits<char>::eof()) {
      any = true;
      char ch = static_cast<char>(c);
      if (in_quotes) {
        if (ch == '"') {
          if (in_.peek() == '"') {
            in_.get();
            field += '"';
          } else {
            in_quotes = false;
          }
        } else {
          if (ch == '\n') ++next_line_;
          field += ch;
        }
        continue;
      }
      if (ch == '"') {
        in_quotes = true;
      } else if (ch == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else if (ch == '\r') {
        if (in_.peek() == '\n') continue;
        field += ch;
      } else if (ch == '\n') {
        ++next_line_;
        fields.push_back(std::move(field));
        return fields;
      } else {
        field += ch;
      }
    }
    if (in_quotes) {
      throw std::runtime_error("unterminated quoted field starting on line " + std::to_string(line_));
    }
    if (!any) return std::nullopt;
    fields.push_back(std::move(field));
    return fields;
  }

  // 1-based physical line on which the last returned record started.
  std::size_t line() const { return line_; }

 private:
  std::istream &in_;
  std::size_t line_ = 1;
  std::size_t next_line_ = 1;
};

inline std::string escape(std::string_view field) {
  bool needs = field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void write_row(std::ostream &out, const std::vector<std::string> &fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

}  // namespace claimscope::csv
