/*
 Copyright 2026 The mabo-dmpc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "mabo/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace mabo::csv {

std::string format(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format(int v) { return std::to_string(v); }

Writer::Writer(const std::string& path, const std::vector<std::string>& columns)
    : out_(path, std::ios::binary), columns_(columns.size()) {
  if (!out_) throw std::runtime_error("csv: cannot open " + path);
  row(columns);
}

void Writer::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw std::logic_error("csv: column count mismatch");
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

}  // namespace mabo::csv
