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

#ifndef MABO_CSV_HPP
#define MABO_CSV_HPP

#include <fstream>
#include <string>
#include <vector>

namespace mabo::csv {

/// Round-trip-exact, locale-independent double formatting (%.17g).
std::string format(double v);
std::string format(int v);

/// Minimal column-stable CSV writer; the header is written on construction.
class Writer {
 public:
  Writer(const std::string& path, const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  size_t columns_;
};

}  // namespace mabo::csv

#endif  // MABO_CSV_HPP
