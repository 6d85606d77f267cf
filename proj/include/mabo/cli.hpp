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

#ifndef MABO_CLI_HPP
#define MABO_CLI_HPP

#include <string>
#include <vector>

namespace mabo::cli {

/// Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 schema error.
int run(const std::vector<std::string>& args);

}  // namespace mabo::cli

#endif  // MABO_CLI_HPP
