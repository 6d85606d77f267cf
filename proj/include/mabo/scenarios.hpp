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

#ifndef MABO_SCENARIOS_HPP
#define MABO_SCENARIOS_HPP

#include <string>
#include <vector>

#include "mabo/scenario.hpp"

namespace mabo::scenarios {

/// Identifiers of the bundled scenarios (also shipped under scenarios/).
std::vector<std::string> list_scenarios();

/// The raw JSON document of a bundled scenario.
const std::string& scenario_document(const std::string& identifier);

/// Parsed and validated bundled scenario; throws on unknown identifiers.
Scenario load_scenario(const std::string& identifier);

}  // namespace mabo::scenarios

#endif  // MABO_SCENARIOS_HPP
