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

#ifndef MABO_SCENARIO_JSON_HPP
#define MABO_SCENARIO_JSON_HPP

#include <string>

#include "mabo/scenario.hpp"

namespace mabo::config {

/// Parses a UTF-8 JSON scenario document: defaults applied, unknown keys
/// rejected by the full path, structural validation run. Throws SchemaError.
Scenario parse_scenario(const std::string& document);

/// Reads and parses a scenario file.
Scenario load_scenario_file(const std::string& path);

/// Canonical JSON serialization of the effective config (defaults expanded);
/// parse(serialize(s)) == s.
std::string serialize_scenario(const Scenario& scenario);

}  // namespace mabo::config

#endif  // MABO_SCENARIO_JSON_HPP
