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

#include "mabo/scenario_json.hpp"

#include <fstream>
#include <json.hpp>
#include <set>

namespace mabo::config {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw SchemaError("unknown key \"" + key + "\" at " + path);
    }
  }
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) throw SchemaError("missing key \"" + key + "\" at " + path);
  return obj.at(key);
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError("expected a number at " + path);
  return j.get<double>();
}

int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw SchemaError("expected an integer at " + path);
  return j.get<int>();
}

VectorXd as_vector(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError("expected an array at " + path);
  VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(i) = as_number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

plants::ModelSpec parse_model(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError("expected a model object at " + path);
  const std::string type = require(j, "type", path).get<std::string>();
  if (type == "linear") {
    check_keys(j, path, {"type", "A", "B", "disturbance"});
    plants::LinearAgentModel m;
    const json& a = require(j, "A", path);
    if (!a.is_array() || a.size() != 2) throw SchemaError("expected a 2x2 matrix at " + path + ".A");
    for (int r = 0; r < 2; ++r) {
      const VectorXd row = as_vector(a[r], path + ".A");
      if (row.size() != 2) throw SchemaError("expected a 2x2 matrix at " + path + ".A");
      m.A.row(r) = row.transpose();
    }
    const VectorXd b = as_vector(require(j, "B", path), path + ".B");
    if (b.size() != 2) throw SchemaError("expected a length-2 vector at " + path + ".B");
    m.B = b;
    if (j.contains("disturbance")) {
      const json& d = j.at("disturbance");
      check_keys(d, path + ".disturbance", {"low", "high"});
      m.disturbance_channel = plants::DisturbanceInterval{
          as_number(require(d, "low", path), path + ".disturbance.low"),
          as_number(require(d, "high", path), path + ".disturbance.high")};
    }
    return m;
  }
  if (type == "wmr") {
    check_keys(j, path, {"type", "input_scale", "dt"});
    plants::WmrModel m;
    m.input_scale = as_number(require(j, "input_scale", path), path + ".input_scale");
    m.step_size = as_number(require(j, "dt", path), path + ".dt");
    return m;
  }
  throw SchemaError("unknown model type \"" + type + "\" at " + path);
}

AgentSpec parse_agent(const json& j, const std::string& path, bool synthetic) {
  check_keys(j, path,
             {"true_model", "prediction_model", "initial_state", "state_reference",
              "stage_weights", "control_weight", "state_box", "control_bounds", "param_box"});
  AgentSpec spec;
  if (synthetic) {
    plants::LinearAgentModel trivial;
    trivial.A.setIdentity();
    trivial.B.setZero();
    spec.true_model = trivial;
    spec.prediction_model = trivial;
    spec.initial_state = VectorXd::Zero(2);
    spec.state_reference = VectorXd::Zero(2);
    spec.stage_weights = VectorXd::Zero(2);
  } else {
    spec.true_model = parse_model(require(j, "true_model", path), path + ".true_model");
    spec.prediction_model =
        parse_model(require(j, "prediction_model", path), path + ".prediction_model");
    spec.initial_state = as_vector(require(j, "initial_state", path), path + ".initial_state");
    spec.state_reference =
        as_vector(require(j, "state_reference", path), path + ".state_reference");
    spec.stage_weights = as_vector(require(j, "stage_weights", path), path + ".stage_weights");
  }
  if (j.contains("control_weight")) {
    spec.control_weight = as_number(j.at("control_weight"), path + ".control_weight");
  }
  if (j.contains("state_box")) {
    const json& rows = j.at("state_box");
    if (!rows.is_array()) throw SchemaError("expected an array at " + path + ".state_box");
    for (size_t r = 0; r < rows.size(); ++r) {
      const std::string row_path = path + ".state_box[" + std::to_string(r) + "]";
      check_keys(rows[r], row_path, {"index", "low", "high", "penalty"});
      StateBoxRow row;
      row.index = as_int(require(rows[r], "index", row_path), row_path + ".index");
      if (rows[r].contains("low")) row.lo = as_number(rows[r].at("low"), row_path + ".low");
      if (rows[r].contains("high")) row.hi = as_number(rows[r].at("high"), row_path + ".high");
      if (rows[r].contains("penalty")) {
        row.penalty = as_number(rows[r].at("penalty"), row_path + ".penalty");
      }
      spec.state_box.push_back(row);
    }
  }
  if (j.contains("control_bounds")) {
    const json& cb = j.at("control_bounds");
    check_keys(cb, path + ".control_bounds", {"low", "high"});
    spec.control_bounds = {as_number(require(cb, "low", path), path + ".control_bounds.low"),
                           as_number(require(cb, "high", path), path + ".control_bounds.high")};
  }
  const json& box = require(j, "param_box", path);
  check_keys(box, path + ".param_box", {"low", "high"});
  spec.param_box.lo = as_vector(require(box, "low", path), path + ".param_box.low");
  spec.param_box.hi = as_vector(require(box, "high", path), path + ".param_box.high");
  if (spec.param_box.lo.size() != spec.param_box.hi.size()) {
    throw SchemaError("param_box low/high lengths differ at " + path);
  }
  return spec;
}

json model_to_json(const plants::ModelSpec& m) {
  json j;
  if (const auto* lin = std::get_if<plants::LinearAgentModel>(&m)) {
    j["type"] = "linear";
    j["A"] = {{lin->A(0, 0), lin->A(0, 1)}, {lin->A(1, 0), lin->A(1, 1)}};
    j["B"] = {lin->B(0), lin->B(1)};
    if (lin->disturbance_channel) {
      j["disturbance"] = {{"low", lin->disturbance_channel->lo},
                          {"high", lin->disturbance_channel->hi}};
    }
  } else {
    const auto& wmr = std::get<plants::WmrModel>(m);
    j["type"] = "wmr";
    j["input_scale"] = wmr.input_scale;
    j["dt"] = wmr.step_size;
  }
  return j;
}

json vector_to_json(const VectorXd& v) {
  json j = json::array();
  for (int i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

}  // namespace

Scenario parse_scenario(const std::string& document) {
  json root;
  try {
    root = json::parse(document);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw SchemaError("scenario document must be a JSON object");
  check_keys(root, "$",
             {"name", "kind", "mode", "seed", "horizon", "discount", "delta_weight",
              "hard_slack_weight", "agents", "coupling", "dual", "learning", "synthetic"});

  Scenario s;
  s.name = require(root, "name", "$").get<std::string>();
  const std::string kind = require(root, "kind", "$").get<std::string>();
  if (kind == "linear-3agent") {
    s.kind = ScenarioKind::kLinear3Agent;
  } else if (kind == "wmr-formation") {
    s.kind = ScenarioKind::kWmrFormation;
  } else if (kind == "custom") {
    s.kind = ScenarioKind::kCustom;
  } else {
    throw SchemaError("unknown kind \"" + kind + "\" at $.kind");
  }
  if (root.contains("mode")) {
    const std::string mode = root.at("mode").get<std::string>();
    if (mode == "plain") {
      s.mode = DmpcMode::kPlain;
    } else if (mode == "modified") {
      s.mode = DmpcMode::kModified;
    } else if (mode == "parametric") {
      s.mode = DmpcMode::kParametric;
    } else {
      throw SchemaError("unknown mode \"" + mode + "\" at $.mode");
    }
  }
  if (root.contains("seed")) s.seed = root.at("seed").get<std::uint64_t>();
  s.horizon = as_int(require(root, "horizon", "$"), "$.horizon");
  if (root.contains("discount")) s.discount = as_number(root.at("discount"), "$.discount");
  if (root.contains("delta_weight")) {
    s.delta_weight = as_number(root.at("delta_weight"), "$.delta_weight");
  }
  if (root.contains("hard_slack_weight")) {
    s.hard_slack_weight = as_number(root.at("hard_slack_weight"), "$.hard_slack_weight");
  }

  if (root.contains("synthetic")) {
    const json& syn = root.at("synthetic");
    check_keys(syn, "$.synthetic", {"targets"});
    SyntheticObjective obj;
    for (const json& t : require(syn, "targets", "$.synthetic")) {
      obj.targets.push_back(as_vector(t, "$.synthetic.targets"));
    }
    s.synthetic = obj;
  }

  const json& agents = require(root, "agents", "$");
  if (!agents.is_array() || agents.empty()) throw SchemaError("$.agents must be a non-empty array");
  for (size_t i = 0; i < agents.size(); ++i) {
    s.agents.push_back(parse_agent(agents[i], "$.agents[" + std::to_string(i) + "]",
                                   s.is_synthetic()));
  }

  if (root.contains("coupling")) {
    const json& c = root.at("coupling");
    check_keys(c, "$.coupling", {"edges", "residual_indices", "offsets", "weight"});
    for (const json& e : require(c, "edges", "$.coupling")) {
      if (!e.is_array() || e.size() != 2) throw SchemaError("$.coupling.edges entries must be pairs");
      s.coupling.edges.emplace_back(as_int(e[0], "$.coupling.edges"),
                                    as_int(e[1], "$.coupling.edges"));
    }
    for (int idx : require(c, "residual_indices", "$.coupling")) {
      s.coupling.residual_indices.push_back(idx);
    }
    for (const json& o : require(c, "offsets", "$.coupling")) {
      check_keys(o, "$.coupling.offsets", {"i", "j", "value"});
      CouplingOffset off;
      off.i = as_int(require(o, "i", "$.coupling.offsets"), "$.coupling.offsets.i");
      off.j = as_int(require(o, "j", "$.coupling.offsets"), "$.coupling.offsets.j");
      off.value = as_vector(require(o, "value", "$.coupling.offsets"), "$.coupling.offsets.value");
      s.coupling.offsets.push_back(off);
    }
    if (c.contains("weight")) s.coupling.weight = as_number(c.at("weight"), "$.coupling.weight");
  }

  if (root.contains("dual")) {
    const json& d = root.at("dual");
    check_keys(d, "$.dual", {"beta", "eps1", "eps2", "max_iter"});
    if (d.contains("beta")) s.dual.beta = as_number(d.at("beta"), "$.dual.beta");
    if (d.contains("eps1")) s.dual.eps1 = as_number(d.at("eps1"), "$.dual.eps1");
    if (d.contains("eps2")) s.dual.eps2 = as_number(d.at("eps2"), "$.dual.eps2");
    if (d.contains("max_iter")) s.dual.max_iter = as_int(d.at("max_iter"), "$.dual.max_iter");
  }

  if (root.contains("learning")) {
    const json& l = root.at("learning");
    check_keys(l, "$.learning",
               {"episodes", "steps", "warmup", "rho", "acquisition", "rollout_horizon",
                "rollout_samples", "common_random_numbers"});
    if (l.contains("episodes")) s.learning.episodes = as_int(l.at("episodes"), "$.learning.episodes");
    if (l.contains("steps")) s.learning.steps = as_int(l.at("steps"), "$.learning.steps");
    if (l.contains("warmup")) s.learning.warmup = as_int(l.at("warmup"), "$.learning.warmup");
    if (l.contains("rho")) s.learning.rho = as_number(l.at("rho"), "$.learning.rho");
    if (l.contains("acquisition")) {
      s.learning.acquisition = l.at("acquisition").get<std::string>();
      if (s.learning.acquisition != "ei" && s.learning.acquisition != "nonmyopic-ei") {
        throw SchemaError("unknown acquisition \"" + s.learning.acquisition +
                          "\" at $.learning.acquisition");
      }
    }
    if (l.contains("rollout_horizon")) {
      s.learning.rollout_horizon = as_int(l.at("rollout_horizon"), "$.learning.rollout_horizon");
    }
    if (l.contains("rollout_samples")) {
      s.learning.rollout_samples = as_int(l.at("rollout_samples"), "$.learning.rollout_samples");
    }
    if (l.contains("common_random_numbers")) {
      if (!l.at("common_random_numbers").is_boolean()) {
        throw SchemaError("expected a boolean at $.learning.common_random_numbers");
      }
      s.learning.common_random_numbers = l.at("common_random_numbers").get<bool>();
    }
  }

  validate(s);
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open scenario file: " + path);
  std::string document((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_scenario(document);
}

std::string serialize_scenario(const Scenario& s) {
  json root;
  root["name"] = s.name;
  root["kind"] = s.kind == ScenarioKind::kLinear3Agent   ? "linear-3agent"
                 : s.kind == ScenarioKind::kWmrFormation ? "wmr-formation"
                                                         : "custom";
  root["mode"] = s.mode == DmpcMode::kPlain      ? "plain"
                 : s.mode == DmpcMode::kModified ? "modified"
                                                 : "parametric";
  root["seed"] = s.seed;
  root["horizon"] = s.horizon;
  root["discount"] = s.discount;
  root["delta_weight"] = s.delta_weight;
  root["hard_slack_weight"] = s.hard_slack_weight;

  root["agents"] = json::array();
  for (const AgentSpec& a : s.agents) {
    json j;
    if (!s.is_synthetic()) {
      j["true_model"] = model_to_json(a.true_model);
      j["prediction_model"] = model_to_json(a.prediction_model);
      j["initial_state"] = vector_to_json(a.initial_state);
      j["state_reference"] = vector_to_json(a.state_reference);
      j["stage_weights"] = vector_to_json(a.stage_weights);
    }
    j["control_weight"] = a.control_weight;
    if (!a.state_box.empty()) {
      j["state_box"] = json::array();
      for (const StateBoxRow& row : a.state_box) {
        json r;
        r["index"] = row.index;
        if (std::isfinite(row.lo)) r["low"] = row.lo;
        if (std::isfinite(row.hi)) r["high"] = row.hi;
        r["penalty"] = row.penalty;
        j["state_box"].push_back(r);
      }
    }
    if (a.control_bounds) {
      j["control_bounds"] = {{"low", a.control_bounds->first},
                             {"high", a.control_bounds->second}};
    }
    j["param_box"] = {{"low", vector_to_json(a.param_box.lo)},
                      {"high", vector_to_json(a.param_box.hi)}};
    root["agents"].push_back(j);
  }

  if (!s.coupling.empty()) {
    json c;
    c["edges"] = json::array();
    for (const auto& [i, j] : s.coupling.edges) c["edges"].push_back({i, j});
    c["residual_indices"] = s.coupling.residual_indices;
    c["offsets"] = json::array();
    for (const CouplingOffset& off : s.coupling.offsets) {
      c["offsets"].push_back({{"i", off.i}, {"j", off.j}, {"value", vector_to_json(off.value)}});
    }
    c["weight"] = s.coupling.weight;
    root["coupling"] = c;
  }

  root["dual"] = {{"beta", s.dual.beta},
                  {"eps1", s.dual.eps1},
                  {"eps2", s.dual.eps2},
                  {"max_iter", s.dual.max_iter}};
  root["learning"] = {{"episodes", s.learning.episodes},
                      {"steps", s.learning.steps},
                      {"warmup", s.learning.warmup},
                      {"rho", s.learning.rho},
                      {"acquisition", s.learning.acquisition},
                      {"rollout_horizon", s.learning.rollout_horizon},
                      {"rollout_samples", s.learning.rollout_samples},
                      {"common_random_numbers", s.learning.common_random_numbers}};
  if (s.is_synthetic()) {
    json syn;
    syn["targets"] = json::array();
    for (const VectorXd& t : s.synthetic->targets) syn["targets"].push_back(vector_to_json(t));
    root["synthetic"] = syn;
  }
  return root.dump(2) + "\n";
}

}  // namespace mabo::config
