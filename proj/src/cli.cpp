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

#include "mabo/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <json.hpp>

#include "mabo/csv.hpp"
#include "mabo/harness.hpp"
#include "mabo/mdp.hpp"
#include "mabo/scenario_json.hpp"
#include "mabo/scenarios.hpp"

namespace mabo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Scenario resolve_scenario(const std::string& ref) {
  for (const std::string& id : scenarios::list_scenarios()) {
    if (id == ref) return scenarios::load_scenario(id);
  }
  return config::load_scenario_file(ref);
}

void write_config(const fs::path& dir, const Scenario& scenario) {
  std::ofstream out(dir / "config.json", std::ios::binary);
  out << config::serialize_scenario(scenario);
}

std::string stop_name(dmpc::StopReason reason) {
  switch (reason) {
    case dmpc::StopReason::kConverged:
      return "converged";
    case dmpc::StopReason::kBudgetExhausted:
      return "budget";
    default:
      return "continue";
  }
}

void write_trace(const fs::path& path, const Scenario& scenario,
                 const sim::EpisodeRecord& record) {
  if (record.states.empty()) return;
  const int nx = scenario.agents.front().state_dim();
  const int nu = scenario.agents.front().control_dim();
  std::vector<std::string> columns = {"step", "agent"};
  for (int d = 0; d < nx; ++d) columns.push_back("state" + std::to_string(d));
  for (int d = 0; d < nu; ++d) columns.push_back("control" + std::to_string(d));
  columns.push_back("stop_reason");
  columns.push_back("dual_iters");

  csv::Writer out(path.string(), columns);
  for (size_t step = 0; step < record.states.size(); ++step) {
    for (int i = 0; i < scenario.num_agents(); ++i) {
      std::vector<std::string> cells = {csv::format(static_cast<int>(step)), csv::format(i)};
      for (int d = 0; d < nx; ++d) cells.push_back(csv::format(record.states[step][i](d)));
      for (int d = 0; d < nu; ++d) cells.push_back(csv::format(record.controls[step][i](d)));
      cells.push_back(stop_name(record.step_stats[step].stop));
      cells.push_back(csv::format(record.step_stats[step].dual_iterations));
      out.row(cells);
    }
  }
}

void write_distances(const fs::path& path, const Scenario& scenario,
                     const sim::EpisodeRecord& record) {
  if (record.states.empty() || scenario.coupling.empty()) return;
  csv::Writer out(path.string(), {"step", "pair", "actual", "desired"});
  const auto& residual = scenario.coupling.residual_indices;
  for (size_t step = 0; step < record.states.size(); ++step) {
    for (const CouplingOffset& off : scenario.coupling.offsets) {
      double actual = 0.0, desired = 0.0;
      if (residual.size() == 1) {
        actual = record.states[step][off.i](residual[0]) - record.states[step][off.j](residual[0]);
        desired = off.value(0);
      } else {
        VectorXd diff(residual.size());
        for (size_t r = 0; r < residual.size(); ++r) {
          diff(r) =
              record.states[step][off.i](residual[r]) - record.states[step][off.j](residual[r]);
        }
        actual = diff.norm();
        desired = off.value.norm();
      }
      const std::string pair =
          std::to_string(off.i + 1) + "-" + std::to_string(off.j + 1);
      out.row({csv::format(static_cast<int>(step)), pair, csv::format(actual),
               csv::format(desired)});
    }
  }
}

void write_formation_error(const fs::path& path, const Scenario& scenario,
                           const sim::EpisodeRecord& record) {
  if (record.states.empty()) return;
  csv::Writer out(path.string(), {"step", "total_vertex_distance"});
  for (size_t step = 0; step < record.states.size(); ++step) {
    double total = 0.0;
    for (int i = 0; i < scenario.num_agents(); ++i) {
      total += (record.states[step][i].head(2) -
                scenario.agents[i].state_reference.head(2))
                   .norm();
    }
    out.row({csv::format(static_cast<int>(step)), csv::format(total)});
  }
}

void write_learning_curve(const fs::path& path, const Scenario& scenario,
                          const sim::LearningHistory& history) {
  csv::Writer out(path.string(),
                  {"episode", "agent", "J_iN", "best_so_far", "primal_residual", "dual_residual"});
  const int warmup = scenario.learning.warmup;
  for (size_t e = 0; e < history.episodes.size(); ++e) {
    const int round = static_cast<int>(e) - warmup;
    for (int i = 0; i < scenario.num_agents(); ++i) {
      std::string primal = "nan", dual = "nan";
      if (round >= 0 && round < static_cast<int>(history.rounds.size())) {
        primal = csv::format(history.rounds[round].primal_residual);
        dual = csv::format(history.rounds[round].dual_residual);
      }
      out.row({csv::format(static_cast<int>(e)), csv::format(i),
               csv::format(history.episodes[e].performance[i]),
               csv::format(history.best_so_far[i][e]), primal, dual});
    }
  }
}

json params_to_json(const std::vector<VectorXd>& params) {
  json out = json::array();
  for (const VectorXd& p : params) {
    json v = json::array();
    for (int d = 0; d < p.size(); ++d) v.push_back(p(d));
    out.push_back(v);
  }
  return out;
}

std::vector<VectorXd> params_from_json(const json& j) {
  std::vector<VectorXd> out;
  for (const json& row : j) {
    VectorXd v(row.size());
    for (size_t d = 0; d < row.size(); ++d) v(d) = row[d].get<double>();
    out.push_back(v);
  }
  return out;
}

void write_params(const fs::path& dir, const sim::LearningHistory& history) {
  json out;
  out["recommended"] = params_to_json(history.recommended_params);
  out["final"] = params_to_json(history.final_params);
  if (history.final_consensus.size() > 0) {
    json c = json::array();
    for (int d = 0; d < history.final_consensus.size(); ++d) {
      c.push_back(history.final_consensus(d));
    }
    out["consensus"] = c;
  }
  out["best_episode"] = history.best_episode;
  std::ofstream file(dir / "learned_params.json", std::ios::binary);
  file << out.dump(2) << "\n";
}

int command_baseline(const Scenario& scenario, const fs::path& dir) {
  write_config(dir, scenario);
  const sim::EpisodeRecord record = sim::evaluate_baseline(scenario);
  write_trace(dir / "trace_ep0.csv", scenario, record);
  write_distances(dir / "distances.csv", scenario, record);
  if (scenario.kind == ScenarioKind::kWmrFormation) {
    write_formation_error(dir / "formation_error.csv", scenario, record);
  }
  std::ofstream log(dir / "diagnostics.log", std::ios::binary);
  double total = 0.0;
  for (int i = 0; i < scenario.num_agents(); ++i) {
    log << "agent " << i << " J_iN " << csv::format(record.performance[i]) << "\n";
    total += record.performance[i];
  }
  log << "global J_N " << csv::format(total) << "\n";
  std::cout << "baseline global J_N " << csv::format(total) << "\n";
  return 0;
}

int command_learn(const Scenario& scenario, const fs::path& dir) {
  write_config(dir, scenario);
  const sim::LearningHistory history =
      sim::learn(scenario, scenario.learning.episodes, scenario.seed);
  write_learning_curve(dir / "learning_curve.csv", scenario, history);
  write_params(dir, history);

  std::ofstream log(dir / "diagnostics.log", std::ios::binary);
  for (size_t r = 0; r < history.rounds.size(); ++r) {
    log << "round " << r;
    for (size_t i = 0; i < history.rounds[r].y_new.size(); ++i) {
      log << " y" << i << " " << csv::format(history.rounds[r].y_new[i]) << " best" << i << " "
          << csv::format(history.rounds[r].best_so_far[i]);
    }
    log << " primal " << csv::format(history.rounds[r].primal_residual) << " dual "
        << csv::format(history.rounds[r].dual_residual) << "\n";
  }

  const int warmup = scenario.learning.warmup;
  if (static_cast<int>(history.episodes.size()) > warmup) {
    const auto& first = history.episodes[warmup];
    write_trace(dir / ("trace_ep" + std::to_string(first.episode) + ".csv"), scenario, first);
    const auto& last = history.episodes.back();
    write_trace(dir / ("trace_ep" + std::to_string(last.episode) + ".csv"), scenario, last);
    write_distances(dir / "distances.csv", scenario, last);
  }
  if (history.error) {
    log << "aborted: " << *history.error << "\n";
    std::cerr << "learning aborted: " << *history.error << "\n";
    return 2;
  }
  std::cout << "learned " << history.episodes.size() << " episodes; best episode "
            << history.best_episode << "\n";
  return 0;
}

int command_export_plots(const Scenario& scenario, const fs::path& dir,
                         const std::string& params_path) {
  write_config(dir, scenario);
  auto export_run = [&](const sim::EpisodeRecord& record, const std::string& tag) {
    write_trace(dir / ("states_" + tag + ".csv"), scenario, record);
    write_distances(dir / ("distances_" + tag + ".csv"), scenario, record);
    if (scenario.kind == ScenarioKind::kWmrFormation) {
      write_formation_error(dir / ("formation_error_" + tag + ".csv"), scenario, record);
    }
  };
  export_run(sim::evaluate_baseline(scenario), "baseline");
  if (!params_path.empty()) {
    std::ifstream in(params_path, std::ios::binary);
    if (!in) throw SchemaError("cannot open params file: " + params_path);
    json doc;
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw SchemaError(std::string("invalid params JSON: ") + e.what());
    }
    const std::vector<VectorXd> params = params_from_json(doc.at("recommended"));
    const sim::EpisodeRecord learned =
        sim::run_episode(scenario, params, sim::episode_seed(scenario, 0), 0);
    export_run(learned, "learned");
  }
  return 0;
}

int command_verify_theory(std::uint64_t seed, const fs::path& dir) {
  std::ostringstream report;
  std::mt19937_64 root(seed);

  auto random_mdp = [&](int states, int actions, int agents, std::uint64_t s) {
    std::mt19937_64 rng(s);
    mdp::FiniteMdp m;
    m.num_states = states;
    m.num_actions = actions;
    m.num_agents = agents;
    m.discount = 0.9;
    m.transition.resize(states);
    for (int st = 0; st < states; ++st) {
      MatrixXd t(actions, states);
      for (int a = 0; a < actions; ++a) {
        for (int n = 0; n < states; ++n) t(a, n) = uniform_real(rng, 0.01, 1.0);
        t.row(a) /= t.row(a).sum();
      }
      m.transition[st] = t;
    }
    for (int i = 0; i < agents; ++i) {
      MatrixXd c(states, actions);
      for (int st = 0; st < states; ++st) {
        for (int a = 0; a < actions; ++a) c(st, a) = uniform_real(rng, -1.0, 1.0);
      }
      m.stage_costs.push_back(c);
    }
    return m;
  };
  auto random_policy = [&](const mdp::FiniteMdp& m, std::uint64_t s) {
    std::mt19937_64 rng(s);
    mdp::PolicyTable p;
    for (int st = 0; st < m.num_states; ++st) {
      p.action.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(m.num_actions)));
    }
    return p;
  };

  double theorem1_worst = 0.0;
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    const int states = 2 + static_cast<int>(trial % 5);
    mdp::FiniteMdp truth = random_mdp(states, 2, 2, derive_seed(seed, "t1-truth", trial));
    mdp::FiniteMdp surrogate = random_mdp(states, 2, 2, derive_seed(seed, "t1-sur", trial));
    surrogate.stage_costs = truth.stage_costs;
    const mdp::PolicyTable pi = random_policy(truth, derive_seed(seed, "t1-pi", trial));
    for (int agent = 0; agent < 2; ++agent) {
      const VectorXd v = mdp::policy_value(truth, pi, agent);
      const mdp::ModifiedCosts mc = mdp::modified_costs(v, surrogate);
      for (int n = 1; n <= 5; ++n) {
        for (int s = 0; s < states; ++s) {
          theorem1_worst =
              std::max(theorem1_worst, std::abs(mdp::nstep_value(mc, surrogate, pi, s, n) - v(s)));
        }
      }
    }
  }
  const bool t1_ok = theorem1_worst <= 1e-8;
  report << "theorem-1 n-step identity: max error " << csv::format(theorem1_worst) << " "
         << (t1_ok ? "PASS" : "FAIL") << "\n";

  double decomp_worst = 0.0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    mdp::FiniteMdp m = random_mdp(5, 2, 2, derive_seed(seed, "dc-mdp", trial));
    decomp_worst = std::max(
        decomp_worst, mdp::decomposition_check(m, random_policy(m, derive_seed(seed, "dc-pi", trial))));
  }
  const bool dc_ok = decomp_worst <= 1e-10;
  report << "value decomposition: max error " << csv::format(decomp_worst) << " "
         << (dc_ok ? "PASS" : "FAIL") << "\n";

  (void)root;
  std::cout << report.str();
  if (!dir.empty()) {
    std::ofstream log(dir / "verify_theory.log", std::ios::binary);
    log << report.str();
  }
  return (t1_ok && dc_ok) ? 0 : 2;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"coordinated learning for distributed MPC"};
  app.require_subcommand(1);

  std::string scenario_ref, out_dir = "out", params_path;
  std::int64_t seed_override = -1;
  int episodes_override = -1;

  auto add_common = [&](CLI::App* cmd, bool need_scenario) {
    if (need_scenario) {
      cmd->add_option("--scenario", scenario_ref, "scenario file or bundled identifier")
          ->required();
    }
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed_override, "root seed override");
  };

  CLI::App* baseline = app.add_subcommand("baseline", "run the unlearned controller");
  add_common(baseline, true);
  CLI::App* learn = app.add_subcommand("learn", "run coordinated learning");
  add_common(learn, true);
  learn->add_option("--episodes", episodes_override, "number of coordinated rounds");
  CLI::App* verify = app.add_subcommand("verify-theory", "run the finite-MDP property battery");
  add_common(verify, false);
  CLI::App* export_plots = app.add_subcommand("export-plots", "export figure CSVs");
  add_common(export_plots, true);
  export_plots->add_option("--params", params_path, "learned_params.json from a learn run");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const fs::path dir = out_dir;
    fs::create_directories(dir);
    if (verify->parsed()) {
      return command_verify_theory(seed_override >= 0 ? seed_override : 0, dir);
    }
    Scenario scenario = resolve_scenario(scenario_ref);
    if (seed_override >= 0) scenario.seed = static_cast<std::uint64_t>(seed_override);
    if (episodes_override > 0) scenario.learning.episodes = episodes_override;
    if (baseline->parsed()) return command_baseline(scenario, dir);
    if (learn->parsed()) return command_learn(scenario, dir);
    if (export_plots->parsed()) return command_export_plots(scenario, dir, params_path);
    return 1;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace mabo::cli
