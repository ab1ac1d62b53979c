// Copyright 2026 The Authors.
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

// Selection files: one step's chosen sensor indices, exchanged with external
// solvers and scored against an instance file.
//
//   {"version": "ksched-selection-v1", "step": 0, "K": 3,
//    "selected": [4, 0, 7], "source": "greedy"}
//
// "source" is optional free text.

#ifndef KSCHED_SELECTION_FILE_HPP_
#define KSCHED_SELECTION_FILE_HPP_

#include "ksched/kalman.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

namespace ksched {

inline constexpr const char* kSelectionVersion = "ksched-selection-v1";

struct SelectionFile {
  int step = 0;
  int K = 0;
  IndexList selected;
  std::string source;
};

inline nlohmann::json selection_to_json(const SelectionFile& s) {
  nlohmann::json j;
  j["version"] = kSelectionVersion;
  j["step"] = s.step;
  j["K"] = s.K;
  j["selected"] = s.selected;
  if (!s.source.empty()) j["source"] = s.source;
  return j;
}

inline SelectionFile selection_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("<document>", "selection file must be a JSON object");
  auto field = [&](const char* name) -> const nlohmann::json& {
    if (!j.contains(name)) throw ParseError(name, std::string("missing field '") + name + "'");
    return j.at(name);
  };
  const auto& version = field("version");
  if (!version.is_string() || version.get<std::string>() != kSelectionVersion) {
    throw ParseError("version", std::string("expected version ") + kSelectionVersion);
  }
  SelectionFile s;
  const auto& step = field("step");
  if (!step.is_number_integer()) throw ParseError("step", "step must be an integer");
  s.step = step.get<int>();
  const auto& K = field("K");
  if (!K.is_number_integer()) throw ParseError("K", "K must be an integer");
  s.K = K.get<int>();
  const auto& sel = field("selected");
  if (!sel.is_array()) throw ParseError("selected", "selected must be an array of indices");
  for (const auto& v : sel) {
    if (!v.is_number_integer()) throw ParseError("selected", "selected must hold integers");
    s.selected.push_back(v.get<int>());
  }
  if (j.contains("source") && j.at("source").is_string()) s.source = j.at("source").get<std::string>();
  return s;
}

inline void save_selection(const SelectionFile& s, const std::filesystem::path& path) {
  std::ofstream os(path);
  os << selection_to_json(s).dump() << '\n';
  if (!os) throw std::runtime_error("cannot write " + path.string());
}

inline SelectionFile load_selection(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("<document>", "cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("<document>", e.what());
  }
  return selection_from_json(j);
}

struct SelectionScore {
  int step = 0;
  int K = 0;
  IndexList selected;
  double trace_p_pred = 0.0;
  double f_value = 0.0;
  double mse = 0.0;
};

// Scores a selection at step k with the prior from step_prior(). The
// selection may use fewer than K sensors but not more.
inline SelectionScore score_selection(const ProblemInstance& inst, const SelectionFile& sel) {
  if (sel.step < 0 || sel.step >= inst.horizon) throw ValidationError("selection step out of range");
  if (sel.K < 1 || sel.K > inst.n) throw ValidationError("selection K out of range");
  if (static_cast<int>(sel.selected.size()) > sel.K) throw ValidationError("selection holds more than K sensors");
  std::set<Index> seen;
  for (Index j : sel.selected) {
    if (j < 0 || j >= inst.n) throw ValidationError("selected index " + std::to_string(j) + " out of range");
    if (!seen.insert(j).second) throw ValidationError("selected index " + std::to_string(j) + " repeated");
  }
  const Matrix p = step_prior(inst, sel.step);
  const FisherState state = make_state(p, StepRows(inst.rows(sel.step), inst.r_diag), sel.selected);
  SelectionScore out;
  out.step = sel.step;
  out.K = sel.K;
  out.selected = sel.selected;
  out.trace_p_pred = p.trace();
  out.mse = state.mse();
  out.f_value = out.trace_p_pred - out.mse;
  return out;
}

inline nlohmann::json score_to_json(const SelectionScore& s) {
  return {{"step", s.step},   {"K", s.K},       {"selected", s.selected}, {"trace_p_pred", s.trace_p_pred},
          {"f_value", s.f_value}, {"mse", s.mse}};
}

}  // namespace ksched

#endif  // KSCHED_SELECTION_FILE_HPP_
