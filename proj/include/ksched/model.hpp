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

//
// Linear time-varying state-space model
//
//   x_{k+1} = A_k x_k + w_k,   w_k ~ N(0, Q)
//   y_{k,j} = h_{k,j}^T x_k + v_{k,j},   v_{k,j} ~ N(0, sigma_j^2)
//
// together with the selection budget K, random measurement generators and
// the on-disk instance format "ksched-instance-v1".
//

#pragma once

#include "ksched/common.hpp"
#include "ksched/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace ksched {

inline constexpr const char* kInstanceVersion = "ksched-instance-v1";

enum class GeneratorKind { kGaussianIid, kBernoulliCentered, kExplicit };

inline std::string to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::kGaussianIid: return "gaussian-iid";
    case GeneratorKind::kBernoulliCentered: return "bernoulli-centered";
    case GeneratorKind::kExplicit: return "explicit";
  }
  return "explicit";
}

inline GeneratorKind generator_kind_from_string(const std::string& s) {
  if (s == "gaussian-iid") return GeneratorKind::kGaussianIid;
  if (s == "bernoulli-centered") return GeneratorKind::kBernoulliCentered;
  if (s == "explicit") return GeneratorKind::kExplicit;
  throw ParameterError("unknown generator kind '" + s + "'");
}

struct MeasurementGeneratorSpec {
  GeneratorKind kind = GeneratorKind::kGaussianIid;
  // Per-entry variance of h; 0 means the canonical 1/m.
  double sigma_h2 = 0.0;

  double variance_for(int m) const { return sigma_h2 > 0.0 ? sigma_h2 : 1.0 / m; }
  bool operator==(const MeasurementGeneratorSpec&) const = default;
};

struct ProblemInstance {
  int m = 0;
  int n = 0;
  int K = 0;
  int horizon = 0;
  // Empty means A_k = I for every k. One entry means a time-invariant A;
  // otherwise one matrix per step.
  std::vector<Matrix> transitions;
  Matrix Q;
  Vector r_diag;
  Matrix sigma_x;
  // Prior mean of x_0; zero when absent.
  std::optional<Vector> prior_mean;
  std::vector<RowMatrix> H;
  MeasurementGeneratorSpec generator;
  std::uint64_t seed = 0;

  bool identity_dynamics() const { return transitions.empty(); }

  Matrix A(int k) const {
    if (transitions.empty()) return Matrix::Identity(m, m);
    if (transitions.size() == 1) return transitions.front();
    return transitions.at(static_cast<std::size_t>(k));
  }

  Vector mean0() const { return prior_mean ? *prior_mean : Vector::Zero(m); }

  const RowMatrix& rows(int k) const { return H.at(static_cast<std::size_t>(k)); }
};

inline bool bit_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.size() == 0 || std::equal(a.data(), a.data() + a.size(), b.data()));
}
inline bool bit_equal(const RowMatrix& a, const RowMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.size() == 0 || std::equal(a.data(), a.data() + a.size(), b.data()));
}
inline bool bit_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() && (a.size() == 0 || std::equal(a.data(), a.data() + a.size(), b.data()));
}

inline bool operator==(const ProblemInstance& a, const ProblemInstance& b) {
  if (a.m != b.m || a.n != b.n || a.K != b.K || a.horizon != b.horizon) return false;
  if (a.seed != b.seed || !(a.generator == b.generator)) return false;
  if (a.transitions.size() != b.transitions.size()) return false;
  for (std::size_t i = 0; i < a.transitions.size(); ++i)
    if (!bit_equal(a.transitions[i], b.transitions[i])) return false;
  if (!bit_equal(a.Q, b.Q) || !bit_equal(a.r_diag, b.r_diag) || !bit_equal(a.sigma_x, b.sigma_x)) return false;
  if (a.prior_mean.has_value() != b.prior_mean.has_value()) return false;
  if (a.prior_mean && !bit_equal(*a.prior_mean, *b.prior_mean)) return false;
  if (a.H.size() != b.H.size()) return false;
  for (std::size_t i = 0; i < a.H.size(); ++i)
    if (!bit_equal(a.H[i], b.H[i])) return false;
  return true;
}

namespace detail {

inline void check_covariance(const Matrix& c, int m, const std::string& name) {
  if (c.rows() != m || c.cols() != m) {
    throw ValidationError(name + " must be " + std::to_string(m) + "x" + std::to_string(m));
  }
  const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ValidationError(name + " is not symmetric");
  }
  if (m > 0 && lambda_min(c) < -1e-10) {
    throw ValidationError(name + " is not positive semidefinite");
  }
}

}  // namespace detail

// Throws ValidationError on the first violated invariant.
inline void validate(const ProblemInstance& inst) {
  if (inst.m < 1 || inst.n < 1 || inst.horizon < 1) {
    throw ValidationError("dimensions m, n, horizon must be positive");
  }
  if (inst.K < 1 || inst.K > inst.n) {
    throw ValidationError("budget K must satisfy 1 <= K <= n");
  }
  if (inst.r_diag.size() != inst.n) {
    throw ValidationError("R_diag must have length n");
  }
  for (Eigen::Index j = 0; j < inst.r_diag.size(); ++j) {
    if (!(inst.r_diag(j) > 0.0)) throw ValidationError("non-positive variance in R_diag");
  }
  detail::check_covariance(inst.Q, inst.m, "Q");
  detail::check_covariance(inst.sigma_x, inst.m, "Sigma_x");
  if (inst.prior_mean && inst.prior_mean->size() != inst.m) {
    throw ValidationError("prior_mean must have length m");
  }
  if (inst.transitions.size() > 1 && static_cast<int>(inst.transitions.size()) != inst.horizon) {
    throw ValidationError("A must be 'identity', one matrix, or one matrix per step");
  }
  for (const auto& a : inst.transitions) {
    if (a.rows() != inst.m || a.cols() != inst.m) throw ValidationError("A_k must be m x m");
  }
  if (static_cast<int>(inst.H.size()) != inst.horizon) {
    throw ValidationError("H must hold one matrix per time step");
  }
  for (const auto& h : inst.H) {
    if (h.rows() != inst.n || h.cols() != inst.m) throw ValidationError("H_k must be n x m");
  }
}

// Draws H_k for one step from the generator's substream hash(seed, k).
// Fill order is row-major.
inline RowMatrix generate_step_rows(const MeasurementGeneratorSpec& spec, int m, int n,
                                    std::uint64_t seed, int k) {
  RowMatrix h(n, m);
  Rng rng(derive_seed(seed, "H", static_cast<std::uint64_t>(k)));
  switch (spec.kind) {
    case GeneratorKind::kGaussianIid: {
      const double sd = std::sqrt(spec.variance_for(m));
      for (int j = 0; j < n; ++j)
        for (int c = 0; c < m; ++c) h(j, c) = sd * rng.normal();
      break;
    }
    case GeneratorKind::kBernoulliCentered: {
      const double a = 1.0 / std::sqrt(static_cast<double>(m));
      for (int j = 0; j < n; ++j)
        for (int c = 0; c < m; ++c) h(j, c) = rng.coin() ? a : -a;
      break;
    }
    case GeneratorKind::kExplicit:
      throw ParameterError("explicit generator has no random rows");
  }
  return h;
}

// Random instance with A = I, Q = q_var I, R = r_var I, Sigma_x = I and
// fresh H_k per step.
inline ProblemInstance generate_instance(const MeasurementGeneratorSpec& spec, int m, int n, int K,
                                         int horizon, double q_var, double r_var, std::uint64_t seed) {
  if (m < 1 || n < 1 || horizon < 1) throw ParameterError("m, n, horizon must be >= 1");
  if (K < 1 || K > n) throw ParameterError("K must satisfy 1 <= K <= n");
  if (!(q_var > 0.0) || !(r_var > 0.0)) throw ParameterError("variances must be positive");
  if (spec.sigma_h2 < 0.0) throw ParameterError("sigma_h2 must be positive");
  if (spec.kind == GeneratorKind::kExplicit) throw ParameterError("cannot generate an explicit instance");

  ProblemInstance inst;
  inst.m = m;
  inst.n = n;
  inst.K = K;
  inst.horizon = horizon;
  inst.Q = q_var * Matrix::Identity(m, m);
  inst.r_diag = Vector::Constant(n, r_var);
  inst.sigma_x = Matrix::Identity(m, m);
  inst.generator = spec;
  inst.seed = seed;
  inst.H.reserve(static_cast<std::size_t>(horizon));
  for (int k = 0; k < horizon; ++k) inst.H.push_back(generate_step_rows(spec, m, n, seed, k));
  return inst;
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

using nlohmann::json;

inline json to_json_matrix(const Matrix& a) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < a.cols(); ++c) row.push_back(a(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json_matrix(const RowMatrix& a) { return to_json_matrix(Matrix(a)); }

inline json to_json_vector(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline const json& require(const json& doc, const std::string& field) {
  auto it = doc.find(field);
  if (it == doc.end()) throw ParseError(field, "missing");
  return *it;
}

inline Matrix parse_matrix(const json& j, const std::string& field) {
  if (!j.is_array()) throw ParseError(field, "expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows == 0 ? 0 : static_cast<Eigen::Index>(j[0].is_array() ? j[0].size() : 0);
  Matrix a(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ParseError(field, "ragged or non-array row " + std::to_string(r));
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ParseError(field, "non-numeric entry");
      a(r, c) = v.get<double>();
    }
  }
  return a;
}

inline Vector parse_vector(const json& j, const std::string& field) {
  if (!j.is_array()) throw ParseError(field, "expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(field, "non-numeric entry");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

template <typename T>
T parse_scalar(const json& doc, const std::string& field) {
  const json& v = require(doc, field);
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(field, e.what());
  }
}

}  // namespace detail

inline nlohmann::json instance_to_json(const ProblemInstance& inst) {
  using nlohmann::json;
  json doc;
  doc["version"] = kInstanceVersion;
  doc["m"] = inst.m;
  doc["n"] = inst.n;
  doc["K"] = inst.K;
  doc["horizon"] = inst.horizon;
  doc["seed"] = inst.seed;
  doc["generator"] = {{"kind", to_string(inst.generator.kind)}, {"sigma_h2", inst.generator.sigma_h2}};
  if (inst.transitions.empty()) {
    doc["A"] = "identity";
  } else {
    json steps = json::array();
    for (const auto& a : inst.transitions) steps.push_back(detail::to_json_matrix(a));
    doc["A"] = std::move(steps);
  }
  doc["Q"] = detail::to_json_matrix(inst.Q);
  doc["R_diag"] = detail::to_json_vector(inst.r_diag);
  doc["Sigma_x"] = detail::to_json_matrix(inst.sigma_x);
  if (inst.prior_mean) doc["prior_mean"] = detail::to_json_vector(*inst.prior_mean);
  json h = json::array();
  for (const auto& hk : inst.H) h.push_back(detail::to_json_matrix(hk));
  doc["H"] = std::move(h);
  return doc;
}

// Parses and validates. Structural problems raise ParseError naming the
// field; invariant violations raise ValidationError.
inline ProblemInstance instance_from_json(const nlohmann::json& doc) {
  using nlohmann::json;
  if (!doc.is_object()) throw ParseError("<root>", "expected an object");
  const auto version = detail::parse_scalar<std::string>(doc, "version");
  if (version != kInstanceVersion) throw ParseError("version", "unsupported version '" + version + "'");

  ProblemInstance inst;
  inst.m = detail::parse_scalar<int>(doc, "m");
  inst.n = detail::parse_scalar<int>(doc, "n");
  inst.K = detail::parse_scalar<int>(doc, "K");
  inst.horizon = detail::parse_scalar<int>(doc, "horizon");
  if (doc.contains("seed")) inst.seed = detail::parse_scalar<std::uint64_t>(doc, "seed");

  if (doc.contains("generator")) {
    const json& g = doc["generator"];
    try {
      inst.generator.kind = generator_kind_from_string(detail::parse_scalar<std::string>(g, "kind"));
    } catch (const ParameterError& e) {
      throw ParseError("generator.kind", e.what());
    }
    if (g.contains("sigma_h2")) inst.generator.sigma_h2 = detail::parse_scalar<double>(g, "sigma_h2");
  } else {
    inst.generator.kind = GeneratorKind::kExplicit;
  }

  const json& a = detail::require(doc, "A");
  if (a.is_string()) {
    if (a.get<std::string>() != "identity") throw ParseError("A", "only the symbolic value 'identity' is allowed");
  } else if (a.is_array()) {
    for (std::size_t k = 0; k < a.size(); ++k) {
      inst.transitions.push_back(detail::parse_matrix(a[k], "A[" + std::to_string(k) + "]"));
    }
  } else {
    throw ParseError("A", "expected 'identity' or an array of matrices");
  }

  inst.Q = detail::parse_matrix(detail::require(doc, "Q"), "Q");
  inst.r_diag = detail::parse_vector(detail::require(doc, "R_diag"), "R_diag");
  inst.sigma_x = detail::parse_matrix(detail::require(doc, "Sigma_x"), "Sigma_x");
  if (doc.contains("prior_mean")) inst.prior_mean = detail::parse_vector(doc["prior_mean"], "prior_mean");

  const json& h = detail::require(doc, "H");
  if (!h.is_array()) throw ParseError("H", "expected an array of per-step matrices");
  for (std::size_t k = 0; k < h.size(); ++k) {
    const std::string field = "H[" + std::to_string(k) + "]";
    Matrix hk = detail::parse_matrix(h[k], field);
    if (hk.rows() == 0 && inst.m > 0) hk.resize(0, inst.m);
    inst.H.emplace_back(hk);
  }

  validate(inst);
  return inst;
}

inline void save_instance(const ProblemInstance& inst, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << instance_to_json(inst).dump(1) << '\n';
}

inline ProblemInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("<document>", "cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("<document>", e.what());
  }
  return instance_from_json(doc);
}

}  // namespace ksched
