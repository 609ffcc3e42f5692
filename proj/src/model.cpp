// Copyright 2026 The jamctl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "jamctl/model.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace jamctl {

using nlohmann::json;

namespace {

bool symmetric(const Mat& M) {
  if (M.rows() != M.cols()) return false;
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  return (M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale;
}

Eigen::VectorXd symmetric_eigenvalues(const Mat& M) {
  const Mat S = 0.5 * (M + M.transpose());
  return Eigen::SelfAdjointEigenSolver<Mat>(S, Eigen::EigenvaluesOnly).eigenvalues();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

void require_square(const Mat& M, Eigen::Index n, const char* name) {
  require(M.rows() == n && M.cols() == n,
          std::string(name) + " must be " + std::to_string(n) + "x" + std::to_string(n));
  require(M.allFinite(), std::string(name) + " has non-finite entries");
}

void require_vector(const Vec& v, Eigen::Index n, const char* name) {
  require(v.size() == n, std::string(name) + " must have length " + std::to_string(n));
  require(v.allFinite(), std::string(name) + " has non-finite entries");
}

void validate_box(const ControlBox& box, Eigen::Index m) {
  require_vector(box.lower, m, "box_lower");
  require_vector(box.upper, m, "box_upper");
  for (Eigen::Index i = 0; i < m; ++i) {
    require(box.lower[i] < 0.0 && 0.0 < box.upper[i],
            "control box must contain 0 in its interior");
  }
}

void validate_horizon(double t0, double t1) {
  require(std::isfinite(t0) && std::isfinite(t1), "horizon must be finite");
  require(t1 > t0, "empty horizon");
}

// --- JSON helpers ----------------------------------------------------------

Mat matrix_from_json(const json& j, const char* name) {
  if (!j.is_array() || j.empty()) throw ValidationError(std::string(name) + " must be a non-empty matrix");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array() || j[0].empty()) throw ValidationError(std::string(name) + " rows must be arrays");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Mat M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ValidationError(std::string(name) + " is ragged");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ValidationError(std::string(name) + " entries must be numbers");
      M(r, c) = v.get<double>();
    }
  }
  return M;
}

// A square weight: either a matrix or a scalar meaning scalar * I.
Mat weight_from_json(const json& j, Eigen::Index n, const char* name) {
  if (j.is_number()) return j.get<double>() * Mat::Identity(n, n);
  return matrix_from_json(j, name);
}

Vec vector_from_json(const json& j, const char* name) {
  if (!j.is_array()) throw ValidationError(std::string(name) + " must be an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ValidationError(std::string(name) + " entries must be numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

const json& field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("missing field \"") + key + "\"");
  return *it;
}

double number(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number()) throw ValidationError(std::string("field \"") + key + "\" must be a number");
  return v.get<double>();
}

json to_json(const Mat& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json problem_json(const Problem& problem) {
  return std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        json j;
        j["A"] = to_json(p.system.A);
        j["B"] = to_json(p.system.B);
        j["t0"] = p.t_start;
        j["tf"] = p.t_end;
        j["z0"] = to_json(p.z_start);
        if constexpr (std::is_same_v<T, ReachProblem>) {
          j["kind"] = "reach";
          j["zf"] = to_json(p.z_end);
          j["box_lower"] = to_json(p.box.lower);
          j["box_upper"] = to_json(p.box.upper);
        } else {
          j["kind"] = p.sparse ? "sparse_lq" : "lq";
          j["Q"] = to_json(p.Q);
          j["R"] = to_json(p.R);
          j["Qf"] = to_json(p.Qf);
          j["gamma"] = p.gamma;
          j["threshold_factor"] = p.threshold_factor;
        }
        return j;
      },
      problem);
}

}  // namespace

LtiSystem::LtiSystem(Mat A_in, Mat B_in) : A(std::move(A_in)), B(std::move(B_in)) {
  require(A.rows() >= 1 && A.rows() == A.cols(), "A must be square with d >= 1");
  require(B.rows() == A.rows() && B.cols() >= 1, "B must be d x m with m >= 1");
  require(A.allFinite() && B.allFinite(), "system matrices have non-finite entries");
}

void ReachProblem::validate() const {
  const auto d = system.state_dim();
  require(d >= 1 && system.A.cols() == d && system.B.rows() == d && system.input_dim() >= 1,
          "invalid system dimensions");
  validate_box(box, system.input_dim());
  validate_horizon(t_start, t_end);
  require_vector(z_start, d, "z0");
  require_vector(z_end, d, "zf");
}

void LqProblem::validate() const {
  const auto d = system.state_dim();
  const auto m = system.input_dim();
  require(d >= 1 && system.A.cols() == d && system.B.rows() == d && m >= 1,
          "invalid system dimensions");
  require_square(Q, d, "Q");
  require_square(Qf, d, "Qf");
  require_square(R, m, "R");
  require(symmetric(Q) && is_symmetric_psd(Q), "Q not positive semidefinite");
  require(symmetric(Qf) && is_symmetric_psd(Qf), "Qf not positive semidefinite");
  require(symmetric(R) && is_symmetric_pd(R), "R not positive definite");
  require(std::isfinite(gamma) && gamma >= 0.0, "gamma must be nonnegative");
  require(std::isfinite(threshold_factor) && threshold_factor > 0.0,
          "threshold_factor must be positive");
  validate_horizon(t_start, t_end);
  require_vector(z_start, d, "z0");
}

bool is_symmetric_psd(const Mat& M) {
  if (!symmetric(M)) return false;
  const Eigen::VectorXd ev = symmetric_eigenvalues(M);
  const double spectral = ev.cwiseAbs().maxCoeff();
  return ev.minCoeff() >= -1e-10 * spectral;
}

bool is_symmetric_pd(const Mat& M) {
  if (!symmetric(M)) return false;
  return symmetric_eigenvalues(M).minCoeff() > 0.0;
}

ControllabilityReport controllability_report(const LtiSystem& system) {
  const auto d = system.state_dim();
  const auto m = system.input_dim();
  Mat kalman(d, d * m);
  Mat block = system.B;
  for (Eigen::Index k = 0; k < d; ++k) {
    kalman.middleCols(k * m, m) = block;
    block = system.A * block;
  }
  const Eigen::JacobiSVD<Mat> svd(kalman);
  const Eigen::VectorXd sv = svd.singularValues();
  ControllabilityReport report;
  if (sv.size() > 0 && sv[0] > 0.0) {
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv[i] > 1e-10 * sv[0]) ++report.rank;
    }
  }
  report.controllable = report.rank == d;
  return report;
}

Problem load_problem(std::string_view config_text) {
  json j;
  try {
    j = json::parse(config_text.begin(), config_text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed problem JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("problem JSON must be an object");

  const json& kind_field = field(j, "kind");
  if (!kind_field.is_string()) throw ValidationError("field \"kind\" must be a string");
  const std::string kind = kind_field.get<std::string>();

  LtiSystem system(matrix_from_json(field(j, "A"), "A"), matrix_from_json(field(j, "B"), "B"));
  const auto d = system.state_dim();
  const auto m = system.input_dim();

  if (kind == "reach") {
    ReachProblem p;
    p.system = std::move(system);
    p.t_start = number(j, "t0");
    p.t_end = number(j, "tf");
    p.z_start = vector_from_json(field(j, "z0"), "z0");
    p.z_end = vector_from_json(field(j, "zf"), "zf");
    if (j.contains("box_lower") || j.contains("box_upper")) {
      p.box.lower = vector_from_json(field(j, "box_lower"), "box_lower");
      p.box.upper = vector_from_json(field(j, "box_upper"), "box_upper");
    } else {
      p.box = ControlBox::symmetric(m);
    }
    p.validate();
    return p;
  }
  if (kind == "lq" || kind == "sparse_lq") {
    LqProblem p;
    p.system = std::move(system);
    p.sparse = kind == "sparse_lq";
    p.t_start = number(j, "t0");
    p.t_end = number(j, "tf");
    p.z_start = vector_from_json(field(j, "z0"), "z0");
    p.Q = weight_from_json(field(j, "Q"), d, "Q");
    p.R = weight_from_json(field(j, "R"), m, "R");
    p.Qf = weight_from_json(field(j, "Qf"), d, "Qf");
    p.gamma = number(j, "gamma");
    if (j.contains("threshold_factor")) p.threshold_factor = number(j, "threshold_factor");
    p.validate();
    return p;
  }
  throw ValidationError("unknown problem kind \"" + kind + "\"");
}

Problem load_problem_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open problem file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_problem(buffer.str());
}

std::string serialize_problem(const Problem& problem) { return problem_json(problem).dump(); }

std::string problem_hash(const Problem& problem) {
  const std::string text = serialize_problem(problem);
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

}  // namespace jamctl
