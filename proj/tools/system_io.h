#ifndef PONTRYAGIN_TOOLS_SYSTEM_IO_H
#define PONTRYAGIN_TOOLS_SYSTEM_IO_H

#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"
#include "pontryagin/colligation.hpp"

namespace pontryagin {
namespace io {

using Json = nlohmann::ordered_json;

/// JSON matrix: rows of [re, im] pairs. A flat row-major list of pairs is
/// also accepted on input.
inline Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

inline cplx entry_from_json(const Json& e, const std::string& where) {
  if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
    throw InputError(where + ": complex entry must be [re, im]");
  }
  return cplx(e[0].get<double>(), e[1].get<double>());
}

inline Matrix matrix_from_json(const Json& j, Eigen::Index rows, Eigen::Index cols,
                               const std::string& field) {
  if (!j.is_array()) throw InputError("field " + field + ": expected an array");
  Matrix m(rows, cols);
  const bool flat = (!j.empty() && j[0].is_array() && !j[0].empty() && j[0][0].is_number()) ||
                    (j.empty() && rows * cols == 0);
  if (flat) {
    if (static_cast<Eigen::Index>(j.size()) != rows * cols) {
      throw InputError("field " + field + ": expected " + std::to_string(rows * cols) +
                       " entries");
    }
    for (Eigen::Index k = 0; k < rows * cols; ++k) {
      m(k / cols, k % cols) =
          entry_from_json(j[k], "field " + field + "[" + std::to_string(k) + "]");
    }
    require_finite(m, "field " + field);
    return m;
  }
  if (static_cast<Eigen::Index>(j.size()) != rows) {
    throw InputError("field " + field + ": expected " + std::to_string(rows) + " rows, got " +
                     std::to_string(j.size()));
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    const std::string where = "field " + field + "[" + std::to_string(i) + "]";
    if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != cols) {
      throw InputError(where + ": expected " + std::to_string(cols) + " columns");
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      m(i, k) = entry_from_json(j[i][k], where + "[" + std::to_string(k) + "]");
    }
  }
  require_finite(m, "field " + field);
  return m;
}

inline Json parse_json(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    // Convert the byte offset into a line number.
    const std::size_t pos = std::min<std::size_t>(e.byte, text.size());
    const long line = 1 + std::count(text.begin(), text.begin() + pos, '\n');
    throw InputError(source + ":" + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
  }
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path + ": cannot write file");
  out << text;
}

inline int int_field(const Json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key) || !j[key].is_number_integer() || j[key].get<int>() < 0) {
    throw InputError(ctx + ": field " + key + " must be a non-negative integer");
  }
  return j[key].get<int>();
}

struct SystemFile {
  Colligation system;
  std::string name;
  Json tolerance_overrides = Json::object();
};

inline Json system_to_json(const Colligation& s, const std::string& name = "") {
  Json j;
  j["state"] = {{"pos", s.state().pos}, {"neg", s.state().neg}};
  j["input_dim"] = s.input_dim();
  j["output_dim"] = s.output_dim();
  j["A"] = to_json(s.A());
  j["B"] = to_json(s.B());
  j["C"] = to_json(s.C());
  j["D"] = to_json(s.D());
  if (!name.empty()) j["metadata"] = {{"name", name}};
  return j;
}

inline SystemFile system_from_json(const Json& j, const std::string& source) {
  if (!j.is_object()) throw InputError(source + ": expected a JSON object");
  if (!j.contains("state") || !j["state"].is_object()) {
    throw InputError(source + ": missing field state");
  }
  const int pos = int_field(j["state"], "pos", source + ": state");
  const int neg = int_field(j["state"], "neg", source + ": state");
  const int m = int_field(j, "input_dim", source);
  const int p = int_field(j, "output_dim", source);
  const int n = pos + neg;
  for (const char* k : {"A", "B", "C", "D"}) {
    if (!j.contains(k)) throw InputError(source + ": missing field " + k);
  }
  SystemFile f;
  f.system = Colligation(SignatureSpace(pos, neg), matrix_from_json(j["A"], n, n, "A"),
                         matrix_from_json(j["B"], n, m, "B"),
                         matrix_from_json(j["C"], p, n, "C"),
                         matrix_from_json(j["D"], p, m, "D"));
  if (j.contains("metadata") && j["metadata"].is_object()) {
    const Json& md = j["metadata"];
    if (md.contains("name") && md["name"].is_string()) f.name = md["name"].get<std::string>();
    if (md.contains("tolerances") && md["tolerances"].is_object()) {
      f.tolerance_overrides = md["tolerances"];
    }
  }
  return f;
}

inline SystemFile load_system(const std::string& path) {
  return system_from_json(parse_json(read_text(path), path), path);
}

inline void save_system(const std::string& path, const Colligation& s,
                        const std::string& name = "") {
  write_text(path, system_to_json(s, name).dump(2) + "\n");
}

/// Taylor coefficient file: {"coefficients": [M0, M1, ...], "input_dim", "output_dim"}.
inline std::vector<Matrix> load_taylor(const std::string& path) {
  const Json j = parse_json(read_text(path), path);
  if (!j.is_object() || !j.contains("coefficients") || !j["coefficients"].is_array()) {
    throw InputError(path + ": missing field coefficients");
  }
  const int m = int_field(j, "input_dim", path);
  const int p = int_field(j, "output_dim", path);
  std::vector<Matrix> out;
  for (std::size_t k = 0; k < j["coefficients"].size(); ++k) {
    out.push_back(matrix_from_json(j["coefficients"][k], p, m,
                                   "coefficients[" + std::to_string(k) + "]"));
  }
  return out;
}

inline void apply_overrides(Tolerances& tol, const Json& o) {
  auto num = [&](const char* key, double& field) {
    if (o.contains(key) && o[key].is_number()) field = o[key].get<double>();
  };
  num("rank_tol", tol.rank_tol);
  num("psd_tol", tol.psd_tol);
  num("metric_tol", tol.metric_tol);
  if (o.contains("boundary_samples") && o["boundary_samples"].is_number_integer()) {
    tol.boundary_samples = o["boundary_samples"].get<int>();
  }
  if (o.contains("disc_samples") && o["disc_samples"].is_number_integer()) {
    tol.disc_samples = o["disc_samples"].get<int>();
  }
}

inline Json tolerances_to_json(const Tolerances& tol) {
  return {{"rank_tol", tol.rank_tol},       {"psd_tol", tol.psd_tol},
          {"metric_tol", tol.metric_tol},   {"boundary_samples", tol.boundary_samples},
          {"disc_samples", tol.disc_samples}, {"seed", tol.seed}};
}

inline std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return os.str();
}

/// Same keys for every command so reports diff cleanly.
struct ReportDocument {
  Json doc;

  explicit ReportDocument(const std::string& command) {
    doc["command"] = command;
    doc["inputs"] = Json::array();
    doc["tolerances"] = Json::object();
    doc["verdicts"] = Json::object();
    doc["residuals"] = Json::object();
    doc["certificates"] = Json::object();
    doc["outputs"] = Json::array();
    doc["notes"] = Json::array();
  }

  void add_input(const std::string& path, const std::string& contents) {
    doc["inputs"].push_back({{"path", path}, {"sha256", sha256_hex(contents)}});
  }
  void set_tolerances(const Tolerances& tol) { doc["tolerances"] = tolerances_to_json(tol); }
  Json& verdicts() { return doc["verdicts"]; }
  Json& residuals() { return doc["residuals"]; }
  Json& certificates() { return doc["certificates"]; }
  void add_output(const std::string& path) { doc["outputs"].push_back(path); }
  void add_note(const std::string& note) { doc["notes"].push_back(note); }
};

}  // namespace io
}  // namespace pontryagin

#endif  // PONTRYAGIN_TOOLS_SYSTEM_IO_H
