#include "mpk/model.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace mpk {

namespace {

std::string entry_name(const std::string& field, int i, int j) {
  std::ostringstream os;
  os << field << "[" << i << "][" << j << "]";
  return os.str();
}

Matrix parse_matrix(const nlohmann::json& doc, const std::string& field, int n) {
  if (!doc.contains(field) || !doc[field].is_array() || static_cast<int>(doc[field].size()) != n) {
    throw SchemaError("\"" + field + "\" must be a " + std::to_string(n) + "x" +
                      std::to_string(n) + " array of numbers");
  }
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    const auto& row = doc[field][static_cast<size_t>(i)];
    if (!row.is_array() || static_cast<int>(row.size()) != n) {
      throw SchemaError("\"" + field + "\" row " + std::to_string(i) + " has wrong length");
    }
    for (int j = 0; j < n; ++j) {
      const auto& cell = row[static_cast<size_t>(j)];
      if (!cell.is_number()) throw SchemaError(entry_name(field, i, j) + " is not a number");
      m(i, j) = cell.get<double>();
      if (!std::isfinite(m(i, j))) {
        throw SchemaError(entry_name(field, i, j) + " is not finite");
      }
    }
  }
  return m;
}

Eigen::VectorXd parse_vector(const nlohmann::json& doc, const std::string& field, int n) {
  if (!doc.contains(field) || !doc[field].is_array() || static_cast<int>(doc[field].size()) != n) {
    throw SchemaError("\"" + field + "\" must be an array of " + std::to_string(n) + " numbers");
  }
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) {
    const auto& cell = doc[field][static_cast<size_t>(i)];
    if (!cell.is_number()) {
      throw SchemaError(field + "[" + std::to_string(i) + "] is not a number");
    }
    v(i) = cell.get<double>();
    if (!std::isfinite(v(i))) {
      throw SchemaError(field + "[" + std::to_string(i) + "] is not finite");
    }
  }
  return v;
}

}  // namespace

void validate_model(const MarkovModel& model, double tol) {
  const int n = model.size();
  if (n < 1) throw InvariantViolation("state space is empty");

  std::set<std::string> seen;
  for (const auto& label : model.space.labels) {
    if (!seen.insert(label).second) {
      throw InvariantViolation("duplicate state label \"" + label + "\"");
    }
  }

  if (model.transition.rows() != n || model.transition.cols() != n) {
    throw InvariantViolation("transition matrix is not n x n");
  }

  const std::string field = model.is_ctmc() ? "generator" : "kernel";
  for (int i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < n; ++j) {
      const double q = model.transition(i, j);
      row_sum += q;
      if (model.is_ctmc()) {
        if (i != j && q < -tol) {
          throw InvariantViolation(entry_name(field, i, j) + " = " + std::to_string(q) +
                                   ": negative off-diagonal rate");
        }
      } else {
        if (q < -tol || q > 1.0 + tol) {
          throw InvariantViolation(entry_name(field, i, j) + " = " + std::to_string(q) +
                                   ": kernel entry outside [0, 1]");
        }
      }
    }
    const double limit = model.is_ctmc() ? 0.0 : 1.0;
    if (row_sum > limit + tol) {
      throw InvariantViolation(field + " row " + std::to_string(i) + " sums to " +
                               std::to_string(row_sum) + " > " + std::to_string(limit) +
                               " (super-Markovian)");
    }
  }

  if (model.measure.size() != n) throw InvariantViolation("measure has wrong length");
  double mass = 0.0;
  for (int i = 0; i < n; ++i) {
    if (model.measure(i) < -tol) {
      throw InvariantViolation("measure[" + std::to_string(i) + "] = " +
                               std::to_string(model.measure(i)) + " is negative");
    }
    mass += std::max(model.measure(i), 0.0);
  }
  if (!(mass > 0.0)) throw InvariantViolation("measure is identically zero");

  for (const auto& [name, values] : model.functions) {
    if (values.size() != n) {
      throw InvariantViolation("function \"" + name + "\" has wrong length");
    }
    for (int i = 0; i < n; ++i) {
      if (!std::isfinite(values(i))) {
        throw InvariantViolation("function \"" + name + "\" has a non-finite entry at state " +
                                 std::to_string(i));
      }
    }
  }
}

MarkovModel load_model(const nlohmann::json& doc) {
  if (!doc.is_object()) throw SchemaError("model document must be a JSON object");

  MarkovModel model;
  if (!doc.contains("states") || !doc["states"].is_array() || doc["states"].empty()) {
    throw SchemaError("\"states\" must be a nonempty array of strings");
  }
  for (const auto& s : doc["states"]) {
    if (!s.is_string()) throw SchemaError("\"states\" entries must be strings");
    model.space.labels.push_back(s.get<std::string>());
  }
  const int n = model.size();

  if (!doc.contains("mode") || !doc["mode"].is_string()) {
    throw SchemaError("\"mode\" must be \"ctmc\" or \"dtmc\"");
  }
  const std::string mode = doc["mode"].get<std::string>();
  if (mode == "ctmc") {
    model.mode = Mode::Ctmc;
    if (doc.contains("kernel")) throw SchemaError("ctmc documents carry \"generator\", not \"kernel\"");
    model.transition = parse_matrix(doc, "generator", n);
  } else if (mode == "dtmc") {
    model.mode = Mode::Dtmc;
    if (doc.contains("generator")) throw SchemaError("dtmc documents carry \"kernel\", not \"generator\"");
    model.transition = parse_matrix(doc, "kernel", n);
  } else {
    throw SchemaError("\"mode\" must be \"ctmc\" or \"dtmc\", got \"" + mode + "\"");
  }

  model.measure = parse_vector(doc, "measure", n);

  if (doc.contains("functions")) {
    if (!doc["functions"].is_object()) throw SchemaError("\"functions\" must be an object");
    for (const auto& [name, values] : doc["functions"].items()) {
      nlohmann::json wrapper{{name, values}};
      model.functions[name] = parse_vector(wrapper, name, n);
    }
  }

  validate_model(model);
  return model;
}

MarkovModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open model file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("model file " + path + " is not valid JSON: " + e.what());
  }
  return load_model(doc);
}

}  // namespace mpk
