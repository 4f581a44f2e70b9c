#include "stabcert/sysfile.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "stabcert/corpus.hpp"

namespace stabcert {

namespace {

using nlohmann::json;

Expr parse_expr_field(const json& j, const std::string& what) {
  if (!j.is_string())
    throw DefinitionError(what + " must be an expression string");
  try {
    return Expr::parse(j.get<std::string>());
  } catch (const ParseError& e) {
    throw DefinitionError(what + ": " + e.what() + " at offset " +
                          std::to_string(e.offset));
  }
}

}  // namespace

SystemDef parse_system_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DefinitionError(std::string("definition file is not valid JSON: ") +
                          e.what());
  }
  if (!j.is_object()) throw DefinitionError("definition must be a JSON object");

  if (!j.contains("name") || !j["name"].is_string())
    throw DefinitionError("missing string field 'name'");
  std::string name = j["name"].get<std::string>();

  if (!j.contains("variables") || !j["variables"].is_array())
    throw DefinitionError("missing array field 'variables'");
  std::vector<std::string> variables;
  for (const auto& v : j["variables"]) {
    if (!v.is_string()) throw DefinitionError("'variables' entries must be strings");
    variables.push_back(v.get<std::string>());
  }
  const std::size_t d = variables.size();

  std::vector<bool> periodic(d, false);
  if (j.contains("periodic")) {
    const auto& p = j["periodic"];
    if (!p.is_array() || p.size() != d)
      throw DefinitionError("'periodic' must be a boolean array matching 'variables'");
    for (std::size_t i = 0; i < d; ++i) periodic[i] = p[i].get<bool>();
  }

  std::map<std::string, double> parameters;
  if (j.contains("parameters")) {
    if (!j["parameters"].is_object())
      throw DefinitionError("'parameters' must be an object of numbers");
    for (const auto& [k, v] : j["parameters"].items())
      parameters[k] = v.get<double>();
  }

  if (!j.contains("dynamics") || !j["dynamics"].is_object())
    throw DefinitionError("missing object field 'dynamics'");
  const json& dyn = j["dynamics"];
  std::string type = dyn.value("type", "");

  std::variant<HamiltonianDynamics, ExplicitField> dynamics = ExplicitField{};
  if (type == "hamiltonian") {
    if (!dyn.contains("hamiltonian"))
      throw DefinitionError("hamiltonian dynamics needs field 'hamiltonian'");
    Expr h = parse_expr_field(dyn["hamiltonian"], "'hamiltonian'");
    SymplecticStructure s = SymplecticStructure::canonical(
        static_cast<int>(d) / 2 > 0 ? static_cast<int>(d) / 2 : 1);
    if (dyn.contains("symplectic")) {
      const json& sj = dyn["symplectic"];
      std::string st = sj.value("type", "canonical");
      if (st == "canonical") {
        if (d % 2 != 0)
          throw DefinitionError("canonical structure needs even dimension");
        s = SymplecticStructure::canonical(static_cast<int>(d) / 2);
      } else if (st == "matrix") {
        if (!sj.contains("W") || !sj["W"].is_array())
          throw DefinitionError("matrix structure needs array field 'W'");
        std::vector<std::vector<double>> w;
        for (const auto& row : sj["W"]) w.push_back(row.get<std::vector<double>>());
        s = SymplecticStructure::matrix(std::move(w));
      } else {
        throw DefinitionError("unknown symplectic type '" + st + "'");
      }
    } else if (d % 2 != 0) {
      throw DefinitionError("hamiltonian dynamics requires even dimension");
    } else {
      s = SymplecticStructure::canonical(static_cast<int>(d) / 2);
    }
    dynamics = HamiltonianDynamics{std::move(h), std::move(s)};
  } else if (type == "field") {
    if (!dyn.contains("components") || !dyn["components"].is_array())
      throw DefinitionError("field dynamics needs array field 'components'");
    ExplicitField f;
    std::size_t i = 0;
    for (const auto& c : dyn["components"])
      f.components.push_back(
          parse_expr_field(c, "'components[" + std::to_string(i++) + "]'"));
    dynamics = std::move(f);
  } else {
    throw DefinitionError("dynamics 'type' must be \"hamiltonian\" or \"field\"");
  }

  std::vector<NamedExpr> conserved;
  if (j.contains("conserved")) {
    if (!j["conserved"].is_array())
      throw DefinitionError("'conserved' must be an array of {name, expr}");
    for (const auto& c : j["conserved"]) {
      if (!c.is_object() || !c.contains("name") || !c.contains("expr"))
        throw DefinitionError("'conserved' entries must have 'name' and 'expr'");
      conserved.push_back({c["name"].get<std::string>(),
                           parse_expr_field(c["expr"], "conserved expression")});
    }
  }

  try {
    return SystemDef(std::move(name), std::move(variables), std::move(periodic),
                     std::move(dynamics), std::move(conserved), std::move(parameters));
  } catch (const EvalError& e) {
    throw DefinitionError(std::string("definition invalid: ") + e.what());
  }
}

SystemDef load_system_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DefinitionError("cannot open definition file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_system_json(buf.str());
}

SystemDef resolve_system(const std::string& id_or_path) {
  if (corpus_find(id_or_path)) return builtin(id_or_path);
  if (std::filesystem::exists(id_or_path)) return load_system_file(id_or_path);
  throw DefinitionError("'" + id_or_path +
                        "' is neither a corpus id nor an existing definition file");
}

}  // namespace stabcert
