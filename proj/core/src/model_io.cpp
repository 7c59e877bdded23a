#include <yaml-cpp/yaml.h>

#include <fstream>
#include <sstream>

#include "spinal/model.hpp"

namespace spinal {

namespace {

constexpr const char* kHeader = "# spinal-model v1";

[[noreturn]] void schema_error(const std::string& msg) { throw ModelError("schema violation: " + msg); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void check_header(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line != kHeader) schema_error(std::string("first line must be '") + kHeader + "'");
    return;
  }
  schema_error("empty model file");
}

RatePolynomial parse_polynomial(const YAML::Node& node, int D, const std::string& where) {
  if (!node || !node.IsSequence()) schema_error(where + ": expected a list of {monomial, coef} terms");
  RatePolynomial p(D);
  for (const auto& term : node) {
    if (!term.IsMap() || !term["monomial"] || !term["coef"]) schema_error(where + ": term needs monomial and coef");
    const auto powers = term["monomial"].as<std::vector<int>>();
    if (static_cast<int>(powers.size()) != D) schema_error(where + ": monomial must have one exponent per type");
    p.add_term(powers, term["coef"].as<double>());
  }
  return p;
}

GuardMode parse_guard(const YAML::Node& node) {
  if (!node) return GuardMode::Multiplicative;
  const auto g = node.as<std::string>();
  if (g == "multiplicative") return GuardMode::Multiplicative;
  if (g == "none") return GuardMode::None;
  schema_error("guard must be 'multiplicative' or 'none'");
}

ModelSpec parse_node(const YAML::Node& root) {
  if (!root.IsMap()) schema_error("top level must be a mapping");

  if (const auto preset = root["preset"]) {
    if (root["events"] || root["types"]) schema_error("preset files cannot also list types or events");
    if (!preset["name"]) schema_error("preset needs a name");
    std::map<std::string, double> params;
    if (const auto ps = preset["params"]) {
      if (!ps.IsMap()) schema_error("preset params must be a mapping");
      for (const auto& kv : ps) params[kv.first.as<std::string>()] = kv.second.as<double>();
    }
    const int K = root["K"] ? root["K"].as<int>() : 0;
    return make_preset(preset["name"].as<std::string>(), params, K);
  }

  if (!root["types"] || !root["types"].IsSequence()) schema_error("missing 'types' list");
  if (!root["K"]) schema_error("missing 'K'");
  if (!root["events"] || !root["events"].IsSequence()) schema_error("missing 'events' list");

  TypeSpace types{root["types"].as<std::vector<std::string>>()};
  const int D = types.size();
  if (D < 1) schema_error("'types' must not be empty");
  const int K = root["K"].as<int>();

  std::vector<OffspringEvent> events;
  int i = 0;
  for (const auto& e : root["events"]) {
    const std::string where = "event " + std::to_string(i++);
    if (!e.IsMap() || !e["parent"] || !e["offspring"] || !e["rate"])
      schema_error(where + ": needs parent, offspring and rate");
    OffspringEvent ev;
    ev.parent = types.index_of(e["parent"].as<std::string>());
    ev.offspring = e["offspring"].as<std::vector<int>>();
    if (static_cast<int>(ev.offspring.size()) != D) schema_error(where + ": offspring must have one count per type");
    ev.rate = parse_polynomial(e["rate"], D, where);
    events.push_back(std::move(ev));
  }

  PsiWeight psi;
  if (const auto pn = root["psi"]) {
    if (!pn.IsMap()) schema_error("psi must map each type to a polynomial");
    psi.constant_one = false;
    psi.per_type.resize(static_cast<std::size_t>(D));
    for (int x = 0; x < D; ++x) {
      const auto& name = types.names[static_cast<std::size_t>(x)];
      if (!pn[name]) schema_error("psi missing type '" + name + "'");
      psi.per_type[static_cast<std::size_t>(x)] = parse_polynomial(pn[name], D, "psi." + name);
    }
  }

  const std::string name = root["name"] ? root["name"].as<std::string>() : std::string{};
  return ModelSpec(std::move(types), std::move(events), K, std::move(psi), parse_guard(root["guard"]), name);
}

void render_polynomial(std::ostream& out, const RatePolynomial& p, const std::string& indent) {
  if (p.is_zero()) {
    out << " []\n";
    return;
  }
  out << "\n";
  for (const auto& [pw, c] : p.terms()) {
    out << indent << "- monomial: [";
    for (std::size_t i = 0; i < pw.size(); ++i) out << (i ? ", " : "") << pw[i];
    out << "]\n" << indent << "  coef: " << c << "\n";
  }
}

}  // namespace

ModelSpec parse_model(const std::string& text) {
  check_header(text);
  try {
    return parse_node(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    schema_error(e.what());
  }
}

ModelSpec load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

std::string render_model(const ModelSpec& model) {
  std::ostringstream out;
  out.precision(17);
  const auto& names = model.types().names;
  out << kHeader << "\n";
  if (!model.name().empty()) out << "name: " << model.name() << "\n";
  out << "types: [";
  for (std::size_t i = 0; i < names.size(); ++i) out << (i ? ", " : "") << names[i];
  out << "]\nK: " << model.K() << "\n";
  out << "guard: " << (model.guard() == GuardMode::Multiplicative ? "multiplicative" : "none") << "\n";
  out << "events:\n";
  for (const auto& ev : model.events()) {
    out << "  - parent: " << names[static_cast<std::size_t>(ev.parent)] << "\n    offspring: [";
    for (std::size_t i = 0; i < ev.offspring.size(); ++i) out << (i ? ", " : "") << ev.offspring[i];
    out << "]\n    rate:";
    render_polynomial(out, ev.rate, "      ");
  }
  if (!model.psi().constant_one) {
    out << "psi:\n";
    for (std::size_t x = 0; x < names.size(); ++x) {
      out << "  " << names[x] << ":";
      render_polynomial(out, model.psi().per_type[x], "    ");
    }
  }
  return out.str();
}

std::uint64_t model_hash(const ModelSpec& model) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : render_model(model)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace spinal
