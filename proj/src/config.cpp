#include "isr/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include "isr/error.hpp"

namespace isr {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string lower(std::string s) {
  for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  for (size_t p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size()))
    s.replace(p, from.size(), to);
}

// "mm^2 / days" and "mm2/day" compare equal; "-" means dimensionless.
std::string normalize_unit(const std::string& unit) {
  std::string u;
  for (char ch : lower(unit))
    if (!std::isspace(static_cast<unsigned char>(ch)) && ch != '^') u.push_back(ch);
  if (u == "-") return "";
  replace_all(u, "days", "day");
  replace_all(u, "cells", "cell");
  replace_all(u, "degrees", "deg");
  replace_all(u, "degree", "deg");
  if (u == "d") u = "day";
  return u;
}

enum class Kind { Real, Integer, Flag, Word, Point, Profile };

struct Value {
  double real = 0.0;
  int integer = 0;
  bool flag = false;
  std::string word;
  Vec3d point = Vec3d::Zero();
  InfluxProfile profile;
};

using Layers = std::vector<Layer>;
using Setter = std::function<void(SimulationConfig&, const Value&, const Layers&)>;

struct KeySpec {
  Kind kind;
  std::string unit;  // canonical spelling, "" for dimensionless or non-numeric
  Setter set;
};

// Section families; layer sections ("species.media") share the keys of their family.
std::map<std::string, std::map<std::string, KeySpec>> build_key_table() {
  std::map<std::string, std::map<std::string, KeySpec>> t;

  auto species = [&](const char* key, const char* unit, double SpeciesParams::*member) {
    t["species"][key] = {Kind::Real, unit, [member](SimulationConfig& c, const Value& v, const Layers& ls) {
                           for (Layer l : ls) c.layer(l).species.*member = v.real;
                         }};
  };
  species("D_P", "mm^2/day", &SpeciesParams::D_P);
  species("eta_P", "mm^3/cell/day", &SpeciesParams::eta_P);
  species("eps_P", "mm^3/cell/day", &SpeciesParams::eps_P);
  species("c_P_th", "mol/mm^3", &SpeciesParams::c_P_th);
  species("l_P", "mm^3/mol", &SpeciesParams::l_P);
  species("D_T", "mm^2/day", &SpeciesParams::D_T);
  species("eps_T", "mm^3/cell/day", &SpeciesParams::eps_T);
  species("c_T_th", "mol/mm^3", &SpeciesParams::c_T_th);
  species("l_T", "mm^3/mol", &SpeciesParams::l_T);
  species("eta_E", "mol/cell/day", &SpeciesParams::eta_E);
  species("eps_E", "mm^3/mol/day", &SpeciesParams::eps_E);
  species("c_E_th", "mol/mm^3", &SpeciesParams::c_E_th);
  species("chi_C", "mm^5/mol/day", &SpeciesParams::chi_C);
  species("chi_H", "mm^5/mol/day", &SpeciesParams::chi_H);
  species("eta_S", "mm^3/cell/day", &SpeciesParams::eta_S);
  // Equilibrium values are shared with the structural side.
  auto shared = [](double SpeciesParams::*sp, double StructuralParams::*st) {
    return [sp, st](SimulationConfig& c, const Value& v, const Layers& ls) {
      for (Layer l : ls) {
        c.layer(l).species.*sp = v.real;
        c.layer(l).structural.*st = v.real;
      }
    };
  };
  for (const char* fam : {"species", "structural"}) {
    t[fam]["c_E_eq"] = {Kind::Real, "mol/mm^3",
                        shared(&SpeciesParams::c_E_eq, &StructuralParams::c_E_eq)};
    t[fam]["rho_S_eq"] = {Kind::Real, "cell/mm^3",
                          shared(&SpeciesParams::rho_S_eq, &StructuralParams::rho_S_eq)};
  }

  auto structural = [&](const char* key, const char* unit, double StructuralParams::*member) {
    t["structural"][key] = {Kind::Real, unit,
                            [member](SimulationConfig& c, const Value& v, const Layers& ls) {
                              for (Layer l : ls) c.layer(l).structural.*member = v.real;
                            }};
  };
  structural("mu", "MPa", &StructuralParams::mu);
  structural("lambda", "MPa", &StructuralParams::lambda);
  structural("k1", "MPa", &StructuralParams::k1_bar);
  structural("k2", "", &StructuralParams::k2);
  structural("kappa", "", &StructuralParams::kappa);
  structural("alpha", "deg", &StructuralParams::alpha);
  t["structural"]["growth_model"] = {
      Kind::Word, "", [](SimulationConfig& c, const Value& v, const Layers& ls) {
        GrowthModel m;
        if (v.word == "isotropic_matrix")
          m = GrowthModel::IsotropicMatrix;
        else if (v.word == "stress_free_anisotropic")
          m = GrowthModel::StressFreeAnisotropic;
        else
          throw ConfigError("growth_model must be isotropic_matrix or stress_free_anisotropic, got '" +
                            v.word + "'");
        for (Layer l : ls) c.layer(l).structural.growth_model = m;
      }};

  auto& g = t["geometry"];
  auto geo_real = [&](const char* key, std::function<double&(SimulationConfig&)> ref) {
    g[key] = {Kind::Real, "mm", [ref](SimulationConfig& c, const Value& v, const Layers&) { ref(c) = v.real; }};
  };
  auto geo_int = [&](const char* key, std::function<int&(SimulationConfig&)> ref) {
    g[key] = {Kind::Integer, "", [ref](SimulationConfig& c, const Value& v, const Layers&) { ref(c) = v.integer; }};
  };
  geo_real("block_length", [](SimulationConfig& c) -> double& { return c.block_length; });
  geo_int("block_divisions", [](SimulationConfig& c) -> int& { return c.block_divisions; });
  geo_real("length", [](SimulationConfig& c) -> double& { return c.artery.length; });
  geo_real("r_inner", [](SimulationConfig& c) -> double& { return c.artery.r_inner; });
  geo_real("r_media_outer", [](SimulationConfig& c) -> double& { return c.artery.r_media_outer; });
  geo_real("r_outer", [](SimulationConfig& c) -> double& { return c.artery.r_outer; });
  geo_real("damage_start", [](SimulationConfig& c) -> double& { return c.artery.damage_start; });
  geo_real("damage_length", [](SimulationConfig& c) -> double& { return c.artery.damage_length; });
  geo_real("strut_width", [](SimulationConfig& c) -> double& { return c.strut_width; });
  geo_int("radial_media", [](SimulationConfig& c) -> int& { return c.artery.divisions.radial_media; });
  geo_int("radial_adventitia",
          [](SimulationConfig& c) -> int& { return c.artery.divisions.radial_adventitia; });
  geo_int("circumferential",
          [](SimulationConfig& c) -> int& { return c.artery.divisions.circumferential; });
  geo_int("longitudinal", [](SimulationConfig& c) -> int& { return c.artery.divisions.longitudinal; });

  auto& f = t["flux"];
  f["p_en"] = {Kind::Real, "mm/day",
               [](SimulationConfig& c, const Value& v, const Layers&) { c.flux.p_en = v.real; }};
  f["peak_q_P"] = {Kind::Real, "mol/mm^2/day",
                   [](SimulationConfig& c, const Value& v, const Layers&) { c.peak_q_P = v.real; }};
  f["peak_q_T"] = {Kind::Real, "mol/mm^2/day",
                   [](SimulationConfig& c, const Value& v, const Layers&) { c.peak_q_T = v.real; }};
  f["profile"] = {Kind::Profile, "", [](SimulationConfig& c, const Value& v, const Layers&) {
                    c.flux.profile = v.profile;
                    c.custom_profile = true;
                  }};

  auto& tm = t["time"];
  tm["dt"] = {Kind::Real, "day", [](SimulationConfig& c, const Value& v, const Layers&) { c.time.dt = v.real; }};
  tm["t_end"] = {Kind::Real, "day",
                 [](SimulationConfig& c, const Value& v, const Layers&) { c.time.t_end = v.real; }};
  tm["scheme"] = {Kind::Word, "", [](SimulationConfig& c, const Value& v, const Layers&) {
                    if (v.word == "monolithic")
                      c.time.scheme = Scheme::Monolithic;
                    else if (v.word == "staggered")
                      c.time.scheme = Scheme::Staggered;
                    else
                      throw ConfigError("scheme must be monolithic or staggered, got '" + v.word + "'");
                  }};
  tm["tol_abs"] = {Kind::Real, "", [](SimulationConfig& c, const Value& v, const Layers&) {
                     c.time.newton_tol_abs = v.real;
                   }};
  tm["tol_rel"] = {Kind::Real, "", [](SimulationConfig& c, const Value& v, const Layers&) {
                     c.time.newton_tol_rel = v.real;
                   }};
  tm["max_newton_iters"] = {Kind::Integer, "", [](SimulationConfig& c, const Value& v, const Layers&) {
                              c.time.max_newton_iters = v.integer;
                            }};
  tm["max_retries"] = {Kind::Integer, "", [](SimulationConfig& c, const Value& v, const Layers&) {
                         c.time.max_retries = v.integer;
                       }};
  tm["linear_solver"] = {Kind::Word, "", [](SimulationConfig& c, const Value& v, const Layers&) {
                           if (v.word == "direct")
                             c.time.linear_solver = LinearSolverKind::Direct;
                           else if (v.word == "iterative")
                             c.time.linear_solver = LinearSolverKind::Iterative;
                           else
                             throw ConfigError("linear_solver must be direct or iterative, got '" +
                                               v.word + "'");
                         }};
  tm["freeze_mechanics"] = {Kind::Flag, "", [](SimulationConfig& c, const Value& v, const Layers&) {
                              c.time.freeze_mechanics = v.flag;
                            }};
  tm["exact_gradJ_tangent"] = {Kind::Flag, "", [](SimulationConfig& c, const Value& v, const Layers&) {
                                 c.time.exact_gradJ_tangent = v.flag;
                               }};

  auto& o = t["output"];
  o["directory"] = {Kind::Word, "", [](SimulationConfig& c, const Value& v, const Layers&) {
                      c.output.directory = v.word;
                    }};
  o["field_interval"] = {Kind::Real, "day", [](SimulationConfig& c, const Value& v, const Layers&) {
                           c.output.field_interval = v.real;
                         }};
  o["monitor_point"] = {Kind::Point, "mm", [](SimulationConfig& c, const Value& v, const Layers&) {
                          c.output.monitor_point = v.point;
                        }};
  return t;
}

const std::map<std::string, std::map<std::string, KeySpec>>& key_table() {
  static const auto table = build_key_table();
  return table;
}

double parse_number(const std::string& text, std::string& rest) {
  const std::string s = trim(text);
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin) throw ConfigError("expected a number, got '" + s + "'");
  if (errno == ERANGE) throw ConfigError("number out of range: '" + s + "'");
  rest = trim(std::string(end));
  return v;
}

void check_unit(const std::string& given, const std::string& expected) {
  if (given.empty()) return;
  if (normalize_unit(given) != normalize_unit(expected))
    throw ConfigError("unit mismatch: expected '" + (expected.empty() ? std::string("-") : expected) +
                      "', got '" + given + "'");
}

Value parse_value(const KeySpec& spec, const std::string& raw) {
  Value v;
  std::string rest;
  switch (spec.kind) {
    case Kind::Real:
      v.real = parse_number(raw, rest);
      check_unit(rest, spec.unit);
      break;
    case Kind::Integer: {
      const double d = parse_number(raw, rest);
      if (d != static_cast<double>(static_cast<int>(d)))
        throw ConfigError("expected an integer, got '" + trim(raw) + "'");
      check_unit(rest, spec.unit);
      v.integer = static_cast<int>(d);
      break;
    }
    case Kind::Flag: {
      const std::string w = lower(trim(raw));
      if (w == "true" || w == "yes" || w == "on" || w == "1")
        v.flag = true;
      else if (w == "false" || w == "no" || w == "off" || w == "0")
        v.flag = false;
      else
        throw ConfigError("expected true or false, got '" + trim(raw) + "'");
      break;
    }
    case Kind::Word:
      v.word = trim(raw);
      if (v.word.size() >= 2 && v.word.front() == '"' && v.word.back() == '"')
        v.word = v.word.substr(1, v.word.size() - 2);
      if (v.word.empty()) throw ConfigError("empty value");
      break;
    case Kind::Point: {
      std::stringstream ss(raw);
      std::string part;
      int i = 0;
      while (std::getline(ss, part, ',')) {
        if (i == 3) throw ConfigError("expected three comma-separated coordinates");
        v.point(i) = parse_number(part, rest);
        if (i < 2 && !rest.empty()) throw ConfigError("unexpected text '" + rest + "' in coordinate list");
        ++i;
      }
      if (i != 3) throw ConfigError("expected three comma-separated coordinates");
      check_unit(rest, spec.unit);
      break;
    }
    case Kind::Profile: {
      // "t q_P q_T; t q_P q_T; ..."
      std::stringstream ss(raw);
      std::string row;
      while (std::getline(ss, row, ';')) {
        if (trim(row).empty()) continue;
        std::istringstream rs(row);
        double t, qp, qt;
        std::string extra;
        if (!(rs >> t >> qp >> qt) || (rs >> extra))
          throw ConfigError("profile rows must be 't q_P q_T', got '" + trim(row) + "'");
        v.profile.t.push_back(t);
        v.profile.q_P.push_back(qp);
        v.profile.q_T.push_back(qt);
      }
      try {
        v.profile.validate();
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
      break;
    }
  }
  return v;
}

// "species.media" -> family "species", layers {Media}.
std::pair<std::string, Layers> resolve_section(const std::string& section) {
  const size_t dot = section.find('.');
  const std::string family = section.substr(0, dot);
  if (!key_table().count(family)) throw ConfigError("unknown section [" + section + "]");
  if (dot == std::string::npos) {
    Layers all{Layer::Homogeneous, Layer::Media, Layer::Adventitia};
    return {family, all};
  }
  if (family != "species" && family != "structural")
    throw ConfigError("section [" + family + "] has no per-layer variants");
  const std::string layer = section.substr(dot + 1);
  if (layer == "media") return {family, {Layer::Media}};
  if (layer == "adventitia") return {family, {Layer::Adventitia}};
  throw ConfigError("unknown layer '" + layer + "' in [" + section + "] (expected media or adventitia)");
}

void apply(SimulationConfig& config, const std::string& section, const std::string& key,
           const std::string& raw) {
  const auto [family, layers] = resolve_section(section);
  const auto& keys = key_table().at(family);
  const auto it = keys.find(key);
  if (it == keys.end()) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
  it->second.set(config, parse_value(it->second, raw), layers);
}

struct Entry {
  int line;
  std::string section;
  std::string key;
  std::string value;
};

}  // namespace

SimulationConfig parse_config(const std::string& text, const std::string& source) {
  auto where = [&](int line) { return source + ":" + std::to_string(line) + ": "; };

  std::vector<Entry> entries;
  std::set<std::pair<std::string, std::string>> seen;
  std::string section;
  std::optional<std::pair<int, std::string>> scenario;

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const size_t hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(where(line) + "malformed section header '" + s + "'");
      section = trim(s.substr(1, s.size() - 2));
      try {
        resolve_section(section);
      } catch (const ConfigError& e) {
        throw ConfigError(where(line) + e.what());
      }
      continue;
    }
    const size_t eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(where(line) + "expected 'key = value', got '" + s + "'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError(where(line) + "missing key before '='");
    if (value.empty()) throw ConfigError(where(line) + "missing value for '" + key + "'");
    if (!seen.insert({section, key}).second)
      throw ConfigError(where(line) + "duplicate key '" + key + "'" +
                        (section.empty() ? std::string() : " in [" + section + "]"));
    if (section.empty()) {
      if (key != "scenario")
        throw ConfigError(where(line) + "unknown top-level key '" + key +
                          "' (only 'scenario' may precede the first section)");
      scenario = {line, value};
      continue;
    }
    entries.push_back({line, section, key, value});
  }
  if (!scenario) throw ConfigError(source + ": missing 'scenario = block|angioplasty|stent'");

  SimulationConfig config;
  try {
    config = SimulationConfig::defaults(parse_scenario_kind(scenario->second));
  } catch (const ConfigError& e) {
    throw ConfigError(where(scenario->first) + e.what());
  }

  // Whole-family sections first so that per-layer sections override them
  // regardless of their order in the file.
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return (a.section.find('.') != std::string::npos) < (b.section.find('.') != std::string::npos);
  });
  for (const Entry& e : entries) {
    if (config.scenario == ScenarioKind::Block && e.section.find('.') != std::string::npos)
      throw ConfigError(where(e.line) + "per-layer section [" + e.section +
                        "] requires an artery scenario");
    try {
      apply(config, e.section, e.key, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError(where(e.line) + err.what());
    }
  }
  try {
    config.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return config;
}

SimulationConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read configuration file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

void set_config_value(SimulationConfig& config, const std::string& dotted_key,
                      const std::string& value) {
  const size_t dot = dotted_key.rfind('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == dotted_key.size())
    throw ConfigError("parameter '" + dotted_key + "' must have the form section.key");
  const std::string section = dotted_key.substr(0, dot);
  if (config.scenario == ScenarioKind::Block && section.find('.') != std::string::npos)
    throw ConfigError("per-layer parameter '" + dotted_key + "' requires an artery scenario");
  try {
    apply(config, section, dotted_key.substr(dot + 1), value);
  } catch (const ConfigError& e) {
    throw ConfigError(dotted_key + ": " + e.what());
  }
  config.validate();
}

}  // namespace isr
