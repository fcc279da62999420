#include "emlab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace emlab {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

bool valid_name(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

const std::vector<std::string> kSections{"scenario", "grid", "params", "scheme", "data", "output"};

}  // namespace

IniDocument IniDocument::parse(const std::string& text, const std::string& source) {
  IniDocument doc;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = source + ":" + std::to_string(lineno);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(std::string_view(body).substr(1, body.size() - 2));
      if (!valid_name(section)) throw ConfigError(where + ": invalid section name '" + section + "'");
      if (doc.section_origin_.count(section)) throw ConfigError(where + ": duplicate section [" + section + "]");
      doc.section_origin_[section] = where;
      doc.data_[section];
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    if (section.empty()) throw ConfigError(where + ": key outside of any section");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (!valid_name(key)) throw ConfigError(where + ": invalid key '" + key + "'");
    if (value.empty()) throw ConfigError(where + ": empty value for '" + key + "'");
    auto& slot = doc.data_[section];
    if (slot.count(key)) throw ConfigError(where + ": duplicate key '" + key + "' in [" + section + "]");
    slot[key] = Entry{value, where};
  }
  return doc;
}

IniDocument IniDocument::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open configuration file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), path);
}

void IniDocument::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw ConfigError("--override '" + assignment + "': expected section.key=value");
  const std::string section = trim(std::string_view(assignment).substr(0, dot));
  const std::string key = trim(std::string_view(assignment).substr(dot + 1, eq - dot - 1));
  const std::string value = trim(std::string_view(assignment).substr(eq + 1));
  if (!valid_name(section) || !valid_name(key) || value.empty())
    throw ConfigError("--override '" + assignment + "': expected section.key=value");
  const std::string origin = "--override " + assignment;
  if (!section_origin_.count(section)) section_origin_[section] = origin;
  data_[section][key] = Entry{value, origin};
}

bool IniDocument::has_section(const std::string& section) const { return data_.count(section) > 0; }

const IniDocument::Entry* IniDocument::find(const std::string& section, const std::string& key) const {
  const auto s = data_.find(section);
  if (s == data_.end()) return nullptr;
  const auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

std::vector<std::string> IniDocument::keys(const std::string& section) const {
  std::vector<std::string> out;
  if (const auto s = data_.find(section); s != data_.end())
    for (const auto& [k, v] : s->second) out.push_back(k);
  return out;
}

std::vector<std::string> IniDocument::sections() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : data_) out.push_back(k);
  return out;
}

SectionReader::SectionReader(const IniDocument& doc, std::string section) : doc_(doc), section_(std::move(section)) {}

bool SectionReader::present() const { return doc_.has_section(section_); }

bool SectionReader::has(const std::string& key) const { return doc_.find(section_, key) != nullptr; }

void SectionReader::fail(const std::string& key, const std::string& what) const {
  const auto* e = doc_.find(section_, key);
  const std::string where = e ? e->origin : "[" + section_ + "]";
  throw ConfigError(where + ": " + section_ + "." + key + ": " + what);
}

std::string SectionReader::get_string(const std::string& key, std::optional<std::string> fallback) {
  used_.insert(key);
  if (const auto* e = doc_.find(section_, key)) return e->value;
  if (!fallback) throw ConfigError("[" + section_ + "]: missing required key '" + key + "'");
  return *fallback;
}

double SectionReader::get_double(const std::string& key, std::optional<double> fallback) {
  used_.insert(key);
  const auto* e = doc_.find(section_, key);
  if (!e) {
    if (!fallback) throw ConfigError("[" + section_ + "]: missing required key '" + key + "'");
    return *fallback;
  }
  double v = 0.0;
  const auto& s = e->value;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) fail(key, "not a finite number: " + s);
  return v;
}

int SectionReader::get_int(const std::string& key, std::optional<int> fallback) {
  used_.insert(key);
  const auto* e = doc_.find(section_, key);
  if (!e) {
    if (!fallback) throw ConfigError("[" + section_ + "]: missing required key '" + key + "'");
    return *fallback;
  }
  int v = 0;
  const auto& s = e->value;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) fail(key, "not an integer: " + s);
  return v;
}

bool SectionReader::get_bool(const std::string& key, std::optional<bool> fallback) {
  used_.insert(key);
  const auto* e = doc_.find(section_, key);
  if (!e) {
    if (!fallback) throw ConfigError("[" + section_ + "]: missing required key '" + key + "'");
    return *fallback;
  }
  if (e->value == "true" || e->value == "yes" || e->value == "on" || e->value == "1") return true;
  if (e->value == "false" || e->value == "no" || e->value == "off" || e->value == "0") return false;
  fail(key, "not a boolean: " + e->value);
}

std::vector<double> SectionReader::get_list(const std::string& key, std::optional<std::vector<double>> fallback) {
  used_.insert(key);
  const auto* e = doc_.find(section_, key);
  if (!e) {
    if (!fallback) throw ConfigError("[" + section_ + "]: missing required key '" + key + "'");
    return *fallback;
  }
  std::vector<double> out;
  std::stringstream ss(e->value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v))
      fail(key, "not a comma-separated list of numbers: " + e->value);
    out.push_back(v);
  }
  return out;
}

void SectionReader::reject_unknown() const {
  for (const auto& k : doc_.keys(section_))
    if (!used_.count(k)) fail(k, "unknown key");
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"burgers-verify",    "maxwell-free-decay", "full-energy-identity",
                                              "perturbation-decay", "commutator-check",   "convergence-sweep",
                                              "validity-report"};
  return names;
}

const std::vector<std::string>& scenario_option_keys(const std::string& scenario) {
  static const std::map<std::string, std::vector<std::string>> keys{
      {"burgers-verify",
       {"t_max", "delta", "width", "epsilon", "cloud_n", "cloud_radius", "estimate_t0", "estimate_t1",
        "estimate_samples", "estimate_sigmas"}},
      {"maxwell-free-decay", {"record_every", "tolerance"}},
      {"full-energy-identity", {"refinements", "snapshot_every"}},
      {"perturbation-decay", {"anchor", "tolerance", "halve_budget"}},
      {"commutator-check", {"s", "trials", "kmax", "sizes", "stability_factor"}},
      {"convergence-sweep", {"levels", "frame_check", "frame_T", "frame_dt"}},
      {"validity-report", {"s"}},
  };
  const auto it = keys.find(scenario);
  if (it == keys.end()) throw ConfigError("unknown scenario '" + scenario + "'");
  return it->second;
}

ScenarioConfig load_config(const IniDocument& doc) {
  for (const auto& s : doc.sections())
    if (std::find(kSections.begin(), kSections.end(), s) == kSections.end())
      throw ConfigError("unknown section [" + s + "]");
  for (const char* required : {"scenario", "grid", "params"})
    if (!doc.has_section(required)) throw ConfigError(std::string("missing required section [") + required + "]");

  ScenarioConfig cfg;
  cfg.source = doc;

  SectionReader sc(doc, "scenario");
  cfg.scenario = sc.get_string("name");
  if (std::find(scenario_names().begin(), scenario_names().end(), cfg.scenario) == scenario_names().end())
    sc.fail("name", "unknown scenario '" + cfg.scenario + "'");
  const int seed = sc.get_int("seed", 0);
  if (seed < 0) sc.fail("seed", "must be >= 0");
  cfg.seed = static_cast<std::uint64_t>(seed);
  for (const auto& k : scenario_option_keys(cfg.scenario)) sc.get_string(k, "");
  sc.reject_unknown();

  SectionReader g(doc, "grid");
  const int n = g.get_int("n");
  const double L = g.get_double("L");
  const int dims = g.get_int("active_dims", 3);
  try {
    cfg.grid = GridSpec::make(dims, n, L);
  } catch (const Error& e) {
    g.fail("n", e.what());
  }
  g.reject_unknown();

  SectionReader p(doc, "params");
  cfg.params.A = p.get_double("A", 1.0);
  cfg.params.gamma = p.get_double("gamma", 1.4);
  cfg.params.alpha1 = p.get_double("alpha1", 0.0);
  cfg.params.alpha2 = p.get_double("alpha2", 0.0);
  try {
    cfg.params.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("[params]: ") + e.what());
  }
  p.reject_unknown();

  SectionReader s(doc, "scheme");
  SchemeConfig& sch = cfg.scheme;
  sch.dt = s.get_double("dt", sch.dt);
  sch.cfl = s.get_double("cfl", 0.0);
  sch.T = s.get_double("T", sch.T);
  if (const std::string f = s.get_string("filter", "off"); f != "off") sch.filter_strength = s.get_double("filter");
  try {
    sch.frame = parse_frame(s.get_string("frame", "original"));
  } catch (const Error& e) {
    s.fail("frame", e.what());
  }
  sch.margin = s.get_double("margin", sch.margin);
  sch.support_tolerance = s.get_double("support_tolerance", sch.support_tolerance);
  sch.sobolev_order = s.get_double("sobolev_order", sch.sobolev_order);
  sch.sigmas = s.get_list("sigmas", std::vector<double>{});
  sch.snapshot_every = s.get_int("snapshot_every", 0);
  try {
    sch.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("[scheme]: ") + e.what());
  }
  s.reject_unknown();

  SectionReader d(doc, "data");
  cfg.data.name = d.get_string("family", "gaussian-bump");
  try {
    const auto& accepted = family_parameters(cfg.data.name);
    for (const auto& k : accepted)
      if (d.has(k)) cfg.data.params[k] = d.get_double(k);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    d.fail("family", e.what());
  }
  if (d.has("budget")) {
    cfg.budget = d.get_double("budget");
    if (!(*cfg.budget > 0.0)) d.fail("budget", "must be positive");
  }
  cfg.budget_order = d.get_double("budget_order", 3.0);
  if (!(cfg.budget_order >= 0.0)) d.fail("budget_order", "must be >= 0");
  cfg.magnetic_from_velocity = d.get_bool("magnetic_from_velocity", false);
  d.reject_unknown();

  SectionReader o(doc, "output");
  cfg.output_dir = o.get_string("dir", "out");
  o.reject_unknown();
  return cfg;
}

ScenarioConfig load_config_file(const std::string& path, const std::vector<std::string>& overrides) {
  IniDocument doc = IniDocument::load(path);
  for (const auto& o : overrides) doc.apply_override(o);
  return load_config(doc);
}

}  // namespace emlab
