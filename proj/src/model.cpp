#include "qwell/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace qwell {

void WellSpec::validate() const {
  if (!(V0 >= 0.0)) throw ConfigError("well.V0 must be >= 0");
  if (!(L > 0.0)) throw ConfigError("well.L must be > 0");
  if (!(D >= 4.0 * L)) throw ConfigError("well.D must be >= 4*L");
}

void InteractionSpec::validate() const {
  if (!(g >= 0.0)) throw ConfigError("interaction.g must be >= 0 (repulsive only)");
}

void ScheduleSpec::validate() const {
  if (!(V0 >= 0.0)) throw ConfigError("schedule.V0 must be >= 0");
  if (shape == RampShape::Exponential && !(tau > 0.0))
    throw ConfigError("schedule.tau must be > 0 for the exponential ramp");
  if (shape == RampShape::Linear && !(rate > 0.0))
    throw ConfigError("schedule.rate must be > 0 for the linear ramp");
}

double ScheduleSpec::depth_at(double t) const {
  if (shape == RampShape::Exponential) return V0 * std::exp(-t / tau);
  return std::max(0.0, V0 - rate * t);
}

double ScheduleSpec::rate_at(double t) const {
  if (shape == RampShape::Exponential) return depth_at(t) / tau;
  return depth_at(t) > 0.0 ? rate : 0.0;
}

double g_from_scattering(double a_s, double a_perp) {
  if (a_s < 0.0) throw std::invalid_argument("g_from_scattering: a_s must be >= 0");
  if (!(a_perp > 0.0)) throw std::invalid_argument("g_from_scattering: a_perp must be > 0");
  if (a_perp < 10.0 * a_s)
    throw std::invalid_argument(
        "g_from_scattering: quasi-1D regime requires a_perp >= 10*a_s");
  return 2.0 * a_s / (a_perp * a_perp);
}

// ---- config ----------------------------------------------------------------

static std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

Config parse_config(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value'", ln);
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", ln);
    if (val.empty()) throw ConfigError("empty value for key '" + key + "'", ln);
    cfg[key] = val;
  }
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const Config& cfg) {
  std::ostringstream out;
  for (const auto& [k, v] : cfg) out << k << " = " << v << "\n";
  return out.str();
}

double cfg_num(const Config& c, const std::string& key,
               std::optional<double> fallback) {
  auto it = c.find(key);
  if (it == c.end()) {
    if (fallback) return *fallback;
    throw ConfigError("missing config key '" + key + "'");
  }
  try {
    std::size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size())
      throw ConfigError("trailing junk in numeric value for '" + key + "'");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value '" + it->second + "' for key '" + key + "'");
  }
}

long cfg_int(const Config& c, const std::string& key, std::optional<long> fallback) {
  auto it = c.find(key);
  if (it == c.end()) {
    if (fallback) return *fallback;
    throw ConfigError("missing config key '" + key + "'");
  }
  try {
    std::size_t pos = 0;
    long v = std::stol(it->second, &pos);
    if (pos != it->second.size())
      throw ConfigError("trailing junk in integer value for '" + key + "'");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("bad integer value '" + it->second + "' for key '" + key + "'");
  }
}

std::string cfg_str(const Config& c, const std::string& key,
                    std::optional<std::string> fallback) {
  auto it = c.find(key);
  if (it == c.end()) {
    if (fallback) return *fallback;
    throw ConfigError("missing config key '" + key + "'");
  }
  return it->second;
}

static std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

WellSpec well_from_config(const Config& c) {
  WellSpec w;
  w.V0 = cfg_num(c, "well.V0", w.V0);
  w.L = cfg_num(c, "well.L", w.L);
  w.D = cfg_num(c, "well.D", 10.0 * w.L);
  w.validate();
  return w;
}

InteractionSpec interaction_from_config(const Config& c) {
  InteractionSpec s;
  if (c.count("interaction.a_s") || c.count("interaction.a_perp")) {
    double as = cfg_num(c, "interaction.a_s");
    double ap = cfg_num(c, "interaction.a_perp");
    s.a_s = as;
    s.a_perp = ap;
    s.g = g_from_scattering(as, ap);
    if (c.count("interaction.g"))
      throw ConfigError("give either interaction.g or interaction.a_s/a_perp, not both");
  } else {
    s.g = cfg_num(c, "interaction.g", s.g);
  }
  s.validate();
  return s;
}

ScheduleSpec schedule_from_config(const Config& c) {
  ScheduleSpec s;
  s.V0 = cfg_num(c, "schedule.V0", s.V0);
  std::string shape = cfg_str(c, "schedule.shape", std::string("exponential"));
  if (shape == "exponential") {
    s.shape = RampShape::Exponential;
    s.tau = cfg_num(c, "schedule.tau", s.tau);
  } else if (shape == "linear") {
    s.shape = RampShape::Linear;
    s.rate = cfg_num(c, "schedule.rate");
  } else {
    throw ConfigError("schedule.shape must be 'exponential' or 'linear'");
  }
  s.validate();
  return s;
}

void put_config(Config& c, const WellSpec& w) {
  c["well.V0"] = fmt(w.V0);
  c["well.L"] = fmt(w.L);
  c["well.D"] = fmt(w.D);
}

void put_config(Config& c, const InteractionSpec& s) {
  // a_s/a_perp and g are mutually exclusive on input; keep the derived form
  if (s.a_s && s.a_perp) {
    c["interaction.a_s"] = fmt(*s.a_s);
    c["interaction.a_perp"] = fmt(*s.a_perp);
  } else {
    c["interaction.g"] = fmt(s.g);
  }
}

void put_config(Config& c, const ScheduleSpec& s) {
  c["schedule.V0"] = fmt(s.V0);
  c["schedule.shape"] = s.shape == RampShape::Exponential ? "exponential" : "linear";
  if (s.shape == RampShape::Exponential) c["schedule.tau"] = fmt(s.tau);
  else c["schedule.rate"] = fmt(s.rate);
}

const char* to_string(BoundaryMethod m) {
  switch (m) {
    case BoundaryMethod::Tonks: return "tonks";
    case BoundaryMethod::TF: return "tf";
    case BoundaryMethod::Diag: return "diag";
    case BoundaryMethod::Dmc: return "dmc";
  }
  return "?";
}

std::string boundary_csv_header() { return "g,N,V0,error,method"; }

void append_boundary_csv(std::ostream& os, const BoundaryPoint& p) {
  char line[160];
  std::snprintf(line, sizeof line, "%.12g,%d,%.12g,%.12g,%s\n", p.g, p.N, p.V0,
                p.error, to_string(p.method));
  os << line;
}

}  // namespace qwell
