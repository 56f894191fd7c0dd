#pragma once
// Shared domain types and unit conventions. Everything downstream works in
// the dimensionless system hbar = m = 1 with the well width L as the length
// scale; depths are in hbar^2/(m L^2), couplings in hbar^2/(m L). The zero of
// energy sits at the top of the well, so bound <=> E < 0.
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "qwell/errors.hpp"

namespace qwell {

struct WellSpec {
  double V0 = 5.0;  // depth; the well occupies |x| <= L/2
  double L = 1.0;   // well width
  double D = 10.0;  // enclosing hard-wall box, centered like the well

  void validate() const;
  WellSpec with_depth(double v0) const { WellSpec w = *this; w.V0 = v0; return w; }
  WellSpec with_box(double d) const { WellSpec w = *this; w.D = d; return w; }
};

struct InteractionSpec {
  double g = 0.0;  // contact coupling, repulsive only
  std::optional<double> a_s;      // 3D scattering length, if g was derived
  std::optional<double> a_perp;   // transverse confinement width

  void validate() const;
};

enum class RampShape { Exponential, Linear };

struct ScheduleSpec {
  double V0 = 5.0;     // initial depth
  double tau = 1.0;    // time constant of V(t) = V0 exp(-t/tau)
  double rate = 0.0;   // |dV/dt| for the linear shape
  RampShape shape = RampShape::Exponential;

  void validate() const;
  double depth_at(double t) const;
  double rate_at(double t) const;  // instantaneous |dV/dt|
};

// g = 2 a_s / a_perp^2 (hbar = m = 1); requires the quasi-1D regime
// a_perp >= 10 a_s, both lengths positive (a_s = 0 allowed)
double g_from_scattering(double a_s, double a_perp);

// ---- phase-boundary vocabulary ----------------------------------------------
// One point of the binding phase diagram: the depth below which N atoms at
// coupling g no longer stay bound, as located by one of the four methods.
enum class BoundaryMethod { Tonks, TF, Diag, Dmc };
const char* to_string(BoundaryMethod m);

struct BoundaryPoint {
  int N = 0;
  double g = 0.0;
  double V0 = 0.0;     // threshold depth
  double error = 0.0;  // combined reported uncertainty (0 for closed forms)
  BoundaryMethod method = BoundaryMethod::Tonks;
};

// threshold-curve CSV: one row per boundary point
std::string boundary_csv_header();  // "g,N,V0,error,method"
void append_boundary_csv(std::ostream& os, const BoundaryPoint& p);

// ---- plain-text key=value configuration ------------------------------------
// One `key = value` pair per line; '#' starts a comment; keys are
// dot-namespaced (well.V0, interaction.g, scan.v0_min, ...).
using Config = std::map<std::string, std::string>;

Config parse_config(const std::string& text);
Config load_config(const std::string& path);
std::string dump_config(const Config& cfg);

double cfg_num(const Config& c, const std::string& key,
               std::optional<double> fallback = std::nullopt);
long cfg_int(const Config& c, const std::string& key,
             std::optional<long> fallback = std::nullopt);
std::string cfg_str(const Config& c, const std::string& key,
                    std::optional<std::string> fallback = std::nullopt);

WellSpec well_from_config(const Config& c);
InteractionSpec interaction_from_config(const Config& c);
ScheduleSpec schedule_from_config(const Config& c);
void put_config(Config& c, const WellSpec& w);
void put_config(Config& c, const InteractionSpec& s);
void put_config(Config& c, const ScheduleSpec& s);

}  // namespace qwell
