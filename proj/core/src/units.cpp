#include "qrm/units.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qrm/errors.hpp"

namespace qrm {

namespace {

constexpr const char* kBuiltinSpecies =
#include "species_data.inc"
    ;

int sign_of(double v) { return v < 0.0 ? -1 : 1; }

}  // namespace

Spin Spin::from_value(double f) {
  const double twice = 2.0 * f;
  const double rounded = std::round(twice);
  if (!std::isfinite(f) || rounded < 1.0 || std::abs(twice - rounded) > 1e-12) {
    std::ostringstream os;
    os << "spin F must be a positive half-integer, got " << f;
    throw DomainError(os.str());
  }
  return Spin(static_cast<int>(rounded));
}

void AtomSpecies::validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw DomainError("species '" + name + "': mass must be positive");
  }
  if (F.twice() < 1 || F.twice() > 6) {
    throw DomainError("species '" + name + "': F must be one of 1/2 .. 3");
  }
  if (!std::isfinite(gF)) {
    throw DomainError("species '" + name + "': gF must be finite");
  }
}

const SpeciesRegistry& SpeciesRegistry::builtin() {
  static const SpeciesRegistry registry = from_json_text(kBuiltinSpecies);
  return registry;
}

SpeciesRegistry SpeciesRegistry::from_json_text(std::string_view text) {
  SpeciesRegistry reg;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("species registry: ") + e.what());
  }
  if (!doc.is_array()) throw ValidationError("species registry: expected an array");
  for (const auto& entry : doc) {
    for (const auto& [key, _] : entry.items()) {
      if (key != "name" && key != "mass" && key != "F" && key != "gF") {
        throw ValidationError("species registry: unknown key '" + key + "'");
      }
    }
    for (const char* key : {"name", "mass", "F", "gF"}) {
      if (!entry.contains(key)) {
        throw ValidationError(std::string("species registry: missing key '") + key + "'");
      }
    }
    AtomSpecies s;
    s.name = entry.at("name").get<std::string>();
    s.mass = entry.at("mass").get<double>();
    s.F = Spin::from_value(entry.at("F").get<double>());
    s.gF = entry.at("gF").get<double>();
    s.validate();
    reg.species_.push_back(std::move(s));
  }
  return reg;
}

const AtomSpecies& SpeciesRegistry::get(std::string_view name, Spin F) const {
  for (const auto& s : species_) {
    if (s.name == name && s.F == F) return s;
  }
  std::ostringstream os;
  os << "unknown species '" << name << "' with F = " << F.value();
  throw ValidationError(os.str());
}

const AtomSpecies& SpeciesRegistry::get(std::string_view name) const {
  const AtomSpecies* found = nullptr;
  for (const auto& s : species_) {
    if (s.name != name) continue;
    if (found) throw ValidationError("species '" + std::string(name) + "' is ambiguous; specify F");
    found = &s;
  }
  if (!found) throw ValidationError("unknown species '" + std::string(name) + "'");
  return *found;
}

bool SpeciesRegistry::contains(std::string_view name, Spin F) const {
  for (const auto& s : species_) {
    if (s.name == name && s.F == F) return true;
  }
  return false;
}

std::string SpeciesRegistry::to_json_text() const {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& s : species_) {
    doc.push_back({{"name", s.name}, {"mass", s.mass}, {"F", s.F.value()}, {"gF", s.gF}});
  }
  return doc.dump(2);
}

SpeciesRegistry load_species_registry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open species registry '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return SpeciesRegistry::from_json_text(buf.str());
}

double recoil_energy(double lambda_t, const AtomSpecies& species) {
  if (!(lambda_t > 0.0)) throw DomainError("recoil_energy: wavelength must be positive");
  species.validate();
  const double k = 2.0 * constants::pi / lambda_t;
  return constants::hbar * constants::hbar * k * k / (2.0 * species.mass);
}

double trap_frequency(double V0_in_Er, double recoil_energy_J) {
  if (V0_in_Er < 0.0 || !std::isfinite(V0_in_Er)) {
    throw DomainError("trap_frequency: depth must be non-negative");
  }
  if (!(recoil_energy_J > 0.0)) throw DomainError("trap_frequency: recoil energy must be positive");
  return 2.0 * std::sqrt(V0_in_Er) * recoil_energy_J / constants::hbar;
}

double oscillator_length(double omega, const AtomSpecies& species) {
  if (!(omega > 0.0)) throw DomainError("oscillator_length: omega must be positive");
  species.validate();
  return std::sqrt(constants::hbar / (2.0 * species.mass * omega));
}

double gradient_from_amplitude(double Bx, double lambda_c) {
  if (!(lambda_c > 0.0)) throw DomainError("gradient_from_amplitude: wavelength must be positive");
  return 2.0 * Bx * (2.0 * constants::pi / lambda_c);
}

SignedRate coupling_strength(double bx, double gF, double x0) {
  if (!(x0 > 0.0)) throw DomainError("coupling_strength: x0 must be positive");
  const double g = constants::mu_B * gF * bx * x0 / (2.0 * constants::hbar);
  return {std::abs(g), sign_of(g)};
}

SignedRate tls_frequency(double Bz, double gF) {
  const double w = constants::mu_B * gF * Bz / constants::hbar;
  return {std::abs(w), sign_of(w)};
}

double field_for_tls_frequency(double omega0, double gF) {
  if (gF == 0.0) throw DomainError("field_for_tls_frequency: gF must be non-zero");
  return std::abs(omega0) * constants::hbar / (constants::mu_B * std::abs(gF));
}

SignedRate quadratic_coupling_strength(double bxx, double gF, double x0) {
  if (!(x0 > 0.0)) throw DomainError("quadratic_coupling_strength: x0 must be positive");
  const double g2 = constants::mu_B * gF * bxx * x0 * x0 / (2.0 * constants::hbar);
  return {std::abs(g2), sign_of(g2)};
}

}  // namespace qrm
