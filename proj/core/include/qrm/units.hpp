#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qrm {

namespace constants {
// CODATA 2018
inline constexpr double h = 6.62607015e-34;         // J s
inline constexpr double hbar = 1.054571817e-34;     // J s
inline constexpr double mu_B = 9.2740100783e-24;    // J/T
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double gauss = 1e-4;               // T
}  // namespace constants

// Half-integer spin quantum number stored as 2F so that F = 1/2 is exact.
class Spin {
 public:
  constexpr Spin() = default;
  static constexpr Spin from_twice(int twice_f) { return Spin(twice_f); }
  // Throws DomainError unless 2F is a positive integer.
  static Spin from_value(double f);

  constexpr int twice() const { return twice_; }
  constexpr double value() const { return 0.5 * twice_; }
  constexpr int dim() const { return twice_ + 1; }
  // m_F for spin index s, with s = 0 <-> m_F = -F.
  constexpr double m(int s) const { return s - 0.5 * twice_; }

  friend constexpr bool operator==(Spin, Spin) = default;

 private:
  constexpr explicit Spin(int twice_f) : twice_(twice_f) {}
  int twice_ = 1;
};

struct AtomSpecies {
  std::string name;
  double mass = 0.0;  // kg
  Spin F;
  double gF = 0.0;    // signed hyperfine Lande factor

  void validate() const;
};

// Species known to the library. The default registry is compiled in from
// data/species.json; load_species_registry reads the same schema from disk.
class SpeciesRegistry {
 public:
  static const SpeciesRegistry& builtin();
  static SpeciesRegistry from_json_text(std::string_view text);

  const AtomSpecies& get(std::string_view name, Spin F) const;
  // Unique match by name; throws if the name is ambiguous (several F).
  const AtomSpecies& get(std::string_view name) const;
  bool contains(std::string_view name, Spin F) const;
  const std::vector<AtomSpecies>& all() const { return species_; }

  std::string to_json_text() const;

 private:
  std::vector<AtomSpecies> species_;
};

SpeciesRegistry load_species_registry(const std::string& path);

// A magnitude with the sign kept as metadata. Spectra are invariant under the
// sign, eigenvectors are not, so comparisons carry it along.
struct SignedRate {
  double magnitude = 0.0;
  int sign = 1;
  double signed_value() const { return sign * magnitude; }
};

// E_r = hbar^2 k_t^2 / (2M), k_t = 2 pi / lambda_t.  [J]
double recoil_energy(double lambda_t, const AtomSpecies& species);

// omega = 2 sqrt(V0 E_r) / hbar with V0 given in units of E_r.  [rad/s]
double trap_frequency(double V0_in_Er, double recoil_energy_J);

// x0 = sqrt(hbar / (2 M omega)).  [m]
double oscillator_length(double omega, const AtomSpecies& species);

// b_x = 2 B_x k_c.  [T/m]
double gradient_from_amplitude(double Bx, double lambda_c);

// g = mu_B g_F b_x x0 / (2 hbar).  [rad/s]
SignedRate coupling_strength(double bx, double gF, double x0);

// omega0 = mu_B g_F B_z / hbar.  [rad/s]
SignedRate tls_frequency(double Bz, double gF);

// Inverse of tls_frequency: the positive B_z giving |omega0|.  [T]
double field_for_tls_frequency(double omega0, double gF);

// g2 = mu_B g_F b_xx x0^2 / (2 hbar).  [rad/s]
SignedRate quadratic_coupling_strength(double bxx, double gF, double x0);

}  // namespace qrm
