#pragma once

#include <optional>
#include <vector>

namespace cmdual {

struct Atom {
  double z = 0.0;
  double w = 0.0;

  bool operator==(const Atom&) const = default;
};

/// Density c * z^a * e^{-b z} on [lo, hi] (hi empty means +inf). When `b2` is
/// set the density is c * z^a * (e^{-b z} - e^{-b2 z}) with b2 > b.
struct DensityPiece {
  double c = 1.0;
  double a = 0.0;
  double b = 0.0;
  double lo = 0.0;
  std::optional<double> hi;
  std::optional<double> b2;

  bool operator==(const DensityPiece&) const = default;
};

struct Interval {
  double lo = 0.0;
  std::optional<double> hi;  // empty means +inf
  bool lo_open = false;
  bool hi_open = false;
};

struct MassResult {
  double value = 0.0;
  bool infinite = false;
};

class BernsteinMeasure {
 public:
  BernsteinMeasure() = default;
  /// Validates and normalizes (atoms sorted by location). Throws InvalidMeasure.
  BernsteinMeasure(std::vector<Atom> atoms, std::vector<DensityPiece> pieces);

  static BernsteinMeasure lebesgue();
  /// c * z^a on (0, inf).
  static BernsteinMeasure power(double c, double a);
  static BernsteinMeasure atom(double z, double w);

  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<DensityPiece>& pieces() const { return pieces_; }

  /// int z^k e^{-x z} dmu(z), x >= 0.
  double laplace_moment(double x, int k, double tol = 1e-10) const;

  /// log of laplace_moment; usable where the moment under/overflows.
  double log_laplace_moment(double x, int k, double tol = 1e-10) const;

  /// int e^{-x z} dmu(z) / z. Throws NonIntegrable if it diverges.
  double inverse_moment(double x, double tol = 1e-10) const;

  /// int (e^{-y z} - e^{-y0 z}) dmu(z) / z, finite for y, y0 > 0 whenever mu
  /// has no atom at zero.
  double kernel_difference(double y, double y0, double tol = 1e-10) const;

  MassResult mass(const Interval& interval) const;

  bool has_mass_at_zero() const;

  bool operator==(const BernsteinMeasure& other) const;

 private:
  std::vector<Atom> atoms_;
  std::vector<DensityPiece> pieces_;
};

}  // namespace cmdual
