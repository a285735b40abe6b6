#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace ni_swarm::lti {

using Complex = std::complex<double>;
using Coeffs = std::vector<double>;

/// Evaluates a real polynomial (descending powers) at a complex point.
Complex polyval(std::span<const double> p, Complex s);
double polyval(std::span<const double> p, double s);

Coeffs poly_mul(std::span<const double> a, std::span<const double> b);
Coeffs poly_add(std::span<const double> a, std::span<const double> b);

/// Continuous-time SISO transfer function num(s)/den(s).
///
/// Coefficients are stored in descending powers of s. Construction normalizes
/// the denominator to be monic and strips leading zeros, so value-equal
/// inputs compare equal.
class RationalTF {
 public:
  RationalTF(Coeffs num, Coeffs den);

  /// Static gain k (num = [k], den = [1]).
  static RationalTF gain(double k);

  [[nodiscard]] const Coeffs& num() const { return num_; }
  [[nodiscard]] const Coeffs& den() const { return den_; }
  [[nodiscard]] std::size_t num_degree() const { return num_.size() - 1; }
  [[nodiscard]] std::size_t den_degree() const { return den_.size() - 1; }
  [[nodiscard]] bool is_proper() const { return num_degree() <= den_degree(); }
  [[nodiscard]] bool is_strictly_proper() const;
  [[nodiscard]] bool is_zero() const;

  [[nodiscard]] Complex eval(Complex s) const;

  [[nodiscard]] RationalTF operator-() const;
  [[nodiscard]] RationalTF scaled(double k) const;

  friend bool operator==(const RationalTF&, const RationalTF&) = default;

 private:
  Coeffs num_;
  Coeffs den_;
};

/// Series connection a*b.
RationalTF series(const RationalTF& a, const RationalTF& b);

/// Closed loop g/(1 - g*h) for positive feedback, g/(1 + g*h) otherwise.
RationalTF feedback(const RationalTF& g, const RationalTF& h, bool positive);

/// num(0)/den(0). Common factors of s are cancelled first; an uncancelled pole
/// at the origin yields std::nullopt (infinite DC gain).
std::optional<double> dc_gain(const RationalTF& tf);

/// Roots of den. Computed as companion-matrix eigenvalues after
/// Parlett-Reinsch balancing, then polished with Newton steps so the residual
/// |den(root)| stays below 1e-8 relative. Conjugate pairs are adjacent.
std::vector<Complex> poles(const RationalTF& tf);

/// Roots of an arbitrary real polynomial (same method as poles()).
std::vector<Complex> roots(std::span<const double> p);

/// Positive, strictly increasing angular frequencies (rad/s).
class FreqGrid {
 public:
  explicit FreqGrid(std::vector<double> omegas);

  /// n log-spaced points on [lo, hi].
  static FreqGrid logspace(double lo, double hi, std::size_t n);

  /// 2000 points over [1e-4, 1e6] rad/s.
  static const FreqGrid& default_grid();

  [[nodiscard]] const std::vector<double>& omegas() const { return omegas_; }
  [[nodiscard]] std::size_t size() const { return omegas_.size(); }

 private:
  std::vector<double> omegas_;
};

struct FreqPoint {
  double omega = 0.0;
  Complex value{};
  bool singular = false;  // omega hit an imaginary-axis pole
};

std::vector<FreqPoint> freq_response(const RationalTF& tf, const FreqGrid& grid);

/// Discrete-time system. Stepping uses the delta operator
/// d = (z - 1)/dt in observer form, x <- x + dt*(A x + B u), whose
/// coefficients stay well scaled when poles sit far below the sample rate;
/// the z-domain coefficients are kept for reporting only.
class DiscreteLTI {
 public:
  /// From z-domain coefficients, descending powers of z.
  DiscreteLTI(Coeffs b, Coeffs a, double dt);

  /// From polynomials in the delta operator, descending powers.
  static DiscreteLTI delta_form(Coeffs num, Coeffs den, double dt);

  /// Advances one tick with input u and returns the output.
  double step(double u);

  void reset();

  [[nodiscard]] const Coeffs& b() const { return b_; }
  [[nodiscard]] const Coeffs& a() const { return a_; }
  [[nodiscard]] double dt() const { return dt_; }
  [[nodiscard]] double last_output() const { return last_output_; }

  /// Gain at z = 1; nullopt when the system has a pole there.
  [[nodiscard]] std::optional<double> dc_gain() const;

 private:
  DiscreteLTI() = default;
  void init_delta(const Coeffs& num, const Coeffs& den);

  Coeffs b_;
  Coeffs a_;
  Coeffs alpha_;  // monic delta denominator without its leading 1
  Coeffs c_;      // strictly proper part of the numerator
  double d_ = 0.0;
  double num0_ = 0.0;  // constant terms, kept for an exact DC ratio
  double den0_ = 1.0;
  std::vector<double> x_;
  std::vector<double> dx_;
  double dt_ = 0.0;
  double last_output_ = 0.0;
};

/// Bilinear (Tustin) transform without prewarping. Requires a proper transfer
/// function, dt > 0, and no pole within 1% of the warp singularity 2/dt.
DiscreteLTI discretize(const RationalTF& tf, double dt);

inline constexpr double kDefaultDt = 0.01;

}  // namespace ni_swarm::lti
