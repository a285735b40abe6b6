#include "ni_swarm/lti.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

#include "ni_swarm/error.hpp"

namespace ni_swarm::lti {

namespace {

Coeffs strip_leading_zeros(Coeffs p) {
  auto first = std::find_if(p.begin(), p.end(), [](double c) { return c != 0.0; });
  if (first == p.end()) return {0.0};
  p.erase(p.begin(), first);
  return p;
}

bool all_finite(const Coeffs& p) {
  return std::all_of(p.begin(), p.end(), [](double c) { return std::isfinite(c); });
}

// Parlett-Reinsch balancing with radix-2 scaling; the eigenvalues are
// unchanged but the norm spread of the companion matrix shrinks.
void balance(Eigen::MatrixXd& a) {
  constexpr double kRadix = 2.0;
  constexpr double kSqRadix = kRadix * kRadix;
  const Eigen::Index n = a.rows();
  bool done = false;
  while (!done) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double r = 0.0;
      double c = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(a(j, i));
        r += std::abs(a(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / kRadix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= kRadix;
        c *= kSqRadix;
      }
      g = r * kRadix;
      while (c > g) {
        f /= kRadix;
        c /= kSqRadix;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        g = 1.0 / f;
        a.row(i) *= g;
        a.col(i) *= f;
      }
    }
  }
}

Complex polish_root(std::span<const double> p, Complex z) {
  const std::size_t n = p.size() - 1;
  Coeffs dp(n);
  for (std::size_t k = 0; k < n; ++k) dp[k] = p[k] * static_cast<double>(n - k);
  double best = std::abs(polyval(p, z));
  for (int it = 0; it < 50 && best > 0.0; ++it) {
    const Complex d = polyval(dp, z);
    if (d == Complex{}) break;
    const Complex candidate = z - polyval(p, z) / d;
    const double r = std::abs(polyval(p, candidate));
    if (!(r < best)) break;
    z = candidate;
    best = r;
  }
  return z;
}

}  // namespace

Complex polyval(std::span<const double> p, Complex s) {
  Complex acc{};
  for (double c : p) acc = acc * s + c;
  return acc;
}

double polyval(std::span<const double> p, double s) {
  double acc = 0.0;
  for (double c : p) acc = acc * s + c;
  return acc;
}

Coeffs poly_mul(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  Coeffs out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

Coeffs poly_add(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::max(a.size(), b.size());
  Coeffs out(n, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) out[n - a.size() + i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) out[n - b.size() + i] += b[i];
  return out;
}

// ---------------------------------------------------------------------------
// RationalTF

RationalTF::RationalTF(Coeffs num, Coeffs den) {
  if (den.empty()) throw ModelError("transfer function denominator is empty");
  if (num.empty()) throw ModelError("transfer function numerator is empty");
  if (!all_finite(num) || !all_finite(den))
    throw ModelError("transfer function coefficients must be finite");
  if (den.front() == 0.0)
    throw ModelError("leading denominator coefficient must be nonzero");
  const double lead = den.front();
  for (double& c : den) c /= lead;
  for (double& c : num) c /= lead;
  num_ = strip_leading_zeros(std::move(num));
  den_ = std::move(den);
}

RationalTF RationalTF::gain(double k) { return RationalTF({k}, {1.0}); }

bool RationalTF::is_strictly_proper() const {
  return is_zero() || num_degree() < den_degree();
}

bool RationalTF::is_zero() const { return num_.size() == 1 && num_[0] == 0.0; }

Complex RationalTF::eval(Complex s) const { return polyval(num_, s) / polyval(den_, s); }

RationalTF RationalTF::operator-() const { return scaled(-1.0); }

RationalTF RationalTF::scaled(double k) const {
  Coeffs n = num_;
  for (double& c : n) c *= k;
  return RationalTF(std::move(n), den_);
}

RationalTF series(const RationalTF& a, const RationalTF& b) {
  return RationalTF(poly_mul(a.num(), b.num()), poly_mul(a.den(), b.den()));
}

RationalTF feedback(const RationalTF& g, const RationalTF& h, bool positive) {
  // g/(1 -+ gh) = ng*dh / (dg*dh -+ ng*nh)
  Coeffs loop = poly_mul(g.num(), h.num());
  if (positive)
    for (double& c : loop) c = -c;
  return RationalTF(poly_mul(g.num(), h.den()), poly_add(poly_mul(g.den(), h.den()), loop));
}

std::optional<double> dc_gain(const RationalTF& tf) {
  if (tf.is_zero()) return 0.0;
  Coeffs num = tf.num();
  Coeffs den = tf.den();
  while (num.size() > 1 && den.size() > 1 && num.back() == 0.0 && den.back() == 0.0) {
    num.pop_back();
    den.pop_back();
  }
  if (den.back() == 0.0) return std::nullopt;
  return num.back() / den.back();
}

std::vector<Complex> roots(std::span<const double> p_in) {
  Coeffs p = strip_leading_zeros(Coeffs(p_in.begin(), p_in.end()));
  std::vector<Complex> out;
  // Exact zero roots first; they would otherwise come back as tiny noise.
  while (p.size() > 1 && p.back() == 0.0) {
    out.emplace_back(0.0, 0.0);
    p.pop_back();
  }
  const std::size_t n = p.size() - 1;
  if (n == 0) return out;
  if (n == 1) {
    out.emplace_back(-p[1] / p[0], 0.0);
    return out;
  }

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                    static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) companion(0, static_cast<Eigen::Index>(j)) = -p[j + 1] / p[0];
  for (std::size_t i = 1; i < n; ++i)
    companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
  balance(companion);

  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw ModelError("companion eigenvalue solve failed");
  const auto& ev = solver.eigenvalues();

  std::vector<Complex> raw;
  raw.reserve(n);
  for (Eigen::Index i = 0; i < ev.size(); ++i) raw.push_back(polish_root(p, ev[i]));

  // Real polynomial: snap near-real roots and emit conjugates as adjacent pairs.
  std::vector<Complex> real_roots;
  std::vector<Complex> upper;
  std::size_t lower_count = 0;
  for (const Complex& z : raw) {
    const double scale = std::max(1.0, std::abs(z));
    if (std::abs(z.imag()) <= 1e-10 * scale) {
      real_roots.emplace_back(z.real(), 0.0);
    } else if (z.imag() > 0.0) {
      upper.push_back(z);
    } else {
      ++lower_count;
    }
  }
  if (lower_count != upper.size()) {
    out.insert(out.end(), raw.begin(), raw.end());
    return out;
  }
  auto by_real = [](const Complex& a, const Complex& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  };
  std::sort(real_roots.begin(), real_roots.end(), by_real);
  std::sort(upper.begin(), upper.end(), by_real);
  for (const Complex& z : real_roots) out.push_back(z);
  for (const Complex& z : upper) {
    out.push_back(z);
    out.push_back(std::conj(z));
  }
  return out;
}

std::vector<Complex> poles(const RationalTF& tf) { return roots(tf.den()); }

// ---------------------------------------------------------------------------
// Frequency response

FreqGrid::FreqGrid(std::vector<double> omegas) : omegas_(std::move(omegas)) {
  if (omegas_.empty()) throw ModelError("frequency grid is empty");
  for (std::size_t i = 0; i < omegas_.size(); ++i) {
    if (!(omegas_[i] > 0.0) || !std::isfinite(omegas_[i]))
      throw ModelError("frequency grid entries must be positive and finite");
    if (i > 0 && !(omegas_[i] > omegas_[i - 1]))
      throw ModelError("frequency grid must be strictly increasing");
  }
}

FreqGrid FreqGrid::logspace(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw ModelError("invalid logspace bounds");
  std::vector<double> w(n);
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  return FreqGrid(std::move(w));
}

const FreqGrid& FreqGrid::default_grid() {
  static const FreqGrid grid = logspace(1e-4, 1e6, 2000);
  return grid;
}

std::vector<FreqPoint> freq_response(const RationalTF& tf, const FreqGrid& grid) {
  std::vector<FreqPoint> out;
  out.reserve(grid.size());
  for (double w : grid.omegas()) {
    const Complex s{0.0, w};
    const Complex d = polyval(tf.den(), s);
    FreqPoint pt{.omega = w};
    if (d == Complex{}) {
      pt.singular = true;
    } else {
      pt.value = polyval(tf.num(), s) / d;
    }
    out.push_back(pt);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Discrete systems

namespace {

using LD = long double;

// Ascending coefficients of sum_k p[k] x^k (1 + h x)^(n - k), p ascending,
// padded to n + 1 terms.
std::vector<LD> substitute(const std::vector<LD>& p, std::size_t n, LD h) {
  std::vector<LD> out(n + 1, 0.0L);
  for (std::size_t k = 0; k < p.size() && k <= n; ++k) {
    if (p[k] == 0.0L) continue;
    // (1 + h x)^(n - k) by repeated multiplication.
    std::vector<LD> bin{1.0L};
    for (std::size_t i = 0; i < n - k; ++i) {
      std::vector<LD> next(bin.size() + 1, 0.0L);
      for (std::size_t j = 0; j < bin.size(); ++j) {
        next[j] += bin[j];
        next[j + 1] += h * bin[j];
      }
      bin = std::move(next);
    }
    for (std::size_t j = 0; j < bin.size(); ++j) out[k + j] += p[k] * bin[j];
  }
  return out;
}

std::vector<LD> ascending(const Coeffs& descending, std::size_t n) {
  std::vector<LD> out(n + 1, 0.0L);
  for (std::size_t i = 0; i < descending.size() && i <= n; ++i)
    out[i] = static_cast<LD>(descending[descending.size() - 1 - i]);
  return out;
}

Coeffs descending(const std::vector<LD>& asc) {
  Coeffs out(asc.size());
  for (std::size_t i = 0; i < asc.size(); ++i) out[i] = static_cast<double>(asc[asc.size() - 1 - i]);
  return out;
}

}  // namespace

DiscreteLTI::DiscreteLTI(Coeffs b, Coeffs a, double dt) : dt_(dt) {
  if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw ModelError("dt must be positive");
  if (a.empty() || a.front() == 0.0) throw ModelError("discrete denominator a0 must be nonzero");
  if (b.size() > a.size()) throw ModelError("discrete system must be causal");
  if (!all_finite(a) || !all_finite(b)) throw ModelError("discrete coefficients must be finite");
  b.insert(b.begin(), a.size() - b.size(), 0.0);
  const double a0 = a.front();
  for (double& c : a) c /= a0;
  for (double& c : b) c /= a0;
  // Substitute z = 1 + dt*d into both polynomials.
  const std::size_t n = a.size() - 1;
  std::vector<LD> za(n + 1);
  std::vector<LD> zb(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    za[i] = static_cast<LD>(a[n - i]);
    zb[i] = static_cast<LD>(b[n - i]);
  }
  // sum_m p_m (1 + dt d)^m, ascending in d.
  auto expand = [&](const std::vector<LD>& p) {
    std::vector<LD> out(n + 1, 0.0L);
    for (std::size_t m = 0; m <= n; ++m) {
      std::vector<LD> bin{1.0L};
      for (std::size_t i = 0; i < m; ++i) {
        std::vector<LD> next(bin.size() + 1, 0.0L);
        for (std::size_t j = 0; j < bin.size(); ++j) {
          next[j] += bin[j];
          next[j + 1] += static_cast<LD>(dt_) * bin[j];
        }
        bin = std::move(next);
      }
      for (std::size_t j = 0; j < bin.size(); ++j) out[j] += p[m] * bin[j];
    }
    return out;
  };
  const Coeffs num = descending(expand(zb));
  const Coeffs den = descending(expand(za));
  b_ = std::move(b);
  a_ = std::move(a);
  init_delta(num, den);
}

DiscreteLTI DiscreteLTI::delta_form(Coeffs num, Coeffs den, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ModelError("dt must be positive");
  if (den.empty() || den.front() == 0.0) throw ModelError("delta denominator must have a nonzero lead");
  if (num.size() > den.size()) throw ModelError("discrete system must be causal");
  if (!all_finite(num) || !all_finite(den)) throw ModelError("discrete coefficients must be finite");
  DiscreteLTI sys;
  sys.dt_ = dt;
  const std::size_t n = den.size() - 1;
  // d = (z - 1)/dt; scaling by dt^n gives polynomials in z.
  auto to_z = [&](const Coeffs& p) {
    const std::vector<LD> asc = ascending(p, n);
    std::vector<LD> out(n + 1, 0.0L);
    for (std::size_t k = 0; k <= n; ++k) {
      // asc[k] d^k = asc[k] (z - 1)^k / dt^k, times dt^n.
      std::vector<LD> bin{1.0L};
      for (std::size_t i = 0; i < k; ++i) {
        std::vector<LD> next(bin.size() + 1, 0.0L);
        for (std::size_t j = 0; j < bin.size(); ++j) {
          next[j + 1] += bin[j];
          next[j] -= bin[j];
        }
        bin = std::move(next);
      }
      LD f = asc[k];
      for (std::size_t i = k; i < n; ++i) f *= static_cast<LD>(dt);
      for (std::size_t j = 0; j < bin.size(); ++j) out[j] += f * bin[j];
    }
    return out;  // ascending in z
  };
  const std::vector<LD> za = to_z(den);
  const std::vector<LD> zb = to_z(num);
  const LD lead = za[n];
  sys.a_.resize(n + 1);
  sys.b_.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    sys.a_[i] = static_cast<double>(za[n - i] / lead);
    sys.b_[i] = static_cast<double>(zb[n - i] / lead);
  }
  sys.init_delta(num, den);
  return sys;
}

void DiscreteLTI::init_delta(const Coeffs& num_in, const Coeffs& den) {
  const std::size_t n = den.size() - 1;
  Coeffs num(n + 1 - num_in.size(), 0.0);
  num.insert(num.end(), num_in.begin(), num_in.end());
  const double lead = den.front();
  alpha_.resize(n);
  c_.resize(n);
  d_ = num[0] / lead;
  for (std::size_t i = 0; i < n; ++i) {
    alpha_[i] = den[i + 1] / lead;
    c_[i] = num[i + 1] / lead - d_ * alpha_[i];
  }
  num0_ = num.back();
  den0_ = den.back();
  x_.assign(n, 0.0);
  dx_.assign(n, 0.0);
  last_output_ = 0.0;
}

double DiscreteLTI::step(double u) {
  if (!std::isfinite(u)) throw ModelError("non-finite input to discrete system");
  const std::size_t n = x_.size();
  if (n == 0) {
    last_output_ = d_ * u;
    return last_output_;
  }
  const double x1 = x_[0];
  const double y = x1 + d_ * u;
  // Observer form in d: d x_i = -alpha_i x_1 + x_{i+1} + c_i u.
  for (std::size_t i = 0; i < n; ++i) {
    const double next = (i + 1 < n) ? x_[i + 1] : 0.0;
    dx_[i] = -alpha_[i] * x1 + next + c_[i] * u;
  }
  for (std::size_t i = 0; i < n; ++i) x_[i] += dt_ * dx_[i];
  last_output_ = y;
  return y;
}

void DiscreteLTI::reset() {
  std::fill(x_.begin(), x_.end(), 0.0);
  last_output_ = 0.0;
}

std::optional<double> DiscreteLTI::dc_gain() const {
  if (x_.empty()) return d_;
  if (den0_ == 0.0) return std::nullopt;
  return num0_ / den0_;
}

DiscreteLTI discretize(const RationalTF& tf, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ModelError("dt must be positive");
  if (!tf.is_proper()) throw ModelError("cannot discretize an improper transfer function");
  const double warp = 2.0 / dt;
  for (const Complex& p : poles(tf)) {
    if (std::abs(p - Complex{warp, 0.0}) < 0.01 * warp)
      throw ModelError("pole within 1% of the bilinear singularity 2/dt = " + std::to_string(warp));
  }
  // Tustin in delta form: s = d/(1 + (dt/2) d). Multiplying through by
  // (1 + (dt/2) d)^n leaves the constant terms, and so the DC gain, untouched.
  const std::size_t n = tf.den_degree();
  const LD h = static_cast<LD>(dt) / 2.0L;
  const std::vector<LD> dd = substitute(ascending(tf.den(), n), n, h);
  const std::vector<LD> nd = substitute(ascending(tf.num(), n), n, h);
  if (dd[n] == 0.0L) throw ModelError("bilinear transform produced a singular realization");
  return DiscreteLTI::delta_form(descending(nd), descending(dd), dt);
}

}  // namespace ni_swarm::lti
