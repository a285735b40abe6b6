#include "ni_swarm/ni_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ni_swarm/error.hpp"

namespace ni_swarm::ni {

using lti::Complex;
using lti::FreqGrid;
using lti::RationalTF;

std::string_view to_string(Reason r) {
  switch (r) {
    case Reason::ok: return "ok";
    case Reason::unstable_pole: return "unstable_pole";
    case Reason::imaginary_axis_pole: return "imaginary_axis_pole";
    case Reason::repeated_origin_pole: return "repeated_origin_pole";
    case Reason::not_strictly_proper: return "not_strictly_proper";
    case Reason::negative_margin: return "negative_margin";
  }
  return "unknown";
}

namespace {

struct Sweep {
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();
  double argmin = 0.0;
  double argmax = 0.0;
};

// Extremes of -Im P(jw) over non-singular grid points at or above w_min.
Sweep sweep_neg_imag(const RationalTF& tf, const FreqGrid& grid, double w_min) {
  Sweep s;
  for (const auto& pt : lti::freq_response(tf, grid)) {
    if (pt.singular || pt.omega < w_min) continue;
    const double v = -pt.value.imag();
    if (v < s.min) {
      s.min = v;
      s.argmin = pt.omega;
    }
    if (v > s.max) {
      s.max = v;
      s.argmax = pt.omega;
    }
  }
  return s;
}

}  // namespace

SniReport is_sni(const RationalTF& tf, const FreqGrid& grid) {
  if (!tf.is_proper()) throw ModelError("SNI test requires a proper transfer function");
  SniReport r;
  const auto ps = lti::poles(tf);
  r.poles_stable = std::all_of(ps.begin(), ps.end(), [](Complex p) { return p.real() < -kStrictTol; });
  const bool axis_pole = std::any_of(ps.begin(), ps.end(), [](Complex p) {
    return std::abs(p.real()) <= kStrictTol;
  });

  const Sweep s = sweep_neg_imag(tf, grid, 0.0);
  // j[P - P*] = -2 Im P; the complement -P has margin 2 * min(Im P) = -2 * max(-Im P).
  r.margin = 2.0 * s.min;
  r.worst_omega = s.argmin;
  r.complement_margin = -2.0 * s.max;

  if (!r.poles_stable) {
    r.reason = axis_pole ? Reason::imaginary_axis_pole : Reason::unstable_pole;
  } else if (!(r.margin > kStrictTol)) {
    r.reason = Reason::negative_margin;
  }
  r.is_sni = r.poles_stable && r.margin > kStrictTol;
  r.sign_complement_sni = r.poles_stable && r.complement_margin > kStrictTol;
  return r;
}

NiReport is_ni(const RationalTF& tf, const FreqGrid& grid) {
  if (!tf.is_proper()) throw ModelError("NI test requires a proper transfer function");
  NiReport r;
  const auto ps = lti::poles(tf);
  int origin = 0;
  bool unstable = false;
  for (Complex p : ps) {
    if (std::abs(p) <= kStrictTol) ++origin;
    else if (p.real() > kStrictTol) unstable = true;
  }
  r.origin_pole = origin > 0;

  double w_min = 0.0;
  if (r.origin_pole) w_min = 1e-3;
  const Sweep s = sweep_neg_imag(tf, grid, w_min);
  r.min_margin = s.min;
  r.worst_omega = s.argmin;

  bool structural_ok = true;
  if (unstable) {
    r.reason = Reason::unstable_pole;
    structural_ok = false;
  } else if (origin > 1) {
    r.reason = Reason::repeated_origin_pole;
    structural_ok = false;
  } else if (r.origin_pole && !tf.is_strictly_proper()) {
    r.reason = Reason::not_strictly_proper;
    structural_ok = false;
  }
  if (structural_ok && !(s.min >= -kStrictTol)) r.reason = Reason::negative_margin;
  r.is_ni = structural_ok && s.min >= -kStrictTol;
  r.sign_complement_ni = structural_ok && -s.max >= -kStrictTol;
  return r;
}

bool block_sni(std::span<const RationalTF> tfs, const FreqGrid& grid) {
  if (tfs.empty()) throw ModelError("block_sni needs at least one member");
  return std::all_of(tfs.begin(), tfs.end(), [&](const RationalTF& t) { return is_sni(t, grid).is_sni; });
}

void validate_incidence(const IncidenceMatrix& q) {
  for (Eigen::Index c = 0; c < q.cols(); ++c) {
    int plus = 0;
    int minus = 0;
    for (Eigen::Index r = 0; r < q.rows(); ++r) {
      const double v = q(r, c);
      if (v == 1.0) ++plus;
      else if (v == -1.0) ++minus;
      else if (v != 0.0) throw ModelError("incidence entries must be -1, 0 or +1");
    }
    if (plus != 1 || minus != 1)
      throw ModelError("each incidence column needs exactly one +1 and one -1");
    for (Eigen::Index d = 0; d < c; ++d) {
      if (q.col(c) == q.col(d) || q.col(c) == -q.col(d))
        throw ModelError("duplicate edge in incidence matrix");
    }
  }
}

Eigen::MatrixXd laplacian_from_incidence(const IncidenceMatrix& q) {
  validate_incidence(q);
  return q * q.transpose();
}

double max_eigenvalue(const Eigen::MatrixXd& m_in) {
  if (m_in.rows() != m_in.cols()) throw ModelError("max_eigenvalue needs a square matrix");
  const Eigen::Index n = m_in.rows();
  if (n == 0) throw ModelError("max_eigenvalue of an empty matrix");
  const double scale = m_in.cwiseAbs().maxCoeff();
  if (!std::isfinite(scale)) throw ModelError("matrix entries must be finite");
  if ((m_in - m_in.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1.0))
    throw ModelError("max_eigenvalue needs a symmetric matrix");
  if (scale == 0.0) return 0.0;

  Eigen::MatrixXd a = 0.5 * (m_in + m_in.transpose());
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-15 * scale) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  return a.diagonal().maxCoeff();
}

StabilityVerdict formation_stable(double m0, double n0, const IncidenceMatrix& q) {
  if (!std::isfinite(m0) || !std::isfinite(n0)) throw ModelError("DC gains must be finite");
  StabilityVerdict v;
  if (q.cols() == 0 || q.rows() == 0) {
    validate_incidence(q);
    v.stable = true;
    v.vacuous = true;
    v.margin = std::numeric_limits<double>::infinity();
    return v;
  }
  const double lmax = max_eigenvalue(laplacian_from_incidence(q));
  if (lmax <= 0.0) {
    v.stable = true;
    v.vacuous = true;
    v.margin = std::numeric_limits<double>::infinity();
    return v;
  }
  v.margin = 1.0 / lmax - m0 * n0;
  v.stable = v.margin > 0.0;
  return v;
}

bool interconnect_stable(const RationalTF& m, const RationalTF& n) {
  const auto gm = lti::dc_gain(m);
  const auto gn = lti::dc_gain(n);
  if (!gm || !gn)
    throw ModelError("infinite DC gain; use the graph-based formation_stable check instead");
  return *gm * *gn < 1.0;
}

SniReport positive_feedback_sni(const RationalTF& ni_plant, const RationalTF& sni, const FreqGrid& grid) {
  return is_sni(lti::feedback(ni_plant, sni, /*positive=*/true), grid);
}

}  // namespace ni_swarm::ni
