#pragma once

#include <Eigen/Core>

#include <limits>
#include <span>
#include <string_view>

#include "ni_swarm/lti.hpp"

namespace ni_swarm::ni {

/// Dead-band used for every strict sign test in this module.
inline constexpr double kStrictTol = 1e-9;

enum class Reason {
  ok,
  unstable_pole,        // a pole with positive real part
  imaginary_axis_pole,  // a pole on the imaginary axis (SNI requires strict stability)
  repeated_origin_pole,
  not_strictly_proper,  // origin pole present but P(inf) != 0
  negative_margin,      // the imaginary part has the wrong sign somewhere on the grid
};

std::string_view to_string(Reason r);

struct SniReport {
  bool is_sni = false;
  double margin = 0.0;       // min over the grid of -2 Im P(jw)
  double worst_omega = 0.0;  // where that minimum occurs
  bool poles_stable = false;
  Reason reason = Reason::ok;
  /// Same test applied to -P. Negative-gain controllers used with plus-sign
  /// summing junctions are SNI in this sense.
  bool sign_complement_sni = false;
  double complement_margin = 0.0;
};

SniReport is_sni(const lti::RationalTF& tf, const lti::FreqGrid& grid = lti::FreqGrid::default_grid());

struct NiReport {
  bool is_ni = false;
  bool origin_pole = false;   // the free-body (pole at origin) path was taken
  double min_margin = 0.0;    // min of -Im P(jw) over the checked grid points
  double worst_omega = 0.0;
  Reason reason = Reason::ok;
  bool sign_complement_ni = false;
};

/// Non-strict test. Allows one simple pole at the origin when P is strictly
/// proper; grid points below 1e-3 rad/s are skipped in that case.
NiReport is_ni(const lti::RationalTF& tf, const lti::FreqGrid& grid = lti::FreqGrid::default_grid());

/// True iff every member is SNI. Throws on an empty list.
bool block_sni(std::span<const lti::RationalTF> tfs,
               const lti::FreqGrid& grid = lti::FreqGrid::default_grid());

/// Node-by-edge matrix; every column holds one +1 and one -1.
using IncidenceMatrix = Eigen::MatrixXd;

/// Throws ModelError when `q` is not a valid incidence matrix.
void validate_incidence(const IncidenceMatrix& q);

/// Q * Q^T.
Eigen::MatrixXd laplacian_from_incidence(const IncidenceMatrix& q);

/// Largest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
double max_eigenvalue(const Eigen::MatrixXd& m);

struct StabilityVerdict {
  bool stable = false;
  double margin = 0.0;  // 1/lambda_max - m0*n0
  bool vacuous = false; // edgeless graph: lambda_max == 0
};

/// m0*n0 < 1/lambda_max(Q Q^T).
StabilityVerdict formation_stable(double m0, double n0, const IncidenceMatrix& q);

/// Scalar DC-gain test dc(m)*dc(n) < 1. Throws ModelError if either DC gain
/// is infinite; use formation_stable for integrating members.
bool interconnect_stable(const lti::RationalTF& m, const lti::RationalTF& n);

/// Closes `sni` around `ni` with positive feedback and classifies the result.
SniReport positive_feedback_sni(const lti::RationalTF& ni_plant, const lti::RationalTF& sni,
                                const lti::FreqGrid& grid = lti::FreqGrid::default_grid());

}  // namespace ni_swarm::ni
