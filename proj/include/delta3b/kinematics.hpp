#pragma once

// Masses, Jacobi momentum transforms and kinetic-energy forms for three
// particles on a line in the center-of-mass frame.
//
// Index conventions, fixed once and used everywhere:
//   particles        1, 2, 3          (stored 0-based)
//   pairs            23, 31, 12       (pair gamma <-> its spectator ell:
//                                      23<->1, 31<->2, 12<->3)
//   natural coordinates of spectator ell:  (p_next(ell), p_ell), i.e.
//   (p2,p1) for ell=1, (p3,p2) for ell=2, (p1,p3) for ell=3.
// All permuted formulae are generated from the 23-case by this index map.

#include <array>
#include <cmath>

#include "delta3b/common.hpp"

namespace delta3b {

inline int next_of(int ell) { return (ell + 1) % 3; }
inline int prev_of(int ell) { return (ell + 2) % 3; }

struct PairIndex {
  int spectator = 0;  // 0-based: 0 <-> pair 23, 1 <-> pair 31, 2 <-> pair 12

  static PairIndex p23() { return {0}; }
  static PairIndex p31() { return {1}; }
  static PairIndex p12() { return {2}; }

  int companion() const { return spectator; }
  int first_member() const { return next_of(spectator); }
  int second_member() const { return prev_of(spectator); }

  const char* name() const {
    static const char* names[3] = {"23", "31", "12"};
    return names[spectator];
  }
  bool operator==(const PairIndex& o) const { return spectator == o.spectator; }
};

struct MassConfig {
  std::array<double, 3> m{};     // particle masses m1, m2, m3
  std::array<double, 3> pair{};  // pair reduced masses m_23, m_31, m_12
  std::array<double, 3> mu{};    // particle-pair reduced masses mu_1..mu_3
  double total = 0.0;

  double pair_mass(PairIndex g) const { return pair[g.spectator]; }
  double pair_mass_of(int a, int b) const {
    return m[a] * m[b] / (m[a] + m[b]);
  }
  double mu_of(int ell) const { return mu[ell]; }
};

inline MassConfig derive_masses(double m1, double m2, double m3) {
  if (!(m1 > 0.0) || !(m2 > 0.0) || !(m3 > 0.0))
    throw InvalidInput("derive_masses: masses must be strictly positive");
  MassConfig mc;
  mc.m = {m1, m2, m3};
  mc.total = m1 + m2 + m3;
  for (int ell = 0; ell < 3; ++ell) {
    int a = next_of(ell), b = prev_of(ell);
    mc.pair[ell] = mc.m[a] * mc.m[b] / (mc.m[a] + mc.m[b]);
    mc.mu[ell] = mc.m[ell] * (mc.m[a] + mc.m[b]) / mc.total;
  }
  return mc;
}

// A momentum configuration in the center-of-mass frame, held as the three
// single-particle momenta with p1 + p2 + p3 = 0.
struct MomentumPoint {
  std::array<double, 3> p{};

  static MomentumPoint from_spectator(int ell, double q, double p) {
    // natural coordinates of spectator ell: (p_next = q, p_ell = p)
    MomentumPoint pt;
    pt.p[ell] = p;
    pt.p[next_of(ell)] = q;
    pt.p[prev_of(ell)] = -p - q;
    return pt;
  }

  static MomentumPoint from_jacobi(PairIndex g, double k, double p,
                                   const MassConfig& mc) {
    int ell = g.spectator, a = next_of(ell), b = prev_of(ell);
    double mab = mc.m[a] + mc.m[b];
    MomentumPoint pt;
    pt.p[ell] = p;
    pt.p[a] = -mc.m[a] / mab * p - k;
    pt.p[b] = -mc.m[b] / mab * p + k;
    return pt;
  }

  // relative momentum conjugate to x_a - x_b within pair gamma = (a, b)
  double pair_momentum(PairIndex g, const MassConfig& mc) const {
    int a = g.first_member(), b = g.second_member();
    return (mc.m[a] * p[b] - mc.m[b] * p[a]) / (mc.m[a] + mc.m[b]);
  }

  double spectator_momentum(int ell) const { return p[ell]; }
};

// Kinetic energy; identical in every coordinate representation.
inline double kinetic_energy(const MomentumPoint& pt, const MassConfig& mc) {
  return pt.p[0] * pt.p[0] / (2.0 * mc.m[0]) +
         pt.p[1] * pt.p[1] / (2.0 * mc.m[1]) +
         pt.p[2] * pt.p[2] / (2.0 * mc.m[2]);
}

// Kinetic energy expressed through two single-particle momenta p_a, p_b
// (the third fixed by momentum conservation):
//   E = p_a^2/(2 m_{ac}) + p_a p_b / m_c + p_b^2/(2 m_{bc}),  c = remaining.
inline double kinetic_pair_form(int a, int b, double pa, double pb,
                                const MassConfig& mc) {
  int c = 3 - a - b;
  return pa * pa / (2.0 * mc.pair_mass_of(a, c)) + pa * pb / mc.m[c] +
         pb * pb / (2.0 * mc.pair_mass_of(b, c));
}

// Same in the natural coordinates of spectator ell: q carries p_next(ell).
inline double kinetic_spectator(int ell, double q, double p,
                                const MassConfig& mc) {
  return kinetic_pair_form(next_of(ell), ell, q, p, mc);
}

// Kinetic energy in Jacobi coordinates (k_gamma, p_ell).
inline double kinetic_jacobi(PairIndex g, double k, double p,
                             const MassConfig& mc) {
  return k * k / (2.0 * mc.pair_mass(g)) + p * p / (2.0 * mc.mu_of(g.spectator));
}

struct JacobiCoords {
  double k;  // pair relative momentum
  double p;  // spectator momentum
};

// (k_23, p_1) -> (k_31, p_2), plus cyclic variants: given the Jacobi
// coordinates of pair `from`, return those of the cyclically-next pair.
inline JacobiCoords transform_pair(PairIndex from, double k, double p,
                                   const MassConfig& mc) {
  MomentumPoint pt = MomentumPoint::from_jacobi(from, k, p, mc);
  PairIndex to{next_of(from.spectator)};
  return {pt.pair_momentum(to, mc), pt.spectator_momentum(to.spectator)};
}

// (k_gamma, p_ell) -> natural spectator coordinates (p_next(ell), p_ell).
inline std::array<double, 2> to_spectator_coords(PairIndex g, double k,
                                                 double p,
                                                 const MassConfig& mc) {
  MomentumPoint pt = MomentumPoint::from_jacobi(g, k, p, mc);
  return {pt.p[next_of(g.spectator)], pt.p[g.spectator]};
}

// inverse of to_spectator_coords
inline JacobiCoords from_spectator_coords(PairIndex g, double q, double p,
                                          const MassConfig& mc) {
  MomentumPoint pt = MomentumPoint::from_spectator(g.spectator, q, p);
  return {pt.pair_momentum(g, mc), p};
}

}  // namespace delta3b
