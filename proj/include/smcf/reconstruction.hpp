#pragma once

#include <string>
#include <vector>

#include "smcf/constraints.hpp"

namespace smcf {

/// Moving frame: tangents F_a = d_a F and the complex normal m = nu1 + i nu2.
struct Frame {
  std::vector<AmbientVector> tangents;
  ComplexAmbient m;

  GridPtr grid() const { return m.front().grid(); }
  int dim() const { return static_cast<int>(tangents.size()); }
  int ambient_dim() const { return static_cast<int>(m.size()); }
  NormalFrame normal() const { return frame_from_m(m); }
};

Frame make_frame(const Immersion& F, const NormalFrame& frame);

/// Pointwise maxima of |<m, conj m> - 2|, |<m, m>|, |<F_a, m>| and
/// |<F_a, F_b> - g_ab|.
struct FrameDefects {
  double normalization = 0.0;
  double nullity = 0.0;
  double normality = 0.0;
  double metric = 0.0;

  double orthogonality() const;
};

FrameDefects frame_defects(const Frame& f, const RealTensor& g);

struct SpaceIntegrationOptions {
  int substeps = 0;                  // RK4 steps per grid cell; 0 picks from the coefficient size
  double holonomy_tolerance = 1e-4;  // beyond: integrability error
  double seed_tolerance = 1e-6;      // orthogonality defect allowed on the seed slice
};

struct SpaceIntegration {
  Frame frame;
  double holonomy = 0.0;            // relative mismatch after one period along axis 0
  double structure_residual = 0.0;  // relative defect of the structure equations, all axes
  int substeps = 0;
};

/// Integrates d_a F_b = Gamma^c_ab F_c + Re(lambda_ab conj m), d_a m = -i A_a m - lambda^c_a F_c
/// along axis 0 from the seed's values on the first slice (x_0 = 0).
SpaceIntegration integrate_frame_space(const Frame& seed, const MetricState& m, const SecondForm& lambda,
                                       const RealTensor& A, const SpaceIntegrationOptions& opt = {});

/// Frame motion at one state:
///   d_t F_a = -Im(d^A_a psi conj m - i lambda_ac V^c conj m) + [Im(psi conj(lambda^c_a)) + nabla_a V^c] F_c
///   d_t m = -i B m - i (d^{A,a} psi - i lambda^a_c V^c) F_a
/// One RK4 step with the states at t, t + dt/2 and t + dt.
Frame transport_frame_time(const Frame& frame, const TrajectoryPoint& a, const TrajectoryPoint& mid,
                           const TrajectoryPoint& b, double dt);

struct TransportOptions {
  double drift_tolerance = 1e-5;  // orthogonality defect; beyond: frame-drift error
};

/// Frames at every stored time. Midpoint coefficients come from cubic
/// interpolation across the neighbouring slices.
std::vector<Frame> transport_frames(const Frame& frame0, const std::vector<TrajectoryPoint>& points,
                                    const TransportOptions& opt = {});

struct ImmersionPath {
  std::vector<double> times;
  std::vector<Immersion> immersions;
  std::vector<Frame> frames;
  std::vector<double> consistency;  // relative max |d_a F - F_a| per time
};

/// F(t) = F(0) + int_0^t -Im(psi conj m) + V^c F_c ds by the trapezoid rule
/// over the stored slices. A consistency gap beyond `tolerance` raises
/// reconstruction-inconsistency.
ImmersionPath integrate_F(const Immersion& F0, const std::vector<Frame>& frames,
                          const std::vector<TrajectoryPoint>& points, double tolerance = 1e-4);

/// (d_t F)^perp - J H with H = Delta_g F from the reconstructed immersion and
/// J the rotation of the rebuilt normal frame (J nu1 = nu2). Needs three slices.
std::vector<ResidualNorms> verify_smcf(const ImmersionPath& path);

struct ReconstructionOptions {
  TransportOptions transport;
  SpaceIntegrationOptions space;
  double consistency_tolerance = 1e-4;
  bool audit_initial_frame = true;
};

struct ReconstructionRow {
  double t = 0.0;
  double consistency = 0.0;    // d_a F vs transported F_a
  double lambda_gap = 0.0;     // second form of (F, m) vs evolved lambda, relative L2
  double metric_gap = 0.0;     // <F_a, F_b> vs evolved g, relative L2
  double orthogonality = 0.0;  // frame defects
  ResidualNorms smcf;          // (d_t F)^perp - J H

  static std::string csv_header();
  std::string csv_row() const;
};

struct Reconstruction {
  ImmersionPath path;
  std::vector<ReconstructionRow> rows;
  double initial_holonomy = 0.0;    // audit of the initial frame by spatial integration
  double initial_frame_gap = 0.0;
};

/// lambda -> (frame, F) -> lambda along a trajectory started from (F0, frame0).
Reconstruction reconstruct(const Immersion& F0, const NormalFrame& frame0, const std::vector<TrajectoryPoint>& points,
                           const ReconstructionOptions& opt = {});

}  // namespace smcf
