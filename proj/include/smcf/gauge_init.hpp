#pragma once

#include <string>
#include <vector>

#include "smcf/geometry.hpp"

namespace smcf {

struct SolverOptions {
  double tol = 1e-11;
  int max_iter = 60;
};

/// Picard bookkeeping shared by the elliptic solves. `residuals` holds the
/// fixed-point residual after each sweep.
struct IterationLog {
  int iterations = 0;
  std::vector<double> residuals;

  /// residual_k / residual_{k-1} per sweep.
  std::vector<double> contraction_factors() const;
};

/// y = x + phi(x).
struct CoordinateChange {
  RealTensor phi;                // phi^gamma on the x grid
  std::vector<Point> preimages;  // x(y) at every grid point y
  double max_dphi = 0.0;         // ||d phi||_inf
  double min_jacobian = 1.0;     // min det(I + d phi)
  double spectral_tail = 0.0;    // out-of-band mass of phi
  IterationLog log;
};

/// max over components of || |D|^{d/2 - delta} h ||_2.
double metric_smallness(const MetricState& m, double delta);

/// Solves Delta_g phi^gamma = g^{ab} Gamma^gamma_{ab} in divergence form,
/// Delta phi = -d_a((sqrt(g) g^{ab} - delta^{ab}) d_b phi + sqrt(g) g^{a gamma} - delta^{a gamma}),
/// by Picard iteration with zero-mean phi.
CoordinateChange solve_harmonic_coordinates(const MetricState& m, const SolverOptions& opt = {});

/// ||g^{ab} Gamma^c_{ab}||_2 summed over c in quadrature.
double harmonic_residual(const MetricState& m);

/// F(x(y)) on the uniform y grid; the linear part is kept and the shift is
/// moved into the periodic part.
Immersion pullback_immersion(const Immersion& F, const CoordinateChange& c);
NormalFrame pullback_frame(const NormalFrame& frame, const CoordinateChange& c);

/// g~_{mn}(y) = (J^{-1})^a_m (J^{-1})^b_n g_{ab}(x(y)), J = I + d phi, with
/// Christoffel symbols filled.
MetricState pullback_metric(const MetricState& m, const CoordinateChange& c);

struct TransversalityOptions {
  double min_projection = 0.5;
};

/// Constant-candidate frame: the best of e_d, e_{d+1}, (e_d +- e_{d+1})/sqrt2
/// projected onto the normal bundle, completed by its quarter turn.
NormalFrame transversal_frame(const Immersion& F, const MetricState& m,
                              const TransversalityOptions& opt = {});

struct CoulombFrame {
  NormalFrame initial;  // before rotation
  NormalFrame frame;    // e^{ib} m
  RealTensor A;         // recomputed from `frame`
  RealField b;
  double divergence_residual = 0.0;  // ||nabla^a A_a||_2
  IterationLog log;
};

/// Rotates the initial frame by b solving Delta_g b = nabla^a A~_a so that the
/// connection is divergence free. A seed frame replaces the candidate search.
CoulombFrame build_coulomb_frame(const Immersion& F, const MetricState& m, const SolverOptions& opt = {},
                                 const NormalFrame* seed = nullptr,
                                 const TransversalityOptions& topt = {});

struct InitialConnection {
  RealTensor A;
  double divergence_residual = 0.0;
  double curl_residual = 0.0;  // ||dA - Im(lambda^c_a conj(lambda_bc))||_2
  IterationLog log;
};

/// Connection from lambda alone: nabla^a A_a = 0, d_a A_b - d_b A_a =
/// Im(lambda^c_a conj(lambda_bc)). The torus leaves the mean of A free; it is
/// set to `mean` (zero when empty).
InitialConnection solve_initial_A(const SecondForm& lambda, const MetricState& m, const SolverOptions& opt = {},
                                  const std::vector<double>& mean = {});

/// Im(lambda^c_a conj(lambda_bc)) at (a, b).
RealTensor normal_curvature(const SecondForm& lambda, const MetricState& m);

struct TensorResidual {
  RealTensor field;
  double l2 = 0.0;
  double linf = 0.0;
};

/// Residual of the elliptic metric identity valid in harmonic coordinates,
/// g^{ab} d_ab g_cs - [-d_c g^{ab} d_b g_as - d_s g^{ab} d_b g_ac + d_c g_ab d_s g^{ab}]
///   - 2 g^{ab} Gamma_{sa,n} Gamma^n_{bc} + 2 Re(lambda_cs conj(psi) - lambda_ac conj(lambda^a_s)).
TensorResidual check_elliptic_h(const MetricState& m, const SecondForm& lambda);

struct GaugeInitOptions {
  SolverOptions harmonic;
  SolverOptions coulomb;
  TransversalityOptions transversality;
  double smallness_threshold = 0.1;
  double delta = 0.5;
};

struct GaugeInitReport {
  double smallness = 0.0;
  double harmonic_residual_before = 0.0;
  double harmonic_residual_after = 0.0;
  double max_dphi = 0.0;
  double divergence_residual = 0.0;
  double frame_defect = 0.0;
  double elliptic_h_residual = 0.0;
  double initial_A_gap = 0.0;  // Coulomb A vs the div-curl solve
  double curl_residual = 0.0;
  IterationLog harmonic_log;
  IterationLog coulomb_log;
  IterationLog connection_log;
  std::vector<std::string> warnings;
};

/// Gauged initial data: harmonic coordinates, Coulomb frame, lambda_0, A_0.
struct GaugedData {
  Immersion F;          // in harmonic coordinates
  NormalFrame frame;    // Coulomb frame
  MetricState metric;   // complete
  SecondForm lambda;
  RealTensor A;
  CoordinateChange coordinates;
  RealField b;
  GaugeInitReport report;
};

GaugedData gauge_initial_data(const Immersion& F, const GaugeInitOptions& opt = {},
                              const NormalFrame* seed = nullptr);

}  // namespace smcf
