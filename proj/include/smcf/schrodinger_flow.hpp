#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "smcf/parabolic_gauge.hpp"

namespace smcf {

/// Right-hand side of the covariant equation
///   (i d_t + nabla_s nabla^s) lambda = N,
/// split into its terms, together with the two pieces that turn it into the
/// forcing F of the flat-divergence form
///   i d_t lambda + d_a(g^{ab} d_b lambda) + 2i A^a d_a lambda = F.
struct Nonlinearity {
  // N
  ComplexTensor advection;   // i (V - 2A)^s nabla_s lambda
  ComplexTensor divergence;  // -i (nabla_s A^s) lambda
  ComplexTensor shift;       // i lambda^c_a nabla_b V_c + i lambda^c_b nabla_a V_c
  ComplexTensor potential;   // (B + A_s A^s - V_s A^s) lambda
  ComplexTensor cubic_psi;   // psi Re(lambda_ad conj(lambda^d_b))
  ComplexTensor cubic_gauss; // -Re(lambda_sd conj(lambda_ab) - lambda_sb conj(lambda_ad)) lambda^{sd}
  ComplexTensor cubic_chain; // -lambda_am conj(lambda^m_s) lambda^s_b
  // F - N
  ComplexTensor principal;   // d_m(g^{mn} d_n lambda) - nabla^s nabla_s lambda
  ComplexTensor transport;   // 2i A^s d_s lambda

  ComplexTensor N() const;
  ComplexTensor F() const;
  std::vector<std::pair<std::string, const ComplexTensor*>> terms() const;
};

/// Every term is truncated to the dealiased band when `dealias` is set.
Nonlinearity assemble_nonlinearity(const SecondForm& lambda, const GaugeState& s, bool dealias = true);

/// d_t lambda - i Delta lambda = i(nabla^s nabla_s lambda - Delta lambda) - i N.
ComplexTensor schrodinger_remainder(const SecondForm& lambda, const GaugeState& s, bool dealias = true);

struct SchrodingerOptions {
  bool dealias = true;
  bool free_only = false;  // drop the remainder: pure e^{i Delta dt}
};

/// Strang step: exact e^{i Delta dt/2}, an explicit midpoint step of the
/// remainder with the coefficients of `mid`, exact e^{i Delta dt/2}. psi is
/// retraced with `end_metric` when given. Non-finite output raises blowup.
SecondForm step_schrodinger(const SecondForm& lambda, const GaugeState& mid, double dt,
                            const SchrodingerOptions& opt = {}, const MetricState* end_metric = nullptr);

enum class CouplingMode { PerStep, SlabPicard };

CouplingMode parse_coupling_mode(std::string_view s);  // "per-step" | "slab"
std::string to_string(CouplingMode m);

struct EvolveOptions {
  double T = 0.1;
  double dt = 0.0;  // 0 -> 0.5 (box spacing)^2
  CouplingMode mode = CouplingMode::PerStep;
  int sweeps = 3;     // slab mode: maximum sweeps
  double tol = 0.0;   // slab mode: stop when the sweep distance drops below
  int record_every = 1;
  ParabolicOptions parabolic;
  SchrodingerOptions schrodinger;
};

struct TrajectoryPoint {
  double t = 0.0;
  SecondForm lambda;
  GaugeState gauge;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;  // every record_every steps, first and last included
  double dt = 0.0;
  int steps = 0;
  std::vector<double> sweep_distances;  // slab mode: ||lambda^(n+1) - lambda^(n)||_{L^inf L^2}
  std::vector<double> lambda_l2;        // per step
};

using TrajectoryObserver = std::function<void(const TrajectoryPoint&)>;

double default_dt(const Grid& grid);

/// Evolves (lambda, g, A) from the initial data. Per-step mode couples the
/// two flows inside every step (gauge predictor to the half step, Schrodinger
/// step, gauge corrector with the new lambda). Slab mode runs the Picard
/// scheme on the whole interval from lambda^(0) = 0 and raises
/// iteration-divergence if the sweep distance grows three times in a row.
Trajectory picard_evolve(const SecondForm& lambda0, const GaugeState& gauge0, const EvolveOptions& opt,
                         const TrajectoryObserver& observer = {});

/// max_ab ||lambda_ab - lambda_ba||_inf.
double symmetry_defect(const ComplexTensor& lambda);

}  // namespace smcf
