#pragma once

#include <string>
#include <string_view>

#include "smcf/geometry.hpp"

namespace smcf {

/// Sign in front of nabla^s Im(lambda^c_a conj(lambda_sc)) in the heat
/// equation for A.
enum class CurvatureSign { Plus, Minus };

CurvatureSign parse_curvature_sign(std::string_view s);  // "plus" | "minus"
std::string to_string(CurvatureSign s);

/// Metric and connection in the heat gauge. V and B are derived, never
/// integrated.
struct GaugeState {
  MetricState metric;  // complete
  RealTensor A;        // A_a
  RealField B;         // nabla^a A_a
  RealTensor V;        // g^{ab} Gamma^c_{ab}
  double t = 0.0;

  GridPtr grid() const { return metric.grid(); }
  int dim() const { return metric.dim(); }
};

struct GaugeSources {
  RealTensor V;
  RealField B;
};

GaugeSources compute_gauge_sources(const MetricState& m, const RealTensor& A);

/// Completes the metric and fills V, B.
GaugeState make_gauge_state(const RealTensor& g, const RealTensor& A, double t = 0.0,
                            double min_eigenvalue = 0.0);
GaugeState make_gauge_state(const MetricState& m, const RealTensor& A, double t = 0.0);

/// Lower-order part of the metric equation,
/// 2 Ric~ + 2 Im(psi conj(lambda)) - 2 g^{ab} Gamma_{mb,s} Gamma^s_{an}
///   + d_m g^{ab} Gamma_{ab,n} + d_n g^{ab} Gamma_{ab,m}.
/// Ric~ is the Gauss form gauss_ricci(lambda); taking Ric from g instead
/// cancels the principal part and the system stops being parabolic.
/// psi is retraced with the state metric.
RealTensor heat_rhs_h(const GaugeState& s, const SecondForm& lambda);

/// Lower-order part of the connection equation,
/// +- nabla^s W_{as} - Ric~_{ad} A^d + Re(lambda^c_a conj(d^A_c psi)) - W_{as} V^s,
/// W_{as} = Im(lambda^c_a conj(lambda_sc)).
RealTensor heat_rhs_A(const GaugeState& s, const SecondForm& lambda, CurvatureSign sign = CurvatureSign::Plus);

struct ParabolicOptions {
  CurvatureSign sign = CurvatureSign::Plus;
  double min_eigenvalue = 0.05;  // smaller after a step -> step rejected
  bool dealias = true;
};

/// Time derivative of (g, A) minus the flat heat operator: the variable
/// coefficient remainder (g^{ab} - delta^{ab}) d_ab g and
/// (nabla_s nabla^s - Delta) A plus the lower-order terms.
struct HeatRemainder {
  RealTensor g;
  RealTensor A;
};

HeatRemainder heat_remainder(const GaugeState& s, const SecondForm& lambda, const ParabolicOptions& opt = {});

/// One exponential-midpoint step. The flat Laplacian is integrated exactly;
/// the remainder is evaluated at the half step with the midpoint lambda,
/// (lambda_a + lambda_b) / 2.
GaugeState step_parabolic(const GaugeState& s, const SecondForm& lambda_a, const SecondForm& lambda_b, double dt,
                          const ParabolicOptions& opt = {});

/// Worst violation of V = g^{ab} Gamma^c_{ab} and B = nabla^a A_a.
double gauge_source_defect(const GaugeState& s);

}  // namespace smcf
