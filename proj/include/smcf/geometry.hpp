#pragma once

#include <string_view>
#include <vector>

#include "smcf/tensor.hpp"

namespace smcf {

/// Vector in the ambient space R^{d+2}, one field per component.
using AmbientVector = std::vector<RealField>;
using ComplexAmbient = std::vector<ComplexField>;

/// F(x) = P x + periodic(x). Graphs carry P = [I; 0]; closed parametrizations
/// (tori) carry P = 0. The linear part never enters a spectral transform.
struct Immersion {
  Eigen::MatrixXd linear;  // (d+2) x d
  AmbientVector periodic;

  GridPtr grid() const { return periodic.front().grid(); }
  int dim() const { return grid()->dim(); }
  int ambient_dim() const { return static_cast<int>(periodic.size()); }
};

Immersion graph_immersion(const RealField& u1, const RealField& u2);

/// Full ambient position, linear part included.
AmbientVector positions(const Immersion& F);

/// F_alpha = d_alpha F, alpha = 0..d-1.
std::vector<AmbientVector> tangent_vectors(const Immersion& F);

struct MetricState {
  RealTensor g;            // g_{ab}
  RealTensor g_inv;        // g^{ab}
  RealTensor h;            // g - I
  RealField det;           // det g
  RealTensor gamma_lower;  // Gamma_{ab,c} at (a,b,c)
  RealTensor gamma;        // Gamma^c_{ab} at (c,a,b)
  RealTensor riemann;      // R_{sigma gamma alpha beta}
  RealTensor ricci;        // Ric_{ab}
  RealField scalar;        // g^{ab} Ric_{ab}

  GridPtr grid() const { return g.grid(); }
  int dim() const { return g.dim(); }
  bool has_christoffel() const { return !gamma.empty(); }
  bool has_curvature() const { return !ricci.empty(); }
};

/// Inverse, determinant and h from metric components. Throws
/// immersion-degeneracy when an eigenvalue is <= min_eigenvalue somewhere.
MetricState metric_from_components(const RealTensor& g, double min_eigenvalue = 0.0);
MetricState induced_metric(const Immersion& F);
MetricState induced_metric(const std::vector<AmbientVector>& tangents);

/// Smallest eigenvalue of g over the grid.
double min_metric_eigenvalue(const MetricState& m);

void christoffel(MetricState& m);
void curvature(MetricState& m);
/// metric_from_components + christoffel + curvature.
MetricState complete_metric(const RealTensor& g, double min_eigenvalue = 0.0);

/// nabla_alpha T for a tensor whose index placement is given by `valence`
/// ('u' upper, 'l' lower, one char per index). The derivative index comes
/// first in the result. With A supplied the connection term i A_alpha T is
/// added (complex tensors only).
template <typename S>
Tensor<S> covariant_derivative(const Tensor<S>& t, std::string_view valence, const MetricState& m,
                               const RealTensor* A = nullptr);

/// Contractions with the metric.
template <typename S>
Tensor<S> raise_first(const Tensor<S>& t, const MetricState& m);  // T^a_b = g^{ac} T_{cb}
template <typename S>
GridField<S> metric_trace(const Tensor<S>& t, const MetricState& m);  // g^{ab} T_{ab}
template <typename S>
Tensor<S> lower_vector(const Tensor<S>& v, const MetricState& m);  // V_a = g_{ab} V^b
template <typename S>
Tensor<S> raise_vector(const Tensor<S>& v, const MetricState& m);  // V^a = g^{ab} V_b

struct NormalFrame {
  AmbientVector nu1;
  AmbientVector nu2;

  ComplexAmbient m() const;  // nu1 + i nu2
};

NormalFrame frame_from_m(const ComplexAmbient& m);

struct SecondForm {
  ComplexTensor lambda;  // lambda_{ab}
  ComplexField psi;      // g^{ab} lambda_{ab}
};

SecondForm make_second_form(ComplexTensor lambda, const MetricState& m);

/// Largest violation of <nu_i, nu_j> = delta_ij and <nu_i, F_alpha> = 0.
double frame_normality_defect(const NormalFrame& frame, const std::vector<AmbientVector>& tangents);

/// Gram-Schmidt: project off the tangent space, then orthonormalize.
NormalFrame orthonormalize_normal(const AmbientVector& v1, const AmbientVector& v2,
                                  const std::vector<AmbientVector>& tangents, const MetricState& m);

/// Ricci tensor from the second fundamental form,
/// Re(lambda_cb conj(psi) - lambda_ca conj(lambda^a_b)).
RealTensor gauss_ricci(const SecondForm& lambda, const MetricState& m);

/// lambda_{ab} = d_a d_b F . (nu1 + i nu2). Frames off by more than 1e-8 get
/// one Gram-Schmidt pass; gross violations (> 1e-3) raise frame-not-normal.
SecondForm second_form(const Immersion& F, const NormalFrame& frame, const MetricState& m);

/// A_a = d_a nu1 . nu2
RealTensor connection_from_frame(const NormalFrame& frame);

struct GaugeRotation {
  SecondForm lambda;
  RealTensor A;
  ComplexAmbient m;
};

/// lambda -> e^{i theta} lambda, m -> e^{i theta} m, A -> A - d theta.
GaugeRotation gauge_rotate(const SecondForm& lambda, const RealTensor& A, const ComplexAmbient& m,
                           const RealField& theta);

/// V^c = g^{ab} Gamma^c_{ab}; zero exactly in harmonic coordinates.
RealTensor contracted_christoffel(const MetricState& m);

/// nabla^a A_a = g^{ab} d_a A_b - V^c A_c.
RealField divergence(const RealTensor& A, const MetricState& m);

/// Delta_g f = g^{ab} d_a d_b f - V^c d_c f.
RealField laplace_beltrami(const RealField& f, const MetricState& m);

/// d_a A_b - d_b A_a at (a,b).
RealTensor curl(const RealTensor& A);

/// Pointwise ambient dot product.
RealField dot(const AmbientVector& a, const AmbientVector& b);
ComplexField dot(const ComplexAmbient& a, const AmbientVector& b);

}  // namespace smcf
