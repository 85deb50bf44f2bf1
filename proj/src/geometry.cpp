#include "smcf/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace smcf {

namespace {

using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;

std::vector<int> digits(int flat, int rank, int d) {
  std::vector<int> out(rank);
  for (int p = rank - 1; p >= 0; --p) {
    out[p] = flat % d;
    flat /= d;
  }
  return out;
}

int flatten(const std::vector<int>& idx, int d) {
  int f = 0;
  for (int i : idx) f = f * d + i;
  return f;
}

}  // namespace

RealField dot(const AmbientVector& a, const AmbientVector& b) {
  require(a.size() == b.size(), ErrorCode::InvalidArgument, "ambient dimension mismatch");
  RealField out(a.front().grid());
  for (std::size_t i = 0; i < a.size(); ++i) out.values() += a[i].values() * b[i].values();
  return out;
}

ComplexField dot(const ComplexAmbient& a, const AmbientVector& b) {
  require(a.size() == b.size(), ErrorCode::InvalidArgument, "ambient dimension mismatch");
  ComplexField out(a.front().grid());
  for (std::size_t i = 0; i < a.size(); ++i) out.values() += a[i].values() * b[i].values();
  return out;
}

Immersion graph_immersion(const RealField& u1, const RealField& u2) {
  check_same_grid(u1, u2);
  const int d = u1.grid()->dim();
  Immersion F;
  F.linear = Eigen::MatrixXd::Zero(d + 2, d);
  F.linear.topRows(d).setIdentity();
  F.periodic.assign(d + 2, RealField(u1.grid()));
  F.periodic[d] = u1;
  F.periodic[d + 1] = u2;
  return F;
}

AmbientVector positions(const Immersion& F) {
  AmbientVector out = F.periodic;
  const auto& g = *F.grid();
  for (int i = 0; i < F.ambient_dim(); ++i)
    for (int a = 0; a < F.dim(); ++a)
      if (F.linear(i, a) != 0.0) out[i].values() += F.linear(i, a) * g.coordinate(a);
  return out;
}

std::vector<AmbientVector> tangent_vectors(const Immersion& F) {
  const int d = F.dim();
  std::vector<AmbientVector> out(d);
  for (int a = 0; a < d; ++a) {
    out[a].reserve(F.ambient_dim());
    for (int i = 0; i < F.ambient_dim(); ++i) {
      auto c = spectral_derivative(F.periodic[i], a, 1);
      c.values() += F.linear(i, a);
      out[a].push_back(std::move(c));
    }
  }
  return out;
}

MetricState metric_from_components(const RealTensor& g, double min_eigenvalue) {
  require(g.rank() == 2, ErrorCode::ValenceMismatch, "metric must be rank 2");
  const auto grid = g.grid();
  const int d = g.dim();
  MetricState m;
  m.g = g;
  m.g_inv = RealTensor(grid, 2);
  m.h = g;
  for (int a = 0; a < d; ++a) m.h(a, a).values() -= 1.0;
  m.det = RealField(grid);
  SmallMat G(d, d);
  double worst = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < grid->size(); ++i) {
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) G(a, b) = 0.5 * (g(a, b)[i] + g(b, a)[i]);
    Eigen::SelfAdjointEigenSolver<SmallMat> es(G, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    worst = std::min(worst, lo);
    if (!(lo > min_eigenvalue)) {
      fail(ErrorCode::ImmersionDegeneracy,
           "metric eigenvalue " + std::to_string(lo) + " at grid index " + std::to_string(i));
    }
    const SmallMat inv = G.inverse();
    m.det[i] = G.determinant();
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) m.g_inv(a, b)[i] = inv(a, b);
  }
  return m;
}

double min_metric_eigenvalue(const MetricState& m) {
  const int d = m.dim();
  SmallMat G(d, d);
  double worst = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < m.grid()->size(); ++i) {
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) G(a, b) = m.g(a, b)[i];
    Eigen::SelfAdjointEigenSolver<SmallMat> es(G, Eigen::EigenvaluesOnly);
    worst = std::min(worst, es.eigenvalues().minCoeff());
  }
  return worst;
}

MetricState induced_metric(const std::vector<AmbientVector>& tangents) {
  const int d = static_cast<int>(tangents.size());
  RealTensor g(tangents.front().front().grid(), 2);
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      g(a, b) = dot(tangents[a], tangents[b]);
      if (b != a) g(b, a) = g(a, b);
    }
  return metric_from_components(g);
}

MetricState induced_metric(const Immersion& F) { return induced_metric(tangent_vectors(F)); }

void christoffel(MetricState& m) {
  const auto grid = m.grid();
  const int d = m.dim();
  // dg(c, a, b) = d_c g_ab
  RealTensor dg(grid, 3);
  for (int c = 0; c < d; ++c)
    for (int a = 0; a < d; ++a)
      for (int b = a; b < d; ++b) {
        dg(c, a, b) = spectral_derivative(m.g(a, b), c, 1);
        if (b != a) dg(c, b, a) = dg(c, a, b);
      }
  m.gamma_lower = RealTensor(grid, 3);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c)
        m.gamma_lower(a, b, c).values() =
            0.5 * (dg(a, b, c).values() + dg(b, a, c).values() - dg(c, a, b).values());
  m.gamma = RealTensor(grid, 3);
  for (int c = 0; c < d; ++c)
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        auto& out = m.gamma(c, a, b).values();
        for (int s = 0; s < d; ++s) out += m.g_inv(c, s).values() * m.gamma_lower(a, b, s).values();
      }
}

void curvature(MetricState& m) {
  if (!m.has_christoffel()) christoffel(m);
  const auto grid = m.grid();
  const int d = m.dim();
  // dG(e, a, b, c) = d_e Gamma_{ab,c}
  RealTensor dG(grid, 4);
  for (int e = 0; e < d; ++e)
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        for (int c = 0; c < d; ++c) dG(e, a, b, c) = spectral_derivative(m.gamma_lower(a, b, c), e, 1);
  m.riemann = RealTensor(grid, 4);
  for (int s = 0; s < d; ++s)
    for (int g = 0; g < d; ++g)
      for (int al = 0; al < d; ++al)
        for (int be = 0; be < d; ++be) {
          auto& R = m.riemann(s, g, al, be).values();
          R = dG(al, be, g, s).values() - dG(be, al, g, s).values();
          for (int mu = 0; mu < d; ++mu) {
            R += m.gamma(mu, be, s).values() * m.gamma_lower(al, g, mu).values();
            R -= m.gamma(mu, al, s).values() * m.gamma_lower(be, g, mu).values();
          }
        }
  m.ricci = RealTensor(grid, 2);
  for (int g = 0; g < d; ++g)
    for (int be = 0; be < d; ++be) {
      auto& out = m.ricci(g, be).values();
      for (int al = 0; al < d; ++al)
        for (int s = 0; s < d; ++s) out += m.g_inv(al, s).values() * m.riemann(s, g, al, be).values();
    }
  m.scalar = metric_trace(m.ricci, m);
}

MetricState complete_metric(const RealTensor& g, double min_eigenvalue) {
  MetricState m = metric_from_components(g, min_eigenvalue);
  christoffel(m);
  curvature(m);
  return m;
}

template <typename S>
Tensor<S> covariant_derivative(const Tensor<S>& t, std::string_view valence, const MetricState& m,
                               const RealTensor* A) {
  const int r = t.rank();
  require(static_cast<int>(valence.size()) == r, ErrorCode::ValenceMismatch,
          "valence string does not match tensor rank");
  for (char c : valence)
    require(c == 'u' || c == 'l', ErrorCode::ValenceMismatch, "valence characters must be u or l");
  require(m.has_christoffel() || r == 0, ErrorCode::InvalidArgument, "christoffel symbols missing");
  if constexpr (std::is_same_v<S, double>) {
    require(A == nullptr, ErrorCode::InvalidArgument, "connection term needs a complex tensor");
  }
  const int d = t.dim();
  Tensor<S> out(t.grid(), r + 1);
  const int count = t.component_count();
  for (int a = 0; a < d; ++a) {
    for (int flat = 0; flat < count; ++flat) {
      auto& o = out.components()[a * count + flat].values();
      o = spectral_derivative(t.components()[flat], a, 1).values();
      const auto idx = digits(flat, r, d);
      for (int p = 0; p < r; ++p) {
        auto other = idx;
        for (int mu = 0; mu < d; ++mu) {
          other[p] = mu;
          const auto& tv = t.components()[flatten(other, d)].values();
          if (valence[p] == 'u') {
            o += m.gamma(idx[p], a, mu).values() * tv;
          } else {
            o -= m.gamma(mu, a, idx[p]).values() * tv;
          }
        }
      }
      if constexpr (std::is_same_v<S, Complex>) {
        if (A) o += Complex(0.0, 1.0) * (*A)(a).values() * t.components()[flat].values();
      }
    }
  }
  return out;
}

template <typename S>
Tensor<S> raise_first(const Tensor<S>& t, const MetricState& m) {
  require(t.rank() == 2, ErrorCode::ValenceMismatch, "raise_first expects rank 2");
  const int d = t.dim();
  Tensor<S> out(t.grid(), 2);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c) out(a, b).values() += m.g_inv(a, c).values() * t(c, b).values();
  return out;
}

template <typename S>
GridField<S> metric_trace(const Tensor<S>& t, const MetricState& m) {
  require(t.rank() == 2, ErrorCode::ValenceMismatch, "trace expects rank 2");
  const int d = t.dim();
  GridField<S> out(t.grid());
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) out.values() += m.g_inv(a, b).values() * t(a, b).values();
  return out;
}

template <typename S>
Tensor<S> lower_vector(const Tensor<S>& v, const MetricState& m) {
  require(v.rank() == 1, ErrorCode::ValenceMismatch, "lower_vector expects rank 1");
  const int d = v.dim();
  Tensor<S> out(v.grid(), 1);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) out(a).values() += m.g(a, b).values() * v(b).values();
  return out;
}

template <typename S>
Tensor<S> raise_vector(const Tensor<S>& v, const MetricState& m) {
  require(v.rank() == 1, ErrorCode::ValenceMismatch, "raise_vector expects rank 1");
  const int d = v.dim();
  Tensor<S> out(v.grid(), 1);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) out(a).values() += m.g_inv(a, b).values() * v(b).values();
  return out;
}

ComplexAmbient NormalFrame::m() const {
  ComplexAmbient out;
  out.reserve(nu1.size());
  for (std::size_t i = 0; i < nu1.size(); ++i)
    out.push_back(ComplexField(nu1[i].grid(), nu1[i].values() + Complex(0.0, 1.0) * nu2[i].values()));
  return out;
}

NormalFrame frame_from_m(const ComplexAmbient& m) {
  NormalFrame f;
  for (const auto& c : m) {
    f.nu1.push_back(real(c));
    f.nu2.push_back(imag(c));
  }
  return f;
}

SecondForm make_second_form(ComplexTensor lambda, const MetricState& m) {
  SecondForm s;
  s.psi = metric_trace(lambda, m);
  s.lambda = std::move(lambda);
  return s;
}

double frame_normality_defect(const NormalFrame& frame, const std::vector<AmbientVector>& tangents) {
  double worst = 0.0;
  worst = std::max(worst, (dot(frame.nu1, frame.nu1).values() - 1.0).abs().maxCoeff());
  worst = std::max(worst, (dot(frame.nu2, frame.nu2).values() - 1.0).abs().maxCoeff());
  worst = std::max(worst, dot(frame.nu1, frame.nu2).values().abs().maxCoeff());
  for (const auto& t : tangents) {
    worst = std::max(worst, dot(frame.nu1, t).values().abs().maxCoeff());
    worst = std::max(worst, dot(frame.nu2, t).values().abs().maxCoeff());
  }
  return worst;
}

namespace {

AmbientVector project_off_tangent(const AmbientVector& v, const std::vector<AmbientVector>& tangents,
                                  const MetricState& m) {
  const int d = static_cast<int>(tangents.size());
  std::vector<RealField> proj(d);
  for (int a = 0; a < d; ++a) proj[a] = dot(v, tangents[a]);
  AmbientVector out = v;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      const Eigen::ArrayXd coef = m.g_inv(a, b).values() * proj[b].values();
      for (std::size_t i = 0; i < out.size(); ++i) out[i].values() -= coef * tangents[a][i].values();
    }
  return out;
}

void normalize(AmbientVector& v) {
  const RealField n2 = dot(v, v);
  require(n2.values().minCoeff() > 1e-24, ErrorCode::Transversality,
          "normal candidate degenerates to zero");
  const Eigen::ArrayXd inv = n2.values().rsqrt();
  for (auto& c : v) c.values() *= inv;
}

}  // namespace

NormalFrame orthonormalize_normal(const AmbientVector& v1, const AmbientVector& v2,
                                  const std::vector<AmbientVector>& tangents, const MetricState& m) {
  NormalFrame f;
  f.nu1 = project_off_tangent(v1, tangents, m);
  normalize(f.nu1);
  f.nu2 = project_off_tangent(v2, tangents, m);
  const RealField c = dot(f.nu2, f.nu1);
  for (std::size_t i = 0; i < f.nu2.size(); ++i) f.nu2[i].values() -= c.values() * f.nu1[i].values();
  normalize(f.nu2);
  return f;
}

SecondForm second_form(const Immersion& F, const NormalFrame& frame_in, const MetricState& m) {
  const auto tangents = tangent_vectors(F);
  NormalFrame frame = frame_in;
  double defect = frame_normality_defect(frame, tangents);
  if (defect > 1e-8) {
    require(defect <= 1e-3, ErrorCode::FrameNotNormal,
            "normal frame violates orthonormality by " + std::to_string(defect));
    frame = orthonormalize_normal(frame.nu1, frame.nu2, tangents, m);
    defect = frame_normality_defect(frame, tangents);
    require(defect <= 1e-8, ErrorCode::FrameNotNormal, "normal frame could not be repaired");
  }
  const int d = F.dim();
  const auto mvec = frame.m();
  ComplexTensor lambda(F.grid(), 2);
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      AmbientVector second(F.ambient_dim());
      for (int i = 0; i < F.ambient_dim(); ++i)
        second[i] = spectral_derivative(tangents[b][i], a, 1);
      lambda(a, b) = dot(mvec, second);
      if (b != a) lambda(b, a) = lambda(a, b);
    }
  return make_second_form(std::move(lambda), m);
}

RealTensor gauss_ricci(const SecondForm& lambda, const MetricState& m) {
  const int d = m.dim();
  const auto& l = lambda.lambda;
  RealTensor out(m.grid(), 2);
  for (int c = 0; c < d; ++c)
    for (int b = c; b < d; ++b) {
      Eigen::ArrayXcd acc = l(c, b).values() * lambda.psi.values().conjugate();
      for (int a = 0; a < d; ++a)
        for (int e = 0; e < d; ++e) acc -= l(c, a).values() * m.g_inv(a, e).values() * l(e, b).values().conjugate();
      out(c, b).values() = acc.real();
      if (b != c) out(b, c) = out(c, b);
    }
  return out;
}

RealTensor connection_from_frame(const NormalFrame& frame) {
  const auto grid = frame.nu1.front().grid();
  const int d = grid->dim();
  RealTensor A(grid, 1);
  for (int a = 0; a < d; ++a) {
    AmbientVector dnu(frame.nu1.size());
    for (std::size_t i = 0; i < frame.nu1.size(); ++i) dnu[i] = spectral_derivative(frame.nu1[i], a, 1);
    A(a) = dot(dnu, frame.nu2);
  }
  return A;
}

GaugeRotation gauge_rotate(const SecondForm& lambda, const RealTensor& A, const ComplexAmbient& m,
                           const RealField& theta) {
  const Eigen::ArrayXcd phase = (Complex(0.0, 1.0) * theta.values().cast<Complex>()).exp();
  GaugeRotation out;
  out.lambda = lambda;
  for (auto& c : out.lambda.lambda.components()) c.values() *= phase;
  out.lambda.psi.values() *= phase;
  out.A = A;
  for (int a = 0; a < A.dim(); ++a) out.A(a) -= spectral_derivative(theta, a, 1);
  out.m = m;
  for (auto& c : out.m) c.values() *= phase;
  return out;
}

RealTensor contracted_christoffel(const MetricState& m) {
  require(m.has_christoffel(), ErrorCode::InvalidArgument, "christoffel symbols missing");
  const int d = m.dim();
  RealTensor V(m.grid(), 1);
  for (int c = 0; c < d; ++c)
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) V(c).values() += m.g_inv(a, b).values() * m.gamma(c, a, b).values();
  return V;
}

RealField divergence(const RealTensor& A, const MetricState& m) {
  const int d = m.dim();
  const RealTensor V = contracted_christoffel(m);
  RealField out(m.grid());
  for (int a = 0; a < d; ++a) {
    const RealField dA = spectral_derivative(A(a), a, 1);
    for (int b = 0; b < d; ++b) {
      const RealField& dAb = b == a ? dA : spectral_derivative(A(b), a, 1);
      out.values() += m.g_inv(a, b).values() * dAb.values();
    }
    out.values() -= V(a).values() * A(a).values();
  }
  return out;
}

RealField laplace_beltrami(const RealField& f, const MetricState& m) {
  const int d = m.dim();
  RealTensor df(m.grid(), 1);
  for (int a = 0; a < d; ++a) df(a) = spectral_derivative(f, a, 1);
  return divergence(df, m);
}

RealTensor curl(const RealTensor& A) {
  const int d = A.dim();
  RealTensor out(A.grid(), 2);
  std::vector<std::vector<RealField>> dA(d, std::vector<RealField>(d));
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) dA[a][b] = spectral_derivative(A(b), a, 1);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) out(a, b) = dA[a][b] - dA[b][a];
  return out;
}

#define SMCF_INSTANTIATE(S)                                                                        \
  template Tensor<S> covariant_derivative(const Tensor<S>&, std::string_view, const MetricState&,  \
                                          const RealTensor*);                                      \
  template Tensor<S> raise_first(const Tensor<S>&, const MetricState&);                            \
  template GridField<S> metric_trace(const Tensor<S>&, const MetricState&);                         \
  template Tensor<S> lower_vector(const Tensor<S>&, const MetricState&);                           \
  template Tensor<S> raise_vector(const Tensor<S>&, const MetricState&);

SMCF_INSTANTIATE(double)
SMCF_INSTANTIATE(Complex)
#undef SMCF_INSTANTIATE

}  // namespace smcf
