#include "smcf/parabolic_gauge.hpp"

#include <algorithm>

#include "smcf/gauge_init.hpp"

namespace smcf {

CurvatureSign parse_curvature_sign(std::string_view s) {
  if (s == "plus" || s == "+") return CurvatureSign::Plus;
  if (s == "minus" || s == "-") return CurvatureSign::Minus;
  fail(ErrorCode::InvalidArgument, "sign variant must be plus or minus");
}

std::string to_string(CurvatureSign s) { return s == CurvatureSign::Plus ? "plus" : "minus"; }

GaugeSources compute_gauge_sources(const MetricState& m, const RealTensor& A) {
  require(m.has_christoffel(), ErrorCode::InvalidArgument, "gauge sources need Christoffel symbols");
  require(A.rank() == 1 && A.dim() == m.dim(), ErrorCode::ValenceMismatch, "A must be a covector");
  return {contracted_christoffel(m), divergence(A, m)};
}

GaugeState make_gauge_state(const MetricState& m, const RealTensor& A, double t) {
  GaugeState s;
  s.metric = m;
  if (!s.metric.has_christoffel()) christoffel(s.metric);
  if (!s.metric.has_curvature()) curvature(s.metric);
  s.A = A;
  auto src = compute_gauge_sources(s.metric, A);
  s.V = std::move(src.V);
  s.B = std::move(src.B);
  s.t = t;
  return s;
}

GaugeState make_gauge_state(const RealTensor& g, const RealTensor& A, double t, double min_eigenvalue) {
  return make_gauge_state(complete_metric(g, min_eigenvalue), A, t);
}

namespace {

void symmetrize(RealTensor& t) {
  const int d = t.dim();
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b) {
      RealField avg(t.grid(), 0.5 * (t(a, b).values() + t(b, a).values()));
      t(a, b) = avg;
      t(b, a) = avg;
    }
}

SecondForm retrace(const SecondForm& lambda, const MetricState& m) { return make_second_form(lambda.lambda, m); }

}  // namespace

RealTensor heat_rhs_h(const GaugeState& s, const SecondForm& lambda_in) {
  const auto& m = s.metric;
  require(m.has_curvature(), ErrorCode::InvalidArgument, "heat_rhs_h needs curvature");
  const int d = m.dim();
  const Index N = m.grid()->size();
  const SecondForm lambda = retrace(lambda_in, m);
  const RealTensor ric = gauss_ricci(lambda, m);

  // d_c g^{ab} at (c, a, b)
  std::vector<RealField> dginv(d * d * d);
  for (int c = 0; c < d; ++c)
    for (int a = 0; a < d; ++a)
      for (int b = a; b < d; ++b) {
        dginv[(c * d + a) * d + b] = spectral_derivative(m.g_inv(a, b), c, 1);
        dginv[(c * d + b) * d + a] = dginv[(c * d + a) * d + b];
      }

  RealTensor out(m.grid(), 2);
  for (int mu = 0; mu < d; ++mu)
    for (int nu = mu; nu < d; ++nu) {
      Eigen::ArrayXd acc = 2.0 * ric(mu, nu).values() +
                           2.0 * (lambda.psi.values() * lambda.lambda(mu, nu).values().conjugate()).imag();
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          Eigen::ArrayXd q = Eigen::ArrayXd::Zero(N);
          for (int sg = 0; sg < d; ++sg)
            q += m.gamma_lower(mu, b, sg).values() * m.gamma(sg, a, nu).values();
          acc -= 2.0 * m.g_inv(a, b).values() * q;
          acc += dginv[(mu * d + a) * d + b].values() * m.gamma_lower(a, b, nu).values() +
                 dginv[(nu * d + a) * d + b].values() * m.gamma_lower(a, b, mu).values();
        }
      out(mu, nu).values() = acc;
    }
  for (int mu = 0; mu < d; ++mu)
    for (int nu = 0; nu < mu; ++nu) out(mu, nu) = out(nu, mu);
  symmetrize(out);
  return out;
}

RealTensor heat_rhs_A(const GaugeState& s, const SecondForm& lambda_in, CurvatureSign sign) {
  const auto& m = s.metric;
  require(m.has_curvature(), ErrorCode::InvalidArgument, "heat_rhs_A needs curvature");
  const int d = m.dim();
  const Index N = m.grid()->size();
  const SecondForm lambda = retrace(lambda_in, m);
  const RealTensor ric = gauss_ricci(lambda, m);
  const RealTensor W = normal_curvature(lambda, m);
  const RealTensor dW = covariant_derivative(W, "ll", m);  // (r, a, s)
  const ComplexTensor up = raise_first(lambda.lambda, m);  // lambda^c_a at (c, a)
  const RealTensor Aup = raise_vector(s.A, m);
  const double sgn = sign == CurvatureSign::Plus ? 1.0 : -1.0;

  RealTensor out(m.grid(), 1);
  for (int a = 0; a < d; ++a) {
    Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(N);
    for (int r = 0; r < d; ++r)
      for (int sg = 0; sg < d; ++sg) acc += sgn * m.g_inv(r, sg).values() * dW(r, a, sg).values();
    for (int e = 0; e < d; ++e) acc -= ric(a, e).values() * Aup(e).values();
    for (int c = 0; c < d; ++c) {
      const Eigen::ArrayXcd dpsi = spectral_derivative(lambda.psi, c, 1).values() +
                                   Complex(0, 1) * s.A(c).values() * lambda.psi.values();
      acc += (up(c, a).values() * dpsi.conjugate()).real();
    }
    for (int sg = 0; sg < d; ++sg) acc -= W(a, sg).values() * s.V(sg).values();
    out(a).values() = acc;
  }
  return out;
}

HeatRemainder heat_remainder(const GaugeState& s, const SecondForm& lambda, const ParabolicOptions& opt) {
  const auto& m = s.metric;
  const int d = m.dim();
  HeatRemainder r{heat_rhs_h(s, lambda), heat_rhs_A(s, lambda, opt.sign)};

  for (int mu = 0; mu < d; ++mu)
    for (int nu = mu; nu < d; ++nu) {
      const RealField& gmn = m.g(mu, nu);
      for (int a = 0; a < d; ++a) {
        const RealField da = spectral_derivative(gmn, a, 1);
        for (int b = a; b < d; ++b) {
          const RealField dab = a == b ? spectral_derivative(gmn, a, 2) : spectral_derivative(da, b, 1);
          Eigen::ArrayXd coef = m.g_inv(a, b).values() * (a == b ? 1.0 : 2.0);
          if (a == b) coef -= 1.0;
          r.g(mu, nu).values() += coef * dab.values();
        }
      }
      if (nu != mu) r.g(nu, mu) = r.g(mu, nu);
    }

  // nabla_s nabla^s A_a - Delta A_a
  const RealTensor dA = covariant_derivative(s.A, "l", m);   // (r, a)
  const RealTensor ddA = covariant_derivative(dA, "ll", m);  // (s, r, a)
  for (int a = 0; a < d; ++a) {
    Eigen::ArrayXd acc = -laplacian(s.A(a)).values();
    for (int sg = 0; sg < d; ++sg)
      for (int q = 0; q < d; ++q) acc += m.g_inv(sg, q).values() * ddA(sg, q, a).values();
    r.A(a).values() += acc;
  }

  if (opt.dealias) {
    r.g = truncate(r.g);
    r.A = truncate(r.A);
  }
  symmetrize(r.g);
  return r;
}

namespace {

RealTensor heat(const RealTensor& t, double time) {
  return map_components(t, [time](const RealField& f) { return heat_semigroup(f, time); });
}

GaugeState assemble(const RealTensor& g, const RealTensor& A, double t, double min_eigenvalue) {
  require(all_finite(g) && all_finite(A), ErrorCode::StepRejected, "non-finite gauge state");
  try {
    return make_gauge_state(g, A, t, min_eigenvalue);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ImmersionDegeneracy)
      fail(ErrorCode::StepRejected, "metric degenerates during the step; halve dt");
    throw;
  }
}

}  // namespace

GaugeState step_parabolic(const GaugeState& s, const SecondForm& lambda_a, const SecondForm& lambda_b, double dt,
                          const ParabolicOptions& opt) {
  require(dt > 0.0, ErrorCode::InvalidArgument, "dt must be positive");
  require(s.metric.has_curvature(), ErrorCode::InvalidArgument, "gauge state is not complete");
  SecondForm mid;
  mid.lambda = lambda_a.lambda;
  for (int i = 0; i < mid.lambda.component_count(); ++i)
    mid.lambda.components()[i] = 0.5 * (lambda_a.lambda.components()[i] + lambda_b.lambda.components()[i]);

  const HeatRemainder e0 = heat_remainder(s, lambda_a, opt);
  RealTensor g_half = heat(s.metric.g + 0.5 * dt * e0.g, 0.5 * dt);
  RealTensor A_half = heat(s.A + 0.5 * dt * e0.A, 0.5 * dt);
  symmetrize(g_half);
  const GaugeState half = assemble(g_half, A_half, s.t + 0.5 * dt, opt.min_eigenvalue);

  const HeatRemainder e1 = heat_remainder(half, mid, opt);
  RealTensor g_new = heat(s.metric.g, dt) + dt * heat(e1.g, 0.5 * dt);
  RealTensor A_new = heat(s.A, dt) + dt * heat(e1.A, 0.5 * dt);
  symmetrize(g_new);
  return assemble(g_new, A_new, s.t + dt, opt.min_eigenvalue);
}

double gauge_source_defect(const GaugeState& s) {
  const auto src = compute_gauge_sources(s.metric, s.A);
  return std::max(norm_linf(src.V - s.V), norm_linf(src.B - s.B));
}

}  // namespace smcf
