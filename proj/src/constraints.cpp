#include "smcf/constraints.hpp"

#include <algorithm>
#include <cstdio>

#include "smcf/gauge_init.hpp"

namespace smcf {

namespace {

template <typename S>
ResidualNorms norms_of(const Tensor<S>& r, std::initializer_list<double> terms) {
  ResidualNorms n;
  n.l2 = norm_l2(r);
  n.linf = norm_linf(r);
  for (double t : terms) n.scale = std::max(n.scale, t);
  return n;
}

SecondForm traced(const SecondForm& l, const MetricState& m) { return make_second_form(l.lambda, m); }

}  // namespace

Residual<double> residual_T1(const MetricState& m, const SecondForm& lambda) {
  require(m.has_curvature(), ErrorCode::InvalidArgument, "T1 needs curvature");
  const SecondForm l = traced(lambda, m);
  const RealTensor gauss = gauss_ricci(l, m);
  // the two products separately: on a flat torus they cancel exactly
  RealTensor mean_part(m.grid(), 2);
  for (int a = 0; a < m.dim(); ++a)
    for (int b = 0; b < m.dim(); ++b)
      mean_part(a, b).values() = (l.lambda(a, b).values() * l.psi.values().conjugate()).real();
  Residual<double> r{m.ricci - gauss, {}};
  r.norms = norms_of(r.field, {norm_l2(m.ricci), norm_l2(mean_part), norm_l2(mean_part - gauss)});
  return r;
}

Residual<double> residual_T2(const MetricState& m, const SecondForm& lambda) {
  require(m.has_curvature(), ErrorCode::InvalidArgument, "T2 needs curvature");
  const int d = m.dim();
  const auto& l = lambda.lambda;
  RealTensor first(m.grid(), 4), second(m.grid(), 4);
  for (int s = 0; s < d; ++s)
    for (int c = 0; c < d; ++c)
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          first(s, c, a, b).values() = (l(b, c).values() * l(a, s).values().conjugate()).real();
          second(s, c, a, b).values() = (l(a, c).values() * l(b, s).values().conjugate()).real();
        }
  Residual<double> r{m.riemann - first + second, {}};
  r.norms = norms_of(r.field, {norm_l2(m.riemann), norm_l2(first), norm_l2(second)});
  return r;
}

Residual<Complex> residual_T3(const MetricState& m, const SecondForm& lambda, const RealTensor& A) {
  require(m.has_christoffel(), ErrorCode::InvalidArgument, "T3 needs Christoffel symbols");
  const int d = m.dim();
  const ComplexTensor D = covariant_derivative(lambda.lambda, "ll", m, &A);
  ComplexTensor out(m.grid(), 3);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c) out(a, b, c) = D(a, b, c) - D(b, a, c);
  Residual<Complex> r{std::move(out), {}};
  r.norms = norms_of(r.field, {norm_l2(D)});
  return r;
}

Residual<double> residual_T4(const MetricState& m, const SecondForm& lambda, const RealTensor& A) {
  const RealTensor c = curl(A);
  const RealTensor W = normal_curvature(traced(lambda, m), m);
  Residual<double> r{c - W, {}};
  r.norms = norms_of(r.field, {norm_l2(c), norm_l2(W)});
  return r;
}

std::array<std::size_t, 3> difference_stencil(const std::vector<double>& times, std::size_t k,
                                              std::array<double, 3>& w) {
  require(times.size() >= 3, ErrorCode::InvalidArgument, "time derivatives need at least three slices");
  require(k < times.size(), ErrorCode::InvalidArgument, "slice index out of range");
  const std::size_t lo = std::clamp<std::size_t>(k == 0 ? 0 : k - 1, 0, times.size() - 3);
  const std::array<std::size_t, 3> idx{lo, lo + 1, lo + 2};
  const double x = times[k];
  for (int i = 0; i < 3; ++i) {
    double num = 0.0, den = 1.0;
    for (int j = 0; j < 3; ++j) {
      if (j == i) continue;
      den *= times[idx[i]] - times[idx[j]];
      double prod = 1.0;
      for (int q = 0; q < 3; ++q)
        if (q != i && q != j) prod *= x - times[idx[q]];
      num += prod;
    }
    require(den != 0.0, ErrorCode::InvalidArgument, "repeated slice times");
    w[i] = num / den;
  }
  return idx;
}

namespace {

template <typename Get>
RealTensor time_derivative(const std::vector<TrajectoryPoint>& pts, std::size_t k, Get get) {
  std::vector<double> times;
  for (const auto& p : pts) times.push_back(p.t);
  std::array<double, 3> w{};
  const auto idx = difference_stencil(times, k, w);
  RealTensor out = get(pts[idx[0]]);
  out *= w[0];
  for (int i = 1; i < 3; ++i) out += w[i] * get(pts[idx[i]]);
  return out;
}

}  // namespace

Residual<double> residual_T5(const std::vector<TrajectoryPoint>& pts, std::size_t k) {
  const RealTensor dtA = time_derivative(pts, k, [](const TrajectoryPoint& p) { return p.gauge.A; });
  const auto& s = pts[k].gauge;
  const auto& m = s.metric;
  const int d = m.dim();
  const SecondForm lambda = traced(pts[k].lambda, m);
  const ComplexTensor up = raise_first(lambda.lambda, m);
  const RealTensor W = normal_curvature(lambda, m);

  RealTensor dB(m.grid(), 1), source(m.grid(), 1);
  for (int a = 0; a < d; ++a) {
    dB(a) = spectral_derivative(s.B, a, 1);
    Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(m.grid()->size());
    for (int c = 0; c < d; ++c) {
      const Eigen::ArrayXcd dpsi =
          spectral_derivative(lambda.psi, c, 1).values() + Complex(0, 1) * s.A(c).values() * lambda.psi.values();
      acc += (up(c, a).values() * dpsi.conjugate()).real();
    }
    for (int sg = 0; sg < d; ++sg) acc -= W(a, sg).values() * s.V(sg).values();
    source(a).values() = acc;
  }
  Residual<double> r{dtA - dB - source, {}};
  r.norms = norms_of(r.field, {norm_l2(dtA), norm_l2(dB), norm_l2(source)});
  return r;
}

Residual<double> residual_metric_evolution(const std::vector<TrajectoryPoint>& pts, std::size_t k) {
  const RealTensor dtg = time_derivative(pts, k, [](const TrajectoryPoint& p) { return p.gauge.metric.g; });
  const auto& s = pts[k].gauge;
  const auto& m = s.metric;
  const int d = m.dim();
  const SecondForm lambda = traced(pts[k].lambda, m);
  const RealTensor dV = covariant_derivative(lower_vector(s.V, m), "l", m);
  RealTensor im(m.grid(), 2), lie(m.grid(), 2);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      im(a, b).values() = 2.0 * (lambda.psi.values() * lambda.lambda(a, b).values().conjugate()).imag();
      lie(a, b) = dV(a, b) + dV(b, a);
    }
  Residual<double> r{dtg - im - lie, {}};
  r.norms = norms_of(r.field, {norm_l2(dtg), norm_l2(im), norm_l2(lie)});
  return r;
}

double truncation_level(const ComplexTensor& lambda) {
  double worst = 0.0;
  for (const auto& c : lambda.components()) worst = std::max(worst, spectral_tail(c));
  return worst;
}

std::string ConstraintReport::csv_header() {
  std::string h = "t";
  for (const char* n : kNames) {
    h += std::string(",") + n + "_l2";
    h += std::string(",") + n + "_linf";
    h += std::string(",") + n + "_rel";
  }
  return h + ",truncation";
}

std::string ConstraintReport::csv_row() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", t);
  std::string row = buf;
  for (const auto& r : residuals)
    for (double v : {r.l2, r.linf, r.relative()}) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      row += buf;
    }
  std::snprintf(buf, sizeof buf, ",%.17g", truncation);
  return row + buf;
}

ConstraintReport check_constraints(const TrajectoryPoint& p) {
  const auto& m = p.gauge.metric;
  ConstraintReport rep;
  rep.t = p.t;
  rep.residuals[0] = residual_T1(m, p.lambda).norms;
  rep.residuals[1] = residual_T2(m, p.lambda).norms;
  rep.residuals[2] = residual_T3(m, p.lambda, p.gauge.A).norms;
  rep.residuals[3] = residual_T4(m, p.lambda, p.gauge.A).norms;
  rep.truncation = truncation_level(p.lambda.lambda);
  return rep;
}

ConstraintReport check_constraints(const std::vector<TrajectoryPoint>& pts, std::size_t k) {
  require(k < pts.size(), ErrorCode::InvalidArgument, "slice index out of range");
  ConstraintReport rep = check_constraints(pts[k]);
  if (pts.size() >= 3) {
    rep.residuals[4] = residual_T5(pts, k).norms;
    rep.residuals[5] = residual_metric_evolution(pts, k).norms;
    rep.has_time_derivatives = true;
  }
  return rep;
}

}  // namespace smcf
