#include "smcf/gauge_init.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace smcf {

namespace {

using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

std::vector<RealField> gradient(const RealField& f) {
  std::vector<RealField> out;
  for (int a = 0; a < f.grid()->dim(); ++a) out.push_back(spectral_derivative(f, a, 1));
  return out;
}

// sqrt(g) g^{ab}
RealTensor densitized_inverse(const MetricState& m) {
  RealTensor s = m.g_inv;
  const Eigen::ArrayXd root = m.det.values().sqrt();
  for (auto& c : s.components()) c.values() *= root;
  return s;
}

// d_a (T^{ab} X_b)
RealField divergence_of(const RealTensor& T, const std::vector<RealField>& X) {
  const int d = T.dim();
  RealField out(T.grid());
  for (int a = 0; a < d; ++a) {
    RealField flux(T.grid());
    for (int b = 0; b < d; ++b) flux.values() += T(a, b).values() * X[b].values();
    out += spectral_derivative(flux, a, 1);
  }
  return out;
}

double quadrature_norm(const std::vector<double>& parts) {
  double acc = 0.0;
  for (double p : parts) acc += p * p;
  return std::sqrt(acc);
}

// Non-contraction: the residual grew on three consecutive sweeps.
void check_progress(const IterationLog& log, const std::string& what) {
  const auto& r = log.residuals;
  const std::size_t n = r.size();
  if (n >= 4 && r[n - 1] > r[n - 2] && r[n - 2] > r[n - 3] && r[n - 3] > r[n - 4])
    fail(ErrorCode::ContractionFailure, what + ": residual grew over three sweeps");
}

AmbientVector constant_vector(const GridPtr& grid, int ambient, const std::vector<std::pair<int, double>>& entries) {
  AmbientVector v(ambient, RealField(grid));
  for (auto [i, value] : entries) v[i] = RealField::constant(grid, value);
  return v;
}

RealField evaluate_real(const RealField& f, const std::vector<Point>& pts) {
  return RealField(f.grid(), evaluate_real_at(transform(f), pts));
}

}  // namespace

std::vector<double> IterationLog::contraction_factors() const {
  std::vector<double> out;
  for (std::size_t k = 1; k < residuals.size(); ++k)
    out.push_back(residuals[k - 1] > 0 ? residuals[k] / residuals[k - 1] : 0.0);
  return out;
}

double metric_smallness(const MetricState& m, double delta) {
  const double sigma = 0.5 * m.dim() - delta;
  double worst = 0.0;
  for (const auto& c : m.h.components()) worst = std::max(worst, norm_l2(fractional_derivative(c, sigma)));
  return worst;
}

double harmonic_residual(const MetricState& m) {
  const RealTensor V = contracted_christoffel(m);
  std::vector<double> parts;
  for (const auto& c : V.components()) parts.push_back(norm_l2(c));
  return quadrature_norm(parts);
}

CoordinateChange solve_harmonic_coordinates(const MetricState& m, const SolverOptions& opt) {
  const auto grid = m.grid();
  const int d = m.dim();
  const RealTensor S = densitized_inverse(m);
  RealTensor W = S;
  for (int a = 0; a < d; ++a) W(a, a).values() -= 1.0;

  CoordinateChange c;
  c.phi = RealTensor(grid, 1);
  // Delta phi^gamma + d_a(W^{ab} d_b phi^gamma + W^{a gamma}), with the flat
  // Laplacian of the iteration so the Nyquist planes stay consistent
  auto rhs_of = [&](const RealTensor& phi, int g) {
    RealField rhs = -divergence_of(W, gradient(phi(g)));
    for (int a = 0; a < d; ++a) rhs -= spectral_derivative(W(a, g), a, 1);
    return rhs;
  };
  auto residual = [&](const RealTensor& phi) {
    std::vector<double> parts;
    for (int g = 0; g < d; ++g) parts.push_back(norm_l2(laplacian(phi(g)) - rhs_of(phi, g)));
    return quadrature_norm(parts);
  };
  for (int it = 1;; ++it) {
    RealTensor next(grid, 1);
    for (int g = 0; g < d; ++g) {
      next(g) = inverse_laplacian(rhs_of(c.phi, g));
    }
    c.phi = std::move(next);
    c.log.iterations = it;
    c.log.residuals.push_back(residual(c.phi));
    if (c.log.residuals.back() <= opt.tol) break;
    check_progress(c.log, "harmonic coordinates");
    if (it >= opt.max_iter) fail(ErrorCode::NoConvergence, "harmonic coordinates: iteration limit reached");
  }

  // Jacobian checks
  std::vector<std::vector<RealField>> dphi(d);
  for (int g = 0; g < d; ++g) {
    dphi[g] = gradient(c.phi(g));
    for (const auto& f : dphi[g]) c.max_dphi = std::max(c.max_dphi, norm_linf(f));
    c.spectral_tail = std::max(c.spectral_tail, spectral_tail(c.phi(g)));
  }
  SmallMat J(d, d);
  double worst = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < grid->size(); ++i) {
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) J(a, b) = (a == b) + dphi[a][b][i];
    worst = std::min(worst, J.determinant());
  }
  c.min_jacobian = worst;
  require(c.max_dphi < 0.5 && c.min_jacobian > 0.0, ErrorCode::ImmersionDegeneracy,
          "harmonic coordinate change is not a small diffeomorphism");

  // x(y) = y - phi(x(y)) by fixed point
  const Index n = grid->size();
  std::vector<Point> y(n), x(n);
  for (Index i = 0; i < n; ++i)
    for (int a = 0; a < d; ++a) y[i][a] = grid->coordinate(a)[i];
  x = y;
  if (norm_linf(c.phi) > 0.0) {
    for (Index i = 0; i < n; ++i)
      for (int a = 0; a < d; ++a) x[i][a] -= c.phi(a)[i];
    std::vector<Spectrum> spectra;
    for (int g = 0; g < d; ++g) spectra.push_back(transform(c.phi(g)));
    const double stop = 1e-14 * std::max(1.0, grid->box_length());
    for (int it = 0;; ++it) {
      double change = 0.0;
      std::vector<Eigen::ArrayXd> shift;
      for (int g = 0; g < d; ++g) shift.push_back(evaluate_real_at(spectra[g], x));
      for (Index i = 0; i < n; ++i)
        for (int a = 0; a < d; ++a) {
          const double v = y[i][a] - shift[a][i];
          change = std::max(change, std::abs(v - x[i][a]));
          x[i][a] = v;
        }
      if (change <= stop) break;
      require(it < 60, ErrorCode::NoConvergence, "inverse coordinate map did not converge");
    }
  }
  c.preimages = std::move(x);
  return c;
}

Immersion pullback_immersion(const Immersion& F, const CoordinateChange& c) {
  const auto grid = F.grid();
  const int d = F.dim();
  Immersion out;
  out.linear = F.linear;
  out.periodic.reserve(F.ambient_dim());
  std::vector<Eigen::ArrayXd> shift(d, Eigen::ArrayXd(grid->size()));
  for (Index i = 0; i < grid->size(); ++i)
    for (int a = 0; a < d; ++a) shift[a][i] = grid->coordinate(a)[i] - c.preimages[i][a];
  for (int k = 0; k < F.ambient_dim(); ++k) {
    RealField p = evaluate_real(F.periodic[k], c.preimages);
    for (int a = 0; a < d; ++a)
      if (F.linear(k, a) != 0.0) p.values() -= F.linear(k, a) * shift[a];
    out.periodic.push_back(std::move(p));
  }
  return out;
}

NormalFrame pullback_frame(const NormalFrame& frame, const CoordinateChange& c) {
  NormalFrame out;
  for (const auto& f : frame.nu1) out.nu1.push_back(evaluate_real(f, c.preimages));
  for (const auto& f : frame.nu2) out.nu2.push_back(evaluate_real(f, c.preimages));
  return out;
}

MetricState pullback_metric(const MetricState& m, const CoordinateChange& c) {
  const auto grid = m.grid();
  const int d = m.dim();
  RealTensor gx(grid, 2), dphi(grid, 2);
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      gx(a, b) = evaluate_real(m.g(a, b), c.preimages);
      gx(b, a) = gx(a, b);
    }
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) dphi(a, b) = evaluate_real(spectral_derivative(c.phi(a), b, 1), c.preimages);
  RealTensor out(grid, 2);
  SmallMat J(d, d), G(d, d);
  for (Index i = 0; i < grid->size(); ++i) {
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        J(a, b) = (a == b) + dphi(a, b)[i];
        G(a, b) = gx(a, b)[i];
      }
    const SmallMat Ji = J.inverse();
    const SmallMat Gt = Ji.transpose() * G * Ji;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) out(a, b)[i] = Gt(a, b);
  }
  MetricState result = metric_from_components(out);
  christoffel(result);
  return result;
}

NormalFrame transversal_frame(const Immersion& F, const MetricState& m, const TransversalityOptions& opt) {
  const auto grid = F.grid();
  const int d = F.dim();
  const int n = F.ambient_dim();
  const auto tangents = tangent_vectors(F);
  const double h = std::sqrt(0.5);
  const std::vector<std::vector<std::pair<int, double>>> candidates = {
      {{d, 1.0}}, {{d + 1, 1.0}}, {{d, h}, {d + 1, h}}, {{d, h}, {d + 1, -h}}};
  // quarter turn in the (e_d, e_{d+1}) plane
  auto turn = [&](const std::vector<std::pair<int, double>>& c) {
    std::vector<std::pair<int, double>> out;
    for (auto [i, v] : c) out.push_back(i == d ? std::pair{d + 1, v} : std::pair{d, -v});
    return out;
  };
  auto min_projection = [&](const AmbientVector& v) {
    const int dd = d;
    std::vector<RealField> proj(dd);
    for (int a = 0; a < dd; ++a) proj[a] = dot(v, tangents[a]);
    AmbientVector p = v;
    for (int a = 0; a < dd; ++a)
      for (int b = 0; b < dd; ++b) {
        const Eigen::ArrayXd coef = m.g_inv(a, b).values() * proj[b].values();
        for (int k = 0; k < n; ++k) p[k].values() -= coef * tangents[a][k].values();
      }
    return std::sqrt(dot(p, p).values().minCoeff());
  };
  double best = -1.0;
  std::size_t pick = 0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const double q = std::min(min_projection(constant_vector(grid, n, candidates[k])),
                              min_projection(constant_vector(grid, n, turn(candidates[k]))));
    if (q > best) {
      best = q;
      pick = k;
    }
  }
  require(best >= opt.min_projection, ErrorCode::Transversality,
          "no constant normal candidate is uniformly transversal (best projection " + std::to_string(best) + ")");
  return orthonormalize_normal(constant_vector(grid, n, candidates[pick]),
                               constant_vector(grid, n, turn(candidates[pick])), tangents, m);
}

CoulombFrame build_coulomb_frame(const Immersion& F, const MetricState& m, const SolverOptions& opt,
                                 const NormalFrame* seed, const TransversalityOptions& topt) {
  const auto grid = F.grid();
  const int d = F.dim();
  CoulombFrame out;
  if (seed) {
    const auto tangents = tangent_vectors(F);
    out.initial = frame_normality_defect(*seed, tangents) > 1e-8
                      ? orthonormalize_normal(seed->nu1, seed->nu2, tangents, m)
                      : *seed;
  } else {
    out.initial = transversal_frame(F, m, topt);
  }
  const RealTensor At = connection_from_frame(out.initial);
  const RealTensor S = densitized_inverse(m);
  RealTensor W = S;
  for (int a = 0; a < d; ++a) W(a, a).values() -= 1.0;
  std::vector<RealField> Avec(At.components().begin(), At.components().end());
  const RealField source = divergence_of(S, Avec);

  out.b = RealField(grid);
  for (int it = 1;; ++it) {
    out.b = inverse_laplacian(source - divergence_of(W, gradient(out.b)));
    out.log.iterations = it;
    out.log.residuals.push_back(norm_l2(laplacian(out.b) - source + divergence_of(W, gradient(out.b))));
    if (out.log.residuals.back() <= opt.tol) break;
    check_progress(out.log, "Coulomb rotation");
    if (it >= opt.max_iter) fail(ErrorCode::NoConvergence, "Coulomb rotation: iteration limit reached");
  }

  const Eigen::ArrayXd c = out.b.values().cos();
  const Eigen::ArrayXd s = out.b.values().sin();
  for (std::size_t k = 0; k < out.initial.nu1.size(); ++k) {
    const auto& n1 = out.initial.nu1[k].values();
    const auto& n2 = out.initial.nu2[k].values();
    out.frame.nu1.emplace_back(grid, c * n1 - s * n2);
    out.frame.nu2.emplace_back(grid, s * n1 + c * n2);
  }
  out.A = connection_from_frame(out.frame);
  out.divergence_residual = norm_l2(divergence(out.A, m));
  return out;
}

RealTensor normal_curvature(const SecondForm& lambda, const MetricState& m) {
  const int d = m.dim();
  const ComplexTensor up = raise_first(lambda.lambda, m);  // lambda^c_a at (c, a)
  RealTensor W(m.grid(), 2);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      Eigen::ArrayXcd acc = Eigen::ArrayXcd::Zero(m.grid()->size());
      for (int c = 0; c < d; ++c) acc += up(c, a).values() * lambda.lambda(b, c).values().conjugate();
      W(a, b).values() = acc.imag();
    }
  return W;
}

InitialConnection solve_initial_A(const SecondForm& lambda, const MetricState& m, const SolverOptions& opt,
                                  const std::vector<double>& mean) {
  const auto grid = m.grid();
  const int d = m.dim();
  require(mean.empty() || static_cast<int>(mean.size()) == d, ErrorCode::InvalidArgument,
          "connection mean must have d entries");
  const RealTensor Wc = normal_curvature(lambda, m);
  RealTensor Wm = densitized_inverse(m);
  for (int a = 0; a < d; ++a) Wm(a, a).values() -= 1.0;
  std::vector<RealField> curl_source(d, RealField(grid));
  for (int b = 0; b < d; ++b)
    for (int a = 0; a < d; ++a) curl_source[b] += spectral_derivative(Wc(a, b), a, 1);

  InitialConnection out;
  out.A = RealTensor(grid, 1);
  for (int it = 1;; ++it) {
    std::vector<RealField> Avec(out.A.components().begin(), out.A.components().end());
    const RealField flat_div = -divergence_of(Wm, Avec);
    RealTensor next(grid, 1);
    for (int b = 0; b < d; ++b) {
      next(b) = inverse_laplacian(curl_source[b] + spectral_derivative(flat_div, b, 1));
      if (!mean.empty()) next(b).values() += mean[b];
    }
    out.log.iterations = it;
    out.log.residuals.push_back(norm_l2(next - out.A));
    out.A = std::move(next);
    if (out.log.residuals.back() <= opt.tol) break;
    check_progress(out.log, "initial connection");
    if (it >= opt.max_iter) fail(ErrorCode::NoConvergence, "initial connection: iteration limit reached");
  }
  out.divergence_residual = norm_l2(divergence(out.A, m));
  out.curl_residual = norm_l2(curl(out.A) - Wc);
  return out;
}

TensorResidual check_elliptic_h(const MetricState& m, const SecondForm& lambda) {
  require(m.has_christoffel(), ErrorCode::InvalidArgument, "christoffel symbols missing");
  const auto grid = m.grid();
  const int d = m.dim();
  RealTensor dg(grid, 3), dgi(grid, 3);  // d_c g_ab, d_c g^{ab} at (c, a, b)
  for (int c = 0; c < d; ++c)
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        dg(c, a, b) = spectral_derivative(m.g(a, b), c, 1);
        dgi(c, a, b) = spectral_derivative(m.g_inv(a, b), c, 1);
      }
  const ComplexTensor up = raise_first(lambda.lambda, m);
  TensorResidual out;
  out.field = RealTensor(grid, 2);
  for (int c = 0; c < d; ++c)
    for (int s = 0; s < d; ++s) {
      auto& r = out.field(c, s).values();
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          r += m.g_inv(a, b).values() * spectral_derivative(dg(a, c, s), b, 1).values();
          r += dgi(c, a, b).values() * dg(b, a, s).values();
          r += dgi(s, a, b).values() * dg(b, a, c).values();
          r -= dg(c, a, b).values() * dgi(s, a, b).values();
          for (int n = 0; n < d; ++n)
            r -= 2.0 * m.g_inv(a, b).values() * m.gamma_lower(s, a, n).values() * m.gamma(n, b, c).values();
        }
      Eigen::ArrayXcd q = lambda.lambda(c, s).values() * lambda.psi.values().conjugate();
      for (int a = 0; a < d; ++a) q -= lambda.lambda(a, c).values() * up(a, s).values().conjugate();
      r += 2.0 * q.real();
    }
  out.l2 = norm_l2(out.field);
  out.linf = norm_linf(out.field);
  return out;
}

GaugedData gauge_initial_data(const Immersion& F, const GaugeInitOptions& opt, const NormalFrame* seed) {
  GaugedData out;
  auto& rep = out.report;
  MetricState m0 = induced_metric(F);
  christoffel(m0);
  rep.smallness = metric_smallness(m0, opt.delta);
  require(rep.smallness <= opt.smallness_threshold, ErrorCode::InvalidArgument,
          "initial metric is not small: " + std::to_string(rep.smallness));
  rep.harmonic_residual_before = harmonic_residual(m0);

  out.coordinates = solve_harmonic_coordinates(m0, opt.harmonic);
  rep.harmonic_log = out.coordinates.log;
  rep.max_dphi = out.coordinates.max_dphi;
  const double tail_mass = out.coordinates.spectral_tail * out.coordinates.spectral_tail;
  if (tail_mass > 1e-8)
    rep.warnings.push_back("coordinate change spectrum is truncated: out-of-band mass " + std::to_string(tail_mass));

  out.F = pullback_immersion(F, out.coordinates);
  NormalFrame moved;
  if (seed) moved = pullback_frame(*seed, out.coordinates);
  out.metric = induced_metric(out.F);
  christoffel(out.metric);
  curvature(out.metric);
  rep.harmonic_residual_after = harmonic_residual(out.metric);

  auto coulomb = build_coulomb_frame(out.F, out.metric, opt.coulomb, seed ? &moved : nullptr, opt.transversality);
  out.frame = coulomb.frame;
  out.A = coulomb.A;
  out.b = coulomb.b;
  rep.coulomb_log = coulomb.log;
  rep.divergence_residual = coulomb.divergence_residual;
  rep.frame_defect = frame_normality_defect(out.frame, tangent_vectors(out.F));

  out.lambda = second_form(out.F, out.frame, out.metric);
  std::vector<double> mean_A;
  for (const auto& c : out.A.components()) mean_A.push_back(mean(c));
  auto direct = solve_initial_A(out.lambda, out.metric, opt.coulomb, mean_A);
  rep.connection_log = direct.log;
  rep.curl_residual = direct.curl_residual;
  rep.initial_A_gap = norm_l2(direct.A - out.A);
  rep.elliptic_h_residual = check_elliptic_h(out.metric, out.lambda).l2;
  return out;
}

}  // namespace smcf
