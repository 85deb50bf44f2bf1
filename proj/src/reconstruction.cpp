#include "smcf/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "smcf/gauge_init.hpp"

namespace smcf {

namespace {

constexpr Complex kI(0.0, 1.0);

// Pointwise linear system for (F_a, m):
//   dF_a = C_ac F_c + Re(P_a conj m),   dm = -i b m + Q_a F_a.
struct Generator {
  int d = 0;
  std::vector<Eigen::ArrayXd> C;  // (a, c)
  std::vector<Eigen::ArrayXcd> P;
  std::vector<Eigen::ArrayXcd> Q;
  Eigen::ArrayXd b;

  Generator segment(Index off, Index len) const {
    Generator s{d, {}, {}, {}, b.segment(off, len)};
    for (const auto& c : C) s.C.push_back(c.segment(off, len));
    for (const auto& p : P) s.P.push_back(p.segment(off, len));
    for (const auto& q : Q) s.Q.push_back(q.segment(off, len));
    return s;
  }
};

Generator combine(const std::vector<const Generator*>& gens, const std::vector<double>& w) {
  Generator out = *gens[0];
  auto scale = [&](auto& v, double s) {
    for (auto& x : v) x *= s;
  };
  scale(out.C, w[0]);
  scale(out.P, w[0]);
  scale(out.Q, w[0]);
  out.b *= w[0];
  for (std::size_t i = 1; i < gens.size(); ++i) {
    for (std::size_t k = 0; k < out.C.size(); ++k) out.C[k] += w[i] * gens[i]->C[k];
    for (std::size_t k = 0; k < out.P.size(); ++k) {
      out.P[k] += w[i] * gens[i]->P[k];
      out.Q[k] += w[i] * gens[i]->Q[k];
    }
    out.b += w[i] * gens[i]->b;
  }
  return out;
}

// Frame values as plain arrays: T[a * na + i] is component i of F_a.
struct State {
  int d = 0;
  int na = 0;
  std::vector<Eigen::ArrayXd> T;
  std::vector<Eigen::ArrayXcd> M;

  State& axpy(double h, const State& k) {
    for (std::size_t i = 0; i < T.size(); ++i) T[i] += h * k.T[i];
    for (std::size_t i = 0; i < M.size(); ++i) M[i] += h * k.M[i];
    return *this;
  }
};

State apply(const Generator& g, const State& s) {
  State out{s.d, s.na, {}, {}};
  const int d = s.d, na = s.na;
  for (int a = 0; a < d; ++a)
    for (int i = 0; i < na; ++i) {
      Eigen::ArrayXd v = (g.P[a] * s.M[i].conjugate()).real();
      for (int c = 0; c < d; ++c) v += g.C[a * d + c] * s.T[c * na + i];
      out.T.push_back(std::move(v));
    }
  for (int i = 0; i < na; ++i) {
    Eigen::ArrayXcd v = -kI * g.b.cast<Complex>() * s.M[i];
    for (int a = 0; a < d; ++a) v += g.Q[a] * s.T[a * na + i].cast<Complex>();
    out.M.push_back(std::move(v));
  }
  return out;
}

State rk4(const State& u, const Generator& g0, const Generator& gm, const Generator& g1, double h) {
  const State k1 = apply(g0, u);
  const State k2 = apply(gm, State(u).axpy(0.5 * h, k1));
  const State k3 = apply(gm, State(u).axpy(0.5 * h, k2));
  const State k4 = apply(g1, State(u).axpy(h, k3));
  State out = u;
  out.axpy(h / 6, k1).axpy(h / 3, k2).axpy(h / 3, k3).axpy(h / 6, k4);
  return out;
}

State to_state(const Frame& f) {
  State s{f.dim(), f.ambient_dim(), {}, {}};
  for (const auto& t : f.tangents)
    for (const auto& c : t) s.T.push_back(c.values());
  for (const auto& c : f.m) s.M.push_back(c.values());
  return s;
}

Frame to_frame(const State& s, const GridPtr& grid) {
  Frame f;
  for (int a = 0; a < s.d; ++a) {
    AmbientVector t;
    for (int i = 0; i < s.na; ++i) t.emplace_back(grid, s.T[a * s.na + i]);
    f.tangents.push_back(std::move(t));
  }
  for (int i = 0; i < s.na; ++i) f.m.emplace_back(grid, s.M[i]);
  return f;
}

State state_segment(const State& s, Index off, Index len) {
  State out{s.d, s.na, {}, {}};
  for (const auto& t : s.T) out.T.push_back(t.segment(off, len));
  for (const auto& m : s.M) out.M.push_back(m.segment(off, len));
  return out;
}

double max_abs(const State& s) {
  double v = 0.0;
  for (const auto& t : s.T) v = std::max(v, t.abs().maxCoeff());
  for (const auto& m : s.M) v = std::max(v, m.abs().maxCoeff());
  return v;
}

double max_diff(const State& a, const State& b) {
  double v = 0.0;
  for (std::size_t i = 0; i < a.T.size(); ++i) v = std::max(v, (a.T[i] - b.T[i]).abs().maxCoeff());
  for (std::size_t i = 0; i < a.M.size(); ++i) v = std::max(v, (a.M[i] - b.M[i]).abs().maxCoeff());
  return v;
}

SecondForm traced(const SecondForm& l, const MetricState& m) { return make_second_form(l.lambda, m); }

// Structure equations along `axis`, coefficients translated by `shift`.
Generator space_generator(const MetricState& m, const SecondForm& lambda, const RealTensor& A, int axis,
                          double shift) {
  const int d = m.dim();
  auto tr = [&](const auto& f) { return translate(f, axis, shift).values(); };
  const ComplexTensor up = raise_first(lambda.lambda, m);
  Generator g;
  g.d = d;
  for (int a = 0; a < d; ++a)
    for (int c = 0; c < d; ++c) g.C.push_back(tr(m.gamma(c, axis, a)));
  for (int a = 0; a < d; ++a) {
    g.P.push_back(tr(lambda.lambda(axis, a)));
    g.Q.push_back(-tr(up(a, axis)));
  }
  g.b = tr(A(axis));
  return g;
}

Generator time_generator(const TrajectoryPoint& p) {
  const auto& s = p.gauge;
  const auto& m = s.metric;
  const int d = m.dim();
  const SecondForm lambda = traced(p.lambda, m);
  const Eigen::ArrayXcd& psi = lambda.psi.values();
  const RealTensor dV = covariant_derivative(s.V, "u", m);  // (a, c) = nabla_a V^c

  std::vector<Eigen::ArrayXcd> X;
  for (int a = 0; a < d; ++a) {
    Eigen::ArrayXcd x = spectral_derivative(lambda.psi, a, 1).values() + kI * s.A(a).values() * psi;
    for (int c = 0; c < d; ++c) x -= kI * lambda.lambda(a, c).values() * s.V(c).values();
    X.push_back(std::move(x));
  }
  Generator g;
  g.d = d;
  for (int a = 0; a < d; ++a)
    for (int c = 0; c < d; ++c) {
      Eigen::ArrayXcd bar = Eigen::ArrayXcd::Zero(m.grid()->size());
      for (int q = 0; q < d; ++q) bar += m.g_inv(c, q).values() * lambda.lambda(q, a).values().conjugate();
      g.C.push_back((psi * bar).imag() + dV(a, c).values());
    }
  for (int a = 0; a < d; ++a) {
    Eigen::ArrayXcd y = Eigen::ArrayXcd::Zero(m.grid()->size());
    for (int q = 0; q < d; ++q) y += m.g_inv(a, q).values() * X[q];
    g.P.push_back(kI * X[a]);
    g.Q.push_back(-kI * y);
  }
  g.b = s.B.values();
  return g;
}

// Lagrange weights at x for the nodes.
std::vector<double> lagrange(const std::vector<double>& nodes, double x) {
  std::vector<double> w(nodes.size(), 1.0);
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = 0; j < nodes.size(); ++j)
      if (i != j) w[i] *= (x - nodes[j]) / (nodes[i] - nodes[j]);
  return w;
}

}  // namespace

Frame make_frame(const Immersion& F, const NormalFrame& frame) { return {tangent_vectors(F), frame.m()}; }

double FrameDefects::orthogonality() const { return std::max({normalization, nullity, normality}); }

namespace {

// g holds the metric components restricted to the same points as s
FrameDefects defects(const State& s, const std::vector<Eigen::ArrayXd>& g) {
  const int d = s.d, na = s.na;
  const Index N = s.M.front().size();
  FrameDefects out;
  Eigen::ArrayXd mm = Eigen::ArrayXd::Zero(N);
  Eigen::ArrayXcd m2 = Eigen::ArrayXcd::Zero(N);
  for (int i = 0; i < na; ++i) {
    mm += s.M[i].abs2();
    m2 += s.M[i].square();
  }
  out.normalization = (mm - 2.0).abs().maxCoeff();
  out.nullity = m2.abs().maxCoeff();
  for (int a = 0; a < d; ++a) {
    Eigen::ArrayXcd fm = Eigen::ArrayXcd::Zero(N);
    for (int i = 0; i < na; ++i) fm += s.T[a * na + i] * s.M[i];
    out.normality = std::max(out.normality, fm.abs().maxCoeff());
    for (int b = 0; b < d; ++b) {
      Eigen::ArrayXd ff = -g[a * d + b];
      for (int i = 0; i < na; ++i) ff += s.T[a * na + i] * s.T[b * na + i];
      out.metric = std::max(out.metric, ff.abs().maxCoeff());
    }
  }
  return out;
}

std::vector<Eigen::ArrayXd> metric_arrays(const RealTensor& g, Index off, Index len) {
  std::vector<Eigen::ArrayXd> out;
  for (const auto& c : g.components()) out.push_back(c.values().segment(off, len));
  return out;
}

}  // namespace

FrameDefects frame_defects(const Frame& f, const RealTensor& g) {
  return defects(to_state(f), metric_arrays(g, 0, f.grid()->size()));
}

SpaceIntegration integrate_frame_space(const Frame& seed, const MetricState& m, const SecondForm& lambda_in,
                                       const RealTensor& A, const SpaceIntegrationOptions& opt) {
  require(m.has_christoffel(), ErrorCode::InvalidArgument, "spatial integration needs Christoffel symbols");
  require(seed.dim() == m.dim(), ErrorCode::InvalidArgument, "seed frame and metric dimensions differ");
  const GridPtr grid = m.grid();
  const int d = m.dim();
  const int n = grid->points();
  const Index S = grid->stride(0);  // points per slice
  const double h = grid->spacing();
  const SecondForm lambda = traced(lambda_in, m);

  const State full_seed = to_state(seed);
  const State slice0 = state_segment(full_seed, 0, S);
  const FrameDefects seed_defects = defects(slice0, metric_arrays(m.g, 0, S));
  require(seed_defects.orthogonality() <= opt.seed_tolerance && seed_defects.metric <= opt.seed_tolerance,
          ErrorCode::FrameNotNormal, "seed frame violates the frame invariants on the first slice");

  const Generator base = space_generator(m, lambda, A, 0, 0.0);
  int s = opt.substeps;
  if (s <= 0) {
    Eigen::ArrayXd k2 = base.b.square();
    for (const auto& c : base.C) k2 += c.square();
    for (const auto& p : base.P) k2 += p.abs2();
    for (const auto& q : base.Q) k2 += q.abs2();
    s = std::max(1, static_cast<int>(std::ceil(h * std::sqrt(k2.maxCoeff()) / 0.008)));
  }
  std::vector<Generator> shifted;  // coefficients at x_j + q h / (2s)
  shifted.push_back(base);
  for (int q = 1; q < 2 * s; ++q) shifted.push_back(space_generator(m, lambda, A, 0, q * h / (2 * s)));

  State out = full_seed;
  State u = slice0;
  const double hs = h / s;
  for (int j = 0; j < n; ++j) {
    const Index off = j * S, next = ((j + 1) % n) * S;
    for (int i = 0; i < s; ++i) {
      const Generator g0 = shifted[2 * i].segment(off, S);
      const Generator gm = shifted[2 * i + 1].segment(off, S);
      const Generator g1 = i + 1 < s ? shifted[2 * i + 2].segment(off, S) : shifted[0].segment(next, S);
      u = rk4(u, g0, gm, g1, hs);
    }
    if (j + 1 < n) {
      for (std::size_t c = 0; c < u.T.size(); ++c) out.T[c].segment(next, S) = u.T[c];
      for (std::size_t c = 0; c < u.M.size(); ++c) out.M[c].segment(next, S) = u.M[c];
    }
  }

  SpaceIntegration res;
  res.substeps = s;
  res.holonomy = max_diff(u, slice0) / std::max(1.0, max_abs(slice0));
  res.frame = to_frame(out, grid);

  // defect of the structure equations along every axis
  double worst = 0.0;
  const State st = out;
  for (int axis = 0; axis < d; ++axis) {
    const State rhs = apply(space_generator(m, lambda, A, axis, 0.0), st);
    double num = 0.0, den = 0.0;
    for (std::size_t c = 0; c < st.T.size(); ++c) {
      const Eigen::ArrayXd dt = spectral_derivative(RealField(grid, st.T[c]), axis, 1).values();
      num = std::max(num, (dt - rhs.T[c]).abs().maxCoeff());
      den = std::max(den, rhs.T[c].abs().maxCoeff());
    }
    for (std::size_t c = 0; c < st.M.size(); ++c) {
      const Eigen::ArrayXcd dm = spectral_derivative(ComplexField(grid, st.M[c]), axis, 1).values();
      num = std::max(num, (dm - rhs.M[c]).abs().maxCoeff());
      den = std::max(den, rhs.M[c].abs().maxCoeff());
    }
    worst = std::max(worst, num / std::max(1.0, den));
  }
  res.structure_residual = worst;

  if (res.holonomy > opt.holonomy_tolerance) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "holonomy mismatch %.3g exceeds %.3g", res.holonomy, opt.holonomy_tolerance);
    fail(ErrorCode::Integrability, buf);
  }
  return res;
}

Frame transport_frame_time(const Frame& frame, const TrajectoryPoint& a, const TrajectoryPoint& mid,
                           const TrajectoryPoint& b, double dt) {
  return to_frame(rk4(to_state(frame), time_generator(a), time_generator(mid), time_generator(b), dt),
                  frame.grid());
}

std::vector<Frame> transport_frames(const Frame& frame0, const std::vector<TrajectoryPoint>& pts,
                                    const TransportOptions& opt) {
  require(!pts.empty(), ErrorCode::InvalidArgument, "empty trajectory");
  std::vector<Generator> gens;
  gens.reserve(pts.size());
  for (const auto& p : pts) gens.push_back(time_generator(p));

  std::vector<Frame> frames{frame0};
  State u = to_state(frame0);
  const int K = static_cast<int>(pts.size());
  for (int k = 0; k + 1 < K; ++k) {
    const double t0 = pts[k].t, t1 = pts[k + 1].t;
    require(t1 > t0, ErrorCode::InvalidArgument, "trajectory times must increase");
    // cubic through up to four neighbouring slices
    const int lo = std::clamp(k - 1, 0, std::max(0, K - 4));
    const int hi = std::min(K - 1, lo + 3);
    std::vector<double> nodes;
    std::vector<const Generator*> gp;
    for (int i = lo; i <= hi; ++i) {
      nodes.push_back(pts[i].t);
      gp.push_back(&gens[i]);
    }
    const Generator mid = combine(gp, lagrange(nodes, 0.5 * (t0 + t1)));
    u = rk4(u, gens[k], mid, gens[k + 1], t1 - t0);
    Frame f = to_frame(u, frame0.grid());
    const FrameDefects def = frame_defects(f, pts[k + 1].gauge.metric.g);
    if (!(def.orthogonality() <= opt.drift_tolerance)) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "frame orthogonality drift %.3g at t = %.6g exceeds %.3g", def.orthogonality(),
                    t1, opt.drift_tolerance);
      fail(ErrorCode::FrameDrift, buf);
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

ImmersionPath integrate_F(const Immersion& F0, const std::vector<Frame>& frames,
                          const std::vector<TrajectoryPoint>& pts, double tolerance) {
  require(frames.size() == pts.size(), ErrorCode::InvalidArgument, "frames and trajectory are not synchronized");
  const int na = F0.ambient_dim();
  const int d = F0.dim();
  auto velocity = [&](std::size_t k) {
    const auto& p = pts[k];
    const SecondForm lambda = traced(p.lambda, p.gauge.metric);
    std::vector<Eigen::ArrayXd> v;
    for (int i = 0; i < na; ++i) {
      Eigen::ArrayXd x = -(lambda.psi.values() * frames[k].m[i].values().conjugate()).imag();
      for (int c = 0; c < d; ++c) x += p.gauge.V(c).values() * frames[k].tangents[c][i].values();
      v.push_back(std::move(x));
    }
    return v;
  };

  ImmersionPath path;
  path.frames = frames;
  Immersion F = F0;
  auto v_prev = velocity(0);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (k > 0) {
      const double h = pts[k].t - pts[k - 1].t;
      auto v = velocity(k);
      for (int i = 0; i < na; ++i) F.periodic[i].values() += 0.5 * h * (v_prev[i] + v[i]);
      v_prev = std::move(v);
    }
    const auto tangents = tangent_vectors(F);
    double gap = 0.0, size = 1.0;
    for (int a = 0; a < d; ++a)
      for (int i = 0; i < na; ++i) {
        gap = std::max(gap, norm_linf(tangents[a][i] - frames[k].tangents[a][i]));
        size = std::max(size, norm_linf(frames[k].tangents[a][i]));
      }
    path.times.push_back(pts[k].t);
    path.immersions.push_back(F);
    path.consistency.push_back(gap / size);
    if (!(gap / size <= tolerance)) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "d F and the transported tangents differ by %.3g at t = %.6g", gap / size,
                    pts[k].t);
      fail(ErrorCode::ReconstructionInconsistency, buf);
    }
  }
  return path;
}

std::vector<ResidualNorms> verify_smcf(const ImmersionPath& path) {
  const std::size_t K = path.immersions.size();
  require(K >= 3, ErrorCode::InvalidArgument, "verification needs at least three slices");
  std::vector<ResidualNorms> out;
  for (std::size_t k = 0; k < K; ++k) {
    std::array<double, 3> w{};
    const auto idx = difference_stencil(path.times, k, w);
    const Immersion& F = path.immersions[k];
    const int na = F.ambient_dim(), d = F.dim();
    const GridPtr grid = F.grid();

    MetricState m = induced_metric(F);
    christoffel(m);
    const auto tangents = tangent_vectors(F);
    const NormalFrame nu = orthonormalize_normal(path.frames[k].normal().nu1, path.frames[k].normal().nu2,
                                                 tangents, m);

    AmbientVector dtF, H;
    for (int i = 0; i < na; ++i) {
      RealField v(grid);
      for (int q = 0; q < 3; ++q) v += w[q] * path.immersions[idx[q]].periodic[i];
      dtF.push_back(std::move(v));
      // Delta_g F = g^{ab}(d_ab F - Gamma^c_ab F_c); the linear part has no second derivative
      RealField lap(grid);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          RealField t = spectral_derivative(spectral_derivative(F.periodic[i], a, 1), b, 1);
          for (int c = 0; c < d; ++c) t -= m.gamma(c, a, b) * tangents[c][i];
          lap += m.g_inv(a, b) * t;
        }
      H.push_back(std::move(lap));
    }
    const RealField n1 = dot(nu.nu1, dtF), n2 = dot(nu.nu2, dtF);
    const RealField h1 = dot(nu.nu1, H), h2 = dot(nu.nu2, H);
    // (d_t F)^perp = n1 nu1 + n2 nu2, J H = h1 nu2 - h2 nu1
    Eigen::ArrayXd r2 = (n1.values() + h2.values()).square() + (n2.values() - h1.values()).square();
    ResidualNorms norms;
    const double cell = grid->cell_volume();
    norms.l2 = std::sqrt(r2.sum() * cell);
    norms.linf = std::sqrt(r2.maxCoeff());
    const double jh = std::sqrt((h1.values().square() + h2.values().square()).sum() * cell);
    const double perp = std::sqrt((n1.values().square() + n2.values().square()).sum() * cell);
    norms.scale = std::max(jh, perp);
    out.push_back(norms);
  }
  return out;
}

std::string ReconstructionRow::csv_header() {
  return "t,consistency,lambda_gap,metric_gap,orthogonality,smcf_l2,smcf_linf,smcf_rel";
}

std::string ReconstructionRow::csv_row() const {
  std::string row;
  char buf[64];
  for (double v : {t, consistency, lambda_gap, metric_gap, orthogonality, smcf.l2, smcf.linf, smcf.relative()}) {
    std::snprintf(buf, sizeof buf, row.empty() ? "%.17g" : ",%.17g", v);
    row += buf;
  }
  return row;
}

Reconstruction reconstruct(const Immersion& F0, const NormalFrame& frame0, const std::vector<TrajectoryPoint>& pts,
                           const ReconstructionOptions& opt) {
  require(!pts.empty(), ErrorCode::InvalidArgument, "empty trajectory");
  Reconstruction rec;
  const Frame initial = make_frame(F0, frame0);
  if (opt.audit_initial_frame) {
    const auto& p0 = pts.front();
    auto space = integrate_frame_space(initial, p0.gauge.metric, p0.lambda, p0.gauge.A, opt.space);
    rec.initial_holonomy = space.holonomy;
    const State a = to_state(space.frame), b = to_state(initial);
    rec.initial_frame_gap = max_diff(a, b) / std::max(1.0, max_abs(b));
  }
  const auto frames = transport_frames(initial, pts, opt.transport);
  rec.path = integrate_F(F0, frames, pts, opt.consistency_tolerance);
  std::vector<ResidualNorms> smcf;
  if (pts.size() >= 3) smcf = verify_smcf(rec.path);

  for (std::size_t k = 0; k < pts.size(); ++k) {
    const auto& p = pts[k];
    const auto& F = rec.path.immersions[k];
    const auto& frame = rec.path.frames[k];
    MetricState m = induced_metric(F);
    christoffel(m);
    ReconstructionRow row;
    row.t = p.t;
    row.consistency = rec.path.consistency[k];
    const SecondForm rebuilt = second_form(F, frame.normal(), m);
    const double lnorm = norm_l2(p.lambda.lambda);
    row.lambda_gap = norm_l2(rebuilt.lambda - p.lambda.lambda) / (lnorm > 0.0 ? lnorm : 1.0);
    row.metric_gap = norm_l2(m.g - p.gauge.metric.g) / norm_l2(p.gauge.metric.g);
    row.orthogonality = frame_defects(frame, p.gauge.metric.g).orthogonality();
    if (!smcf.empty()) row.smcf = smcf[k];
    rec.rows.push_back(row);
  }
  return rec;
}

}  // namespace smcf
