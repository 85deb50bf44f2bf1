#include "smcf/schrodinger_flow.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace smcf {

namespace {

constexpr Complex I(0.0, 1.0);

ComplexTensor zeros(const GridPtr& grid, int rank) { return ComplexTensor(grid, rank); }

void symmetrize(ComplexTensor& t) {
  const int d = t.dim();
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b) {
      ComplexField avg(t.grid(), 0.5 * (t(a, b).values() + t(b, a).values()));
      t(a, b) = avg;
      t(b, a) = std::move(avg);
    }
}

// lambda^{sd} from lambda^s_n = raise_first(lambda)
ComplexTensor raise_both(const ComplexTensor& up, const MetricState& m) {
  const int d = m.dim();
  ComplexTensor out(m.grid(), 2);
  for (int s = 0; s < d; ++s)
    for (int e = 0; e < d; ++e)
      for (int n = 0; n < d; ++n) out(s, e).values() += up(s, n).values() * m.g_inv(n, e).values();
  return out;
}

// sum over the first index of a rank-3 (s, a, b) tensor weighted by a vector.
ComplexTensor contract_first(const RealTensor& v, const ComplexTensor& t) {
  const int d = v.dim();
  ComplexTensor out(v.grid(), 2);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int s = 0; s < d; ++s) out(a, b).values() += v(s).values() * t(s, a, b).values();
  return out;
}

ComplexTensor trace_first_two(const ComplexTensor& t4, const MetricState& m) {
  const int d = m.dim();
  ComplexTensor out(m.grid(), 2);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int r = 0; r < d; ++r)
        for (int s = 0; s < d; ++s) out(a, b).values() += m.g_inv(r, s).values() * t4(r, s, a, b).values();
  return out;
}

ComplexTensor laplacian(const ComplexTensor& t) {
  return map_components(t, [](const ComplexField& f) { return smcf::laplacian(f); });
}

}  // namespace

ComplexTensor Nonlinearity::N() const {
  ComplexTensor out = advection;
  for (const auto* t : {&divergence, &shift, &potential, &cubic_psi, &cubic_gauss, &cubic_chain}) out += *t;
  return out;
}

ComplexTensor Nonlinearity::F() const {
  ComplexTensor out = N();
  out += principal;
  out += transport;
  return out;
}

std::vector<std::pair<std::string, const ComplexTensor*>> Nonlinearity::terms() const {
  return {{"advection", &advection},   {"divergence", &divergence},   {"shift", &shift},
          {"potential", &potential},   {"cubic_psi", &cubic_psi},     {"cubic_gauss", &cubic_gauss},
          {"cubic_chain", &cubic_chain}, {"principal", &principal},   {"transport", &transport}};
}

namespace {

Nonlinearity assemble(const SecondForm& lambda_in, const GaugeState& s, bool dealias, bool with_forcing) {
  const auto& m = s.metric;
  require(m.has_christoffel(), ErrorCode::InvalidArgument, "nonlinearity needs Christoffel symbols");
  require(lambda_in.lambda.rank() == 2 && lambda_in.lambda.dim() == m.dim(), ErrorCode::ValenceMismatch,
          "lambda must be a rank-2 tensor");
  const auto grid = m.grid();
  const int d = m.dim();
  const SecondForm lambda = make_second_form(lambda_in.lambda, m);
  const ComplexTensor& l = lambda.lambda;
  const Eigen::ArrayXcd& psi = lambda.psi.values();

  const ComplexTensor up = raise_first(l, m);  // lambda^c_a at (c, a)
  const ComplexTensor upup = raise_both(up, m);
  const ComplexTensor dl = covariant_derivative(l, "ll", m);     // (s, a, b)
  const RealTensor Aup = raise_vector(s.A, m);
  const RealTensor Vl = lower_vector(s.V, m);
  const RealTensor dV = covariant_derivative(Vl, "l", m);  // (b, c)
  const RealField divA = divergence(s.A, m);

  Nonlinearity n;
  {
    RealTensor w(grid, 1);
    for (int c = 0; c < d; ++c) w(c) = s.V(c) - 2.0 * Aup(c);
    n.advection = contract_first(w, dl);
    n.advection *= I;
  }
  n.divergence = zeros(grid, 2);
  n.shift = zeros(grid, 2);
  n.potential = zeros(grid, 2);
  n.cubic_psi = zeros(grid, 2);
  n.cubic_gauss = zeros(grid, 2);
  n.cubic_chain = zeros(grid, 2);

  Eigen::ArrayXd pot = s.B.values();
  for (int c = 0; c < d; ++c) pot += s.A(c).values() * Aup(c).values() - Vl(c).values() * Aup(c).values();

  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      const Eigen::ArrayXcd& lab = l(a, b).values();
      n.divergence(a, b).values() = -I * divA.values() * lab;
      n.potential(a, b).values() = pot * lab;
      auto& sh = n.shift(a, b).values();
      for (int c = 0; c < d; ++c)
        sh += I * (up(c, a).values() * dV(b, c).values() + up(c, b).values() * dV(a, c).values());

      Eigen::ArrayXd re = Eigen::ArrayXd::Zero(grid->size());
      for (int e = 0; e < d; ++e) re += (l(a, e).values() * up(e, b).values().conjugate()).real();
      n.cubic_psi(a, b).values() = psi * re;

      auto& cg = n.cubic_gauss(a, b).values();
      for (int sg = 0; sg < d; ++sg)
        for (int e = 0; e < d; ++e) {
          const Eigen::ArrayXd coef =
              (l(sg, e).values() * lab.conjugate() - l(sg, b).values() * l(a, e).values().conjugate()).real();
          cg -= coef * upup(sg, e).values();
        }

      auto& ch = n.cubic_chain(a, b).values();
      for (int mu = 0; mu < d; ++mu)
        for (int sg = 0; sg < d; ++sg)
          ch -= l(a, mu).values() * up(mu, sg).values().conjugate() * up(sg, b).values();
    }

  // F - N
  n.principal = zeros(grid, 2);
  n.transport = zeros(grid, 2);
  const ComplexTensor box =
      with_forcing ? trace_first_two(covariant_derivative(dl, "lll", m), m) : ComplexTensor();
  for (int a = 0; a < d && with_forcing; ++a)
    for (int b = 0; b < d; ++b) {
      auto& p = n.principal(a, b).values();
      auto& tr = n.transport(a, b).values();
      for (int mu = 0; mu < d; ++mu) {
        const ComplexField dmu = spectral_derivative(l(a, b), mu, 1);
        tr += 2.0 * I * Aup(mu).values() * dmu.values();
        ComplexField flux(grid);
        for (int nu = 0; nu < d; ++nu)
          flux.values() += m.g_inv(mu, nu).values() * (nu == mu ? dmu : spectral_derivative(l(a, b), nu, 1)).values();
        p += spectral_derivative(flux, mu, 1).values();
      }
      p -= box(a, b).values();
    }

  for (ComplexTensor* t : {&n.advection, &n.divergence, &n.shift, &n.potential, &n.cubic_psi, &n.cubic_gauss,
                           &n.cubic_chain, &n.principal, &n.transport}) {
    if (dealias) *t = truncate(*t);
    symmetrize(*t);
  }
  return n;
}

}  // namespace

Nonlinearity assemble_nonlinearity(const SecondForm& lambda, const GaugeState& s, bool dealias) {
  return assemble(lambda, s, dealias, true);
}

ComplexTensor schrodinger_remainder(const SecondForm& lambda, const GaugeState& s, bool dealias) {
  const auto& m = s.metric;
  const ComplexTensor dl = covariant_derivative(lambda.lambda, "ll", m);
  const ComplexTensor box = trace_first_two(covariant_derivative(dl, "lll", m), m);
  ComplexTensor r = box - laplacian(lambda.lambda);
  r -= assemble(lambda, s, false, false).N();
  r *= I;
  if (dealias) r = truncate(r);
  symmetrize(r);
  return r;
}

namespace {

ComplexTensor free_flow(const ComplexTensor& t, double tau) {
  return map_components(t, [tau](const ComplexField& f) { return laplacian_exponential(f, I * tau); });
}

}  // namespace

SecondForm step_schrodinger(const SecondForm& lambda, const GaugeState& mid, double dt, const SchrodingerOptions& opt,
                            const MetricState* end_metric) {
  require(dt > 0.0, ErrorCode::InvalidArgument, "dt must be positive");
  if (opt.free_only) return make_second_form(free_flow(lambda.lambda, dt), end_metric ? *end_metric : mid.metric);
  const ComplexTensor a = free_flow(lambda.lambda, 0.5 * dt);
  const ComplexTensor k1 = schrodinger_remainder({a, {}}, mid, opt.dealias);
  const ComplexTensor half = a + Complex(0.5 * dt) * k1;
  const ComplexTensor k2 = schrodinger_remainder({half, {}}, mid, opt.dealias);
  ComplexTensor out = free_flow(a + Complex(dt) * k2, 0.5 * dt);
  symmetrize(out);
  if (!all_finite(out)) {
    std::ostringstream msg;
    msg << "lambda blew up in the step ending at t = " << mid.t + 0.5 * dt;
    fail(ErrorCode::Blowup, msg.str());
  }
  return make_second_form(std::move(out), end_metric ? *end_metric : mid.metric);
}

CouplingMode parse_coupling_mode(std::string_view s) {
  if (s == "per-step") return CouplingMode::PerStep;
  if (s == "slab") return CouplingMode::SlabPicard;
  fail(ErrorCode::InvalidArgument, "coupling mode must be per-step or slab");
}

std::string to_string(CouplingMode m) { return m == CouplingMode::PerStep ? "per-step" : "slab"; }

double default_dt(const Grid& grid) { return 0.5 * grid.spacing() * grid.spacing(); }

double symmetry_defect(const ComplexTensor& lambda) {
  double worst = 0.0;
  for (int a = 0; a < lambda.dim(); ++a)
    for (int b = a + 1; b < lambda.dim(); ++b) worst = std::max(worst, norm_linf(lambda(a, b) - lambda(b, a)));
  return worst;
}

namespace {

SecondForm average(const SecondForm& x, const SecondForm& y) {
  ComplexTensor l = x.lambda + y.lambda;
  l *= Complex(0.5);
  return {std::move(l), {}};
}

struct Schedule {
  double dt;
  int steps;
};

Schedule schedule(const EvolveOptions& opt, const Grid& grid) {
  require(opt.T >= 0.0, ErrorCode::InvalidArgument, "final time must be non-negative");
  const double target = opt.dt > 0.0 ? opt.dt : default_dt(grid);
  const int steps = opt.T == 0.0 ? 0 : std::max(1, static_cast<int>(std::ceil(opt.T / target - 1e-9)));
  return {steps ? opt.T / steps : target, steps};
}

// One coupled step; rejected gauge steps are retried on halved substeps.
void coupled_step(SecondForm& lambda, GaugeState& gauge, double dt, const EvolveOptions& opt, int depth = 0) {
  try {
    const GaugeState half = step_parabolic(gauge, lambda, lambda, 0.5 * dt, opt.parabolic);
    SecondForm next = step_schrodinger(lambda, half, dt, opt.schrodinger);
    GaugeState end = step_parabolic(gauge, lambda, next, dt, opt.parabolic);
    lambda = make_second_form(std::move(next.lambda), end.metric);
    gauge = std::move(end);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::StepRejected || depth >= 4) throw;
    coupled_step(lambda, gauge, 0.5 * dt, opt, depth + 1);
    coupled_step(lambda, gauge, 0.5 * dt, opt, depth + 1);
  }
}

bool record_step(int k, int steps, int every) { return k == steps || k % every == 0; }

}  // namespace

Trajectory picard_evolve(const SecondForm& lambda0, const GaugeState& gauge0, const EvolveOptions& opt,
                         const TrajectoryObserver& observer) {
  require(opt.record_every >= 1, ErrorCode::InvalidArgument, "record cadence must be positive");
  require(opt.sweeps >= 1, ErrorCode::InvalidArgument, "at least one sweep is needed");
  const auto sched = schedule(opt, *gauge0.grid());
  Trajectory traj;
  traj.dt = sched.dt;
  traj.steps = sched.steps;
  const double dt = sched.dt;

  auto publish = [&](TrajectoryPoint p) {
    if (observer) observer(p);
    traj.points.push_back(std::move(p));
  };

  if (opt.mode == CouplingMode::PerStep) {
    SecondForm lambda = make_second_form(lambda0.lambda, gauge0.metric);
    GaugeState gauge = gauge0;
    traj.lambda_l2.push_back(norm_l2(lambda.lambda));
    publish({gauge.t, lambda, gauge});
    for (int k = 1; k <= sched.steps; ++k) {
      coupled_step(lambda, gauge, dt, opt);
      gauge.t = gauge0.t + k * dt;
      traj.lambda_l2.push_back(norm_l2(lambda.lambda));
      if (record_step(k, sched.steps, opt.record_every)) publish({gauge.t, lambda, gauge});
    }
    return traj;
  }

  // Slab Picard: gauge trajectory of the previous iterate at whole and half steps.
  const int K = sched.steps;
  auto solve_gauge = [&](const std::vector<SecondForm>& lam, std::vector<GaugeState>& whole,
                         std::vector<GaugeState>& halves) {
    whole.assign(1, gauge0);
    halves.clear();
    for (int k = 0; k < K; ++k) {
      halves.push_back(step_parabolic(whole[k], lam[k], average(lam[k], lam[k + 1]), 0.5 * dt, opt.parabolic));
      whole.push_back(step_parabolic(whole[k], lam[k], lam[k + 1], dt, opt.parabolic));
      whole.back().t = gauge0.t + (k + 1) * dt;
    }
  };

  std::vector<SecondForm> lam(K + 1, SecondForm{ComplexTensor(gauge0.grid(), 2), ComplexField(gauge0.grid())});
  std::vector<GaugeState> whole, halves;
  solve_gauge(lam, whole, halves);
  int growth = 0;
  for (int sweep = 1; sweep <= opt.sweeps; ++sweep) {
    std::vector<SecondForm> next(K + 1);
    next[0] = make_second_form(lambda0.lambda, gauge0.metric);
    for (int k = 0; k < K; ++k) next[k + 1] = step_schrodinger(next[k], halves[k], dt, opt.schrodinger, &whole[k + 1].metric);
    double dist = 0.0;
    for (int k = 0; k <= K; ++k) dist = std::max(dist, norm_l2(next[k].lambda - lam[k].lambda));
    traj.sweep_distances.push_back(dist);
    if (sweep > 1 && dist > traj.sweep_distances[sweep - 2]) {
      if (++growth >= 3) fail(ErrorCode::IterationDivergence, "Picard sweep distance grew three times in a row");
    } else {
      growth = 0;
    }
    lam = std::move(next);
    solve_gauge(lam, whole, halves);
    if (opt.tol > 0.0 && dist <= opt.tol) break;
  }
  for (int k = 0; k <= K; ++k) {
    lam[k] = make_second_form(lam[k].lambda, whole[k].metric);
    traj.lambda_l2.push_back(norm_l2(lam[k].lambda));
    if (k == 0 || record_step(k, K, opt.record_every)) publish({whole[k].t, lam[k], whole[k]});
  }
  return traj;
}

}  // namespace smcf
