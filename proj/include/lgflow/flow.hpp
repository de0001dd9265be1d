// Implicit-Euler semigroup evolution by resolvent chaining, the q-power
// approximating flows and their Moreau-regularized variant.
#pragma once

#include <vector>

#include "lgflow/resolvent.hpp"

namespace lgflow {

template <typename Scalar>
struct FlowTrace {
  std::vector<Scalar> times;                     // including t = 0
  std::vector<GridFunction<Scalar>> states;      // including the initial state
  std::vector<Scalar> energies;                  // primal energy per state
  std::vector<Scalar> masses;                    // integral per state
  std::vector<CertificateReport<Scalar>> certificates; // per step (times.size()-1)
  std::vector<int> iterations;                   // per step
  std::vector<Scalar> young_slack;               // q-flows only, per state
  std::vector<DualField<Scalar>> smooth_certificates;  // Moreau flows only, per step
  bool completed = true;       // false when a resolvent step failed to converge
  bool energy_monotone = true; // postcondition check, up to solver tolerance
  Scalar dt = 0;
};

template <typename Scalar>
FlowTrace<Scalar> evolve(const Integrand<Scalar>& f, const GridFunction<Scalar>& u0, Scalar dt,
                         int steps, BoundaryCondition bc,
                         const DirichletData<Scalar>* dirichlet = nullptr,
                         const SolverOptions<Scalar>& opts = SolverOptions<Scalar>()) {
  if (!(dt > Scalar(0))) throw std::invalid_argument("evolve: dt must be positive");
  if (steps < 0) throw std::invalid_argument("evolve: steps must be nonnegative");
  FlowTrace<Scalar> trace;
  trace.dt = dt;
  trace.times.push_back(Scalar(0));
  trace.states.push_back(u0);
  trace.energies.push_back(primal_energy(f, u0));
  trace.masses.push_back(mass(u0));

  GridFunction<Scalar> u = u0;
  ResolventWarmStart<Scalar> warm;
  bool have_warm = false;
  const bool record_smooth = f.kind() == IntegrandKind::QPower && f.base() &&
                             f.base()->kind() == IntegrandKind::MoreauOf;
  for (int k = 0; k < steps; ++k) {
    ResolventResult<Scalar> step =
        resolve(f, u, dt, bc, dirichlet, opts, have_warm ? &warm : nullptr);
    trace.times.push_back(trace.times.back() + dt);
    trace.states.push_back(step.u);
    const Scalar e = primal_energy(f, step.u);
    if (e > trace.energies.back() + Scalar(1e-8) * (Scalar(1) + std::abs(e)))
      trace.energy_monotone = false;
    trace.energies.push_back(e);
    trace.masses.push_back(mass(step.u));
    trace.certificates.push_back(step.certificate);
    trace.iterations.push_back(step.iterations);
    if (record_smooth) {
      // Euler-Lagrange field D_y f_{lambda}^q(x, A D u) of the smooth energy
      DualField<Scalar> au = apply(f.projector(), step.u);
      DualField<Scalar> zq(step.u.grid, f.projector().m);
      for (int c = 0; c < step.u.grid.num_cells(); ++c)
        zq.set_cell_matrix(c, subgradient(f, step.u.grid.cell_position(c), au.cell_matrix(c)));
      trace.smooth_certificates.push_back(std::move(zq));
    }
    u = step.u;
    warm.u = step.u;
    warm.z = step.z;
    have_warm = true;
    if (!step.converged) { trace.completed = false; break; }
  }
  return trace;
}

// flow for f^q, 1 < q <= 2; in Dirichlet mode the boundary data must come
// with an extension (the trace is hard for the superlinear energy)
template <typename Scalar>
FlowTrace<Scalar> qflow(const Integrand<Scalar>& f, Scalar q, const GridFunction<Scalar>& u0,
                        Scalar dt, int steps, BoundaryCondition bc,
                        const DirichletData<Scalar>* dirichlet = nullptr,
                        const SolverOptions<Scalar>& opts = SolverOptions<Scalar>()) {
  Integrand<Scalar> fq = qpower(f, q);
  if (bc == BoundaryCondition::TraceCarrying) {
    if (!dirichlet || !dirichlet->extension.has_value())
      throw std::invalid_argument("qflow: Dirichlet mode requires extension data");
  }
  FlowTrace<Scalar> trace = evolve(fq, u0, dt, steps, bc, dirichlet, opts);
  // Young-inequality slack int f^q / q - (int f - (1 - 1/q) |Omega|) >= 0
  const Scalar omega_vol = u0.grid.domain_volume();
  for (const GridFunction<Scalar>& state : trace.states) {
    const Scalar eq = primal_energy(fq, state);
    const Scalar e1 = primal_energy(f, state);
    trace.young_slack.push_back(eq / q - (e1 - (Scalar(1) - Scalar(1) / q) * omega_vol));
  }
  return trace;
}

// flow for the regularized energy int f_lambda(x, A D u)^q; lambda = q - 1
// reproduces the coupled regularization path
template <typename Scalar>
FlowTrace<Scalar> moreau_flow(const Integrand<Scalar>& f, Scalar lambda, Scalar q,
                              const GridFunction<Scalar>& u0, Scalar dt, int steps,
                              BoundaryCondition bc,
                              const DirichletData<Scalar>* dirichlet = nullptr,
                              const SolverOptions<Scalar>& opts = SolverOptions<Scalar>()) {
  Integrand<Scalar> freg = Integrand<Scalar>::moreau_of(f, lambda);
  return qflow(freg, q, u0, dt, steps, bc, dirichlet, opts);
}

template <typename Scalar>
FlowTrace<Scalar> moreau_flow_coupled(const Integrand<Scalar>& f, Scalar q,
                                      const GridFunction<Scalar>& u0, Scalar dt, int steps,
                                      BoundaryCondition bc,
                                      const DirichletData<Scalar>* dirichlet = nullptr,
                                      const SolverOptions<Scalar>& opts = SolverOptions<Scalar>()) {
  return moreau_flow(f, q - Scalar(1), q, u0, dt, steps, bc, dirichlet, opts);
}

// L2 distance of the states of two traces at a common step index
template <typename Scalar>
Scalar state_distance(const FlowTrace<Scalar>& a, const FlowTrace<Scalar>& b, int step) {
  GridFunction<Scalar> d = a.states.at(step);
  d.values -= b.states.at(step).values;
  return l2_norm(d);
}

} // namespace lgflow
