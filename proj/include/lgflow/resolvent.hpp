// The resolvent u = argmin 1/2 |u - w|^2 + lambda F(A D u) with the
// subdifferential certificate (z, r).
//
// The inner solver is an accelerated primal-dual iteration on the saddle
// form; the quadratic term is strongly convex, so the classic step-size
// acceleration applies. The dual iterate z is exactly the certificate object:
// at convergence r = (w - u)/lambda = -div z, the normal trace vanishes on
// Neumann faces by construction, Fenchel-Young holds cellwise, and in
// Dirichlet mode the trace satisfies the boundary subgradient inclusion.
#pragma once

#include <cmath>
#include <limits>
#include <optional>

#include "lgflow/energy.hpp"

namespace lgflow {

template <typename Scalar>
struct CertificateReport {
  Scalar euler_lagrange_residual = 0;      // max-norm of r + div z
  Scalar normal_trace_residual = 0;        // max |z.nu| on Neumann faces
  Scalar fenchel_gap = 0;                  // cellwise Fenchel-Young defect, summed
  Scalar boundary_subgradient_residual = 0;// Dirichlet: max face inclusion defect
  bool admissible = true;
  int offending_cell = -1;
};

template <typename Scalar>
struct ResolventResult {
  GridFunction<Scalar> u;
  DualField<Scalar> z;
  GridFunction<Scalar> residual; // r = (w - u) / lambda
  CertificateReport<Scalar> certificate;
  int iterations = 0;
  bool converged = false;
};

// Recompute every certificate residual from scratch (fresh conjugates,
// adjoints and boundary subgradients), independently of any solver state.
template <typename Scalar>
CertificateReport<Scalar> verify_certificate(const Integrand<Scalar>& f,
                                             const ResolventResult<Scalar>& res,
                                             BoundaryCondition bc,
                                             const DirichletData<Scalar>* dirichlet = nullptr) {
  const OperatorSpec<Scalar>& op = f.projector();
  const Grid<Scalar>& g = res.u.grid;
  CertificateReport<Scalar> cert;

  GridFunction<Scalar> divz = adjoint_div(op, res.z, bc);
  Scalar el = 0;
  for (int k = 0; k < g.num_nodes(); ++k)
    el = std::max(el, (res.residual.values.col(k) + divz.values.col(k)).template lpNorm<Eigen::Infinity>());
  cert.euler_lagrange_residual = el;

  if (bc == BoundaryCondition::Neumann) {
    Scalar nt = 0;
    if (res.z.has_trace())
      for (int fi = 0; fi < g.num_faces(); ++fi)
        nt = std::max(nt, res.z.trace.col(fi).norm());
    cert.normal_trace_residual = nt;
  }

  DualField<Scalar> au = apply(op, res.u);
  const Scalar vol = g.cell_volume();
  Scalar gap = 0;
  for (int c = 0; c < g.num_cells(); ++c) {
    const PointX<Scalar> x = g.cell_position(c);
    MatrixX<Scalar> zc = op.apply(res.z.cell_matrix(c));
    ConjugateValue<Scalar> cv = f.profile_conjugate(x, zc.norm());
    if (!cv.finite) {
      cert.admissible = false;
      cert.offending_cell = c;
      cert.fenchel_gap = std::numeric_limits<Scalar>::infinity();
      return cert;
    }
    MatrixX<Scalar> auc = au.cell_matrix(c);
    gap += f.profile(x, auc.norm()) + cv.value - (zc.array() * auc.array()).sum();
  }
  cert.fenchel_gap = gap * vol;

  if (bc == BoundaryCondition::TraceCarrying && dirichlet) {
    MatrixX<Scalar> v = boundary_trace(res.u) - dirichlet->u1;
    Scalar bres = 0;
    if (res.z.has_trace()) {
      for (int fi = 0; fi < g.num_faces(); ++fi) {
        const Face<Scalar>& face = g.faces()[fi];
        const Scalar h = boundary_integrand_h(f, face.position, VectorX<Scalar>(v.col(fi)),
                                              face.normal);
        if (std::isinf(h)) continue;
        bres = std::max(bres, std::abs(h + res.z.trace.col(fi).dot(v.col(fi))));
      }
    } else {
      // pinned-trace mode (superlinear integrands): report the trace defect
      for (int fi = 0; fi < g.num_faces(); ++fi)
        bres = std::max(bres, v.col(fi).norm());
    }
    cert.boundary_subgradient_residual = bres;
  }
  return cert;
}

template <typename Scalar>
struct ResolventWarmStart {
  GridFunction<Scalar> u;
  DualField<Scalar> z;
};

template <typename Scalar>
ResolventResult<Scalar> resolve(const Integrand<Scalar>& f, const GridFunction<Scalar>& w,
                                Scalar lambda, BoundaryCondition bc,
                                const DirichletData<Scalar>* dirichlet = nullptr,
                                const SolverOptions<Scalar>& opts = SolverOptions<Scalar>(),
                                const ResolventWarmStart<Scalar>* warm = nullptr) {
  if (!(lambda > Scalar(0))) throw std::invalid_argument("resolve: lambda must be positive");
  const OperatorSpec<Scalar>& op = f.projector();
  const Grid<Scalar>& g = w.grid;
  detail::check_op_grid(op, g, w.components());

  const bool dirichlet_mode = (bc == BoundaryCondition::TraceCarrying);
  if (dirichlet_mode) {
    if (!dirichlet) throw std::invalid_argument("resolve: Dirichlet mode needs data");
    if (!op.is_c_elliptic())
      throw std::invalid_argument("resolve: operator kind '" + to_string(op.kind) +
                                  "' does not admit Dirichlet data");
  }
  // superlinear integrands have a hard trace; the boundary nodes are pinned
  const bool pinned = dirichlet_mode && !f.has_linear_growth();

  GridFunction<Scalar> u = warm ? warm->u : w;
  DualField<Scalar> z = warm ? warm->z : DualField<Scalar>(g, op.m, dirichlet_mode && !pinned);
  if (dirichlet_mode && !pinned && !z.has_trace())
    z.trace = MatrixX<Scalar>::Zero(op.m, g.num_faces());
  GridFunction<Scalar> ubar = u;

  const Scalar L = std::max(operator_norm_estimate(op, g, op.m), Scalar(1e-8));
  // boundary sampling block norm (exact, from the quadrature weights)
  Scalar Ls2 = 0;
  if (dirichlet_mode && !pinned) {
    const Scalar vol = g.cell_volume();
    std::vector<Scalar> acc(g.num_nodes(), Scalar(0));
    for (const Face<Scalar>& face : g.faces()) acc[face.node] += face.weight;
    for (int k = 0; k < g.num_nodes(); ++k)
      if (acc[k] > 0) Ls2 = std::max(Ls2, acc[k] / (g.node_weight(k) * vol));
  }

  Scalar tau = Scalar(1) / L;
  Scalar sigma_z = Scalar(0.45) / (tau * L * L);
  Scalar sigma_t = Ls2 > 0 ? Scalar(0.45) / (tau * Ls2) : Scalar(0);
  const Scalar gamma = Scalar(1) / lambda; // strong convexity of the quadratic

  auto pin_boundary = [&](GridFunction<Scalar>& v) {
    for (const Face<Scalar>& face : g.faces()) v.values.col(face.node) = dirichlet->u1.col(
        static_cast<int>(&face - g.faces().data()));
  };
  if (pinned) { pin_boundary(u); ubar = u; }

  int it = 0;
  bool converged = false;
  GridFunction<Scalar> u_prev = u;
  for (; it < opts.max_iters; ++it) {
    // dual ascent on z at the extrapolated primal point
    DualField<Scalar> aubar = apply(op, ubar);
    z.values += sigma_z * aubar.values;
    detail::prox_conjugate_cellwise(f, sigma_z, z);
    if (dirichlet_mode && !pinned) {
      MatrixX<Scalar> v = boundary_trace(ubar) - dirichlet->u1;
      for (int fi = 0; fi < g.num_faces(); ++fi) {
        const Face<Scalar>& face = g.faces()[fi];
        VectorX<Scalar> t = z.trace.col(fi) - sigma_t * v.col(fi);
        z.trace.col(fi) =
            detail::project_trace_set(op, face.normal, f.conjugate_domain_radius(face.position), t);
      }
    }
    // primal step: proximal of the quadratic after the divergence pull
    u_prev = u;
    GridFunction<Scalar> divz =
        adjoint_div(op, z, (dirichlet_mode && !pinned) ? BoundaryCondition::TraceCarrying
                                                       : BoundaryCondition::Neumann);
    u.values = (u.values + (tau / lambda) * w.values + tau * divz.values) /
               (Scalar(1) + tau / lambda);
    if (pinned) pin_boundary(u);
    // acceleration
    const Scalar theta = Scalar(1) / std::sqrt(Scalar(1) + Scalar(2) * gamma * tau);
    tau *= theta;
    sigma_z /= theta;
    if (sigma_t > 0) sigma_t /= theta;
    ubar.values = u.values + theta * (u.values - u_prev.values);

    if ((it + 1) % opts.check_interval == 0) {
      GridFunction<Scalar> r = w;
      r.values = (w.values - u.values) / lambda;
      Scalar el = 0, scale = Scalar(1);
      GridFunction<Scalar> divz2 =
          adjoint_div(op, z, (dirichlet_mode && !pinned) ? BoundaryCondition::TraceCarrying
                                                         : BoundaryCondition::Neumann);
      for (int k = 0; k < g.num_nodes(); ++k) {
        el = std::max(el, (r.values.col(k) + divz2.values.col(k))
                              .template lpNorm<Eigen::Infinity>());
        scale = std::max(scale, r.values.col(k).template lpNorm<Eigen::Infinity>());
      }
      const Scalar du = (u.values - u_prev.values).norm() / (Scalar(1) + u.values.norm());
      if (el <= opts.residual_tol * scale * Scalar(100) && du <= opts.residual_tol) {
        converged = true;
        ++it;
        break;
      }
    }
  }

  ResolventResult<Scalar> res;
  res.u = u;
  res.z = z;
  res.residual = w;
  res.residual.values = (w.values - u.values) / lambda;
  res.iterations = it;
  res.converged = converged;
  res.certificate = verify_certificate(f, res, bc, dirichlet);
  return res;
}

} // namespace lgflow
