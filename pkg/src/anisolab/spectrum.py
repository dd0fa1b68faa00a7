"""Discretization and spectra of the second-variation (Jacobi) operator.

P1 finite elements on the triangulated parameter grid.  The operator is in
divergence form, so weak assembly keeps the matrices exactly symmetric and
the generalized eigenproblem real -- the stability-counting logic depends
on that.  Element coefficients (weight tensor and curvature pairing) are
evaluated once per triangle at the barycenter; the basis products are
integrated exactly.

Dirichlet problems on nested sub-rectangles restrict to nested interior
node sets of one fixed grid, which makes the count of negative eigenvalues
provably monotone along an exhaustion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverFailure
from .integrand import IntegrandSpec, anisotropy_constants, gamma_hessians
from .objio import grid_faces
from .surface import CurvatureField, SurfacePatch, curvature_field

ZERO_EIG_REL = 1e-8
DEFAULT_EIG_COUNT = 12
DENSE_CUTOFF = 400

# int_T lambda_i lambda_j lambda_k / area: 1/10 on the diagonal triple,
# 1/30 with one repeated index, 1/60 all distinct
_P1_CUBIC = np.full((3, 3, 3), 1.0 / 60.0)
for _i in range(3):
    _P1_CUBIC[_i, _i, :] = 1.0 / 30.0
    _P1_CUBIC[_i, :, _i] = 1.0 / 30.0
    _P1_CUBIC[:, _i, _i] = 1.0 / 30.0
    _P1_CUBIC[_i, _i, _i] = 1.0 / 10.0


@dataclass
class JacobiDiscretization:
    patch: SurfacePatch
    spec: IntegrandSpec
    stiffness: sp.csr_matrix   # int <A_grad u, grad v>
    potential: sp.csr_matrix   # int pairing * u v
    mass: sp.csr_matrix        # int u v
    dirichlet_mask: np.ndarray  # True on patch-boundary nodes
    lumped_mass: np.ndarray
    field: CurvatureField

    @property
    def node_count(self) -> int:
        return self.stiffness.shape[0]


@dataclass
class SpectralReport:
    domains: list[tuple[float, float, float, float]]
    eigenvalues: list[np.ndarray]
    morse_index: list[int]
    stabilized_index: int | None
    jacobi_residuals: dict[str, float]

    @property
    def stabilized(self) -> bool:
        return self.stabilized_index is not None


def assemble(
    patch: SurfacePatch,
    spec: IntegrandSpec,
    field: CurvatureField | None = None,
    potential_weight: np.ndarray | None = None,
    isotropic_diffusion: bool = False,
) -> JacobiDiscretization:
    """Assemble stiffness, potential and mass matrices on the patch grid.

    The elements live in the flat parameter plane; the surface enters through
    the first fundamental form, pulled back per element at the barycenter.
    That keeps the scheme pointwise consistent on the structured grid, which
    an embedded polyhedral assembly would not be.

    ``potential_weight`` overrides the curvature pairing (used by the
    comparison operator); ``isotropic_diffusion`` replaces the weight
    tensor by the identity (plain Laplace-Beltrami stiffness).
    """
    if field is None:
        field = curvature_field(patch, spec)
    nu_, nv_ = patch.shape
    faces = grid_faces(nu_, nv_, patch.periodic_u)
    iu, jv = faces // nv_, faces % nv_
    diu = iu - iu[:, :1]
    if patch.periodic_u:  # faces span one cell, so seam offsets are +-(nu-1)
        diu = np.where(diu > 1, diu - nu_, diu)
        diu = np.where(diu < -1, diu + nu_, diu)
    pts = np.stack([diu * patch.hu, (jv - jv[:, :1]) * patch.hv], axis=-1)
    p0, p1, p2 = pts[:, 0], pts[:, 1], pts[:, 2]
    d1, d2 = p1 - p0, p2 - p0
    signed2 = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]  # twice the signed area
    area = 0.5 * np.abs(signed2)
    edges = np.stack([p2 - p1, p0 - p2, p1 - p0], axis=1)
    perp = np.stack([-edges[..., 1], edges[..., 0]], axis=-1)
    grads = perp / signed2[:, None, None]  # (t, 3, 2) P1 gradients

    # barycenter jets of the chart and the pulled-back coefficient tensors
    xu = patch.du.reshape(-1, 3)[faces].mean(axis=1)
    xv = patch.dv.reshape(-1, 3)[faces].mean(axis=1)
    raw = np.cross(xu, xv)
    jac = np.linalg.norm(raw, axis=1)
    nbar = patch.orientation * raw / jac[:, None]
    E = np.einsum("ti,ti->t", xu, xu)
    F = np.einsum("ti,ti->t", xu, xv)
    G = np.einsum("ti,ti->t", xv, xv)
    gmat = np.stack(
        [np.stack([E, F], axis=-1), np.stack([F, G], axis=-1)], axis=-2
    )
    if isotropic_diffusion:
        amat = gmat
    else:
        hmat = gamma_hessians(spec, nbar)
        auu = np.einsum("ti,tij,tj->t", xu, hmat, xu)
        auv = np.einsum("ti,tij,tj->t", xu, hmat, xv)
        avv = np.einsum("ti,tij,tj->t", xv, hmat, xv)
        amat = np.stack(
            [np.stack([auu, auv], axis=-1), np.stack([auv, avv], axis=-1)], axis=-2
        )
    det_g = E * G - F * F
    ginv = np.empty_like(gmat)
    ginv[:, 0, 0] = G / det_g
    ginv[:, 0, 1] = -F / det_g
    ginv[:, 1, 0] = -F / det_g
    ginv[:, 1, 1] = E / det_g
    coeff = np.einsum("tab,tbc,tcd->tad", ginv, amat, ginv) * jac[:, None, None]
    local_k = area[:, None, None] * np.einsum("tai,tij,tbj->tab", grads, coeff, grads)

    if potential_weight is None:
        qnode = field.aniso_pairing.reshape(-1)
    else:
        qnode = np.asarray(potential_weight, dtype=np.float64).reshape(-1)
    # exact integrals of P1-interpolated weights against basis products;
    # the curvature pairing varies too fast near curvature peaks for a
    # frozen one-point rule to keep the pointwise residual at quadratic order
    jnode = field.jacobian.reshape(-1)
    local_p = np.einsum("tk,ijk->tij", (qnode * jnode)[faces], _P1_CUBIC) * area[:, None, None]
    local_m = np.einsum("tk,ijk->tij", jnode[faces], _P1_CUBIC) * area[:, None, None]

    n = nu_ * nv_
    rows = np.repeat(faces, 3, axis=1).reshape(-1)
    cols = np.tile(faces, (1, 3)).reshape(-1)

    def build(local):
        m = sp.csr_matrix((local.reshape(-1), (rows, cols)), shape=(n, n))
        return 0.5 * (m + m.T)  # scrub floating-point asymmetry from summation order

    stiffness = build(local_k)
    potential = build(local_p)
    mass = build(local_m)
    return JacobiDiscretization(
        patch=patch,
        spec=spec,
        stiffness=stiffness,
        potential=potential,
        mass=mass,
        dirichlet_mask=patch.boundary_mask().reshape(-1),
        lumped_mass=np.asarray(mass.sum(axis=1)).reshape(-1),
        field=field,
    )


def interior_indices(
    disc: JacobiDiscretization,
    domain: tuple[float, float, float, float] | None = None,
) -> np.ndarray:
    """Free node indices for the Dirichlet problem on a parameter sub-rectangle.

    Nodes on or outside the sub-rectangle boundary are constrained, so nested
    rectangles give nested free sets on the shared grid.
    """
    patch = disc.patch
    keep = ~disc.dirichlet_mask
    if domain is not None:
        u0, u1, v0, v1 = domain
        U, V = np.meshgrid(patch.u_samples(), patch.v_samples(), indexing="ij")
        tol_u, tol_v = 1e-12 * max(1.0, abs(u1 - u0)), 1e-12 * max(1.0, abs(v1 - v0))
        inside = (V > v0 + tol_v) & (V < v1 - tol_v)
        if not (patch.periodic_u and u0 <= patch.domain[0] and u1 >= patch.domain[1]):
            inside &= (U > u0 + tol_u) & (U < u1 - tol_u)
        keep = keep & inside.reshape(-1)
    return np.flatnonzero(keep)


def dirichlet_eigs(
    disc: JacobiDiscretization,
    k: int,
    domain: tuple[float, float, float, float] | None = None,
    auto_extend: bool = True,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lowest k eigenvalues of (stiffness - potential) x = lambda mass x.

    Sign convention: lambda equals the quadratic form per unit L2 norm, so
    negative eigenvalues are exactly the unstable directions.  Returns
    (eigenvalues, eigenvectors restricted to free nodes, free node indices).
    Auto-extends k while the top of the computed window is still negative so
    an instability count is never truncated.
    """
    if k < 1:
        raise ValueError("need k >= 1")
    idx = interior_indices(disc, domain)
    n = len(idx)
    if n == 0:
        raise SolverFailure("Dirichlet domain contains no free nodes")
    if k > n:
        k = n
    op = (disc.stiffness - disc.potential).tocsr()[idx][:, idx].tocsc()
    mass = disc.mass.tocsr()[idx][:, idx].tocsc()
    qmax = float(np.max(disc.potential.diagonal()[idx] / disc.mass.diagonal()[idx]))
    sigma = -max(qmax, 0.0) - 1.0

    while True:
        try:
            if k >= n - 1 or n <= DENSE_CUTOFF:
                vals, vecs = sla.eigh(op.toarray(), mass.toarray())
                vals, vecs = vals[: min(k, n)], vecs[:, : min(k, n)]
            else:
                rng = np.random.default_rng(0)
                vals, vecs = spla.eigsh(
                    op,
                    k=k,
                    M=mass,
                    sigma=sigma,
                    which="LM",
                    v0=rng.standard_normal(n),
                    tol=0,
                )
                order = np.argsort(vals)
                vals, vecs = vals[order], vecs[:, order]
        except Exception as exc:  # ARPACK and LAPACK failures surface loudly
            raise SolverFailure(f"eigensolve failed: {exc}") from exc
        scale = float(np.max(np.abs(vals))) if len(vals) else 1.0
        if not auto_extend or len(vals) >= n or vals[-1] >= -ZERO_EIG_REL * scale:
            break
        k = min(2 * k, n)

    # deterministic eigenvector signs: first significant entry positive
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-8 * np.max(np.abs(col)))
        if len(nz) and col[nz[0]] < 0:
            vecs[:, j] = -col
    return vals, vecs, idx


def negative_count(vals: np.ndarray) -> int:
    scale = float(np.max(np.abs(vals))) if len(vals) else 1.0
    return int(np.sum(vals < -ZERO_EIG_REL * scale))


def morse_index_exhaustion(
    patch: SurfacePatch,
    spec: IntegrandSpec,
    domains: list[tuple[float, float, float, float]],
    k: int = DEFAULT_EIG_COUNT,
    field: CurvatureField | None = None,
    axes: tuple = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)),
) -> SpectralReport:
    """Negative-eigenvalue counts over nested Dirichlet domains.

    The stabilized index is reported only when the last two domains agree;
    nothing is extrapolated beyond the computed exhaustion.
    """
    if len(domains) < 3:
        raise ValueError("need at least 3 nested domains")
    disc = assemble(patch, spec, field=field)
    eigenvalues: list[np.ndarray] = []
    counts: list[int] = []
    for dom in domains:
        vals, _, _ = dirichlet_eigs(disc, k, domain=tuple(dom))
        eigenvalues.append(vals)
        counts.append(negative_count(vals))
    if any(b < a for a, b in zip(counts, counts[1:])):
        raise SolverFailure(
            f"negative counts {counts} not monotone along nested domains"
        )
    stabilized = counts[-1] if counts[-1] == counts[-2] else None
    residuals = {
        _axis_name(a): jacobi_field_residual(patch, spec, a, disc=disc)["relative_residual"]
        for a in axes
    }
    return SpectralReport(
        domains=[tuple(d) for d in domains],
        eigenvalues=eigenvalues,
        morse_index=counts,
        stabilized_index=stabilized,
        jacobi_residuals=residuals,
    )


def _axis_name(axis) -> str:
    return "axis_" + ",".join(f"{c:g}" for c in axis)


def comparison_operator_counts(
    patch: SurfacePatch,
    spec: IntegrandSpec,
    domains: list[tuple[float, float, float, float]],
    k: int = DEFAULT_EIG_COUNT,
    field: CurvatureField | None = None,
) -> list[dict[str, int]]:
    """Per-domain negative counts of the Jacobi operator and the scalar
    comparison operator (identity diffusion, curvature potential scaled by
    2 over the squared smallest weight eigenvalue).

    The comparison count dominates: every unstable direction of the full
    operator is one of the comparison operator.
    """
    if field is None:
        field = curvature_field(patch, spec)
    consts = anisotropy_constants(spec, extra_normals=field.normal.reshape(-1, 3))
    disc = assemble(patch, spec, field=field)
    w = (2.0 / consts.lambda_gamma**2) * (-field.k_gamma)
    disc_cmp = assemble(
        patch, spec, field=field, potential_weight=w, isotropic_diffusion=True
    )
    out = []
    for dom in domains:
        vals, _, _ = dirichlet_eigs(disc, k, domain=tuple(dom))
        vals_cmp, _, _ = dirichlet_eigs(disc_cmp, k, domain=tuple(dom))
        out.append(
            {"neg_L": negative_count(vals), "neg_Lgamma": negative_count(vals_cmp)}
        )
    return out


def jacobi_field_residual(
    patch: SurfacePatch,
    spec: IntegrandSpec,
    axis,
    disc: JacobiDiscretization | None = None,
) -> dict[str, float]:
    """Weak residual of the translation Jacobi field for a fixed direction.

    The normal component of a translation solves the second-variation
    equation exactly, so the mass-normalized residual on interior nodes
    measures pure discretization error and must shrink at second order.
    """
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    if disc is None:
        disc = assemble(patch, spec)
    phi = disc.field.normal.reshape(-1, 3) @ axis
    r = (disc.stiffness - disc.potential) @ phi
    idx = np.flatnonzero(~disc.dirichlet_mask)
    rho = r[idx] / disc.lumped_mass[idx]
    m = disc.lumped_mass[idx]
    rho_norm = float(np.sqrt(np.sum(m * rho**2)))
    phi_norm = float(np.sqrt(np.sum(m * phi[idx] ** 2)))
    if phi_norm == 0.0:  # axis tangent to a flat patch: the field vanishes
        relative = 0.0 if rho_norm == 0.0 else float("inf")
    else:
        relative = rho_norm / phi_norm
    return {
        "linf_residual": float(np.max(np.abs(rho))),
        "relative_residual": relative,
    }
