"""Piecewise-linear finite elements: assembly, eigensolves, constrained
source solves, and variational boundary-flux recovery.

Sparse matrices are held in a symmetric lower-triangle wrapper so assembled
operators are symmetric by storage; factorizations go through SuperLU.  The
generalized eigensolver is blocked inverse iteration with M-orthonormalized
Rayleigh-Ritz extraction, which tolerates the near-degenerate pairs that
disk-like domains produce.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .errors import ConvergenceFailure, SolveSingular
from .mesh import CORE, LAYER


class SymmetricSparse:
    """Symmetric sparse operator stored as its lower triangle."""

    def __init__(self, lower, shape):
        self._lower = lower.tocsr()
        self.shape = shape
        self._full = None
        self._factor = None

    @classmethod
    def from_full(cls, a):
        a = a.tocsr()
        return cls(sparse.tril(a), a.shape)

    @property
    def nnz(self):
        return self._lower.nnz

    def tocsr(self):
        if self._full is None:
            low = self._lower
            diag = sparse.diags(low.diagonal())
            self._full = (low + low.T - diag).tocsr()
        return self._full

    def toarray(self):
        return self.tocsr().toarray()

    def matvec(self, x):
        return self.tocsr() @ x

    __matmul__ = matvec

    def factor(self):
        """Cached SuperLU factorization of the full operator."""
        if self._factor is None:
            self._factor = splu(self.tocsr().tocsc())
        return self._factor

    def symmetry_defect(self):
        a = self.tocsr()
        return abs(a - a.T).max() if a.nnz else 0.0


def _as_csr(a):
    return a.tocsr() if isinstance(a, SymmetricSparse) else a.tocsr()


@dataclass
class FemField:
    """Vertex-valued P1 field; evaluation is linear on each triangle."""

    mesh: object
    values: np.ndarray
    constrained: np.ndarray = field(default=None)

    def copy(self):
        return FemField(self.mesh, self.values.copy(), self.constrained)

    def interpolate(self, points):
        """Evaluate at arbitrary points by barycentric location (slow path,
        meant for demos and spot checks)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        p = self.mesh.vertices
        t = self.mesh.triangles
        a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
        det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1])
        out = np.full(len(pts), np.nan)
        for i, q in enumerate(pts):
            w1 = ((b[:, 0] - q[0]) * (c[:, 1] - q[1]) - (c[:, 0] - q[0]) * (b[:, 1] - q[1])) / det
            w2 = ((c[:, 0] - q[0]) * (a[:, 1] - q[1]) - (a[:, 0] - q[0]) * (c[:, 1] - q[1])) / det
            w3 = 1.0 - w1 - w2
            ok = (w1 >= -1e-12) & (w2 >= -1e-12) & (w3 >= -1e-12)
            if np.any(ok):
                k = np.argmax(ok)
                out[i] = (
                    w1[k] * self.values[t[k, 0]]
                    + w2[k] * self.values[t[k, 1]]
                    + w3[k] * self.values[t[k, 2]]
                )
        return out if len(out) > 1 else float(out[0])


_REGIONS = {None: None, "all": None, "core": CORE, "layer": LAYER}


def assemble(mesh, kind, region=None, coefficient=None):
    """Assemble the P1 stiffness or mass operator over a region of the mesh.

    coefficient may be None (unity), a number, or a callable of (x, y)
    arrays.  The mass matrix uses the 3-point edge-midpoint rule, exact for
    quadratic integrands.
    """
    reg = _REGIONS[region] if not isinstance(region, int) else region
    if reg is None:
        tris = mesh.triangles
    else:
        tris = mesh.triangles[mesh.region == reg]
    p = mesh.vertices
    nv = mesh.n_vertices
    x = p[tris, 0]
    y = p[tris, 1]
    det = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    area = 0.5 * det

    if kind == "stiffness":
        b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
        c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
        local = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) / (
            4.0 * area[:, None, None]
        )
        if coefficient is not None and not callable(coefficient):
            local = local * float(coefficient)
        elif callable(coefficient):
            mid = p[tris].mean(axis=1)
            local = local * np.asarray(coefficient(mid[:, 0], mid[:, 1]))[:, None, None]
    elif kind == "mass":
        mids = [0.5 * (p[tris[:, i]] + p[tris[:, j]]) for i, j in ((0, 1), (1, 2), (2, 0))]
        if coefficient is None:
            cvals = [np.ones(len(tris))] * 3
        elif callable(coefficient):
            cvals = [np.asarray(coefficient(m[:, 0], m[:, 1]), dtype=float) for m in mids]
        else:
            cvals = [np.full(len(tris), float(coefficient))] * 3
        # hat values at the edge midpoints: 1/2 on the two adjacent vertices
        phis = [np.array([0.5, 0.5, 0.0]), np.array([0.0, 0.5, 0.5]), np.array([0.5, 0.0, 0.5])]
        local = np.zeros((len(tris), 3, 3))
        for phi, cv in zip(phis, cvals):
            local += (area * cv / 3.0)[:, None, None] * np.outer(phi, phi)[None, :, :]
    else:
        raise ValueError(f"unknown operator kind {kind!r}")

    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    keep = rows >= cols  # build only the lower triangle
    low = sparse.csr_matrix(
        (local.ravel()[keep], (rows[keep], cols[keep])), shape=(nv, nv)
    )
    return SymmetricSparse(low, (nv, nv))


def mass_norm(M, u):
    return float(np.sqrt(u @ (_as_csr(M) @ u)))


def h1_norm(K, M, u):
    return float(np.sqrt(u @ (_as_csr(K) @ u) + u @ (_as_csr(M) @ u)))


def dirichlet_eigs(K, M, boundary, count, mesh=None, tol=1e-10, maxit=500, seed=0):
    """Smallest `count` eigenpairs of K u = lambda M u with zero essential
    data on `boundary`.

    Blocked inverse iteration (factor K once) with M-orthonormalization and
    Rayleigh-Ritz extraction; stops when every requested pair satisfies
    ||K u - lambda M u|| <= tol * ||K u||.  Eigenvectors are returned on the
    full vertex set (zeros on the boundary), M-orthonormal; the first one is
    sign-normalized to be positive at the free vertex nearest the domain
    centroid when a mesh is supplied.
    """
    Kc = _as_csr(K)
    Mc = _as_csr(M)
    n = Kc.shape[0]
    boundary = np.asarray(boundary, dtype=np.int64)
    free = np.setdiff1d(np.arange(n), boundary)
    Kf = Kc[np.ix_(free, free)].tocsc()
    Mf = Mc[np.ix_(free, free)].tocsc()
    try:
        lu = splu(Kf)
    except RuntimeError as exc:
        raise SolveSingular(f"stiffness factorization failed: {exc}") from exc

    rng = np.random.default_rng(seed)
    nb = min(len(free), count + 3)
    X = rng.standard_normal((len(free), nb))
    lams = None
    for _ in range(maxit):
        X = lu.solve(Mf @ X)
        G = X.T @ (Mf @ X)
        try:
            L = np.linalg.cholesky(G)
        except np.linalg.LinAlgError as exc:
            raise SolveSingular("iteration block became rank deficient") from exc
        X = np.linalg.solve(L, X.T).T
        H = X.T @ (Kf @ X)
        lams, Q = np.linalg.eigh(0.5 * (H + H.T))
        X = X @ Q
        resid_ok = True
        for i in range(count):
            r = Kf @ X[:, i] - lams[i] * (Mf @ X[:, i])
            if np.linalg.norm(r) > tol * np.linalg.norm(Kf @ X[:, i]):
                resid_ok = False
                break
        if resid_ok:
            break
    else:
        raise ConvergenceFailure(f"eigensolver: no convergence in {maxit} iterations")

    vecs = np.zeros((n, count))
    vecs[free] = X[:, :count]
    # deterministic sign for the ground mode
    if mesh is not None:
        cen = mesh.centroid()
        d2 = ((mesh.vertices[free] - cen) ** 2).sum(axis=1)
        anchor = free[np.argmin(d2)]
    else:
        anchor = free[np.argmax(np.abs(vecs[free, 0]))]
    if vecs[anchor, 0] < 0:
        vecs[:, 0] = -vecs[:, 0]
    return lams[:count].copy(), vecs


def solve_constrained_source(K, M, lam0, rhs, dirichlet_values, v0, outer):
    """Solve (Laplacian + lam0) u = rhs with essential data on the outer
    boundary and u constrained M-orthogonal to v0.

    rhs and v0 are FemField (or plain vertex arrays); dirichlet_values is one
    value per outer vertex in the mesh's outer ordering.  The saddle system

        [ K - lam0 M   M v0 ] [u ]   [ -(M rhs) - lifted data ]
        [ (M v0)^T      0   ] [mu] = [ 0                      ]

    is solved on the free vertices; mu reports the solvability defect of the
    data (zero in exact arithmetic when the compatibility condition holds).
    Returns (FemField, mu).
    """
    Kc = _as_csr(K)
    Mc = _as_csr(M)
    n = Kc.shape[0]
    rhs_vec = rhs.values if isinstance(rhs, FemField) else np.asarray(rhs, dtype=float)
    v0_vec = v0.values if isinstance(v0, FemField) else np.asarray(v0, dtype=float)
    outer = np.asarray(outer, dtype=np.int64)
    free = np.setdiff1d(np.arange(n), outer)

    A = (Kc - lam0 * Mc).tocsr()
    q = Mc @ v0_vec
    u = np.zeros(n)
    u[outer] = dirichlet_values
    b = -(Mc @ rhs_vec)[free] - (A[np.ix_(free, outer)] @ np.asarray(dirichlet_values, dtype=float))

    nf = len(free)
    Aff = A[np.ix_(free, free)].tocoo()
    qf = q[free]
    rows = np.concatenate([Aff.row, np.arange(nf), np.full(nf, nf)])
    cols = np.concatenate([Aff.col, np.full(nf, nf), np.arange(nf)])
    vals = np.concatenate([Aff.data, qf, qf])
    big = sparse.csc_matrix((vals, (rows, cols)), shape=(nf + 1, nf + 1))
    rhs_big = np.concatenate([b, [-float(q[outer] @ u[outer])]])
    try:
        lu = splu(big)
        sol = lu.solve(rhs_big)
    except RuntimeError as exc:
        raise SolveSingular(f"augmented system singular: {exc}") from exc
    if not np.all(np.isfinite(sol)):
        raise SolveSingular("augmented solve produced non-finite values")

    u[free] = sol[:nf]
    mu = float(sol[nf])
    mesh = rhs.mesh if isinstance(rhs, FemField) else (v0.mesh if isinstance(v0, FemField) else None)
    return FemField(mesh, u, constrained=outer), mu


def boundary_mass_matrix(mesh):
    """Periodic 1D mass matrix of the outer-boundary hat functions in exact
    arclength (falls back to polygonal edge lengths without curve data)."""
    nb = len(mesh.outer)
    if mesh.outer_s is not None and mesh.curve is not None:
        s = np.asarray(mesh.outer_s, dtype=float)
        total = mesh.curve.s0
        ell = np.diff(np.concatenate([s, [s[0] + total]]))
    else:
        pts = mesh.vertices[mesh.outer]
        ell = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    ahead = ell / 6.0
    diag = (ell + np.roll(ell, 1)) / 3.0
    mat = sparse.diags(
        [diag, ahead[:-1], ahead[:-1], [ahead[-1]], [ahead[-1]]],
        [0, 1, -1, nb - 1, -(nb - 1)],
    )
    return mat.tocsc()


def boundary_flux(mesh, fld, lam, rhs=None, K=None, M=None):
    """Inward-normal derivative of a field on the outer boundary by
    variational recovery.

    The field is assumed to satisfy (Laplacian + lam) u = rhs weakly on the
    free vertices; testing the residual with boundary hat functions isolates
    the outward conormal, which is negated to match the inward-normal
    convention.  Returns one value per outer vertex (mesh outer ordering).
    """
    Kc = _as_csr(K) if K is not None else _as_csr(assemble(mesh, "stiffness"))
    Mc = _as_csr(M) if M is not None else _as_csr(assemble(mesh, "mass"))
    u = fld.values if isinstance(fld, FemField) else np.asarray(fld, dtype=float)
    r = Kc @ u - lam * (Mc @ u)
    if rhs is not None:
        rvec = rhs.values if isinstance(rhs, FemField) else np.asarray(rhs, dtype=float)
        r = r + Mc @ rvec
    mg = boundary_mass_matrix(mesh)
    lu = splu(mg)
    return -lu.solve(r[mesh.outer])
