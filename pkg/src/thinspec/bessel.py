"""Self-contained cylinder functions and the semi-analytic coated-disk solver.

Everything here is built from two independent evaluation routes (ascending
power series, and normalized backward / seeded forward recurrences) so the
package carries no external special-function dependency and the two routes can
cross-check each other.  On top of them sit the disk-specific pieces: Dirichlet
eigenvalues of the disk, the 2x2 Cauchy-data matching determinant whose zeros
are the transmission eigenvalues of a coated disk, the radial corrector field
that feeds the second-order expansion coefficient, and the expansion
coefficients themselves.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .errors import (
    DomainError,
    MagnitudeWarning,
    NoRootInBracket,
    SolveSingular,
)

EULER_GAMMA = 0.5772156649015328606065120900824024

# Below this the ascending series is used; beyond it J switches to the
# normalized backward recurrence and Y to asymptotically seeded forward
# recurrence.
_SERIES_CUTOFF = 12.0
_MAX_ORDER = 20
_MAX_ARGUMENT = 1.0e4


# ---------------------------------------------------------------------------
# evaluation routes
# ---------------------------------------------------------------------------

def bessel_j_series(m, x):
    """First-kind cylinder function of integer order by ascending series.

    Accurate route for x below ~12; exposed separately so zeros can be
    confirmed by two independent evaluators.
    """
    if x < 0:
        raise DomainError("bessel_j_series: negative argument")
    if x == 0.0:
        return 1.0 if m == 0 else 0.0
    half = 0.5 * x
    term = half**m / math.factorial(m)
    total = term
    k = 0
    while k < 400:
        k += 1
        term *= -(half * half) / (k * (m + k))
        total += term
        if abs(term) <= 1e-18 * abs(total) + 1e-300:
            break
    return total


def bessel_j_recurrence(m, x, mmax=None):
    """First-kind cylinder function by normalized backward recurrence.

    Downward three-term recurrence started far above max(m, x), normalized
    with the even-order sum identity J_0 + 2*sum_k J_{2k} = 1.  Independent of
    the series route for any x > 0.
    """
    if x <= 0:
        raise DomainError("bessel_j_recurrence: argument must be positive")
    top = max(m, mmax or 0)
    start = int(x + 12.0 * x ** (1.0 / 3.0) + 14) + top + 22
    if start % 2:
        start += 1
    jp = 0.0
    j = 1e-300
    wanted = np.zeros(top + 1)
    even_sum = 0.0
    for mm in range(start, -1, -1):
        jm = (2.0 * (mm + 1) / x) * j - jp
        jp = j
        j = jm
        if abs(j) > 1e250:
            j *= 1e-250
            jp *= 1e-250
            even_sum *= 1e-250
            wanted *= 1e-250
        if mm <= top:
            wanted[mm] = j
        if mm >= 2 and mm % 2 == 0:
            even_sum += 2.0 * j
    norm = even_sum + j
    wanted /= norm
    if mmax is not None:
        return wanted
    return wanted[m]


def _hankel_pq(m, x):
    # Optimally truncated asymptotic modulus/phase series; adequate to
    # ~1e-12 for m <= 1 once x >= 12, which is all the Y seeding needs.
    mu = 4.0 * m * m
    terms = [1.0]
    t = 1.0
    for k in range(1, 60):
        t *= (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(t) > abs(terms[-1]):
            break
        terms.append(t)
    p = 0.0
    q = 0.0
    for k, t in enumerate(terms):
        if k % 2 == 0:
            p += t * (-1) ** (k // 2)
        else:
            q += t * (-1) ** ((k - 1) // 2)
    return p, q


def _y01_asymptotic(x):
    out = []
    for m in (0, 1):
        p, q = _hankel_pq(m, x)
        chi = x - (0.5 * m + 0.25) * math.pi
        out.append(math.sqrt(2.0 / (math.pi * x)) * (p * math.sin(chi) + q * math.cos(chi)))
    return out[0], out[1]


def _y01_series(x):
    half = 0.5 * x
    lnt = math.log(half) + EULER_GAMMA
    j0 = bessel_j_series(0, x)
    j1 = bessel_j_series(1, x)
    # order zero
    s0 = 0.0
    term = 1.0
    harmonic = 0.0
    for k in range(1, 400):
        term *= (half * half) / (k * k)
        harmonic += 1.0 / k
        contrib = ((-1) ** (k + 1)) * harmonic * term
        s0 += contrib
        if abs(contrib) <= 1e-18 * abs(s0) + 1e-300:
            break
    y0 = (2.0 / math.pi) * (lnt * j0 + s0)
    # order one
    s1 = 0.0
    term = 1.0
    hk = 0.0
    hk1 = 1.0
    for k in range(0, 400):
        contrib = ((-1) ** k) * (hk + hk1) * term
        s1 += contrib
        if k > 2 and abs(contrib) <= 1e-18 * abs(s1) + 1e-300:
            break
        term *= (half * half) / ((k + 1) * (k + 2))
        hk += 1.0 / (k + 1)
        hk1 += 1.0 / (k + 2)
    y1 = (2.0 / math.pi) * lnt * j1 - 2.0 / (math.pi * x) - (half / math.pi) * s1
    return y0, y1


def _j_values(mmax, x):
    """J_0..J_mmax at one argument, choosing the route by magnitude of x."""
    if x == 0.0:
        vals = np.zeros(mmax + 1)
        vals[0] = 1.0
        return vals
    if x < _SERIES_CUTOFF:
        return np.array([bessel_j_series(m, x) for m in range(mmax + 1)])
    return bessel_j_recurrence(0, x, mmax=mmax)


def _y_values(mmax, x):
    """Y_0..Y_mmax at one argument; forward recurrence is stable upward."""
    if x < _SERIES_CUTOFF:
        y0, y1 = _y01_series(x)
    else:
        y0, y1 = _y01_asymptotic(x)
    vals = [y0, y1]
    for m in range(2, mmax + 1):
        vals.append((2.0 * (m - 1) / x) * vals[-1] - vals[-2])
    return np.array(vals[: mmax + 1])


def bessel_j(m, x):
    """Return (J_m(x), J_m'(x)).

    Valid for 0 <= m <= 20 and 0 <= x <= 1e4; raises DomainError outside.
    """
    if not (0 <= m <= _MAX_ORDER):
        raise DomainError(f"bessel_j: order {m} outside [0, {_MAX_ORDER}]")
    if x < 0 or x > _MAX_ARGUMENT:
        raise DomainError(f"bessel_j: argument {x} outside [0, {_MAX_ARGUMENT}]")
    vals = _j_values(m + 1, x)
    if m == 0:
        return vals[0], -vals[1]
    if x == 0.0:
        deriv = 0.5 if m == 1 else 0.0
        return 0.0, deriv
    jm1 = vals[m - 1]
    return vals[m], 0.5 * (jm1 - vals[m + 1])


def bessel_y(m, x):
    """Return (Y_m(x), Y_m'(x)) for x > 0.

    A MagnitudeWarning is emitted below x = 1e-8 where the logarithmic
    singularity dominates; the returned value is still finite.
    """
    if x <= 0:
        raise DomainError("bessel_y: argument must be positive")
    if x < 1e-8:
        warnings.warn(
            "bessel_y: argument below 1e-8, value near the logarithmic singularity",
            MagnitudeWarning,
        )
    vals = _y_values(m + 1, x)
    if m == 0:
        return vals[0], -vals[1]
    return vals[m], 0.5 * (vals[m - 1] - vals[m + 1])


def wronskian_defect(m, x):
    """Relative departure of J_m Y_m' - J_m' Y_m from 2/(pi x)."""
    jv, jd = bessel_j(m, x)
    yv, yd = bessel_y(m, x)
    exact = 2.0 / (math.pi * x)
    return abs(jv * yd - jd * yv - exact) / exact


# ---------------------------------------------------------------------------
# zeros and disk Dirichlet spectrum
# ---------------------------------------------------------------------------

def bessel_j_zero(m, k, method="series"):
    """k-th positive zero of J_m by bracketed bisection.

    method selects the evaluator ('series' or 'recurrence') so the same zero
    can be produced by two independent routes.
    """
    if k < 1:
        raise DomainError("bessel_j_zero: k_index must be >= 1")
    if method == "series":
        f = lambda x: bessel_j_series(m, x)
    elif method == "recurrence":
        f = lambda x: bessel_j_recurrence(m, x)
    else:
        raise ValueError(f"unknown evaluator {method!r}")
    # McMahon first guess, then scan for a sign change around it
    beta = (k + 0.5 * m - 0.25) * math.pi
    guess = beta - (4.0 * m * m - 1.0) / (8.0 * beta)
    lo = max(guess - 1.2, 0.05 if m == 0 else 0.5 * guess)
    hi = guess + 1.2
    n_scan = 64
    xs = np.linspace(lo, hi, n_scan)
    fs = [f(x) for x in xs]
    bracket = None
    for i in range(n_scan - 1):
        if fs[i] == 0.0:
            return xs[i]
        if fs[i] * fs[i + 1] < 0:
            bracket = (xs[i], xs[i + 1])
            break
    if bracket is None:
        raise NoRootInBracket(f"no sign change of J_{m} near zero #{k}")
    a, b = bracket
    fa = f(a)
    while b - a > 1e-14:
        mid = 0.5 * (a + b)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if fa * fm < 0:
            b = mid
        else:
            a, fa = mid, fm
    return 0.5 * (a + b)


def disk_dirichlet_eigen(R, m, k_index):
    """Dirichlet eigenvalue (j_{m,k}/R)^2 of the disk of radius R."""
    if R <= 0:
        raise DomainError("disk_dirichlet_eigen: radius must be positive")
    z = bessel_j_zero(m, k_index)
    return (z / R) ** 2


# ---------------------------------------------------------------------------
# coated-disk transmission determinant
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiskProblem:
    """Coated disk: outer radius R, coating thickness delta, constant index n,
    angular mode m."""

    R: float
    delta: float
    n: float
    m: int = 0

    def __post_init__(self):
        if not 0 < self.delta < self.R:
            raise DomainError("DiskProblem: need 0 < delta < R")
        if not 0 < self.n < 1:
            raise DomainError("DiskProblem: need 0 < n < 1")
        if self.m < 0:
            raise DomainError("DiskProblem: mode m must be non-negative")


def transmission_determinant(prob, k):
    """Determinant of the Cauchy-data matching system at wavenumber k.

    The interior field is J_m(k r) on the full disk; the coating field is the
    combination of J_m and Y_m at argument k*sqrt(n)*r vanishing on the inner
    boundary r = R - delta.  The determinant vanishes exactly at transmission
    eigenvalues lambda = k^2 of mode m.
    """
    a = k * math.sqrt(prob.n) * prob.R
    b = k * math.sqrt(prob.n) * (prob.R - prob.delta)
    if b <= 0:
        raise DomainError("transmission_determinant: k*sqrt(n)*(R-delta) must be positive")
    m = prob.m
    ja, jda = bessel_j(m, a)
    ya, yda = bessel_y(m, a)
    jb, _ = bessel_j(m, b)
    yb, _ = bessel_y(m, b)
    w_val = ja * yb - ya * jb
    w_der = (k * math.sqrt(prob.n)) * (jda * yb - yda * jb)
    v_val, v_der = bessel_j(m, k * prob.R)
    v_der *= k
    return v_val * w_der - v_der * w_val


def _mode_roots(prob, k_lo, k_hi, step, tol):
    """All determinant roots of one mode in [k_lo, k_hi] by scan + bisection."""
    roots = []
    k = k_lo
    f_prev = transmission_determinant(prob, k)
    while k < k_hi:
        k_next = min(k + step, k_hi)
        f_next = transmission_determinant(prob, k_next)
        if f_prev == 0.0:
            roots.append(k)
        elif f_prev * f_next < 0:
            a, b = k, k_next
            fa = f_prev
            while b - a > tol:
                mid = 0.5 * (a + b)
                fm = transmission_determinant(prob, mid)
                if fm == 0.0:
                    a = b = mid
                    break
                if fa * fm < 0:
                    b = mid
                else:
                    a, fa = mid, fm
            roots.append(0.5 * (a + b))
        k, f_prev = k_next, f_next
    return roots


def disk_first_te(prob, mode_max=6, step=None):
    """Smallest real transmission eigenvalue lambda = k^2 of the coated disk.

    Scans angular modes 0..mode_max (the mode carried by `prob` does not
    restrict the search; which mode attains the first eigenvalue is not known
    a priori) with a sign-change scan of step 0.01/R followed by bisection to
    width 1e-12.
    """
    j01 = bessel_j_zero(0, 1)
    k_hi = 3.0 * j01 / prob.R
    k_lo = 0.05 / prob.R
    if step is None:
        step = 0.01 / prob.R
    best = None
    for m in range(mode_max + 1):
        prob_m = DiskProblem(prob.R, prob.delta, prob.n, m)
        roots = _mode_roots(prob_m, k_lo, k_hi, step, 1e-12)
        if roots and (best is None or roots[0] < best):
            best = roots[0]
    if best is None:
        raise NoRootInBracket("disk_first_te: no determinant sign change below 3*j01/R")
    return best**2


# ---------------------------------------------------------------------------
# radial corrector and expansion coefficients
# ---------------------------------------------------------------------------

@dataclass
class RadialField:
    """Radially symmetric field sampled on a uniform grid of [0, R].

    Evaluation interpolates the samples; the derivative table is built with
    4th-order differences so interpolated slopes keep the grid accuracy.
    """

    grid: np.ndarray
    values: np.ndarray
    deriv: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.deriv is None:
            self.deriv = _derivative_table(self.grid, self.values)

    def __call__(self, r):
        return np.interp(np.abs(r), self.grid, self.values)

    def derivative(self, r):
        return np.interp(np.abs(r), self.grid, self.deriv)


def _derivative_table(r, v):
    n = len(r) - 1
    h = r[1] - r[0]
    d = np.empty_like(v)
    d[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * h)
    d[0] = (-25 * v[0] + 48 * v[1] - 36 * v[2] + 16 * v[3] - 3 * v[4]) / (12 * h)
    d[1] = (-3 * v[0] - 10 * v[1] + 18 * v[2] - 6 * v[3] + v[4]) / (12 * h)
    d[n - 1] = (3 * v[n] + 10 * v[n - 1] - 18 * v[n - 2] + 6 * v[n - 3] - v[n - 4]) / (-12 * h)
    d[n] = (25 * v[n] - 48 * v[n - 1] + 36 * v[n - 2] - 16 * v[n - 3] + 3 * v[n - 4]) / (12 * h)
    return d


def disk_ground_state(R, nodes=4000):
    """Normalized first Dirichlet eigenfunction of the disk as a RadialField,
    with its inward-normal boundary derivative."""
    j01 = bessel_j_zero(0, 1)
    j1_at = bessel_j_series(1, j01)
    amp = 1.0 / (math.sqrt(math.pi) * abs(j1_at) * R)
    r = np.linspace(0.0, R, nodes + 1)
    vals = amp * np.array([bessel_j_series(0, j01 * ri / R) for ri in r])
    flux = j01 / (math.sqrt(math.pi) * R * R)
    return RadialField(r, vals), flux


def radial_corrector(R, nodes=2000, boundary_value=None, source_coeff=None):
    """Solve the radial corrector problem of the first-order expansion term.

    The corrector u satisfies  u'' + u'/r + lam0*u = source_coeff * v0  on
    (0, R), is even at the origin, takes `boundary_value` at r = R, and is
    constrained to be orthogonal to v0 in the disk L2 inner product through a
    rank-one augmentation (Lagrange multiplier).  Defaults reproduce the
    second expansion step: boundary_value = -dv0/dnu(R), source_coeff = -lam1.

    4th-order finite differences on `nodes` intervals (nodes >= 2000 for the
    golden-value runs).  Returns (RadialField, flux, multiplier) where flux is
    the inward-normal derivative of the corrector on the boundary.
    """
    if R <= 0:
        raise DomainError("radial_corrector: radius must be positive")
    N = int(nodes)
    if N % 2:
        N += 1  # Simpson weights need an even interval count
    j01 = bessel_j_zero(0, 1)
    lam0 = (j01 / R) ** 2
    lam1 = 2.0 * lam0 / R
    flux0 = j01 / (math.sqrt(math.pi) * R * R)
    if boundary_value is None:
        boundary_value = -flux0
    if source_coeff is None:
        source_coeff = -lam1

    h = R / N
    r = np.arange(N + 1) * h
    v0_field, _ = disk_ground_state(R, nodes=N)
    v0 = v0_field.values
    rhs_f = source_coeff * v0

    rows, cols, vals = [], [], []
    b = np.zeros(N + 1)

    def add(i, j, v):
        rows.append(i)
        cols.append(j)
        vals.append(v)

    inv12h2 = 1.0 / (12 * h * h)
    inv12h = 1.0 / (12 * h)
    for i in range(N):
        if i == 0:
            # r=0 limit of u'' + u'/r is 2 u''; even mirror closes the stencil
            add(0, 0, 2 * (-30.0) * inv12h2 + lam0)
            add(0, 1, 2 * 32.0 * inv12h2)
            add(0, 2, 2 * (-2.0) * inv12h2)
            b[0] = rhs_f[0]
        elif i == 1:
            ri = r[1]
            add(1, 0, 16.0 * inv12h2 - 8.0 * inv12h / ri)
            add(1, 1, -31.0 * inv12h2 + 1.0 * inv12h / ri + lam0)
            add(1, 2, 16.0 * inv12h2 + 8.0 * inv12h / ri)
            add(1, 3, -1.0 * inv12h2 - 1.0 * inv12h / ri)
            b[1] = rhs_f[1]
        elif i <= N - 2:
            ri = r[i]
            c2 = (-1.0, 16.0, -30.0, 16.0, -1.0)
            c1 = (1.0, -8.0, 0.0, 8.0, -1.0)
            b[i] += rhs_f[i]
            for dj in range(5):
                jj = i + dj - 2
                coef = c2[dj] * inv12h2 + c1[dj] * inv12h / ri
                if jj == i:
                    coef += lam0
                if jj == N:
                    b[i] -= coef * boundary_value
                else:
                    add(i, jj, coef)
        else:
            # i = N-1: 4th-order stencils biased one node into the interior
            ri = r[i]
            c2 = {1: 11.0, 0: -20.0, -1: 6.0, -2: 4.0, -3: -1.0}
            c1 = {1: 3.0, 0: 10.0, -1: -18.0, -2: 6.0, -3: -1.0}
            b[i] += rhs_f[i]
            for off in (-3, -2, -1, 0, 1):
                jj = i + off
                coef = c2[off] * inv12h2 + c1[off] * inv12h / ri
                if off == 0:
                    coef += lam0
                if jj == N:
                    b[i] -= coef * boundary_value
                else:
                    add(i, jj, coef)

    # orthogonality row/column: 2*pi * int u v0 r dr = 0 (composite Simpson)
    w = np.ones(N + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= h / 3.0
    q = 2.0 * math.pi * w * v0 * r
    for j in range(N):
        add(N, j, q[j])
        add(j, N, q[j])
    b[N] = -q[N] * boundary_value

    A = sparse.csr_matrix(
        sparse.coo_matrix((vals, (rows, cols)), shape=(N + 1, N + 1))
    )
    with warnings.catch_warnings():
        warnings.simplefilter("error", sparse.linalg.MatrixRankWarning)
        try:
            sol = spsolve(A.tocsc(), b)
        except Exception as exc:  # singular factor or rank warning
            raise SolveSingular(f"radial corrector system singular: {exc}") from exc
    if not np.all(np.isfinite(sol)):
        raise SolveSingular("radial corrector solve produced non-finite values")

    u = np.concatenate([sol[:N], [boundary_value]])
    mu = sol[N]
    du_R = (25 * u[N] - 48 * u[N - 1] + 36 * u[N - 2] - 16 * u[N - 3] + 3 * u[N - 4]) / (12 * h)
    flux = -du_R  # inward normal points toward the center
    return RadialField(r, u), flux, mu


@dataclass(frozen=True)
class DiskCoefficients:
    """Expansion coefficients and radial fields for the coated unit-thickness
    profile disk (g == 1)."""

    radius: float
    lambda0: float
    lambda1: float
    lambda2: float
    flux0: float
    flux1: float
    v0: RadialField
    v1: RadialField


def disk_asymptotic_coeffs(R, n=None, nodes=2000):
    """Expansion coefficients of the coated disk with unit thickness profile.

    lambda0 = (j01/R)^2, lambda1 = 2*lambda0/R in closed form; lambda2 comes
    from the numerically solved radial corrector.  The refractive index n is
    accepted for interface symmetry but does not enter any of the three
    coefficients.
    """
    del n  # the first three coefficients are index-independent
    if R <= 0:
        raise DomainError("disk_asymptotic_coeffs: radius must be positive")
    j01 = bessel_j_zero(0, 1)
    lam0 = (j01 / R) ** 2
    lam1 = 2.0 * lam0 / R
    v0, flux0 = disk_ground_state(R, nodes=max(nodes, 2000))
    v1, flux1, _ = radial_corrector(R, nodes=nodes)
    # curvature of the circle is +1/R under the convex-positive convention
    kappa = 1.0 / R
    lam2 = 2.0 * math.pi * R * (0.5 * kappa * flux0**2 + flux0 * flux1)
    return DiskCoefficients(R, lam0, lam1, lam2, flux0, flux1, v0, v1)
