"""Spectral laws from moment sequences.

Moments are turned into Jacobi (three-term recurrence) coefficients with the
Chebyshev algorithm in extended precision.  The Cauchy transform is then the
continued fraction

    G(z) = b0 / (z - a0 - b1 / (z - a1 - ... - b_{n-1} / (z - a_{n-1} - T(z))))

closed by a periodic square-root tail ``T``.  Densities come from
``-(1/pi) Im G(x + i eta)``, atoms from the scaling of ``eta Im G`` as
``eta`` shrinks.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np
from scipy.integrate import quad, trapezoid
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import minimize_scalar

from .errors import LoopEdgeError, UnstableRecursionWarning
from .trace import MomentSeq

__all__ = [
    "CauchySeries",
    "SpectralEstimate",
    "FreePoissonLaw",
    "AlgebraicRelation",
    "free_poisson_reference",
    "estimate_law",
    "find_algebraic_relation",
    "check_support_arithmetic",
    "log_moment",
    "semicircle_density",
]

DEFAULT_ETA = 1e-3
DEFAULT_GRID_POINTS = 2000
SUPPORT_THRESHOLD = 1e-2
MERGE_GAP_STEPS = 3
MIN_INTERVAL_MASS = 1e-3
_DPS = 60


def _mpf(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(float(x))


def _chebyshev(mu, rel_tol):
    n = len(mu) // 2
    a = [mu[1] / mu[0]]
    b = [mu[0]]
    prev = [mpmath.mpf(0)] * len(mu)
    cur = list(mu)
    scale = max(abs(a[0]), mpmath.mpf(1e-300))
    status = "ok"
    for k in range(1, n):
        nxt = [mpmath.mpf(0)] * len(mu)
        for l in range(k, 2 * n - k):
            nxt[l] = cur[l + 1] - a[k - 1] * cur[l] - b[k - 1] * prev[l]
        bk = nxt[k] / cur[k - 1]
        if abs(bk) <= rel_tol * scale**2:
            status = "finite"
            break
        if bk < 0:
            status = "unstable"
            break
        ak = nxt[k + 1] / nxt[k] - cur[k] / cur[k - 1]
        a.append(ak)
        b.append(bk)
        scale = max(scale, abs(ak), mpmath.sqrt(bk))
        prev, cur = cur, nxt
    return a, b, status, scale


def jacobi_coefficients(moments, rel_tol=1e-12, noise=1e-14, agree=1e-7):
    """Chebyshev algorithm on raw moments ``m_0..m_K``.

    Returns ``(a, b, status)`` with ``b[0] = m_0``.  ``status`` is ``"ok"``,
    ``"finite"`` (a vanishing ``b_k``: the law has finitely many atoms),
    ``"unstable"`` (a negative ``b_k``) or ``"precision"``.  Floating-point
    moments are rerun with a relative perturbation of size ``noise``; levels
    where the two runs differ by more than ``agree`` (relative to the
    coefficient scale) are dropped, since the recursion amplifies moment
    errors geometrically.
    """
    exact = all(isinstance(m, (Fraction, int)) for m in moments)
    with mpmath.workdps(_DPS):
        mu = [_mpf(m) for m in moments]
        if len(mu) < 2 or mu[0] <= 0:
            raise ValueError("need m_0 > 0 and at least two moments")
        a, b, status, scale = _chebyshev(mu, rel_tol)
        if not exact:
            pert = [m * (1 + noise * math.sin(k + 1)) for k, m in enumerate(mu)]
            a2, b2, _, _ = _chebyshev(pert, rel_tol)
            cut = min(len(a), len(a2))
            for k in range(1, cut):
                dev = abs(a[k] - a2[k]) + abs(mpmath.sqrt(b[k]) - mpmath.sqrt(b2[k]))
                if dev > agree * scale:
                    cut = k
                    break
            if cut < len(a):
                a, b = a[:cut], b[:cut]
                if status != "unstable":
                    status = "precision"
        return [float(x) for x in a], [float(x) for x in b], status


def _mobius_fixed_point(mats, z):
    """Attracting fixed point of the composed tail maps ``t -> b/(z - a - t)``."""
    p = np.ones_like(z)
    q = np.zeros_like(z)
    r = np.zeros_like(z)
    s = np.ones_like(z)
    for a, b in mats:
        # [[p, q], [r, s]] @ [[0, b], [-1, z - a]]
        p, q, r, s = -q, p * b + q * (z - a), -s, r * b + s * (z - a)
    # r t^2 + (s - p) t - q = 0
    disc = np.sqrt((s - p) ** 2 + 4 * r * q + 0j)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (p - s + disc) / (2 * r)
        t2 = (p - s - disc) / (2 * r)
        det = p * s - q * r
        d1 = np.abs(det / (r * t1 + s) ** 2)
        d2 = np.abs(det / (r * t2 + s) ** 2)
    pick = np.where(np.isfinite(d1) & (d1 <= d2), t1, t2)
    # guard against numerically equal multipliers: keep the Herglotz branch
    tie = np.isclose(d1, d2, rtol=1e-9, atol=0)
    herg = np.where(t1.imag <= t2.imag, t1, t2)
    return np.where(tie, herg, pick)


class CauchySeries:
    """Cauchy transform of a moment sequence (unnormalized: ``G ~ m_0 / z``)."""

    def __init__(self, ms: MomentSeq, rel_tol=1e-12):
        self.ms = ms
        self.m = ms.as_float()
        self.m0 = float(self.m[0])
        a, b, status = jacobi_coefficients(ms.moments, rel_tol)
        self.a = np.array(a)
        self.b = np.array(b)
        self.status = status
        if status == "unstable":
            warnings.warn(
                f"Jacobi coefficients lost positivity; continued fraction truncated at level {len(a)}",
                UnstableRecursionWarning,
                stacklevel=2,
            )
        self.period, self.tail = self._choose_tail()

    @property
    def levels(self):
        return len(self.a)

    def _choose_tail(self):
        n = self.levels
        if self.status == "finite" or n < 2:
            return 0, ()
        L = min(6, n - 1)
        a, b = self.a[n - L:], self.b[n - L:]
        spread1 = float(np.std(a) + np.std(np.sqrt(b)))
        spread2 = 0.0
        if L >= 4:
            for par in (0, 1):
                spread2 += float(np.std(a[par::2]) + np.std(np.sqrt(b[par::2])))
        if L >= 4 and spread2 < 0.1 * spread1:
            # level n has the parity of level n - 2
            return 2, ((self.a[n - 2], self.b[n - 2]), (self.a[n - 1], self.b[n - 1]))
        return 1, ((self.a[n - 1], self.b[n - 1]),)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if self.period:
            t = _mobius_fixed_point(self.tail, z)
        else:
            t = np.zeros_like(z)
        for k in range(self.levels - 1, 0, -1):
            t = self.b[k] / (z - self.a[k] - t)
        return self.b[0] / (z - self.a[0] - t)

    def truncated_sum(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        w = 1.0 / z
        p = w.copy()
        for mk in self.m:
            out = out + mk * p
            p = p * w
        return out

    def gauss_rule(self):
        """Nodes and weights (summing to ``m_0``) of the Jacobi matrix."""
        if self.levels == 1:
            return np.array([self.a[0]]), np.array([self.m0])
        x, v = eigh_tridiagonal(self.a, np.sqrt(self.b[1:]))
        return x, self.m0 * v[0] ** 2

    def density(self, x, eta):
        return np.abs(self(np.asarray(x, dtype=float) + 1j * eta).imag) / np.pi


@dataclass
class SpectralEstimate:
    grid: np.ndarray
    density: np.ndarray  # (1/pi)|Im G(x + i eta)|, total mass m_0
    eta: float
    intervals: list  # (lo, hi)
    atoms: list  # (location, mass)
    m0: float
    continuous: np.ndarray = field(repr=False)
    cauchy: CauchySeries = field(repr=False)
    relation: object = None

    def continuous_at(self, x):
        x = np.asarray(x, dtype=float)
        d = self.cauchy.density(x, self.eta)
        h = float(self.grid[1] - self.grid[0]) if len(self.grid) > 1 else self.eta
        for t, m in self.atoms:
            d = d - m * self.eta / np.pi / ((x - t) ** 2 + self.eta**2)
            d = np.where(np.abs(x - t) <= 5 * self.eta + 2 * h, 0.0, d)
        return np.clip(d, 0.0, None)

    def interval_masses(self):
        out = []
        for lo, hi in self.intervals:
            sel = (self.grid >= lo) & (self.grid <= hi)
            out.append(float(trapezoid(self.continuous[sel], self.grid[sel])))
        return out

    def moment(self, k):
        """Normalized ``k``-th moment of the estimated law (continuous part plus atoms)."""
        val = float(trapezoid(self.continuous * self.grid**k, self.grid))
        val += sum(m * t**k for t, m in self.atoms)
        return val / self.m0

    def max_atom_mass(self):
        return max((m for _, m in self.atoms), default=0.0)

    def to_csv(self):
        lines = ["x,density"]
        for x, d in zip(self.grid, self.density):
            lines.append(f"{x:.12g},{d:.12g}")
        return "\n".join(lines) + "\n"


def _default_grid(cs: CauchySeries, n):
    x, _ = cs.gauss_rule()
    lo, hi = float(np.min(x)) - 0.5, float(np.max(x)) + 0.5
    return np.linspace(lo, hi, n)


def _find_atoms(cs, grid, dens, eta, floor):
    h = float(grid[1] - grid[0]) if len(grid) > 1 else 1.0
    cands = []
    for i in range(len(grid)):
        left = dens[i - 1] if i > 0 else -np.inf
        right = dens[i + 1] if i + 1 < len(grid) else -np.inf
        if dens[i] > 0 and dens[i] >= left and dens[i] >= right:
            cands.append(float(grid[i]))
    nodes, weights = cs.gauss_rule()
    cands.extend(float(x) for x, w in zip(nodes, weights) if w >= floor and grid[0] <= x <= grid[-1])
    cands.sort()

    def mass(t, e):
        return float(-e * cs(complex(t, e)).imag)

    atoms = []
    for c in cands:
        res = minimize_scalar(
            lambda t: cs(complex(t, eta)).imag, bounds=(c - 2 * h, c + 2 * h), method="bounded",
            options={"xatol": eta / 10},
        )
        t = float(res.x)
        m1 = mass(t, eta)
        if m1 < floor:
            continue
        m4 = mass(t, eta / 4)
        if m4 < 0.7 * m1:
            continue
        if atoms and abs(atoms[-1][0] - t) < 2 * h:
            if m4 > atoms[-1][1]:
                atoms[-1] = (t, m4)
            continue
        atoms.append((t, m4))
    return atoms


def _support(grid, cont, m0):
    pos = cont[cont > 0]
    if not len(pos) or float(np.max(pos)) <= 1e-8 * max(m0, 1e-300):
        return []
    # a high percentile instead of the max: an integrable singularity blurred
    # at scale eta would otherwise set the threshold and move with eta
    peak = float(np.percentile(pos, 99))
    above = np.flatnonzero(cont > SUPPORT_THRESHOLD * peak)
    runs = []
    start = prev = above[0]
    for i in above[1:]:
        if i - prev > MERGE_GAP_STEPS:
            runs.append((start, prev))
            start = i
        prev = i
    runs.append((start, prev))
    out = []
    for i, j in runs:
        # drop slivers left by the Lorentzian tails of imperfectly fitted atoms
        if trapezoid(cont[i:j + 1], grid[i:j + 1]) >= MIN_INTERVAL_MASS * m0:
            out.append((float(grid[i]), float(grid[j])))
    return out


def estimate_law(ms: MomentSeq, eta=DEFAULT_ETA, grid=None, relation=False, atom_floor=1e-3):
    """Stieltjes inversion of the continued-fraction Cauchy transform.

    ``grid`` is an array of x values or ``(lo, hi, n)``; by default it spans
    the Gauss nodes of the moment sequence padded by 0.5 on each side.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    cs = CauchySeries(ms)
    if grid is None:
        grid = _default_grid(cs, DEFAULT_GRID_POINTS)
    elif isinstance(grid, tuple):
        grid = np.linspace(float(grid[0]), float(grid[1]), int(grid[2]))
    grid = np.asarray(grid, dtype=float)
    dens = cs.density(grid, eta)
    atoms = _find_atoms(cs, grid, dens, eta, atom_floor * cs.m0)
    cont = dens.copy()
    h = float(grid[1] - grid[0]) if len(grid) > 1 else eta
    for t, m in atoms:
        cont -= m * eta / np.pi / ((grid - t) ** 2 + eta**2)
        # leftover of an imperfect subtraction is not continuous mass
        cont[np.abs(grid - t) <= 5 * eta + 2 * h] = 0.0
    cont = np.clip(cont, 0.0, None)
    est = SpectralEstimate(grid, dens, eta, _support(grid, cont, cs.m0), atoms, cs.m0, cont, cs)
    if relation:
        est.relation = find_algebraic_relation(ms)
    return est


def semicircle_density(x, radius=2.0):
    x = np.asarray(x, dtype=float)
    r2 = radius * radius
    return np.where(np.abs(x) < radius, 2.0 / (np.pi * r2) * np.sqrt(np.clip(r2 - x * x, 0, None)), 0.0)


# ---------------------------------------------------------------------------
# free Poisson reference


@dataclass(frozen=True)
class FreePoissonLaw:
    """Law of ``X_eps* X_eps`` in the corner at ``beta = t(eps)``, total mass ``mu(beta)``."""

    a: float
    mu_alpha: float
    mu_beta: float

    @property
    def heavy(self):
        return self.mu_beta >= self.mu_alpha

    @property
    def lower(self):
        return self.a**2 + self.a**-2 - 2

    @property
    def upper(self):
        return self.a**2 + self.a**-2 + 2

    @property
    def atom_mass(self):
        return max(self.mu_beta - self.mu_alpha, 0.0)

    @property
    def continuous_weight(self):
        return min(self.mu_alpha, self.mu_beta)

    @property
    def _prefactor(self):
        # normalises the shape sqrt((x-l)(u-x))/(2 pi x) to unit mass
        return self.continuous_weight * max(self.a**2, self.a**-2) / (2 * np.pi)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        l, u = self.lower, self.upper
        inside = (x > l) & (x < u)
        val = np.zeros_like(x)
        xi = x[inside]
        val[inside] = self._prefactor * np.sqrt((xi - l) * (u - xi)) / xi
        return val

    def moment(self, k):
        l, u = self.lower, self.upper
        if l < 1e-14:
            c, _ = quad(lambda x: x**k, 0.0, u, weight="alg", wvar=(-0.5, 0.5), epsabs=1e-14, epsrel=1e-13)
        else:
            c, _ = quad(lambda x: x ** (k - 1), l, u, weight="alg", wvar=(0.5, 0.5), epsabs=1e-14, epsrel=1e-13)
        c *= self._prefactor
        return c + (self.atom_mass if k == 0 else 0.0)

    def moments(self, K):
        return np.array([self.moment(k) for k in range(K + 1)])

    def total_mass(self):
        return self.moment(0)


def free_poisson_reference(dd, eps) -> FreePoissonLaw:
    eps = int(eps)
    if dd.is_loop(eps):
        raise LoopEdgeError("free Poisson reference needs a non-loop oriented edge")
    s, t = int(dd.src[eps]), int(dd.tgt[eps])
    return FreePoissonLaw(float(dd.amplitude[eps]), float(dd.mu[s]), float(dd.mu[t]))


# ---------------------------------------------------------------------------
# algebraic relations


@dataclass
class AlgebraicRelation:
    """``sum_{j,i} coeffs[j, i] z^i G^j = 0``."""

    coeffs: np.ndarray
    residual: float

    @property
    def dG(self):
        return self.coeffs.shape[0] - 1

    @property
    def dz(self):
        return self.coeffs.shape[1] - 1

    def __call__(self, z, G):
        return sum(self.coeffs[j, i] * z**i * G**j for j in range(self.dG + 1) for i in range(self.dz + 1))

    def rows(self):
        return [(j, i, float(self.coeffs[j, i])) for j in range(self.dG + 1) for i in range(self.dz + 1)
                if self.coeffs[j, i] != 0]

    def __str__(self):
        parts = []
        for j in range(self.dG, -1, -1):
            for i in range(self.dz, -1, -1):
                c = float(self.coeffs[j, i])
                if c == 0:
                    continue
                mono = "*".join(x for x in (("z" if i == 1 else f"z^{i}") if i else "",
                                             ("G" if j == 1 else f"G^{j}") if j else "") if x)
                sign = "-" if c < 0 else "+"
                mag = abs(c)
                body = f"{mag:.12g}" if not mono else (mono if mag == 1 else f"{mag:.12g}*{mono}")
                parts.append((sign, body))
        if not parts:
            return "0 = 0"
        s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            s += f" {sign} {body}"
        return s + " = 0"


def _series_powers(s, dG, N):
    """Coefficient arrays (length N, in w) of g^j for g = sum s_k w^(k+1)."""
    g = np.zeros(N)
    g[1:min(N, len(s) + 1)] = s[: N - 1]
    pw = [np.zeros(N)]
    pw[0][0] = 1.0
    for _ in range(dG):
        pw.append(np.convolve(pw[-1], g)[:N])
    return pw


def _relation_matrix(s, dz, dG, N):
    pw = _series_powers(s, dG, N)
    cols = []
    for j in range(dG + 1):
        for i in range(dz + 1):
            shift = dz - i
            col = np.zeros(N)
            col[shift:] = pw[j][: N - shift]
            cols.append(col)
    return np.array(cols).T


def find_algebraic_relation(ms: MomentSeq, dz=4, dG=3, threshold=1e-8):
    """Smallest ``(dG, dz)`` relation ``sum Q_j(z) G^j = 0`` matching the moment series.

    Coefficients are matched in ``w = 1/z`` through order ``K + 1``; a
    candidate needs at least two more equations than unknowns and is
    certified by substituting the series back.  Returns ``None`` if nothing
    is found within the bounds.
    """
    m = ms.as_float()
    K = len(m) - 1
    m0 = float(m[0])
    R = max([abs(m[k] / m0) ** (1.0 / k) for k in range(1, K + 1) if m[k] != 0] + [1e-300])
    if R <= 1e-300:
        R = 1.0
    s = np.array([m[k] / (m0 * R**k) for k in range(K + 1)])
    N = K + 2
    for dg in range(1, dG + 1):
        for dzz in range(0, dz + 1):
            U = (dg + 1) * (dzz + 1)
            if U > N - 2:
                continue
            A = _relation_matrix(s, dzz, dg, N)
            norms = np.linalg.norm(A, axis=0)
            norms[norms == 0] = 1.0
            _, sv, vt = np.linalg.svd(A / norms, full_matrices=False)
            if sv[-1] > threshold * sv[0]:
                continue
            c = vt[-1] / norms
            c = c / np.linalg.norm(c)
            resid = float(np.max(np.abs(A @ c)))
            if resid > threshold:
                continue
            cs = c.reshape(dg + 1, dzz + 1)
            # undo z = R zeta, G = m0 g / R
            out = np.zeros_like(cs)
            for j in range(dg + 1):
                for i in range(dzz + 1):
                    out[j, i] = cs[j, i] * R ** (j - i) / m0**j
            lead = out[np.nonzero(np.abs(out) > 1e-12 * np.max(np.abs(out)))]
            out = out / lead[-1]
            out[np.abs(out) < 1e-12 * np.max(np.abs(out))] = 0.0
            return AlgebraicRelation(out, resid)
    return None


# ---------------------------------------------------------------------------
# support arithmetic and log moment


@dataclass
class SupportReport:
    mu_alpha: float
    lattice_size: int
    rows: list  # (lo, hi, mass, nearest, distance, ok)
    atoms: list

    @property
    def all_ok(self):
        return all(r[5] for r in self.rows)

    def to_csv(self):
        lines = ["lo,hi,mass,nearest_lattice,distance,match"]
        for lo, hi, m, near, d, ok in self.rows:
            lines.append(f"{lo:.12g},{hi:.12g},{m:.12g},{near:.12g},{d:.12g},{int(ok)}")
        return "\n".join(lines) + "\n"


def _lattice(weights, cap, bound=8):
    ws = sorted(set(float(w) for w in weights))
    vals = set()
    for coeffs in itertools.product(range(-bound, bound + 1), repeat=len(ws)):
        v = sum(c * w for c, w in zip(coeffs, ws))
        if 1e-12 < v <= cap * (1 + 1e-12):
            vals.add(round(v, 12))
    return np.array(sorted(vals))


def check_support_arithmetic(est: SpectralEstimate, g=None, alpha=None, tol=0.05, bound=8):
    """Compare each interval's mass with integer combinations of the vertex weights.

    ``alpha=None`` uses the estimate's total mass as the cap.  Advisory only.
    """
    if g is not None:
        weights = list(g.weights.values())
        cap = float(g.weight(alpha)) if alpha is not None else est.m0
    else:
        weights, cap = [est.m0], est.m0
    lat = _lattice(weights, cap, bound)
    rows = []
    for (lo, hi), m in zip(est.intervals, est.interval_masses()):
        if len(lat):
            k = int(np.argmin(np.abs(lat - m)))
            near, d = float(lat[k]), float(abs(lat[k] - m))
        else:
            near, d = float("nan"), float("inf")
        rows.append((lo, hi, m, near, d, d <= tol * cap))
    return SupportReport(cap, len(lat), rows, list(est.atoms))


@dataclass
class LogMoment:
    value: float  # -inf when an atom sits at 0
    eta: float
    atom_at_zero: float

    @property
    def finite(self):
        return math.isfinite(self.value)


def log_moment(est: SpectralEstimate, zero_tol=None):
    """Normalized ``int log|t| dmu(t)``; ``-inf`` with the atom mass if an atom sits at 0."""
    h = float(est.grid[1] - est.grid[0]) if len(est.grid) > 1 else est.eta
    zero_tol = max(3 * h, 10 * est.eta) if zero_tol is None else zero_tol
    for t, m in est.atoms:
        if abs(t) <= zero_tol:
            return LogMoment(float("-inf"), est.eta, m)
    total = 0.0
    for lo, hi in est.intervals:
        pts = [0.0] if lo < 0 < hi else None
        val, _ = quad(lambda x: float(est.continuous_at(np.array([x]))[0]) * math.log(abs(x)) if x else 0.0,
                      lo, hi, points=pts, limit=400)
        total += val
    total += sum(m * math.log(abs(t)) for t, m in est.atoms)
    return LogMoment(total / est.m0, est.eta, 0.0)
