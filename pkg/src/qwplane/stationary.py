"""
Stationary-phase analysis of the closed-form phase surfaces

    w_j(k) = w_a(u+) + w_b(u-),   u+- = (kx +- ky) / 2,

with ``(a, b)`` = (1,1), (1,2), (2,1), (2,2) for ``j`` = 1..4.

Gradients and Hessians here are derived by the chain rule from the branch
phases of :func:`qwplane.spectral.phase_w`; the printed second-derivative
building blocks are evaluated separately (:func:`hessian_terms`) and audited
against finite differences.
"""
from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import ConvexHull, QhullError

from .coin import BiasParams
from .spectral import SURFACE_BRANCHES, surface_phase

__all__ = [
    "Classification",
    "SaddlePoint",
    "AnalyticSaddles",
    "VelocityProfile",
    "HullResult",
    "HessianTerms",
    "RecurrenceCondition",
    "w_prime",
    "w_second",
    "grad_w_analytic",
    "hessian_w",
    "saddle_points_analytic",
    "saddle_points_numeric",
    "hessian_terms",
    "hessian_audit",
    "recurrence_condition",
    "peak_velocities_analytic",
    "velocity_recurrence_criterion",
    "modified_phase_velocities",
    "gradient_fd_audit",
    "saddle_audit",
]

TWO_PI = 2.0 * np.pi


class Classification(str, enum.Enum):
    SADDLE = "saddle"
    EXTREMUM = "extremum"
    DEGENERATE = "degenerate"


def _theta(u, r):
    return 0.5 * (r + 1) * np.asarray(u, dtype=np.float64)


def w_prime(u, params: BiasParams, branch: int):
    """``d w_branch / du``."""
    p, r = params.p, params.r
    th = _theta(u, r)
    sign = 1.0 if branch == 1 else -1.0
    s = np.sin(th)
    return 0.5 * (r - 1) + sign * np.sqrt(p) * 0.5 * (r + 1) * np.cos(th) / np.sqrt(1.0 - p * s * s)


def w_second(u, params: BiasParams, branch: int):
    """``d^2 w_branch / du^2``."""
    p, r = params.p, params.r
    th = _theta(u, r)
    sign = 1.0 if branch == 1 else -1.0
    s = np.sin(th)
    m = 0.5 * (r + 1)
    return sign * np.sqrt(p) * m * m * (p - 1.0) * s / (1.0 - p * s * s) ** 1.5


def _u_pm(k):
    kx, ky = k
    return 0.5 * (kx + ky), 0.5 * (kx - ky)


def grad_w_analytic(j: int, k, params: BiasParams):
    """``(dw_j/dkx, dw_j/dky)``."""
    a, b = SURFACE_BRANCHES[j]
    up, um = _u_pm(k)
    fa, fb = w_prime(up, params, a), w_prime(um, params, b)
    gx, gy = 0.5 * (fa + fb), 0.5 * (fa - fb)
    if np.ndim(gx) == 0:
        return float(gx), float(gy)
    return gx, gy


def hessian_w(j: int, k, params: BiasParams) -> np.ndarray:
    """Second-derivative matrix of ``w_j`` at ``k`` (symmetric)."""
    a, b = SURFACE_BRANCHES[j]
    up, um = _u_pm(k)
    sa, sb = float(w_second(up, params, a)), float(w_second(um, params, b))
    d = 0.25 * (sa + sb)
    off = 0.25 * (sa - sb)
    return np.array([[d, off], [off, d]])


@dataclass
class SaddlePoint:
    k0: tuple
    surface: int
    grad_norm: float
    hessian_det: float
    classification: Classification

    def to_dict(self):
        d = asdict(self)
        d["k0"] = [float(v) for v in self.k0]
        d["classification"] = self.classification.value
        return d


def _classify(det, tol=1e-12):
    if det < -tol:
        return Classification.SADDLE
    if det > tol:
        return Classification.EXTREMUM
    return Classification.DEGENERATE


def _make_point(j, k, params):
    g = np.hypot(*grad_w_analytic(j, k, params))
    det = float(np.linalg.det(hessian_w(j, k, params)))
    return SaddlePoint(k0=(float(k[0]), float(k[1])), surface=j, grad_norm=float(g),
                       hessian_det=det, classification=_classify(det))


@dataclass
class AnalyticSaddles:
    radicand: float
    complex_valued: bool
    points: list = field(default_factory=list)


def _radicand(params: BiasParams) -> float:
    p, r = params.p, params.r
    return (p * (r + 1) ** 2 - (r - 1) ** 2) / (p * (r + 1) ** 2 - p * (r - 1) ** 2)


def saddle_points_analytic(params: BiasParams) -> AnalyticSaddles:
    """
    Closed-form candidates ``kx0 = (4/(r+1)) arcsin(+-sqrt(rad))`` with
    ``ky0 = 0``, plus the companions with the roles of ``kx`` and ``ky``
    swapped (independent sign choices at ``u+`` and ``u-``). Each point is
    attributed to the surface on which its gradient is smallest.
    """
    rad = _radicand(params)
    if rad < 0.0 or rad > 1.0:
        return AnalyticSaddles(radicand=rad, complex_valued=True)
    K = 4.0 / (params.r + 1) * np.arcsin(np.sqrt(rad))
    cands = [(K, 0.0), (-K, 0.0), (0.0, K), (0.0, -K)]
    points = []
    for k in cands:
        best = min((_make_point(j, k, params) for j in (1, 2, 3, 4)), key=lambda s: s.grad_norm)
        points.append(best)
    return AnalyticSaddles(radicand=rad, complex_valued=False, points=points)


def _newton(j, k0, params, max_iter=100, max_halvings=30, gtol=1e-12):
    k = np.array(k0, dtype=np.float64)
    g = np.array(grad_w_analytic(j, k, params))
    gn = np.hypot(*g)
    for _ in range(max_iter):
        if gn < gtol:
            break
        H = hessian_w(j, k, params)
        if abs(np.linalg.det(H)) < 1e-14:
            return None
        dk = -np.linalg.solve(H, g)
        lam = 1.0
        for _ in range(max_halvings):
            k_new = k + lam * dk
            g_new = np.array(grad_w_analytic(j, k_new, params))
            gn_new = np.hypot(*g_new)
            if gn_new < gn:
                break
            lam *= 0.5
        else:
            break
        k, g, gn = k_new, g_new, gn_new
    return k if gn < 1e-8 else None


def _periodic_gap(a, b):
    d = np.abs(np.asarray(a) - np.asarray(b)) % TWO_PI
    return float(np.max(np.minimum(d, TWO_PI - d)))


def saddle_points_numeric(j: int, params: BiasParams, seeds: int = 16):
    """
    Stationary points of ``w_j`` from damped Newton runs started on a
    ``seeds x seeds`` grid over ``[-pi, pi)^2``. Points outside the closed
    square are dropped; duplicates (``< 1e-6`` apart modulo ``2 pi``) merged.
    """
    if seeds < 8:
        raise ValueError(f"seeds must be at least 8, got {seeds}")
    starts = -np.pi + TWO_PI * (np.arange(seeds) + 0.5) / seeds
    found = []
    slack = 1e-9
    for sx in starts:
        for sy in starts:
            k = _newton(j, (sx, sy), params)
            if k is None or np.any(np.abs(k) > np.pi + slack):
                continue
            found.append(k)
    found.sort(key=lambda k: (round(k[0], 9), round(k[1], 9)))
    unique = []
    for k in found:
        if all(_periodic_gap(k, u) >= 1e-6 for u in unique):
            unique.append(k)
    return [_make_point(j, k, params) for k in unique]


@dataclass
class HessianTerms:
    """Printed second-derivative building blocks and their assembled combinations."""

    df_dkx: float
    df_dky: float
    dg_dkx: float
    dg_dky: float
    assembled: dict

    def blocks(self):
        return {"df_dkx": self.df_dkx, "df_dky": self.df_dky,
                "dg_dkx": self.dg_dkx, "dg_dky": self.dg_dky}


# (sign of the 1/sqrt term, sign of the 1/(...)^{3/2} term) as printed
_PRINTED_SIGNS = {
    "df_dkx": (-1.0, -1.0),
    "df_dky": (1.0, 1.0),
    "dg_dkx": (-1.0, 1.0),
    "dg_dky": (1.0, -1.0),
}

# printed combinations: j -> {term: ((coef, block), ...)}
_PRINTED_ASSEMBLY = {
    1: {"kxkx": ((1, "df_dkx"), (1, "dg_dkx")), "kyky": ((1, "df_dky"), (-1, "dg_dky")),
        "kykx": ((1, "df_dky"), (1, "dg_dkx")), "kxky": ((1, "df_dkx"), (-1, "dg_dkx"))},
    2: {"kxkx": ((1, "df_dkx"), (-1, "dg_dkx")), "kyky": ((1, "df_dky"), (1, "dg_dky")),
        "kykx": ((1, "df_dky"), (-1, "dg_dkx")), "kxky": ((1, "df_dkx"), (1, "dg_dkx"))},
    3: {"kxkx": ((1, "dg_dkx"), (-1, "df_dkx")), "kyky": ((-1, "dg_dky"), (-1, "df_dky")),
        "kykx": ((1, "dg_dky"), (-1, "df_dky")), "kxky": ((-1, "dg_dkx"), (-1, "df_dkx"))},
    4: {"kxkx": ((-1, "df_dkx"), (-1, "dg_dkx")), "kyky": ((-1, "df_dky"), (1, "dg_dky")),
        "kykx": ((-1, "dg_dky"), (-1, "df_dky")), "kxky": ((-1, "df_dkx"), (1, "dg_dkx"))},
}


def _printed_block(name, k, params):
    p, r = params.p, params.r
    up, um = _u_pm(k)
    th = _theta(up if name.startswith("df") else um, r)
    s, c = np.sin(th), np.cos(th)
    base = 1.0 - p * s * s
    scale = (r + 1) ** 2 / 16.0
    s1, s2 = _PRINTED_SIGNS[name]
    return float(s1 * np.sqrt(p) * s * scale / np.sqrt(base) + s2 * p * np.sqrt(p) * c * c * s * scale / base ** 1.5)


def hessian_terms(k, params: BiasParams) -> HessianTerms:
    blocks = {name: _printed_block(name, k, params) for name in _PRINTED_SIGNS}
    assembled = {
        j: {term: float(sum(coef * blocks[b] for coef, b in combo)) for term, combo in terms.items()}
        for j, terms in _PRINTED_ASSEMBLY.items()
    }
    return HessianTerms(assembled=assembled, **blocks)


def f_pinned(k, params: BiasParams):
    """``sqrt(p) cos(m u+) ((r+1)/4) / sqrt(1 - p sin^2(m u+))`` with ``m = (r+1)/2``."""
    p, r = params.p, params.r
    th = _theta(_u_pm(k)[0], r)
    return np.sqrt(p) * np.cos(th) * (r + 1) / 4.0 / np.sqrt(1.0 - p * np.sin(th) ** 2)


def g_pinned(k, params: BiasParams):
    """Same as :func:`f_pinned` with ``u-`` in place of ``u+``."""
    p, r = params.p, params.r
    th = _theta(_u_pm(k)[1], r)
    return np.sqrt(p) * np.cos(th) * (r + 1) / 4.0 / np.sqrt(1.0 - p * np.sin(th) ** 2)


def _fd_partial(fn, k, axis, h):
    e = np.zeros(2)
    e[axis] = h
    k = np.asarray(k, dtype=np.float64)
    return (fn(k + e) - fn(k - e)) / (2.0 * h)


def hessian_audit(params: BiasParams, n_points: int = 100, h: float = 1e-5, tol: float = 1e-5,
                  seed: int = 0) -> dict:
    """
    Compare each printed block with central differences of the pinned ``f``/``g``
    and each assembled second derivative with central differences of
    :func:`grad_w_analytic`. Returns per-item ``{"max_error", "matches_fd"}``.
    """
    rng = np.random.default_rng(seed)
    ks = rng.uniform(-np.pi, np.pi, size=(n_points, 2))
    fns = {
        "df_dkx": (lambda q: f_pinned(q, params), 0),
        "df_dky": (lambda q: f_pinned(q, params), 1),
        "dg_dkx": (lambda q: g_pinned(q, params), 0),
        "dg_dky": (lambda q: g_pinned(q, params), 1),
    }
    block_err = dict.fromkeys(fns, 0.0)
    term_err = {j: dict.fromkeys(("kxkx", "kyky", "kykx", "kxky"), 0.0) for j in (1, 2, 3, 4)}
    for k in ks:
        ht = hessian_terms(k, params)
        blocks = ht.blocks()
        for name, (fn, axis) in fns.items():
            block_err[name] = max(block_err[name], float(abs(blocks[name] - _fd_partial(fn, k, axis, h))))
        for j in (1, 2, 3, 4):
            gx = lambda q, j=j: grad_w_analytic(j, q, params)[0]  # noqa: E731
            gy = lambda q, j=j: grad_w_analytic(j, q, params)[1]  # noqa: E731
            fd = {
                "kxkx": _fd_partial(gx, k, 0, h),
                "kyky": _fd_partial(gy, k, 1, h),
                "kykx": _fd_partial(gx, k, 1, h),  # d/dky of dw/dkx
                "kxky": _fd_partial(gy, k, 0, h),  # d/dkx of dw/dky
            }
            for term, val in ht.assembled[j].items():
                term_err[j][term] = max(term_err[j][term], float(abs(val - fd[term])))
    return {
        "n_points": n_points,
        "h": h,
        "tolerance": tol,
        "blocks": {b: {"max_error": e, "matches_fd": bool(e < tol)} for b, e in block_err.items()},
        "assembled": {
            str(j): {t: {"max_error": e, "matches_fd": bool(e < tol)} for t, e in terms.items()}
            for j, terms in term_err.items()
        },
    }


def gradient_fd_audit(params: BiasParams, n_points: int = 200, h: float = 1e-6, seed: int = 0) -> dict:
    """Max gap between :func:`grad_w_analytic` and central differences of the phase surfaces."""
    rng = np.random.default_rng(seed)
    out = {}
    for j in (1, 2, 3, 4):
        ks = rng.uniform(-np.pi, np.pi, size=(n_points, 2))
        err = 0.0
        for k in ks:
            g = grad_w_analytic(j, k, params)
            for axis in (0, 1):
                fd = _fd_partial(lambda q: surface_phase(j, q, params), k, axis, h)
                err = max(err, float(abs(g[axis] - fd)))
        out[str(j)] = err
    return out


@dataclass
class RecurrenceCondition:
    recurrent_by_paper: bool
    radicand: float


def recurrence_condition(params: BiasParams) -> RecurrenceCondition:
    """Evaluate the saddle-point radicand and whether it is ``<= 1``."""
    rad = _radicand(params)
    return RecurrenceCondition(recurrent_by_paper=bool(rad <= 1.0), radicand=rad)


@dataclass
class VelocityProfile:
    """Peak velocities ``(vx, vy)`` in lattice units per step, labels as printed."""

    R: tuple
    L: tuple
    U: tuple
    D: tuple

    def items(self):
        return (("R", self.R), ("L", self.L), ("U", self.U), ("D", self.D))

    def points(self) -> np.ndarray:
        return np.array([self.R, self.L, self.U, self.D], dtype=np.float64)

    def to_dict(self):
        return {lab: [float(v[0]), float(v[1])] for lab, v in self.items()}


def peak_velocities_analytic(params: BiasParams) -> VelocityProfile:
    p, r = params.p, params.r
    lin = 0.5 * (r - 1)
    spread = np.sqrt(p) * 0.5 * (r + 1)
    return VelocityProfile(
        R=(lin + spread, 0.0),
        L=(lin, spread),
        U=(lin - spread, 0.0),
        D=(lin, -spread),
    )


@dataclass
class HullResult:
    inside: bool
    degenerate: bool = False

    def __bool__(self):
        return self.inside


def velocity_recurrence_criterion(profile: VelocityProfile, tol: float = 1e-12) -> HullResult:
    """Is the origin strictly inside the convex hull of the four velocity points?"""
    pts = profile.points()
    try:
        hull = ConvexHull(pts)
    except QhullError:
        return HullResult(inside=False, degenerate=True)
    if hull.volume <= tol:
        return HullResult(inside=False, degenerate=True)
    # facet equations n.x + b <= 0 inside; at the origin this is just b
    return HullResult(inside=bool(np.all(hull.equations[:, -1] < -tol)))


def _second_derivative_roots(params: BiasParams, n_scan: int = 721):
    u = np.linspace(-np.pi, np.pi, n_scan)
    vals = w_second(u, params, 1)
    roots = [float(x) for x, v in zip(u, vals) if abs(v) < 1e-14]
    for i in range(n_scan - 1):
        if vals[i] * vals[i + 1] < 0.0:
            roots.append(brentq(lambda x: float(w_second(x, params, 1)), u[i], u[i + 1], xtol=1e-15))
    roots.sort()
    merged = []
    for x in roots:
        if not merged or abs(x - merged[-1]) > 1e-9:
            merged.append(x)
    return merged


def modified_phase_velocities(params: BiasParams):
    """
    Gradients of each surface at the points where its whole Hessian vanishes
    (``w_a''(u+) = w_b''(u-) = 0``), found by root bracketing along ``u``.
    Returns ``[(j, (kx, ky), (vx, vy)), ...]`` for points inside ``[-pi, pi]^2``.
    """
    roots = _second_derivative_roots(params)
    out = []
    for j in (1, 2, 3, 4):
        for up in roots:
            for um in roots:
                k = (up + um, up - um)
                if abs(k[0]) > np.pi + 1e-12 or abs(k[1]) > np.pi + 1e-12:
                    continue
                v = grad_w_analytic(j, k, params)
                out.append((j, (float(k[0]), float(k[1])), (float(v[0]), float(v[1]))))
    return out


def saddle_audit(params: BiasParams, seeds: int = 16) -> dict:
    """Report with fields ``p, r, analytic_saddles, numeric_saddles, extras,
    velocity_profile, hull_criterion, hessian_audit``."""
    ana = saddle_points_analytic(params)
    numeric = []
    for j in (1, 2, 3, 4):
        numeric.extend(saddle_points_numeric(j, params, seeds))
    extras = [s for s in numeric if all(_periodic_gap(s.k0, a.k0) >= 1e-6 for a in ana.points)]
    profile = peak_velocities_analytic(params)
    hull = velocity_recurrence_criterion(profile)
    hess = hessian_audit(params)
    return {
        "p": params.p,
        "r": params.r,
        "radicand": ana.radicand,
        "complex_valued": ana.complex_valued,
        "recurrent_by_paper": recurrence_condition(params).recurrent_by_paper,
        "analytic_saddles": [s.to_dict() for s in ana.points],
        "numeric_saddles": [s.to_dict() for s in numeric],
        "extras": [s.to_dict() for s in extras],
        "velocity_profile": profile.to_dict(),
        "hull_criterion": hull.inside,
        "hull_degenerate": hull.degenerate,
        "hessian_audit": {
            "matches_fd": {
                **{b: v["matches_fd"] for b, v in hess["blocks"].items()},
                **{f"w{j}_{t}": v["matches_fd"] for j, terms in hess["assembled"].items() for t, v in terms.items()},
            },
            "detail": hess,
        },
    }
