"""
Momentum-space machinery.

Conventions
-----------
Forward transform ``psi~(k) = sum_x psi(x) exp(+i k.x)``; inverse
``psi(x) = (1/N^2) sum_k psi~(k) exp(-i k.x)`` on the grid
``k_m = -pi + 2 pi m / N``. For a walker started at the origin the pair is
exact (no quadrature error) as long as the lattice support fits in ``N``.

The one-step operator is ``U~(k) = diag(e^{i r kx}, e^{-i kx}, e^{i r ky}, e^{-i ky}) C``
(``model="lattice"``, derived from the shift). ``model="product"`` selects the
separable operator ``[D(u+) H] (x) [D(u-) H]`` with ``u+- = (kx +- ky)/2`` and
``D(u) = diag(e^{i r u}, e^{-i u})``; the closed-form phases, eigenvalues and
eigenvectors below are exact for that operator, and it is kept as a diagnostic
reference for the formula audit.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _backend
from .coin import BiasParams, CoinMatrix, build_coin
from .errors import AliasingError, NonUnitaryError, ParameterError
from .evolution import AmplitudeField

__all__ = [
    "MODELS",
    "k_grid",
    "shift_phases",
    "momentum_operator",
    "phase_w",
    "eigenvalues_analytic",
    "normalization_factors",
    "AnalyticEigenvectors",
    "eigenvectors_analytic",
    "eigendecompose_numeric",
    "multiset_distance",
    "MomentumState",
    "fourier_evolve",
    "forward_transform",
    "inverse_transform",
    "amplitude_at_origin_series",
    "min_grid_full",
    "min_grid_origin",
    "spectral_audit",
]

MODELS = ("lattice", "product")
_PERMS = np.array(list(itertools.permutations(range(4))))
_CHUNK = 1 << 16


def k_grid(n: int) -> np.ndarray:
    return -np.pi + 2.0 * np.pi * np.arange(n) / n


def _check_model(model):
    if model not in MODELS:
        raise ParameterError(f"model must be one of {MODELS}, got {model!r}")


def shift_phases(params: BiasParams, kx, ky, model: str = "lattice") -> np.ndarray:
    """Diagonal of the shift in momentum space, shape ``(..., 4)``."""
    _check_model(model)
    r = params.r
    kx = np.asarray(kx, dtype=np.float64)
    ky = np.asarray(ky, dtype=np.float64)
    if model == "lattice":
        ph = (r * kx, -kx, r * ky, -ky)
    else:
        up, um = 0.5 * (kx + ky), 0.5 * (kx - ky)
        ph = (r * (up + um), r * up - um, -up + r * um, -(up + um))
    return np.exp(1j * np.stack(np.broadcast_arrays(*ph), axis=-1))


def momentum_operator(params: BiasParams, k, C: CoinMatrix | None = None,
                      model: str = "lattice") -> np.ndarray:
    """
    ``U~(k)`` for ``k = (kx, ky)``. Array-valued ``kx, ky`` give a stack of
    shape ``(..., 4, 4)``.
    """
    if C is None:
        C = build_coin(params)
    kx, ky = k
    d = shift_phases(params, kx, ky, model)
    return d[..., :, None] * C.entries


def phase_w(u, params: BiasParams, branch: int):
    """Branch-1/branch-2 dispersion phase of argument ``u``."""
    r, p = params.r, params.p
    u = np.asarray(u, dtype=np.float64)
    a = np.arcsin(np.sqrt(p) * np.sin(0.5 * (r + 1) * u))
    lin = 0.5 * (r - 1) * u
    if branch == 1:
        out = lin + a
    elif branch == 2:
        out = lin - np.pi - a
    else:
        raise ParameterError(f"branch must be 1 or 2, got {branch}")
    return out if out.ndim else float(out)


# surface j -> (branch at u+, branch at u-)
SURFACE_BRANCHES = {1: (1, 1), 2: (1, 2), 3: (2, 1), 4: (2, 2)}


def _u_pm(k):
    kx, ky = (np.asarray(c, dtype=np.float64) for c in k)
    return 0.5 * (kx + ky), 0.5 * (kx - ky)


def surface_phase(j: int, k, params: BiasParams):
    """``w_j(k) = w_a(u+) + w_b(u-)`` for surface ``j`` in 1..4."""
    a, b = SURFACE_BRANCHES[j]
    up, um = _u_pm(k)
    return phase_w(up, params, a) + phase_w(um, params, b)


def eigenvalues_analytic(k, params: BiasParams) -> np.ndarray:
    """The four closed-form eigenvalues, ordered ``lambda_1..lambda_4``; shape ``(..., 4)``."""
    return np.exp(1j * np.stack([surface_phase(j, k, params) for j in (1, 2, 3, 4)], axis=-1))


def normalization_factors(k, params: BiasParams):
    """``(n1(+), n1(-), n2(+), n2(-))`` evaluated at ``(kx +- ky)(r+1)/4``."""
    p, r = params.p, params.r
    kx, ky = (np.asarray(c, dtype=np.float64) for c in k)
    sp = np.sqrt(p)
    out = []
    for which in (1, 2):
        for sign in (1.0, -1.0):
            z = (kx + sign * ky) * (r + 1) / 4.0
            a = np.arcsin(sp * np.sin(z))
            if which == 1:
                out.append(2.0 - 2.0 * sp * np.cos(z - a))
            else:
                out.append(2.0 + 2.0 * sp * np.cos(z + a))
    return tuple(v if v.ndim else float(v) for v in out)


@dataclass
class AnalyticEigenvectors:
    """
    Closed-form eigenvectors at one ``k`` (rows ``vectors[j-1]``, unit norm) and
    their audit against a numerically built operator.
    """

    k: tuple
    raw: np.ndarray
    vectors: np.ndarray
    eigenvalues: np.ndarray
    n_products: np.ndarray
    norm_vs_n_product: float
    residuals: np.ndarray
    gram_offdiag_max: float
    model: str = "lattice"


def _raw_eigenvectors(k, params: BiasParams) -> np.ndarray:
    p, r = params.p, params.r
    kx = float(k[0])
    up, um = _u_pm(k)
    up, um = float(up), float(um)
    sp, sq = np.sqrt(p), np.sqrt(1.0 - p)
    vecs = []
    for j in (1, 2, 3, 4):
        a, b = SURFACE_BRANCHES[j]
        e_plus = np.exp(1j * (phase_w(up, params, a) - r * up))
        e_minus = np.exp(1j * (phase_w(um, params, b) - r * um))
        both = np.exp(1j * (phase_w(up, params, a) + phase_w(um, params, b) - r * kx))
        vecs.append([
            1.0 - p,
            -sp * sq + sq * e_minus,
            -sp * sq + sq * e_plus,
            p - sp * e_minus - sp * e_plus + both,
        ])
    return np.array(vecs, dtype=np.complex128)


def eigenvectors_analytic(k, params: BiasParams, C: CoinMatrix | None = None,
                          model: str = "lattice") -> AnalyticEigenvectors:
    """
    Evaluate the closed-form eigenvectors at ``k`` and measure
    ``|U~ v - lambda v| / |v|`` against ``momentum_operator(model)`` with the
    matching closed-form eigenvalue. Vectors are returned normalized; the
    ``n1``/``n2`` products are reported next to the raw squared norms.
    """
    raw = _raw_eigenvectors(k, params)
    n1p, n1m, n2p, n2m = normalization_factors(k, params)
    nplus = {1: n1p, 2: n2p}
    nminus = {1: n1m, 2: n2m}
    nprod = np.array([nplus[SURFACE_BRANCHES[j][0]] * nminus[SURFACE_BRANCHES[j][1]] for j in (1, 2, 3, 4)])
    norms = np.linalg.norm(raw, axis=1)
    vecs = raw / norms[:, None]
    lam = eigenvalues_analytic(k, params)
    U = momentum_operator(params, k, C, model)
    res = np.linalg.norm(vecs @ U.T - lam[:, None] * vecs, axis=1)
    gram = vecs.conj() @ vecs.T
    off = np.abs(gram - np.diag(np.diag(gram))).max()
    return AnalyticEigenvectors(
        k=(float(k[0]), float(k[1])),
        raw=raw,
        vectors=vecs,
        eigenvalues=lam,
        n_products=nprod,
        norm_vs_n_product=float(np.max(np.abs(norms ** 2 - nprod))),
        residuals=res,
        gram_offdiag_max=float(off),
        model=model,
    )


def eigendecompose_numeric(U, tol: float = 1e-10):
    """
    Eigenvalues and orthonormal eigenvectors (columns) of a unitary 4x4 matrix.

    Uses the complex Schur form, which is diagonal for normal matrices, so
    degenerate eigenspaces come back with an orthonormal basis.
    """
    U = np.asarray(U, dtype=np.complex128)
    defect = np.abs(U @ U.conj().T - np.eye(U.shape[0])).max()
    if defect > tol:
        raise NonUnitaryError(f"matrix is not unitary (defect {defect:.3g})")
    T, Z = scipy.linalg.schur(U, output="complex")
    lam = np.diag(T).copy()
    lam /= np.abs(lam)
    return lam, Z


def _eig_batch(U):
    lam, V = np.linalg.eig(U)
    lam = lam / np.abs(lam)
    V = V / np.linalg.norm(V, axis=-2, keepdims=True)
    return lam, V


def multiset_distance(a, b) -> np.ndarray:
    """
    Largest pairwise gap under the minimum-total-cost matching of two
    4-element multisets (brute force over the 24 permutations). Broadcasts over
    leading axes.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    diffs = np.abs(a[..., None, :] - b[..., _PERMS])  # (..., 24, 4)
    best = np.argmin(diffs.sum(axis=-1), axis=-1)
    chosen = np.take_along_axis(diffs, best[..., None, None], axis=-2)[..., 0, :]
    return chosen.max(axis=-1)


@dataclass
class MomentumState:
    grid: np.ndarray  # (N, N, 4), index (m_x, m_y)
    t: int
    n: int
    params: BiasParams
    model: str = "lattice"

    @property
    def k(self) -> np.ndarray:
        return k_grid(self.n)


def min_grid_full(params: BiasParams, t: int) -> int:
    """Smallest grid holding the full support ``[-t, r t]`` without aliasing."""
    return (params.r + 1) * t + 1


def min_grid_origin(params: BiasParams, t: int) -> int:
    """Smallest grid for which no other lattice site aliases onto the origin."""
    return max(params.r, 1) * t + 1


def _check_position_model(params, model):
    _check_model(model)
    if model == "product" and params.r != 1:
        raise ParameterError("position-space propagation of the product model needs r = 1")


def _spectral_blocks(params, C, n, model, chunk=_CHUNK):
    """Yield ``(row_slice, lam, V)`` over the ``n x n`` grid, ``chunk`` points at a time."""
    k = k_grid(n)
    rows = max(1, chunk // n)
    for start in range(0, n, rows):
        sl = slice(start, min(start + rows, n))
        KX, KY = np.meshgrid(k[sl], k, indexing="ij")
        U = momentum_operator(params, (KX, KY), C, model)
        lam, V = _eig_batch(U)
        yield sl, lam, V


def fourier_evolve(initial, params: BiasParams, C: CoinMatrix | None, t: int, n: int,
                   model: str = "lattice") -> MomentumState:
    """
    ``psi~(k, t) = sum_j lambda_j^t c_j v_j`` at every grid point, with
    ``c = V^{-1} psi~(k, 0)`` from a numerical eigendecomposition and
    ``psi~(k, 0)`` the initial coin state (walker at the origin).
    """
    _check_position_model(params, model)
    if t < 0:
        raise ParameterError(f"t must be nonnegative, got {t}")
    need = min_grid_full(params, t)
    if n < need:
        raise AliasingError(f"grid size {n} < {need} required for t={t}, r={params.r}")
    if C is None:
        C = build_coin(params)
    psi0 = np.asarray(initial, dtype=np.complex128).reshape(4)
    grid = np.empty((n, n, 4), dtype=np.complex128)
    if t == 0:
        grid[...] = psi0
        return MomentumState(grid=grid, t=0, n=n, params=params, model=model)
    for sl, lam, V in _spectral_blocks(params, C, n, model):
        c = np.linalg.solve(V, np.broadcast_to(psi0, lam.shape)[..., None])[..., 0]
        zt = np.exp(1j * t * np.angle(lam))
        grid[sl] = np.einsum("...cj,...j->...c", V, zt * c)
    return MomentumState(grid=grid, t=t, n=n, params=params, model=model)


def _window(params, t):
    return -t, params.r * t


def inverse_transform(ms: MomentumState) -> AmplitudeField:
    """Exact inverse transform onto the window ``[-t, r t]^2``."""
    _check_position_model(ms.params, ms.model)
    n, t = ms.n, ms.t
    lo, hi = _window(ms.params, t)
    xs = np.arange(lo, hi + 1)
    # psi(x) = (1/N^2) sum_m psi~_m e^{i pi x} e^{-2 pi i m x / N} = e^{i pi x} fft(psi~)[x mod N] / N^2
    F = np.fft.fft2(ms.grid, axes=(0, 1)) / (n * n)
    idx = np.mod(xs, n)
    sign = np.exp(1j * np.pi * xs)
    block = F[np.ix_(idx, idx)] * sign[:, None, None] * sign[None, :, None]
    amps = np.ascontiguousarray(np.moveaxis(block, -1, 0))
    return AmplitudeField(amps=amps, x_min=lo, y_min=lo, t=t, params=ms.params)


def forward_transform(field: AmplitudeField, n: int) -> np.ndarray:
    """Grid ``(N, N, 4)`` of ``sum_x psi(x) exp(+i k.x)``; the field must fit in ``N``."""
    nx, ny = field.shape
    if nx > n or ny > n:
        raise AliasingError(f"field window {nx}x{ny} does not fit in grid {n}")
    g = np.zeros((n, n, 4), dtype=np.complex128)
    xs, ys = field.xs(), field.ys()
    sx = np.exp(-1j * np.pi * xs)
    sy = np.exp(-1j * np.pi * ys)
    block = np.moveaxis(field.amps, 0, -1) * sx[:, None, None] * sy[None, :, None]
    g[np.ix_(np.mod(xs, n), np.mod(ys, n))] = block
    return np.fft.ifft2(g, axes=(0, 1)) * (n * n)


def amplitude_at_origin_series(initial, params: BiasParams, C: CoinMatrix | None, t_list,
                               n: int | None = None, model: str = "lattice",
                               backend=None) -> np.ndarray:
    """
    ``psi(0, 0, t)`` for each ``t`` in ``t_list``, shape ``(len(t_list), 4)``.

    Only the origin is reconstructed, so the grid need only keep other lattice
    sites from aliasing onto it (``N >= max(r, 1) t_max + 1``). The time loop
    runs in the compiled kernel when available.
    """
    _check_model(model)
    times = np.asarray(list(t_list), dtype=np.int64)
    if times.size == 0:
        return np.zeros((0, 4), dtype=np.complex128)
    if np.any(times < 0):
        raise ParameterError("times must be nonnegative")
    order = np.argsort(times, kind="stable")
    sorted_t = np.ascontiguousarray(times[order])
    need = min_grid_origin(params, int(sorted_t[-1]))
    if n is None:
        n = need
    if n < need:
        raise AliasingError(f"grid size {n} < {need} required for t_max={sorted_t[-1]}, r={params.r}")
    if C is None:
        C = build_coin(params)
    kernels = _backend.get(backend)
    psi0 = np.asarray(initial, dtype=np.complex128).reshape(4)
    total = np.zeros((sorted_t.size, 8), dtype=np.float64)
    for _, lam, V in _spectral_blocks(params, C, n, model):
        lam = lam.reshape(-1, 4)
        V = V.reshape(-1, 4, 4)
        c = np.linalg.solve(V, np.broadcast_to(psi0, lam.shape)[..., None])[..., 0]
        W = np.ascontiguousarray(np.swapaxes(V, -1, -2) * c[..., None])  # (pts, j, comp)
        theta = np.ascontiguousarray(np.angle(lam))
        total += kernels.origin_series(theta, W.view(np.float64), sorted_t)
    amps = total.view(np.complex128) / (n * n)
    out = np.empty_like(amps)
    out[order] = amps
    return out


def _max_abs_field_diff(a: AmplitudeField, b: AmplitudeField) -> float:
    if (a.x_min, a.y_min, a.shape) != (b.x_min, b.y_min, b.shape):
        raise ValueError("fields cover different windows")
    return float(np.abs(a.amps - b.amps).max())


def fourier_oracle_error(params: BiasParams, initial, t: int, n: int | None = None,
                         C: CoinMatrix | None = None) -> float:
    """Max amplitude gap between direct evolution and Fourier propagation at ``t``."""
    from .evolution import evolve, new_localized
    if C is None:
        C = build_coin(params)
    n = n or min_grid_full(params, t)
    direct = evolve(new_localized(params, initial), C, t)
    fourier = inverse_transform(fourier_evolve(initial, params, C, t, n))
    return _max_abs_field_diff(direct, fourier)


def eigenvalue_grid_audit(params: BiasParams, n: int = 64, C: CoinMatrix | None = None,
                          model: str = "lattice") -> dict:
    """Closed-form vs numerical eigenvalues and determinant checks on an ``n x n`` grid."""
    if C is None:
        C = build_coin(params)
    k = k_grid(n)
    KX, KY = np.meshgrid(k, k, indexing="ij")
    U = momentum_operator(params, (KX, KY), C, model)
    lam_num, V = _eig_batch(U)
    lam_ana = eigenvalues_analytic((KX, KY), params)
    res = np.linalg.norm(U @ V - V * lam_num[..., None, :], axis=-2)
    r = params.r
    det_num = np.linalg.det(U)
    det_expected = np.exp(1j * (r - 1) * (KX + KY)) if model == "lattice" else np.exp(2j * (r - 1) * KX)
    unit = np.abs(U @ np.conj(np.swapaxes(U, -1, -2)) - np.eye(4)).max()
    return {
        "eigenvalue_max_mismatch": float(multiset_distance(lam_ana, lam_num).max()),
        "numeric_residual_max": float(res.max()),
        "numeric_modulus_max_error": float(np.abs(np.abs(np.linalg.eigvals(U)) - 1).max()),
        "unitarity_max_defect": float(unit),
        "det_identity_max_error": float(np.abs(det_num - det_expected).max()),
        "analytic_det_max_error": float(np.abs(np.prod(lam_ana, axis=-1) - det_num).max()),
    }


def eigenvector_grid_audit(params: BiasParams, n: int = 16, C: CoinMatrix | None = None,
                           model: str = "lattice") -> dict:
    k = k_grid(n) + np.pi / n  # offset avoids exact degeneracies on the grid lines
    res, gram, normgap = 0.0, 0.0, 0.0
    for kx in k:
        for ky in k:
            ev = eigenvectors_analytic((kx, ky), params, C, model)
            res = max(res, float(ev.residuals.max()))
            gram = max(gram, ev.gram_offdiag_max)
            normgap = max(normgap, ev.norm_vs_n_product)
    return {
        "eigenvector_max_residual": res,
        "eigenvector_gram_offdiag_max": gram,
        "eigenvector_norm_vs_n_product_max": normgap,
    }


def spectral_audit(params: BiasParams, grid_n: int, *, audit_n: int = 64, oracle_t: int | None = None,
                   initial=(1, 0, 0, 0)) -> dict:
    """
    Audit report with the fields ``p, r, grid_n, eigenvalue_max_mismatch,
    eigenvector_max_residual, det_identity_max_error, fourier_oracle_max_error``
    plus supporting diagnostics (``product_model_*`` rows repeat the closed-form
    checks against the separable reference operator).
    """
    C = build_coin(params)
    if oracle_t is None:
        oracle_t = min(64, (grid_n - 1) // (params.r + 1))
    ev = eigenvalue_grid_audit(params, audit_n, C)
    vec = eigenvector_grid_audit(params, 16, C)
    ev_prod = eigenvalue_grid_audit(params, audit_n, C, model="product")
    vec_prod = eigenvector_grid_audit(params, 16, C, model="product")
    report = {
        "p": params.p,
        "r": params.r,
        "grid_n": int(grid_n),
        "eigenvalue_max_mismatch": ev["eigenvalue_max_mismatch"],
        "eigenvector_max_residual": vec["eigenvector_max_residual"],
        "det_identity_max_error": ev["det_identity_max_error"],
        "fourier_oracle_max_error": fourier_oracle_error(params, initial, oracle_t, grid_n, C),
        "fourier_oracle_t": int(oracle_t),
        "audit_grid_n": int(audit_n),
        "analytic_det_max_error": ev["analytic_det_max_error"],
        "numeric_residual_max": ev["numeric_residual_max"],
        "unitarity_max_defect": ev["unitarity_max_defect"],
        "eigenvector_gram_offdiag_max": vec["eigenvector_gram_offdiag_max"],
        "eigenvector_norm_vs_n_product_max": vec["eigenvector_norm_vs_n_product_max"],
        "product_model_eigenvalue_max_mismatch": ev_prod["eigenvalue_max_mismatch"],
        "product_model_eigenvector_max_residual": vec_prod["eigenvector_max_residual"],
        "product_model_det_identity_max_error": ev_prod["det_identity_max_error"],
    }
    return report
