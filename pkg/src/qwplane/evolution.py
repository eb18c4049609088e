"""
Position-space evolution of the walk on a growing rectangular window.

One step is ``U = S (I (x) C)``: the coin acts on every site, then chirality R
moves ``+r`` in x, L moves ``-1`` in x, U moves ``+r`` in y and D moves ``-1``
in y. In gather form

    psi(x, y, t) = C_R psi(x-r, y) + C_L psi(x+1, y) + C_U psi(x, y-r) + C_D psi(x, y+1)

The window after ``t`` steps from a localized start is ``[-t, r t]`` on each
axis. The inner loop lives in :mod:`qwplane._backend`.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from . import _backend
from .coin import BiasParams, CoinMatrix
from .errors import NonUnitaryError, NormalizationError, ParameterError

__all__ = [
    "AmplitudeField",
    "ProbabilityField",
    "new_localized",
    "step",
    "evolve",
    "probabilities",
    "probability_at",
    "total_probability",
    "mean_position",
    "peak_positions",
    "probability_csv",
]

PROBABILITY_FLOOR = 1e-300


@dataclass(frozen=True)
class AmplitudeField:
    """
    Amplitudes ``amps[c, i, j]`` for chirality ``c`` at site
    ``(x_min + i, y_min + j)`` after ``t`` steps.
    """

    amps: np.ndarray
    x_min: int
    y_min: int
    t: int
    params: BiasParams

    @property
    def shape(self):
        return self.amps.shape[1:]

    @property
    def x_max(self) -> int:
        return self.x_min + self.amps.shape[1] - 1

    @property
    def y_max(self) -> int:
        return self.y_min + self.amps.shape[2] - 1

    def xs(self) -> np.ndarray:
        return np.arange(self.x_min, self.x_max + 1)

    def ys(self) -> np.ndarray:
        return np.arange(self.y_min, self.y_max + 1)

    def amplitude(self, x: int, y: int) -> np.ndarray:
        i, j = x - self.x_min, y - self.y_min
        if 0 <= i < self.amps.shape[1] and 0 <= j < self.amps.shape[2]:
            return self.amps[:, i, j].copy()
        return np.zeros(4, dtype=np.complex128)


@dataclass(frozen=True)
class ProbabilityField:
    prob: np.ndarray
    x_min: int
    y_min: int
    t: int

    def xs(self) -> np.ndarray:
        return np.arange(self.x_min, self.x_min + self.prob.shape[0])

    def ys(self) -> np.ndarray:
        return np.arange(self.y_min, self.y_min + self.prob.shape[1])


def new_localized(params: BiasParams, coin_state) -> AmplitudeField:
    """Walker at the origin with internal state ``coin_state`` at ``t = 0``."""
    psi = np.asarray(coin_state, dtype=np.complex128).reshape(4)
    norm = float(np.vdot(psi, psi).real)
    if abs(norm - 1.0) > 1e-9:
        raise NormalizationError(f"coin state has squared norm {norm:.12g}, expected 1")
    amps = np.zeros((4, 1, 1), dtype=np.complex128)
    amps[:, 0, 0] = psi
    return AmplitudeField(amps=amps, x_min=0, y_min=0, t=0, params=params)


def _coin_array(C: CoinMatrix, force: bool) -> np.ndarray:
    if not C.is_unitary and not force:
        raise NonUnitaryError(
            f"coin ({C.mode.value}) has unitarity defect {C.defect:.3g}; pass force=True to evolve anyway"
        )
    return np.ascontiguousarray(C.entries, dtype=np.float64)


def _step_raw(field: AmplitudeField, coin: np.ndarray, kernels) -> AmplitudeField:
    r = field.params.r
    a = np.ascontiguousarray(field.amps).view(np.float64)
    out = kernels.step_float(a, coin, r).view(np.complex128)
    return AmplitudeField(
        amps=out, x_min=field.x_min - 1, y_min=field.y_min - 1, t=field.t + 1, params=field.params
    )


def step(field: AmplitudeField, C: CoinMatrix, *, force: bool = False, backend=None) -> AmplitudeField:
    """Apply one coin-then-shift step; the window grows by ``r`` on the + sides and 1 on the - sides."""
    return _step_raw(field, _coin_array(C, force), _backend.get(backend))


def evolve(field: AmplitudeField, C: CoinMatrix, steps: int, *, force: bool = False,
           backend=None, callback=None) -> AmplitudeField:
    """
    Apply ``steps`` steps. ``callback(field)`` is invoked after every step when
    given (used to record return probabilities without storing every field).
    """
    if steps < 0:
        raise ParameterError(f"steps must be nonnegative, got {steps}")
    coin = _coin_array(C, force)
    kernels = _backend.get(backend)
    for _ in range(steps):
        field = _step_raw(field, coin, kernels)
        if callback is not None:
            callback(field)
    return field


def probabilities(field: AmplitudeField) -> ProbabilityField:
    a = field.amps
    prob = (a.real ** 2 + a.imag ** 2).sum(axis=0)
    prob[prob < PROBABILITY_FLOOR] = 0.0
    return ProbabilityField(prob=prob, x_min=field.x_min, y_min=field.y_min, t=field.t)


def probability_at(field: AmplitudeField, x: int, y: int) -> float:
    amp = field.amplitude(x, y)
    return float(np.sum(amp.real ** 2 + amp.imag ** 2))


def total_probability(field: AmplitudeField) -> float:
    # np.sum on a contiguous array is pairwise and order-fixed
    return float(np.sum(np.ascontiguousarray(probabilities(field).prob)))


def mean_position(field) -> tuple[float, float]:
    """``(<x>, <y>)`` of the distribution (accepts amplitude or probability fields)."""
    pf = field if isinstance(field, ProbabilityField) else probabilities(field)
    px = pf.prob.sum(axis=1)
    py = pf.prob.sum(axis=0)
    return float(np.dot(pf.xs(), px)), float(np.dot(pf.ys(), py))


def peak_positions(prob: ProbabilityField, threshold_fraction: float = 0.5):
    """
    Local maxima (8-neighbourhood, ties allowed) with ``P >= threshold_fraction * max P``.

    Adjacent maxima are merged into one cluster, represented by its largest
    value; ties inside a cluster go to the lexicographically smallest
    ``(x, y)``. Returns ``[(x, y, P), ...]`` sorted by ``(x, y)``.
    """
    if not (0.0 < threshold_fraction <= 1.0):
        raise ParameterError(f"threshold_fraction must lie in (0, 1], got {threshold_fraction}")
    P = prob.prob
    if P.size == 0 or P.max() <= 0.0:
        return []
    padded = np.pad(P, 1, mode="constant", constant_values=-np.inf)
    nx, ny = P.shape
    is_max = np.ones_like(P, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            is_max &= P >= padded[1 + di:1 + di + nx, 1 + dj:1 + dj + ny]
    is_max &= P >= threshold_fraction * P.max()
    is_max &= P > 0.0

    cand = [tuple(ij) for ij in np.argwhere(is_max)]
    cand_set = set(cand)
    seen = set()
    peaks = []
    for start in cand:  # argwhere order is lexicographic in (i, j)
        if start in seen:
            continue
        cluster = []
        stack = [start]
        seen.add(start)
        while stack:
            i, j = stack.pop()
            cluster.append((i, j))
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    nb = (i + di, j + dj)
                    if nb in cand_set and nb not in seen:
                        seen.add(nb)
                        stack.append(nb)
        best = min(cluster, key=lambda ij: (-P[ij], ij[0], ij[1]))
        peaks.append((int(prob.x_min + best[0]), int(prob.y_min + best[1]), float(P[best])))
    peaks.sort(key=lambda q: (q[0], q[1]))
    return peaks


def probability_csv(prob: ProbabilityField, export_floor: float = 1e-15) -> str:
    """CSV ``x,y,p`` with one row per site where ``P > export_floor``."""
    buf = io.StringIO()
    buf.write("x,y,p\n")
    P = prob.prob
    for i, j in np.argwhere(P > export_floor):
        buf.write(f"{prob.x_min + i},{prob.y_min + j},{P[i, j]:.17g}\n")
    return buf.getvalue()
