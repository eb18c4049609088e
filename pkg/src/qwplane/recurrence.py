"""
Return probabilities, decay-exponent fits, Polya partial products and the
mean-position probe.

The walk can only be back at the origin after ``t`` steps when the numbers of
long and short moves balance, which forces ``t`` to be a multiple of
``r + 1``. Series therefore carry only those admissible times.
"""
from __future__ import annotations

import enum
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta

from .coin import (BiasParams, CoinMatrix, CoinMode, InitialCoinSpec, StateVariant, build_coin,
                   build_initial_state)
from .errors import InsufficientPointsError, ParameterError
from .evolution import evolve, mean_position, new_localized, probabilities, probability_at
from .spectral import amplitude_at_origin_series
from .stationary import peak_velocities_analytic, velocity_recurrence_criterion

__all__ = [
    "Engine",
    "ReturnSeries",
    "DecayFit",
    "PolyaEstimate",
    "MeanTrajectory",
    "ScanRow",
    "SCAN_COLUMNS",
    "admissible_times",
    "return_probability_series",
    "fit_decay_exponent",
    "polya_partial_products",
    "mean_value_probe",
    "conjecture_scan",
    "default_fit_window",
]

ENVELOPE_RUN = 4
MIN_FIT_POINTS = 8

SCAN_COLUMNS = ("p", "r", "a", "phi", "variant", "t_max", "eta", "eta_residual", "polya_partial",
                "mean_x_over_t", "mean_y_over_t", "hull_criterion")


class Engine(str, enum.Enum):
    DIRECT = "direct"
    FOURIER = "fourier"


@dataclass(frozen=True)
class ReturnSeries:
    """``p0 = P(0, 0, t)`` at the admissible times ``t = 0, r+1, 2(r+1), ...``."""

    t: np.ndarray
    p0: np.ndarray
    params: BiasParams | None = None
    initial: InitialCoinSpec | None = None
    engine: Engine | None = None

    @property
    def entries(self):
        return list(zip(self.t.tolist(), self.p0.tolist()))

    def __len__(self):
        return int(self.t.size)

    @classmethod
    def from_arrays(cls, t, p0, params=None, initial=None):
        """Wrap arbitrary ``(t, p0)`` samples, e.g. synthetic calibration data."""
        t = np.asarray(t, dtype=np.int64)
        p0 = np.asarray(p0, dtype=np.float64)
        if t.shape != p0.shape or t.ndim != 1:
            raise ParameterError("t and p0 must be one-dimensional and of equal length")
        return cls(t=t, p0=p0, params=params, initial=initial)


@dataclass(frozen=True)
class DecayFit:
    """
    Power law ``p0(t) ~ A t^(-eta)`` fitted in log-log space.

    ``intercept`` is ``log A``; ``residual`` is the RMS of the log-log
    residuals of the envelope points; ``exponent_stderr`` is the standard
    error of the slope.
    """

    exponent: float
    intercept: float
    window: tuple
    residual: float
    exponent_stderr: float
    n_points: int
    envelope_t: np.ndarray = field(repr=False)
    envelope_p0: np.ndarray = field(repr=False)

    def to_dict(self):
        return {
            "eta": self.exponent,
            "intercept": self.intercept,
            "window": list(self.window),
            "residual": self.residual,
            "eta_stderr": self.exponent_stderr,
            "n_points": self.n_points,
        }


@dataclass(frozen=True)
class PolyaEstimate:
    """
    Running products ``prod_{1 <= t <= T} (1 - p0(t))`` and the partial Polya
    numbers ``1 - prod``. ``extrapolated`` carries a tail-corrected estimate of
    the limit (``None`` when no decay fit is given or the tail diverges).
    """

    T: np.ndarray
    partial_products: np.ndarray
    polya_partial: np.ndarray
    extrapolated: float | None = None
    extrapolated_error: float | None = None
    tail_divergent: bool = False

    @property
    def final(self) -> float:
        return float(self.polya_partial[-1]) if self.polya_partial.size else 0.0

    def to_dict(self):
        return {
            "T_max": int(self.T[-1]) if self.T.size else 0,
            "polya_partial": self.final,
            "extrapolated": self.extrapolated,
            "extrapolated_error": self.extrapolated_error,
            "tail_divergent": self.tail_divergent,
        }


@dataclass(frozen=True)
class MeanTrajectory:
    t: np.ndarray
    mean_x: np.ndarray
    mean_y: np.ndarray
    initial: InitialCoinSpec

    def rows(self):
        return list(zip(self.t.tolist(), self.mean_x.tolist(), self.mean_y.tolist()))


def admissible_times(params: BiasParams, t_max: int) -> np.ndarray:
    return np.arange(0, t_max + 1, params.r + 1, dtype=np.int64)


def _initial_vector(initial):
    if isinstance(initial, InitialCoinSpec):
        return build_initial_state(initial), initial
    return np.asarray(initial, dtype=np.complex128).reshape(4), None


@dataclass
class _DirectRun:
    t: np.ndarray
    p0: np.ndarray
    mean_x: np.ndarray
    mean_y: np.ndarray


def _direct_run(params: BiasParams, psi0, t_max: int, C: CoinMatrix, *, means: bool,
                backend=None) -> _DirectRun:
    """One direct evolution recording ``p0`` at admissible times and optionally the means at every step."""
    period = params.r + 1
    ts, p0s = [0], [probability_at(new_localized(params, psi0), 0, 0)]
    mx, my = [0.0], [0.0]

    def record(f):
        if f.t % period == 0:
            ts.append(f.t)
            p0s.append(probability_at(f, 0, 0))
        if means:
            x, y = mean_position(probabilities(f))
            mx.append(x)
            my.append(y)

    evolve(new_localized(params, psi0), C, t_max, backend=backend, callback=record)
    return _DirectRun(t=np.array(ts, dtype=np.int64), p0=np.array(p0s),
                      mean_x=np.array(mx), mean_y=np.array(my))


def return_probability_series(params: BiasParams, initial, t_max: int, engine: Engine | str = Engine.FOURIER,
                              *, C: CoinMatrix | None = None, grid_n: int | None = None,
                              backend=None) -> ReturnSeries:
    """
    ``P(0, 0, t)`` for every admissible ``t <= t_max``.

    ``engine="direct"`` steps the lattice; ``engine="fourier"`` propagates in
    momentum space on a ``grid_n x grid_n`` grid (smallest alias-free grid when
    omitted; too small a grid raises :class:`~qwplane.errors.AliasingError`).
    """
    if t_max < params.r + 1:
        raise ParameterError(f"t_max must be at least r+1 = {params.r + 1}, got {t_max}")
    engine = Engine(engine)
    psi0, spec = _initial_vector(initial)
    if C is None:
        C = build_coin(params)
    if engine is Engine.DIRECT:
        run = _direct_run(params, psi0, t_max, C, means=False, backend=backend)
        t, p0 = run.t, run.p0
    else:
        t = admissible_times(params, t_max)
        amps = amplitude_at_origin_series(psi0, params, C, t, n=grid_n, backend=backend)
        p0 = np.sum(amps.real ** 2 + amps.imag ** 2, axis=1)
    return ReturnSeries(t=t, p0=np.clip(p0, 0.0, 1.0), params=params, initial=spec, engine=engine)


def default_fit_window(t_max: int) -> tuple:
    return (max(1, t_max // 8), t_max)


def _series_arrays(series):
    if isinstance(series, ReturnSeries):
        return series.t, series.p0
    t, p0 = series
    return np.asarray(t, dtype=np.int64), np.asarray(p0, dtype=np.float64)


def _upper_envelope(t, p0, run=ENVELOPE_RUN):
    """Largest sample of each consecutive block of ``run`` points (a trailing partial block is dropped)."""
    nb = t.size // run
    if nb == 0:
        return t[:0], p0[:0]
    tb = t[: nb * run].reshape(nb, run)
    pb = p0[: nb * run].reshape(nb, run)
    idx = np.argmax(pb, axis=1)
    rows = np.arange(nb)
    return tb[rows, idx], pb[rows, idx]


def fit_decay_exponent(series, window=None) -> DecayFit:
    """
    Fit ``p0(t) ~ A t^(-eta)`` over ``window = (t_lo, t_hi)`` (inclusive).

    Positive samples in the window are grouped into consecutive runs of four
    and only the largest of each run enters the least-squares line, which
    removes most of the oscillation riding on the decay. At least eight such
    envelope points are required.
    """
    t, p0 = _series_arrays(series)
    if window is None:
        window = default_fit_window(int(t.max()) if t.size else 0)
    lo, hi = window
    sel = (t >= lo) & (t <= hi) & (t > 0) & (p0 > 0.0)
    ts, ps = t[sel], p0[sel]
    et, ep = _upper_envelope(ts, ps)
    if et.size < MIN_FIT_POINTS:
        raise InsufficientPointsError(
            f"window [{lo}, {hi}] yields {et.size} envelope points from {ts.size} samples; "
            f"need at least {MIN_FIT_POINTS}"
        )
    x = np.log(et.astype(np.float64))
    y = np.log(ep)
    X = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    res = y - (slope * x + intercept)
    rms = float(np.sqrt(np.mean(res ** 2)))
    dof = x.size - 2
    sxx = float(np.sum((x - x.mean()) ** 2))
    stderr = float(np.sqrt(np.sum(res ** 2) / dof / sxx)) if sxx > 0 else float("inf")
    return DecayFit(exponent=-slope, intercept=intercept, window=(int(lo), int(hi)), residual=rms,
                    exponent_stderr=stderr, n_points=int(x.size), envelope_t=et, envelope_p0=ep)


def _tail_sum(amp: float, eta: float, period: int, T: int) -> float:
    # sum_{m > T/period} amp * (period m)^(-eta) = amp period^(-eta) zeta(eta, M + 1)
    M = T // period
    return float(amp * period ** (-eta) * zeta(eta, M + 1))


def polya_partial_products(series, fit: DecayFit | None = None) -> PolyaEstimate:
    """
    Partial products over ``t >= 1``; with a decay fit the tail beyond the
    last sample is estimated as ``-sum_{t > T} p0(t)`` from the fitted power
    law (summed exactly over the admissible lattice with a Hurwitz zeta). The
    error bar combines the slope uncertainty with the difference between the
    envelope amplitude and the mean amplitude over the fit window.
    """
    t, p0 = _series_arrays(series)
    keep = t >= 1
    T = t[keep]
    q = np.clip(1.0 - p0[keep], 0.0, 1.0)
    prods = np.minimum.accumulate(np.cumprod(q)) if q.size else q
    polya = np.clip(1.0 - prods, 0.0, 1.0)
    if fit is None or T.size == 0:
        return PolyaEstimate(T=T, partial_products=prods, polya_partial=polya)
    if fit.exponent <= 1.0:
        return PolyaEstimate(T=T, partial_products=prods, polya_partial=polya, tail_divergent=True)

    period = int(np.min(np.diff(T))) if T.size > 1 else 1
    last_T = int(T[-1])
    eta = fit.exponent
    lo, hi = fit.window
    sel = (t >= lo) & (t <= hi) & (p0 > 0.0)
    amp_env = float(np.exp(fit.intercept))
    amp_mean = float(np.mean(p0[sel] * t[sel].astype(np.float64) ** eta)) if np.any(sel) else amp_env
    log_prod = float(np.log(prods[-1])) if prods[-1] > 0.0 else -np.inf

    def estimate(amp, e):
        if e <= 1.0:
            return 1.0
        return 1.0 - float(np.exp(log_prod - _tail_sum(amp, e, period, last_T)))

    central = estimate(amp_mean, eta)
    spread = [abs(estimate(amp_env, eta) - central)]
    if np.isfinite(fit.exponent_stderr):
        for e in (eta - fit.exponent_stderr, eta + fit.exponent_stderr):
            spread.append(abs(estimate(amp_mean, e) - central))
    return PolyaEstimate(T=T, partial_products=prods, polya_partial=polya, extrapolated=central,
                         extrapolated_error=float(max(spread)))


def mean_value_probe(params: BiasParams, initial, t_max: int, *, C: CoinMatrix | None = None,
                     backend=None) -> MeanTrajectory:
    """``(<x>, <y>)`` after every step ``t = 0..t_max`` from the direct engine."""
    if t_max < 1:
        raise ParameterError(f"t_max must be at least 1, got {t_max}")
    psi0, spec = _initial_vector(initial)
    if C is None:
        C = build_coin(params)
    run = _direct_run(params, psi0, t_max, C, means=True, backend=backend)
    return MeanTrajectory(t=np.arange(t_max + 1, dtype=np.int64), mean_x=run.mean_x, mean_y=run.mean_y,
                          initial=spec)


@dataclass(frozen=True)
class ScanRow:
    p: float
    r: int
    a: float
    phi: float
    variant: str
    t_max: int
    eta: float
    eta_residual: float
    polya_partial: float
    mean_x_over_t: float
    mean_y_over_t: float
    hull_criterion: bool

    def values(self):
        return tuple(getattr(self, c) for c in SCAN_COLUMNS)

    def to_dict(self):
        return dict(zip(SCAN_COLUMNS, self.values()))


def _scan_cell(args) -> ScanRow:
    p, r, a, phi, variant, t_max, window, coin_mode = args
    params = BiasParams(p, r)
    spec = InitialCoinSpec(a=a, phi=phi, variant=StateVariant(variant))
    C = build_coin(params, coin_mode)
    run = _direct_run(params, build_initial_state(spec), t_max, C, means=True)
    series = ReturnSeries(t=run.t, p0=np.clip(run.p0, 0.0, 1.0), params=params, initial=spec,
                          engine=Engine.DIRECT)
    try:
        fit = fit_decay_exponent(series, window or default_fit_window(t_max))
        eta, resid = fit.exponent, fit.residual
    except InsufficientPointsError:
        eta, resid = float("nan"), float("nan")
    polya = polya_partial_products(series)
    hull = velocity_recurrence_criterion(peak_velocities_analytic(params))
    return ScanRow(p=params.p, r=params.r, a=spec.a, phi=spec.phi, variant=spec.variant.value, t_max=t_max,
                   eta=float(eta), eta_residual=float(resid), polya_partial=polya.final,
                   mean_x_over_t=float(run.mean_x[-1] / t_max), mean_y_over_t=float(run.mean_y[-1] / t_max),
                   hull_criterion=bool(hull))


def conjecture_scan(params_grid, initial_grid, t_max: int, *, window=None, workers: int = 1,
                    coin_mode: CoinMode | str = CoinMode.CORRECTED) -> list:
    """
    One row per ``(params, initial)`` pair, in grid order (params outer).

    ``params_grid`` holds :class:`BiasParams`; ``initial_grid`` holds
    :class:`InitialCoinSpec`. Cells are independent direct simulations and may
    run in ``workers`` processes; row order and values do not depend on the
    worker count.
    """
    params_grid, initial_grid = list(params_grid), list(initial_grid)
    if not params_grid or not initial_grid:
        raise ParameterError("parameter and initial-state grids must be nonempty")
    if t_max < 1:
        raise ParameterError(f"t_max must be at least 1, got {t_max}")
    coin_mode = CoinMode(coin_mode).value
    cells = [(bp.p, bp.r, s.a, s.phi, s.variant.value, t_max, window, coin_mode)
             for bp, s in itertools.product(params_grid, initial_grid)]
    if workers <= 1 or len(cells) == 1:
        return [_scan_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_scan_cell, cells))
