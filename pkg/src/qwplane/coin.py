"""
Coin operator for the biased four-state walk on the square lattice.

Chirality basis order is (R, L, U, D) throughout the package. The coin is the
one-parameter family

    C(p) = H(p) (x) H(p),   H(p) = [[sqrt(p), sqrt(1-p)], [sqrt(1-p), -sqrt(p)]]

written out in that basis. The literal matrix with ``-p`` in the bottom-right
corner is available as :attr:`CoinMode.AS_PRINTED` for diagnostics; it is not
unitary for any ``0 < p < 1``.
"""
from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

__all__ = [
    "BASIS",
    "BiasParams",
    "CoinMode",
    "CoinMatrix",
    "CoinProjectors",
    "StateVariant",
    "InitialCoinSpec",
    "build_coin",
    "split_projectors",
    "build_initial_state",
    "unitarity_certificate",
    "coin_to_csv",
]

BASIS = ("R", "L", "U", "D")


class CoinMode(str, enum.Enum):
    CORRECTED = "corrected"
    AS_PRINTED = "as-printed"


class StateVariant(str, enum.Enum):
    AS_PRINTED = "as-printed"
    TENSOR_PRODUCT = "tensor-product"


@dataclass(frozen=True)
class BiasParams:
    """Coin bias ``p`` in (0, 1) and jump length ``r`` (right/up) in lattice units."""

    p: float
    r: int = 1

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise ParameterError(f"p must lie in (0, 1), got {self.p!r}")
        if int(self.r) != self.r or self.r < 1:
            raise ParameterError(f"r must be a positive integer, got {self.r!r}")
        object.__setattr__(self, "r", int(self.r))
        object.__setattr__(self, "p", float(self.p))


@dataclass(frozen=True)
class CoinMatrix:
    entries: np.ndarray
    mode: CoinMode
    p: float
    defect: float = field(default=0.0)

    @property
    def is_unitary(self) -> bool:
        return self.defect < 1e-12


@dataclass(frozen=True)
class CoinProjectors:
    R: np.ndarray
    L: np.ndarray
    U: np.ndarray
    D: np.ndarray

    def as_tuple(self):
        return (self.R, self.L, self.U, self.D)

    def total(self) -> np.ndarray:
        return self.R + self.L + self.U + self.D


@dataclass(frozen=True)
class InitialCoinSpec:
    a: float = 1.0
    phi: float = 0.0
    variant: StateVariant = StateVariant.AS_PRINTED

    def __post_init__(self):
        if not (0.0 <= self.a <= 1.0):
            raise ParameterError(f"a must lie in [0, 1], got {self.a!r}")
        if not (0.0 <= self.phi < 2 * np.pi):
            raise ParameterError(f"phi must lie in [0, 2*pi), got {self.phi!r}")
        object.__setattr__(self, "variant", StateVariant(self.variant))


def _cross_term(p: float) -> float:
    # sqrt(p - p^2) without cancellation near the ends of (0, 1)
    return np.sqrt(p) * np.sqrt(1.0 - p)


def unitarity_certificate(C) -> float:
    """Return ``max |C C^dagger - I|`` for a coin (or any square matrix)."""
    m = C.entries if isinstance(C, CoinMatrix) else np.asarray(C)
    return float(np.max(np.abs(m @ m.conj().T - np.eye(m.shape[0]))))


def build_coin(params, mode: CoinMode | str = CoinMode.CORRECTED) -> CoinMatrix:
    """
    Build the 4x4 coin for ``params.p``.

    ``params`` may be a :class:`BiasParams` or a bare ``p`` value.
    """
    p = params.p if isinstance(params, BiasParams) else float(params)
    if not (0.0 < p < 1.0):
        raise ParameterError(f"p must lie in (0, 1), got {p!r}")
    mode = CoinMode(mode)
    s = _cross_term(p)
    q = 1.0 - p
    corner = p if mode is CoinMode.CORRECTED else -p
    m = np.array(
        [
            [p, s, s, q],
            [s, -p, q, -s],
            [s, q, -p, -s],
            [q, -s, -s, corner],
        ],
        dtype=np.float64,
    )
    m.setflags(write=False)
    return CoinMatrix(entries=m, mode=mode, p=p, defect=unitarity_certificate(m))


def split_projectors(C: CoinMatrix) -> CoinProjectors:
    """Split ``C`` into four matrices, each holding a single row of ``C``."""
    rows = []
    for i in range(4):
        m = np.zeros((4, 4), dtype=C.entries.dtype)
        m[i] = C.entries[i]
        rows.append(m)
    return CoinProjectors(*rows)


def build_initial_state(spec: InitialCoinSpec) -> np.ndarray:
    """
    Coin state ``(a, s e^{i phi}, s e^{i phi}, (1-a) e^{i k phi})`` with
    ``s = sqrt(a - a^2)``; ``k = 1`` for the as-printed variant and ``k = 2`` for
    the tensor-product variant.
    """
    a, phi = spec.a, spec.phi
    s = np.sqrt(a) * np.sqrt(1.0 - a)
    e1 = np.exp(1j * phi)
    last = e1 if spec.variant is StateVariant.AS_PRINTED else np.exp(2j * phi)
    return np.array([a, s * e1, s * e1, (1.0 - a) * last], dtype=np.complex128)


def coin_to_csv(C: CoinMatrix) -> str:
    """Row-major 4x4 CSV block, 17 significant digits."""
    buf = io.StringIO()
    for row in C.entries:
        buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
    return buf.getvalue()
