"""Linear-threshold network model and its piecewise-affine mode decomposition.

The dynamics are

    tau * dx/dt = -x + [W x + d]_0^m

where ``[.]_0^m`` clips each component to ``[0, m_i]``. Caps may be finite
or ``numpy.inf`` per node; an infinite cap is never used in arithmetic
(saturation is simply not available at that node).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import ShapeError
from .linalg import as_matrix, operator_norm

INACTIVE, LINEAR, SATURATED = 0, 1, 2
_REGIME_CHARS = "0ls"


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class NetworkSpec:
    """Weights ``W``, caps ``m`` (``inf`` allowed per node) and time constant."""

    W: np.ndarray
    m: np.ndarray = None
    tau: float = 1.0
    labels: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        W = as_matrix(self.W, name="W", square=True)
        n = W.shape[0]
        m = np.full(n, np.inf) if self.m is None else np.array(self.m, dtype=float).reshape(-1)
        if np.ndim(self.m) == 0 and self.m is not None:
            m = np.full(n, m[0])  # one cap for every node
        if m.shape != (n,):
            raise ShapeError(f"m must have {n} entries, got {m.size}")
        if np.any(np.isnan(m)) or np.any(m <= 0):
            raise ShapeError("caps m must be strictly positive (or inf)")
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ShapeError(f"tau must be positive and finite, got {self.tau}")
        if self.labels is not None and len(self.labels) != n:
            raise ShapeError(f"labels must have {n} entries")
        object.__setattr__(self, "W", _frozen(W))
        object.__setattr__(self, "m", _frozen(m))
        object.__setattr__(self, "tau", float(self.tau))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def bounded(self) -> np.ndarray:
        """Boolean mask of nodes with a finite cap."""
        return np.isfinite(self.m)

    @property
    def unbounded(self) -> bool:
        return not np.any(self.bounded)

    def with_weights(self, W) -> "NetworkSpec":
        return NetworkSpec(W, self.m, self.tau, self.labels)

    def uncapped(self) -> "NetworkSpec":
        return NetworkSpec(self.W, None, self.tau, self.labels)

    def __eq__(self, other):
        if not isinstance(other, NetworkSpec):
            return NotImplemented
        return (np.array_equal(self.W, other.W) and np.array_equal(self.m, other.m)
                and self.tau == other.tau and self.labels == other.labels)

    def __hash__(self):
        return hash((self.W.tobytes(), self.m.tobytes(), self.tau, self.labels))


@dataclass(frozen=True)
class SwitchingIndex:
    """Per-node regime: 0 = inactive, 1 = linear, 2 = saturated."""

    codes: tuple[int, ...]

    def __post_init__(self):
        codes = tuple(int(c) for c in self.codes)
        if any(c not in (INACTIVE, LINEAR, SATURATED) for c in codes):
            raise ValueError(f"invalid regime codes {codes}")
        object.__setattr__(self, "codes", codes)

    @classmethod
    def parse(cls, text: str) -> "SwitchingIndex":
        try:
            return cls(tuple(_REGIME_CHARS.index(c) for c in text))
        except ValueError:
            raise ValueError(f"switching index must be a string over '0ls', got {text!r}") from None

    @classmethod
    def all_inactive(cls, n):
        return cls((INACTIVE,) * n)

    @classmethod
    def all_linear(cls, n):
        return cls((LINEAR,) * n)

    @property
    def n(self):
        return len(self.codes)

    @property
    def linear(self) -> np.ndarray:
        return np.array(self.codes) == LINEAR

    @property
    def saturated(self) -> np.ndarray:
        return np.array(self.codes) == SATURATED

    def __str__(self):
        return "".join(_REGIME_CHARS[c] for c in self.codes)

    def check(self, net: NetworkSpec):
        if self.n != net.n:
            raise ShapeError(f"switching index has {self.n} entries, network has {net.n}")
        if np.any(self.saturated & ~net.bounded):
            raise ValueError(f"{self}: saturation is impossible at nodes with infinite cap")


@dataclass(frozen=True, eq=False)
class ModeSystem:
    """Affine field ``tau dx/dt = A x + b`` valid on one switching region."""

    A: np.ndarray
    b: np.ndarray


def as_vector(v, n, name="vector") -> np.ndarray:
    v = np.array(v, dtype=float)
    if v.shape[-1:] != (n,):
        raise ShapeError(f"{name} must have {n} components, got shape {v.shape}")
    return v


def threshold(v, m) -> np.ndarray:
    """Componentwise projection of ``v`` onto ``[0, m]`` (``m`` may hold inf)."""
    v = np.asarray(v, dtype=float)
    m = np.asarray(m, dtype=float)
    if v.shape[-1] != m.shape[-1]:
        raise ShapeError(f"dimension mismatch: v has {v.shape[-1]}, m has {m.shape[-1]}")
    return np.minimum(np.maximum(v, 0.0), m)


def regions(net: NetworkSpec) -> Iterator[SwitchingIndex]:
    """All admissible switching indices in lexicographic order of the codes."""
    choices = [(INACTIVE, LINEAR, SATURATED) if b else (INACTIVE, LINEAR)
               for b in net.bounded]
    for codes in itertools.product(*choices):
        yield SwitchingIndex(codes)


def region_count(net: NetworkSpec) -> int:
    return int(np.prod([3 if b else 2 for b in net.bounded]))


def classify_region(net: NetworkSpec, d, x) -> SwitchingIndex:
    """Regime of every node at state ``x``.

    Node ``i`` is inactive when ``(Wx+d)_i <= 0``, saturated when
    ``(Wx+d)_i >= m_i``, and linear otherwise.
    """
    d = as_vector(d, net.n, "d")
    x = as_vector(x, net.n, "x")
    u = net.W @ x + d
    codes = np.where(u <= 0, INACTIVE, np.where(u >= net.m, SATURATED, LINEAR))
    return SwitchingIndex(tuple(codes))


def mode_system(net: NetworkSpec, d, sigma: SwitchingIndex) -> ModeSystem:
    sigma.check(net)
    d = as_vector(d, net.n, "d")
    lin = sigma.linear.astype(float)
    A = -np.eye(net.n) + lin[:, None] * net.W
    # saturated nodes contribute m_i; inf caps never reach this branch
    b = lin * d + np.where(sigma.saturated, net.m, 0.0)
    return ModeSystem(A, b)


def vector_field(net: NetworkSpec, d, x) -> np.ndarray:
    """``(-x + [Wx + d]_0^m) / tau``; ``x`` may carry leading batch axes."""
    x = as_vector(x, net.n, "x")
    d = np.asarray(d, dtype=float)
    return (-x + threshold(x @ net.W.T + d, net.m)) / net.tau


def lipschitz_constant(net: NetworkSpec) -> float:
    return (1.0 + operator_norm(net.W)) / net.tau


def in_box(net: NetworkSpec, x, tol=0.0) -> bool:
    x = np.asarray(x, dtype=float)
    return bool(np.all(x >= -tol) and np.all(x <= net.m + tol))
