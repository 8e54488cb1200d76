"""Core method data types: Butcher tableaus, coupling rules, and multirate pairs.

A multirate GARK method advances a two-way additively partitioned ODE with a
slow base Runge-Kutta method taking one macro-step H while the fast base
method takes M micro-steps of size h = H/M.  The cross coupling is described
by two families of matrices, one per micro-step index lambda: a fast-slow
block (slow information entering fast stages) and a slow-fast block (fast
information entering slow stages).  Both are functions of (lambda, M).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np

from .errors import LambdaOutOfRange

__all__ = [
    "TableauKind",
    "MethodFlag",
    "ButcherTableau",
    "CouplingRule",
    "MrGarkMethod",
]

#: defaults for the structural invariants checked by ``ButcherTableau.validate``
_ROWSUM_TOL = 1e-13


class TableauKind(enum.Enum):
    EXPLICIT = "explicit"
    SDIRK = "sdirk"


class MethodFlag(enum.Enum):
    """Structural properties a registered method declares (and tests verify)."""

    TELESCOPIC = "telescopic"
    NATURALLY_ADAPTIVE = "naturally-adaptive"
    STIFFLY_ACCURATE_SLOW = "stiffly-accurate-slow"
    STIFFLY_ACCURATE_FAST = "stiffly-accurate-fast"
    FSAL = "fsal"


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class ButcherTableau:
    """One base Runge-Kutta method (A, b, embedded b_hat, c).

    ``kind`` distinguishes explicit tableaus (strictly lower triangular A)
    from SDIRK ones (lower triangular with constant diagonal ``gamma``).
    Instances are immutable; the arrays are read-only views.
    """

    A: np.ndarray
    b: np.ndarray
    b_hat: np.ndarray
    c: np.ndarray
    kind: TableauKind
    gamma: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "A", _freeze(self.A))
        object.__setattr__(self, "b", _freeze(self.b))
        object.__setattr__(self, "b_hat", _freeze(self.b_hat))
        object.__setattr__(self, "c", _freeze(self.c))

    @property
    def stage_count(self) -> int:
        return self.b.shape[0]

    def validate(self, tol: float = _ROWSUM_TOL) -> None:
        """Raise AssertionError if the structural invariants do not hold."""
        s = self.stage_count
        assert self.A.shape == (s, s)
        assert self.b_hat.shape == (s,) and self.c.shape == (s,)
        assert np.max(np.abs(self.A.sum(axis=1) - self.c)) < tol, "row sums of A must equal c"
        assert abs(self.b.sum() - 1.0) < tol, "sum(b) must be 1"
        if self.kind is TableauKind.EXPLICIT:
            assert self.gamma is None
            assert not np.any(np.triu(self.A) != 0.0), "explicit A must be strictly lower triangular"
        else:
            assert self.gamma is not None and self.gamma > 0
            assert not np.any(np.triu(self.A, 1) != 0.0), "SDIRK A must be lower triangular"
            assert np.max(np.abs(np.diag(self.A) - self.gamma)) < tol, "SDIRK diagonal must equal gamma"

    @property
    def is_implicit(self) -> bool:
        return self.kind is TableauKind.SDIRK


@dataclass(frozen=True, eq=False)
class CouplingRule:
    """Evaluator for one family of coupling blocks, parameterized by (lambda, M).

    ``evaluator`` must be a deterministic pure function returning a matrix of
    the declared ``shape`` for every 1 <= lambda <= M.  ``free_parameters``
    records named constants baked into the rule (e.g. the abscissa c2 of the
    type-S schemes) so they can be reported and round-tripped.
    """

    shape: tuple[int, int]
    evaluator: Callable[[int, int], np.ndarray]
    free_parameters: Mapping[str, float] = field(default_factory=dict)

    def __call__(self, lam: int, M: int) -> np.ndarray:
        if M < 1:
            raise LambdaOutOfRange(f"M must be >= 1, got {M}")
        if not 1 <= lam <= M:
            raise LambdaOutOfRange(f"lambda={lam} outside 1..{M}")
        out = np.asarray(self.evaluator(lam, M), dtype=float)
        if out.shape != self.shape:
            raise ValueError(f"coupling evaluator returned shape {out.shape}, declared {self.shape}")
        return out


@dataclass(frozen=True, eq=False)
class MrGarkMethod:
    """A fast/slow base pair plus both coupling rules and declared metadata.

    ``name`` follows the multirate GARK naming convention
    ``FAST-SLOW p(phat) [stages] type``, e.g. ``"EX-IM 2(1)A"``.
    ``order`` is the order of the main solution, ``embedded_order`` that of
    the embedded solution used for error estimation.
    """

    name: str
    fast: ButcherTableau
    slow: ButcherTableau
    fs_coupling: CouplingRule
    sf_coupling: CouplingRule
    order: int
    embedded_order: int
    flags: frozenset[MethodFlag] = frozenset()

    @property
    def stage_counts(self) -> tuple[int, int]:
        """(fast stages per micro-step, slow stages)."""
        return self.fast.stage_count, self.slow.stage_count

    def has_flag(self, flag: MethodFlag) -> bool:
        return flag in self.flags

    # Coupling matrices are pure functions of (lambda, M); memoize them since
    # integrators request the same blocks once per micro-step.
    @lru_cache(maxsize=4096)
    def _coupling_cached(self, side: str, lam: int, M: int) -> np.ndarray:
        rule = self.fs_coupling if side == "fs" else self.sf_coupling
        return _freeze(rule(lam, M))

    def coupling(self, side: str, lam: int, M: int) -> np.ndarray:
        """Return A^{fs,lambda} (side="fs") or A^{sf,lambda} (side="sf")."""
        if side not in ("fs", "sf"):
            raise ValueError("side must be 'fs' or 'sf'")
        return self._coupling_cached(side, lam, M)
