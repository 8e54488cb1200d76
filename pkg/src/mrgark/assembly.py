"""Assembly of the full multirate GARK tableau and structural verification.

For a pair with s_f fast and s_s slow stages and multirate ratio M, the
assembled method has s = M*s_f + s_s stages.  Fast stage i of micro-step
lambda sits at global row (lambda-1)*s_f + i, the slow stages occupy the last
s_s rows.  The fast diagonal carries (1/M)*A_ff, completed micro-steps below
it contribute the telescoping rank-one blocks (1/M)*1*b_f^T, and the coupling
families fill the off-diagonal super-blocks (slow-fast blocks scaled by 1/M).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CoupledMethod, NotImplicitPartition
from .tableaux import MrGarkMethod, TableauKind

__all__ = [
    "GarkMatrix",
    "StageSchedule",
    "ConsistencyReport",
    "assemble",
    "assembled_weights",
    "check_internal_consistency",
    "check_telescopic",
    "check_decoupled",
    "check_stiff_accuracy",
    "derive_schedule",
]

#: assembled tableaus get unwieldy beyond this; integration streams micro-steps
#: instead of materializing the matrix, so the cap only guards this module.
MAX_ASSEMBLED_M = 10_000


@dataclass(frozen=True, eq=False)
class GarkMatrix:
    """Fully assembled (M*s_f + s_s)-stage tableau."""

    M: int
    s_f: int
    s_s: int
    A: np.ndarray  # (s, s)
    b: np.ndarray  # (s,) main weights: [(1/M) b_f repeated, b_s]
    c: np.ndarray  # (s,) abscissae

    @property
    def stage_count(self) -> int:
        return self.M * self.s_f + self.s_s

    def fast_row(self, lam: int, stage: int) -> int:
        """Global row of fast stage ``stage`` (1-based) in micro-step ``lam``."""
        return (lam - 1) * self.s_f + stage - 1

    def slow_row(self, stage: int) -> int:
        """Global row of slow stage ``stage`` (1-based)."""
        return self.M * self.s_f + stage - 1

    # superblock views used by the order-condition evaluators
    @property
    def A_ff(self) -> np.ndarray:
        n = self.M * self.s_f
        return self.A[:n, :n]

    @property
    def A_fs(self) -> np.ndarray:
        n = self.M * self.s_f
        return self.A[:n, n:]

    @property
    def A_sf(self) -> np.ndarray:
        n = self.M * self.s_f
        return self.A[n:, :n]

    @property
    def A_ss(self) -> np.ndarray:
        n = self.M * self.s_f
        return self.A[n:, n:]

    @property
    def c_fast(self) -> np.ndarray:
        return self.c[: self.M * self.s_f]

    @property
    def c_slow(self) -> np.ndarray:
        return self.c[self.M * self.s_f:]


@dataclass(frozen=True)
class StageSchedule:
    """Evaluation order of the assembled stages.

    ``order`` lists global stage indices (0-based) in computation sequence;
    the permuted matrix A[order][:, order] is lower triangular for decoupled
    methods, strictly so when both base methods are explicit.
    ``slow_positions[j] = (L_j, I_j)``: slow stage j+1 runs right after fast
    stage I_j of micro-step L_j (I_j = 0 means before that micro-step starts).
    """

    order: tuple[int, ...]
    slow_positions: tuple[tuple[int, int], ...]
    implicit_stages: frozenset[int]


@dataclass(frozen=True)
class ConsistencyReport:
    max_fs_residual: float
    max_sf_residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_fs_residual < self.tol and self.max_sf_residual < self.tol


def assemble(method: MrGarkMethod, M: int) -> GarkMatrix:
    """Build the full tableau of the multirate pair at ratio ``M``."""
    if not 1 <= M <= MAX_ASSEMBLED_M:
        raise ValueError(f"M must be in 1..{MAX_ASSEMBLED_M}, got {M}")
    s_f, s_s = method.stage_counts
    n_fast = M * s_f
    s = n_fast + s_s
    A = np.zeros((s, s))
    bf, bs = method.fast.b, method.slow.b

    for lam in range(1, M + 1):
        r0 = (lam - 1) * s_f
        A[r0:r0 + s_f, r0:r0 + s_f] = method.fast.A / M
        for kap in range(1, lam):
            c0 = (kap - 1) * s_f
            A[r0:r0 + s_f, c0:c0 + s_f] = np.tile(bf / M, (s_f, 1))
        A[r0:r0 + s_f, n_fast:] = method.coupling("fs", lam, M)
        A[n_fast:, r0:r0 + s_f] = method.coupling("sf", lam, M) / M
    A[n_fast:, n_fast:] = method.slow.A

    b = np.concatenate([np.tile(bf / M, M), bs])
    c_fast = np.concatenate([(method.fast.c + lam) / M for lam in range(M)])
    c = np.concatenate([c_fast, method.slow.c])
    A.flags.writeable = False
    b.flags.writeable = False
    c.flags.writeable = False
    return GarkMatrix(M=M, s_f=s_f, s_s=s_s, A=A, b=b, c=c)


def assembled_weights(g: GarkMatrix, w_fast: np.ndarray, w_slow: np.ndarray) -> np.ndarray:
    """Full weight vector for an arbitrary (fast, slow) weight pair."""
    return np.concatenate([np.tile(np.asarray(w_fast) / g.M, g.M), np.asarray(w_slow)])


def check_internal_consistency(g: GarkMatrix, tol: float = 1e-10) -> ConsistencyReport:
    """Row sums of each coupling super-block must reproduce the abscissae.

    Fast and slow right-hand sides are then sampled at identical points in
    time, which is what reduces the coupled order conditions to the small
    catalog handled by the order module.
    """
    fs = float(np.max(np.abs(g.A_fs.sum(axis=1) - g.c_fast)))
    sf = float(np.max(np.abs(g.A_sf.sum(axis=1) - g.c_slow)))
    return ConsistencyReport(max_fs_residual=fs, max_sf_residual=sf, tol=tol)


def check_telescopic(method: MrGarkMethod) -> bool:
    """True iff fast and slow base tableaus are entrywise identical (A and b)."""
    return bool(
        method.fast.stage_count == method.slow.stage_count
        and np.array_equal(method.fast.A, method.slow.A)
        and np.array_equal(method.fast.b, method.slow.b)
    )


def check_decoupled(g: GarkMatrix) -> bool:
    """Sparsity complementarity: A_sf and A_fs^T share no nonzero position."""
    return not np.any((g.A_sf != 0.0) & (g.A_fs.T != 0.0))


def check_stiff_accuracy(method: MrGarkMethod, M: int, partition: str, tol: float = 1e-13) -> bool:
    """Last stage row of the implicit partition must equal the full weights."""
    part = partition.lower()
    if part not in ("fast", "slow"):
        raise ValueError("partition must be 'fast' or 'slow'")
    base = method.fast if part == "fast" else method.slow
    if base.kind is not TableauKind.SDIRK:
        raise NotImplicitPartition(f"{method.name}: {part} partition is explicit")
    g = assemble(method, M)
    row = g.fast_row(M, g.s_f) if part == "fast" else g.slow_row(g.s_s)
    return bool(np.max(np.abs(g.A[row] - g.b)) < tol)


def derive_schedule(g: GarkMatrix, method: MrGarkMethod) -> StageSchedule:
    """Topologically order the stages, computing slow stages eagerly.

    A stage depends on every other stage whose column in its row is nonzero
    (exact-zero test: the coefficients are constructed, not computed).  A
    nonzero diagonal marks an implicit stage, admissible only inside an SDIRK
    partition.  Among ready stages, slow stages are emitted first (in index
    order), then fast stages in (micro-step, stage) order; this is the
    sequence in which a streaming implementation can run the method.
    """
    s = g.stage_count
    n_fast = g.M * g.s_f
    A = g.A

    implicit = frozenset(int(i) for i in np.flatnonzero(np.diag(A) != 0.0))
    for i in implicit:
        part = method.fast if i < n_fast else method.slow
        if part.kind is not TableauKind.SDIRK:
            raise CoupledMethod(f"stage {i} is implicit but its partition is explicit")

    deps = [set(np.flatnonzero(A[i] != 0.0)) - {i} for i in range(s)]
    done = np.zeros(s, dtype=bool)
    order: list[int] = []
    next_fast = 0  # fast stages always run in natural order
    next_slow = n_fast

    while len(order) < s:
        progressed = False
        while next_slow < s and deps[next_slow] <= set(np.flatnonzero(done)):
            done[next_slow] = True
            order.append(next_slow)
            next_slow += 1
            progressed = True
        if next_fast < n_fast:
            ready = deps[next_fast] <= set(np.flatnonzero(done))
            if ready:
                done[next_fast] = True
                order.append(next_fast)
                next_fast += 1
                progressed = True
                continue
        if not progressed:
            raise CoupledMethod(
                f"{method.name}: stage dependencies are cyclic at M={g.M}; "
                "no decoupled evaluation order exists"
            )

    slow_positions = []
    for j in range(g.s_s):
        pos = order.index(n_fast + j)
        prior_fast = [i for i in order[:pos] if i < n_fast]
        if prior_fast:
            last = max(prior_fast)
            slow_positions.append((last // g.s_f + 1, last % g.s_f + 1))
        else:
            slow_positions.append((1, 0))

    return StageSchedule(
        order=tuple(order),
        slow_positions=tuple(slow_positions),
        implicit_stages=implicit,
    )
