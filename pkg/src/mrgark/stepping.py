"""One macro-step of a multirate GARK method, streamed micro-step by micro-step.

The engine never materializes the assembled tableau.  Fast stages are
computed per micro-step; slow stages are computed on demand, the moment a
fast stage needs them (sparsity complementarity of a decoupled pair
guarantees their own fast contributions are complete at that point), with any
remaining slow stages finished after the last micro-step.  Per-stage
right-hand-side values are folded immediately into the running fast solution
and into one accumulator per weight vector, so all four solutions (main,
embedded, and both mixed pairs used to split the error estimate) come from
the same stage evaluations at no extra cost.

For methods with the first-same-as-last property the value of the last fast
stage of each micro-step equals the first stage of the next one, so its
right-hand side is reused across micro-steps and across accepted macro-steps.

With the two mixed embedded pairs the algebraic combination
y_hat_slow + y_hat_fast - y_hat - y_next cancels identically; the residual
coupling indicator in :class:`StepResult` is therefore zero up to roundoff
and genuinely informative coupling content lives in the order-condition
residuals instead.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import CoupledMethod, NewtonDivergence, NonFiniteState
from .tableaux import MethodFlag, MrGarkMethod, TableauKind

__all__ = [
    "PartitionedOde",
    "Tolerances",
    "WorkCounters",
    "StepResult",
    "FsalCarry",
    "newton_solve",
    "NewtonResult",
    "step",
    "error_norm",
    "error_estimates",
]


@dataclass(frozen=True, eq=False)
class PartitionedOde:
    """Additively partitioned autonomous ODE y' = f_slow(y) + f_fast(y)."""

    dimension: int
    f_slow: Callable[[np.ndarray], np.ndarray]
    f_fast: Callable[[np.ndarray], np.ndarray]
    jac_slow: Callable[[np.ndarray], np.ndarray] | None = None
    jac_fast: Callable[[np.ndarray], np.ndarray] | None = None
    exact_solution: Callable[[float], np.ndarray] | None = None


@dataclass(frozen=True)
class Tolerances:
    """Componentwise tolerances entering the scaled error norm."""

    abs_tol: float | np.ndarray = 1e-6
    rel_tol: float | np.ndarray = 1e-6


@dataclass
class WorkCounters:
    fast_evals: int = 0
    slow_evals: int = 0
    newton_iterations: int = 0


@dataclass(frozen=True, eq=False)
class FsalCarry:
    """Last fast-stage RHS of a finished step, reusable when states match."""

    y_next: np.ndarray
    f_fast_last: np.ndarray


@dataclass(eq=False)
class StepResult:
    y_next: np.ndarray
    y_hat: np.ndarray
    y_hat_slow: np.ndarray  # weights (b_f, b_hat_s)
    y_hat_fast: np.ndarray  # weights (b_hat_f, b_s)
    t: float
    H: float
    M: int
    slow_stages: list[np.ndarray]
    fast_stages: list[list[np.ndarray]] | None
    newton_stats: list[int]
    t_slow: float
    t_fast: float
    counters: WorkCounters
    fsal_carry: FsalCarry | None = None

    @property
    def coupling_indicator(self) -> np.ndarray:
        return self.y_hat_slow + self.y_hat_fast - self.y_hat - self.y_next


class NewtonResult(NamedTuple):
    y: np.ndarray
    iterations: int


def newton_solve(
    residual: Callable[[np.ndarray], np.ndarray],
    y_guess: np.ndarray,
    jac: Callable[[np.ndarray], np.ndarray] | None = None,
    tol: float = 1e-12,
    max_iter: int = 50,
) -> NewtonResult:
    """Solve G(y) = 0; converged when ||G|| <= tol * (1 + ||y||).

    ``jac`` returns dG/dy; omitted, a forward-difference approximation with
    increment sqrt(eps) * (1 + |y_i|) is used.  Affine systems converge in a
    single update.
    """
    y = np.array(y_guess, dtype=float)
    sqrt_eps = np.sqrt(np.finfo(float).eps)
    for iteration in range(max_iter + 1):
        g = np.asarray(residual(y), dtype=float)
        if not np.all(np.isfinite(g)):
            raise NewtonDivergence("residual is non-finite")
        if np.linalg.norm(g) <= tol * (1.0 + np.linalg.norm(y)):
            return NewtonResult(y, iteration)
        if iteration == max_iter:
            break
        if jac is not None:
            j = np.asarray(jac(y), dtype=float)
        else:
            j = np.empty((y.size, y.size))
            for i in range(y.size):
                dy = sqrt_eps * (1.0 + abs(y[i]))
                yp = y.copy()
                yp[i] += dy
                j[:, i] = (np.asarray(residual(yp)) - g) / dy
        try:
            delta = np.linalg.solve(j, -g)
        except np.linalg.LinAlgError as exc:
            raise NewtonDivergence(f"singular Newton matrix: {exc}") from None
        y = y + delta
        if not np.all(np.isfinite(y)):
            raise NewtonDivergence("iterate is non-finite")
    raise NewtonDivergence(f"no convergence in {max_iter} iterations")


class _Timed:
    """Wrap an RHS callable with a call counter and a wall-clock accumulator."""

    def __init__(self, fn):
        self.fn = fn
        self.calls = 0
        self.seconds = 0.0

    def __call__(self, y):
        self.calls += 1
        t0 = time.perf_counter()
        out = np.asarray(self.fn(y), dtype=float)
        self.seconds += time.perf_counter() - t0
        return out


def step(
    method: MrGarkMethod,
    ode: PartitionedOde,
    y_n: np.ndarray,
    t_n: float,
    H: float,
    M: int,
    *,
    newton_tol: float = 1e-12,
    newton_max_iter: int = 50,
    use_fsal: bool = True,
    fsal_carry: FsalCarry | None = None,
    keep_fast_stages: bool = False,
) -> StepResult:
    """Advance one macro-step of size H with M fast micro-steps."""
    if H <= 0 or M < 1:
        raise ValueError("need H > 0 and M >= 1")
    y_n = np.asarray(y_n, dtype=float)
    s_f, s_s = method.stage_counts
    h = H / M
    Aff, Ass = method.fast.A, method.slow.A
    gamma_f = method.fast.gamma
    gamma_s = method.slow.gamma

    f_fast = _Timed(ode.f_fast)
    f_slow = _Timed(ode.f_slow)
    counters = WorkCounters()
    newton_stats: list[int] = []

    slow_Y: list[np.ndarray | None] = [None] * s_s
    slow_F = np.zeros((s_s, y_n.size))
    slow_done = [False] * s_s
    sf_acc = np.zeros((s_s, y_n.size))  # sum over computed fast stages of a_sf * F

    fsal = use_fsal and method.has_flag(MethodFlag.FSAL)
    fast_history: list[list[np.ndarray]] | None = [] if keep_fast_stages else None

    def solve_stage(rhs_known, a_diag, f, jac_fn):
        guess = rhs_known
        if jac_fn is not None:
            jac = lambda y: np.eye(y.size) - a_diag * np.asarray(jac_fn(y), dtype=float)
        else:
            jac = None
        res = newton_solve(
            lambda y: y - a_diag * f(y) - rhs_known, guess, jac,
            tol=newton_tol, max_iter=newton_max_iter,
        )
        newton_stats.append(res.iterations)
        counters.newton_iterations += res.iterations
        return res.y

    def compute_slow(j):
        if slow_done[j]:
            return
        for k in range(j):
            if Ass[j, k] != 0.0 and not slow_done[k]:
                compute_slow(k)
        rhs = y_n + H * (slow_F[:j].T @ Ass[j, :j]) + h * sf_acc[j]
        if method.slow.kind is TableauKind.SDIRK:
            Y = solve_stage(rhs, H * gamma_s, f_slow, ode.jac_slow)
        else:
            Y = rhs
        slow_Y[j] = Y
        slow_F[j] = f_slow(Y)
        slow_done[j] = True

    ytilde = y_n.copy()
    acc = {k: np.zeros(y_n.size) for k in ("bf", "bf_hat", "bs", "bs_hat")}
    bf, bf_hat = method.fast.b, method.fast.b_hat
    f_prev_last: np.ndarray | None = None
    if fsal and fsal_carry is not None and np.array_equal(fsal_carry.y_next, y_n):
        f_prev_last = fsal_carry.f_fast_last

    # unstable step sizes overflow before the explicit finiteness checks fire;
    # silence the intermediate warnings, NonFiniteState is the real signal
    with np.errstate(over="ignore", invalid="ignore"):
        for lam in range(1, M + 1):
            Afs = method.coupling("fs", lam, M)
            Asf = method.coupling("sf", lam, M)
            fast_F = np.zeros((s_f, y_n.size))
            stage_Y: list[np.ndarray] = []
            for i in range(s_f):
                for j in np.flatnonzero(Afs[i]):
                    compute_slow(int(j))
                rhs = ytilde + H * (slow_F.T @ Afs[i]) + h * (fast_F[:i].T @ Aff[i, :i])
                if method.fast.kind is TableauKind.SDIRK:
                    Y = solve_stage(rhs, h * gamma_f, f_fast, ode.jac_fast)
                    F = f_fast(Y)
                else:
                    Y = rhs
                    if i == 0 and fsal and f_prev_last is not None:
                        F = f_prev_last
                    else:
                        F = f_fast(Y)
                fast_F[i] = F
                if keep_fast_stages:
                    stage_Y.append(Y)
                # fold into slow-stage accumulators; a contribution arriving after
                # the stage was computed means the sparsity is not complementary
                for j in np.flatnonzero(Asf[:, i]):
                    if slow_done[j]:
                        raise CoupledMethod(
                            f"{method.name}: slow stage {j + 1} already computed when "
                            f"micro-step {lam} stage {i + 1} contributes to it"
                        )
                    sf_acc[j] += Asf[j, i] * F
            if fsal:
                f_prev_last = fast_F[s_f - 1]
            acc["bf"] += fast_F.T @ bf
            acc["bf_hat"] += fast_F.T @ bf_hat
            ytilde = ytilde + h * (fast_F.T @ bf)
            if not np.all(np.isfinite(ytilde)):
                raise NonFiniteState(f"fast solution non-finite in micro-step {lam}")
            if fast_history is not None:
                fast_history.append(stage_Y)

        for j in range(s_s):
            compute_slow(j)
    acc["bs"] = slow_F.T @ method.slow.b
    acc["bs_hat"] = slow_F.T @ method.slow.b_hat

    def combine(fast_key, slow_key):
        return y_n + h * acc[fast_key] + H * acc[slow_key]

    y_next = combine("bf", "bs")
    if not np.all(np.isfinite(y_next)):
        raise NonFiniteState("macro-step produced non-finite state")

    counters.fast_evals = f_fast.calls
    counters.slow_evals = f_slow.calls
    carry = FsalCarry(y_next=y_next, f_fast_last=f_prev_last) if fsal and f_prev_last is not None else None

    return StepResult(
        y_next=y_next,
        y_hat=combine("bf_hat", "bs_hat"),
        y_hat_slow=combine("bf", "bs_hat"),
        y_hat_fast=combine("bf_hat", "bs"),
        t=t_n + H,
        H=H,
        M=M,
        slow_stages=[np.asarray(v) for v in slow_Y],
        fast_stages=fast_history,
        newton_stats=newton_stats,
        t_slow=f_slow.seconds,
        t_fast=f_fast.seconds,
        counters=counters,
        fsal_carry=carry,
    )


def error_norm(x: np.ndarray, y: np.ndarray, tolerances: Tolerances) -> float:
    """Scaled RMS deviation: values <= 1 mean "within tolerance"."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    scale = np.asarray(tolerances.abs_tol) + np.asarray(tolerances.rel_tol) * np.maximum(
        np.abs(x), np.abs(y)
    )
    return float(np.sqrt(np.mean(((x - y) / scale) ** 2)))


def error_estimates(result: StepResult, tolerances: Tolerances) -> tuple[float, float, float]:
    """(total, slow, fast) local error estimates from the embedded solutions."""
    eps_total = error_norm(result.y_next, result.y_hat, tolerances)
    eps_slow = error_norm(result.y_next, result.y_hat_slow, tolerances)
    eps_fast = error_norm(result.y_next, result.y_hat_fast, tolerances)
    return eps_total, eps_slow, eps_fast
