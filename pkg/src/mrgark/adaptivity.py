"""Controllers that adapt the macro-step H and the multirate ratio M.

Three strategies are provided:

* ``balancing``: H follows the classical embedded-error rule
  H_new = fac * H * eps_total**(-1/p); M is then rescaled so the projected
  slow and fast error contributions balance,
  M_new = round(M * (eps_fast/eps_slow)**(1/q)) with q = min(p, p_hat).
* ``efficiency``: M_new minimizes the projected cost per unit progress,
  (t_s + M'*t_f) * (eps_slow + eps_fast*(M/M')**q)**(1/(q+1)), over a small
  integer window around the current M; H_new then activates the accuracy
  constraint for that M.
* ``classic-h``: M stays fixed and only H is controlled.

A step is accepted when the total scaled error estimate is at most one.  The
controller is also re-run after a rejection, using the failing step's
estimates.  Costs t_s (per slow stage set) and t_f (per micro-step) are
measured online around the right-hand-side evaluations, or pinned to a
synthetic ratio for reproducible experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import NewtonDivergence, NonFiniteState, StepSizeUnderflow
from .stepping import PartitionedOde, Tolerances, error_estimates, step
from .tableaux import MrGarkMethod

__all__ = [
    "ControllerConfig",
    "AdaptivityState",
    "TraceRecord",
    "DriveResult",
    "balancing_update",
    "efficiency_update",
    "drive",
]

Strategy = Literal["balancing", "efficiency", "classic-h"]


@dataclass(frozen=True)
class ControllerConfig:
    strategy: Strategy = "efficiency"
    fac: float = 0.9
    step_scale_limits: tuple[float, float] = (0.5, 2.0)
    m_bounds: tuple[int, int] | None = None  # default (2,10) balancing, (1,100) otherwise
    efficiency_window: tuple[int, int] = (-1, 2)  # relative to current M, clamped to >= 1
    abs_tol: float | np.ndarray = 1e-6
    rel_tol: float | np.ndarray = 1e-6
    exponent_mode: Literal["paper", "classic"] = "paper"
    synthetic_cost_ratio: float | None = None  # t_slow / t_fast; None = measure online
    max_rejects_per_step: int = 20
    #: H shrink factor when a step fails outright (overflow, Newton divergence)
    #: and no error estimate exists to feed the controller
    failure_shrink: float = 0.5

    def __post_init__(self):
        if not 0 < self.fac <= 1:
            raise ValueError("fac must lie in (0, 1]")
        lo, hi = self.efficiency_window
        if lo > 0 or hi < 0 or hi < lo:
            raise ValueError("efficiency window must contain 0")

    def resolved_m_bounds(self) -> tuple[int, int]:
        if self.m_bounds is not None:
            return self.m_bounds
        return (2, 10) if self.strategy == "balancing" else (1, 100)

    def tolerances(self) -> Tolerances:
        return Tolerances(abs_tol=self.abs_tol, rel_tol=self.rel_tol)


@dataclass
class AdaptivityState:
    H: float
    M: int
    eps_total: float = 0.0
    eps_slow: float = 0.0
    eps_fast: float = 0.0
    # ratio-neutral seeds until real measurements exist
    t_slow: float = 1.0
    t_fast: float = 1.0
    accepted: int = 0
    rejected: int = 0
    trace: list["TraceRecord"] = field(default_factory=list)


@dataclass(frozen=True)
class TraceRecord:
    t: float
    H: float
    M: int
    eps_total: float
    eps_slow: float
    eps_fast: float
    accepted: bool


@dataclass(eq=False)
class DriveResult:
    ts: np.ndarray
    ys: np.ndarray
    state: AdaptivityState


def _h_exponent(p: int, mode: str) -> float:
    return 1.0 / p if mode == "paper" else 1.0 / (p + 1)


def _clamp_h(H: float, H_new: float, config: ControllerConfig) -> float:
    lo, hi = config.step_scale_limits
    return float(min(max(H_new, lo * H), hi * H))


def balancing_update(state: AdaptivityState, p: int, q: int, config: ControllerConfig) -> tuple[float, int]:
    """Macro-step from the total estimate, M from the fast/slow balance."""
    lo, hi = config.resolved_m_bounds()
    if state.eps_total <= 0.0:
        return _clamp_h(state.H, math.inf, config), state.M
    H_new = config.fac * state.H * state.eps_total ** (-_h_exponent(p, config.exponent_mode))
    if state.eps_slow <= 0.0:
        M_new = hi if state.eps_fast > 0.0 else state.M
    else:
        M_new = round(state.M * (state.eps_fast / state.eps_slow) ** (1.0 / q))
    return _clamp_h(state.H, H_new, config), int(min(max(M_new, lo), hi))


def efficiency_update(state: AdaptivityState, q: int, config: ControllerConfig) -> tuple[float, int]:
    """Pick M in a window to minimize projected cost, then solve for H."""
    lo, hi = config.resolved_m_bounds()
    wlo, whi = config.efficiency_window
    window = [m for m in range(max(1, state.M + wlo), state.M + whi + 1) if lo <= m <= hi]
    if not window:
        window = [min(max(state.M, lo), hi)]
    if state.eps_total <= 0.0:
        return _clamp_h(state.H, math.inf, config), state.M

    def projected_eps(m_new: int) -> float:
        return state.eps_slow + state.eps_fast * (state.M / m_new) ** q

    def objective(m_new: int) -> float:
        return (state.t_slow + m_new * state.t_fast) * projected_eps(m_new) ** (1.0 / (q + 1))

    M_new = min(window, key=lambda m: (objective(m), m))
    eps_proj = projected_eps(M_new)
    if eps_proj <= 0.0:
        return _clamp_h(state.H, math.inf, config), M_new
    H_new = config.fac * state.H * eps_proj ** (-1.0 / (q + 1))
    return _clamp_h(state.H, H_new, config), M_new


def _classic_update(state: AdaptivityState, p: int, config: ControllerConfig) -> tuple[float, int]:
    if state.eps_total <= 0.0:
        return _clamp_h(state.H, math.inf, config), state.M
    H_new = config.fac * state.H * state.eps_total ** (-_h_exponent(p, config.exponent_mode))
    return _clamp_h(state.H, H_new, config), state.M


def _controller(state: AdaptivityState, method: MrGarkMethod, config: ControllerConfig) -> tuple[float, int]:
    p = method.order
    q = min(method.order, method.embedded_order)
    if config.strategy == "balancing":
        return balancing_update(state, p, q, config)
    if config.strategy == "efficiency":
        return efficiency_update(state, q, config)
    if config.strategy == "classic-h":
        return _classic_update(state, p, config)
    raise ValueError(f"unknown strategy {config.strategy!r}")


def drive(
    method: MrGarkMethod,
    ode: PartitionedOde,
    y0: np.ndarray,
    t0: float,
    t_end: float,
    config: ControllerConfig,
    H0: float | None = None,
    M0: int | None = None,
) -> DriveResult:
    """Integrate adaptively from t0 to t_end; the final time is hit exactly."""
    if t_end <= t0:
        raise ValueError("t_end must exceed t0")
    span = t_end - t0
    lo, hi = config.resolved_m_bounds()
    state = AdaptivityState(
        H=H0 if H0 is not None else span / 100.0,
        M=int(min(max(M0 if M0 is not None else lo, lo), hi)),
    )
    tolerances = config.tolerances()

    t = float(t0)
    y = np.array(y0, dtype=float)
    ts = [t]
    ys = [y.copy()]
    carry = None
    rejects_in_a_row = 0

    while t < t_end - 1e-14 * span:
        if state.H < 1e-14 * span:
            raise StepSizeUnderflow(f"H={state.H} at t={t}")
        H_eff = min(state.H, t_end - t)
        try:
            result = step(method, ode, y, t, H_eff, state.M, fsal_carry=carry)
        except (NonFiniteState, NewtonDivergence):
            # blow-up inside the step: no usable estimate, shrink and retry
            state.rejected += 1
            rejects_in_a_row += 1
            carry = None
            state.trace.append(
                TraceRecord(t, H_eff, state.M, math.inf, math.inf, math.inf, False)
            )
            if rejects_in_a_row > config.max_rejects_per_step:
                raise StepSizeUnderflow(f"{rejects_in_a_row} consecutive rejections at t={t}")
            state.H = H_eff * config.failure_shrink
            continue
        eps_total, eps_slow, eps_fast = error_estimates(result, tolerances)
        # the estimates belong to the step actually taken
        state.H = H_eff
        state.eps_total, state.eps_slow, state.eps_fast = eps_total, eps_slow, eps_fast
        if config.synthetic_cost_ratio is not None:
            state.t_slow, state.t_fast = config.synthetic_cost_ratio, 1.0
        elif result.t_fast > 0.0 and result.t_slow > 0.0:
            state.t_slow = result.t_slow
            state.t_fast = result.t_fast / state.M

        accepted = eps_total <= 1.0
        state.trace.append(
            TraceRecord(t, H_eff, state.M, eps_total, eps_slow, eps_fast, accepted)
        )
        if accepted:
            state.accepted += 1
            rejects_in_a_row = 0
            t += H_eff
            y = result.y_next
            carry = result.fsal_carry
            ts.append(t)
            ys.append(y.copy())
        else:
            state.rejected += 1
            rejects_in_a_row += 1
            carry = None
            if rejects_in_a_row > config.max_rejects_per_step:
                raise StepSizeUnderflow(
                    f"{rejects_in_a_row} consecutive rejections at t={t}"
                )
        state.H, state.M = _controller(state, method, config)

    return DriveResult(ts=np.array(ts), ys=np.array(ys), state=state)
