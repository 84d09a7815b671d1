"""Pointwise conditional expectation by shrinking symmetric windows.

The conditional value at a single point y of the conditioning variable is
the limit of regular-event conditioning on (y-eps, y+eps) along a geometric
eps schedule.  A trace records every step, detects convergence under a dual
tolerance (successive difference for exact spaces, three standard errors
for samplers), optionally accelerates the limit by one Richardson step when
the empirical order is stable, and never fakes convergence: starved sampler
windows and non-contracting tails get their own verdicts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientTrace, NonApproachablePoint
from .spaces import (
    DensityGrid1D,
    DensityGrid2D,
    Event,
    RandomVariable,
    Sampler,
    cond_expectation_event,
    std,
)
from . import quadrature as quad

CONVERGED = "Converged"
PLATEAUED = "Plateaued"
DIVERGED = "Diverged"
STARVED = "Starved"

DEFAULT_TOL = 1e-6
DEFAULT_N_MIN = 100
ORDER_STABILITY = 0.4
ORDER_RANGE = (0.2, 8.0)


@dataclass(frozen=True)
class Schedule:
    """Geometric shrink schedule eps_k = eps0 * factor^k, k < depth.

    With eps0 unset, one standard deviation of the conditioning variable is
    used.  Geometric shrinkage keeps the Richardson step well-posed.
    """

    eps0: float | None = None
    factor: float = 0.5
    depth: int = 20

    def __post_init__(self):
        if not (0.0 < self.factor < 1.0):
            raise ValueError("factor must lie in (0, 1)")
        if self.depth < 2:
            raise ValueError("depth must be at least 2")
        if self.eps0 is not None and self.eps0 <= 0:
            raise ValueError("eps0 must be positive")

    def epsilons(self, default_eps0: float) -> list[float]:
        e0 = self.eps0 if self.eps0 is not None else default_eps0
        return [e0 * self.factor**k for k in range(self.depth)]


@dataclass(frozen=True)
class WindowStep:
    eps: float
    estimate: float
    se: float
    n: int | None
    prob: float


@dataclass(eq=False)
class WindowTrace:
    """Record of the shrinking-window estimates at one target point."""

    target: float
    steps: list
    value: float
    extrapolated: bool
    verdict: str
    bound: str | None  # which tolerance decided: "difference" or "statistical"
    tol: float
    one_sided: str | None = None
    resolution: float | None = None  # grid pitch of the conditioning axis

    def __post_init__(self):
        eps = [s.eps for s in self.steps]
        if any(e <= 0 for e in eps) or any(nxt >= prv for prv, nxt in zip(eps[:-1], eps[1:])):
            raise ValueError("window schedule must be strictly decreasing and positive")
        if self.verdict == CONVERGED and len(self.steps) >= 2:
            d = abs(self.steps[-1].estimate - self.steps[-2].estimate)
            if d > self.tol:
                raise ValueError("Converged verdict with final difference above tol")

    @property
    def estimates(self) -> np.ndarray:
        return np.array([s.estimate for s in self.steps])

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([s.eps for s in self.steps])

    def to_json_dict(self) -> dict:
        return {
            "kind": "window_trace",
            "target": float(self.target),
            "value": float(self.value),
            "extrapolated": self.extrapolated,
            "verdict": self.verdict,
            "bound": self.bound,
            "tol": float(self.tol),
            "one_sided": self.one_sided,
            "steps": [
                {"eps": float(s.eps), "estimate": float(s.estimate),
                 "se": float(s.se), "n": s.n, "prob": float(s.prob)}
                for s in self.steps
            ],
        }


def _assess(steps, tol):
    """(difference, effective tol, bound label) for the last two steps."""
    last = steps[-1]
    diff = abs(last.estimate - steps[-2].estimate)
    if last.n is not None:
        stat = 3.0 * last.se
        if stat > tol:
            return diff, stat, "statistical"
    return diff, tol, "difference"


def _extrapolate(steps):
    """Richardson step from the last two estimates at stable empirical order."""
    if len(steps) < 4:
        return steps[-1].estimate, False
    e = [s.estimate for s in steps[-4:]]
    eps = [s.eps for s in steps[-4:]]
    d = [e[i + 1] - e[i] for i in range(3)]
    if any(x == 0.0 for x in d) or d[1] * d[2] < 0:
        return steps[-1].estimate, False
    r_ab = eps[1] / eps[2]
    r_bc = eps[2] / eps[3]
    try:
        p_ab = math.log(abs(d[0] / d[1])) / math.log(r_ab)
        p_bc = math.log(abs(d[1] / d[2])) / math.log(r_bc)
    except (ValueError, ZeroDivisionError):
        return steps[-1].estimate, False
    if abs(p_ab - p_bc) > ORDER_STABILITY or not (ORDER_RANGE[0] <= p_bc <= ORDER_RANGE[1]):
        return steps[-1].estimate, False
    return quad.richardson_limit(steps[-2].estimate, steps[-1].estimate, r_bc, p_bc), True


def shrink_trace(space, X: RandomVariable, pairs, tol: float = DEFAULT_TOL,
                 n_min: int = DEFAULT_N_MIN, target: float = 0.0,
                 resolution: float | None = None, one_sided: str | None = None,
                 stop_early: bool = True) -> WindowTrace:
    """Drive a shrinking sequence of positive-probability events.

    ``pairs`` is a strictly-decreasing list of (eps, event).  Raises
    NonApproachablePoint when an event's probability is floored before any
    adequate step exists; otherwise sampler windows below ``n_min`` rows end
    the trace with the Starved verdict instead of a noise-dominated value.
    With ``stop_early`` unset the full schedule runs and convergence is
    judged on the final pair of steps, which keeps multi-family comparisons
    on one shared eps grid.
    """
    steps: list[WindowStep] = []
    ran_dry = False
    verdict = None
    bound = None
    eff_tol = tol
    for eps, event in pairs:
        r = cond_expectation_event(space, X, event)
        if r.degenerate:
            if r.n is not None and steps:
                ran_dry = True
                break
            raise NonApproachablePoint(
                f"window {event.name!r} at target {target!r} has mass {r.prob!r}")
        if r.n is not None and r.n < n_min:
            if steps:
                ran_dry = True
                break
            raise NonApproachablePoint(
                f"window {event.name!r} holds {r.n} samples, below n_min={n_min}")
        steps.append(WindowStep(float(eps), r.value, r.se, r.n, r.prob))
        if stop_early and len(steps) >= 2:
            diff, eff, which = _assess(steps, tol)
            if diff <= eff:
                verdict, bound, eff_tol = CONVERGED, which, eff
                break
    if verdict is None and len(steps) >= 2:
        diff, eff, which = _assess(steps, tol)
        if diff <= eff:
            verdict, bound, eff_tol = CONVERGED, which, eff
    if verdict is None:
        if ran_dry:
            verdict = STARVED
        elif len(steps) >= 4:
            d = np.abs(np.diff([s.estimate for s in steps]))
            growing = d[-1] > d[-2] > d[-3] and d[-1] > d[0]
            verdict = DIVERGED if growing else PLATEAUED
        else:
            verdict = PLATEAUED
    if not steps:
        raise NonApproachablePoint(f"no adequate window at target {target!r}")
    if verdict in (CONVERGED, PLATEAUED) and bound != "statistical":
        value, extrapolated = _extrapolate(steps)
    else:
        value, extrapolated = steps[-1].estimate, False
    return WindowTrace(target=float(target), steps=steps, value=float(value),
                       extrapolated=extrapolated, verdict=verdict, bound=bound,
                       tol=float(eff_tol), one_sided=one_sided, resolution=resolution)


def _conditioning_geometry(space, Y: RandomVariable):
    """(axis range, pitch) of the conditioning variable, when it is a grid axis."""
    if isinstance(space, DensityGrid1D):
        if Y.coord != space.axis:
            raise ValueError(
                "window conditioning on a grid requires a coordinate variable; "
                f"{Y.name!r} is not the {space.axis!r} axis")
        return (space.lo, space.hi), space.pitch
    if isinstance(space, DensityGrid2D):
        if Y.coord not in space.axes:
            raise ValueError(
                "window conditioning on a grid requires a coordinate variable; "
                f"{Y.name!r} is not one of the axes {space.axes!r}")
        axis = space.axis_index(Y.coord)
        return space.ranges[axis], (space.pitch0, space.pitch1)[axis]
    return None, None


def window_estimate(space, X: RandomVariable, Y: RandomVariable, y: float,
                    schedule: Schedule | None = None, tol: float = DEFAULT_TOL,
                    n_min: int = DEFAULT_N_MIN, stop_early: bool = True,
                    family: str = "symmetric") -> WindowTrace:
    """E[X | Y = y] as the limit of E[X | Y in (y-eps, y+eps)].

    ``family`` selects the shrinking neighborhoods: "symmetric" (the tested
    default; switches to a one-sided family automatically at a boundary of a
    grid support, noted on the trace), or "upper"/"lower" to force windows
    opening to one side of y.  ``stop_early=False`` runs the whole schedule
    even after the tolerance is met, e.g. for plotting or order measurement.
    """
    if family not in ("symmetric", "upper", "lower"):
        raise ValueError(f"unknown window family {family!r}")
    schedule = schedule or Schedule()
    rng, pitch = _conditioning_geometry(space, Y)
    default_eps0 = std(space, Y)
    if default_eps0 == 0.0:
        default_eps0 = 1.0
    epsilons = schedule.epsilons(default_eps0)
    one_sided = None if family == "symmetric" else family
    if rng is not None:
        lo, hi = rng
        if y < lo or y > hi:
            raise NonApproachablePoint(f"{y!r} lies outside the {Y.name!r} range {rng!r}")
        if family == "symmetric":
            if y - lo < pitch:
                one_sided = "upper"
            elif hi - y < pitch:
                one_sided = "lower"
    y = float(y)
    if one_sided == "upper":
        pairs = [(e, Event.interval(Y, y, y + e)) for e in epsilons]
    elif one_sided == "lower":
        pairs = [(e, Event.interval(Y, y - e, y)) for e in epsilons]
    else:
        pairs = [(e, Event.window(Y, y, e)) for e in epsilons]
    return shrink_trace(space, X, pairs, tol=tol, n_min=n_min, target=y,
                        resolution=pitch, one_sided=one_sided, stop_early=stop_early)


@dataclass(eq=False)
class PointwiseCondExp:
    """Window traces tabulated over a grid of conditioning values.

    Nodes whose trace cannot be formed (window outside the support) are kept
    as flags, never silently interpolated.
    """

    space: object
    X: RandomVariable
    Y: RandomVariable
    y_grid: np.ndarray
    traces: list
    schedule: Schedule
    tol: float
    n_min: int
    flags: list = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        return np.array([t.value if t is not None else math.nan for t in self.traces])

    @property
    def verdicts(self) -> list:
        return [t.verdict if t is not None else "NonApproachablePoint" for t in self.traces]

    def trace_at(self, y: float) -> WindowTrace | None:
        i = int(np.argmin(np.abs(self.y_grid - y)))
        if not math.isclose(float(self.y_grid[i]), float(y), rel_tol=0.0, abs_tol=1e-12):
            raise KeyError(f"{y!r} is not a grid node")
        return self.traces[i]

    def evaluate(self, y: float) -> WindowTrace:
        """Fresh trace at an arbitrary point, same schedule and tolerance.

        Deterministic for a fixed space: sampler rows are drawn once and
        frozen, so repeated evaluation at one y reproduces the trace.
        """
        return window_estimate(self.space, self.X, self.Y, float(y),
                               schedule=self.schedule, tol=self.tol, n_min=self.n_min)

    def to_json_dict(self) -> dict:
        return {
            "kind": "window_grid",
            "x": self.X.name,
            "y": self.Y.name,
            "grid": [float(v) for v in self.y_grid],
            "values": [None if t is None else float(t.value) for t in self.traces],
            "verdicts": self.verdicts,
            "traces": [None if t is None else t.to_json_dict() for t in self.traces],
        }


def evaluate_on_grid(space, X: RandomVariable, Y: RandomVariable, y_grid,
                     schedule: Schedule | None = None, tol: float = DEFAULT_TOL,
                     n_min: int = DEFAULT_N_MIN) -> PointwiseCondExp:
    """Tabulate window traces over y_grid.

    Sampler evaluations draw an independent child stream per node, derived
    from (space seed, node index), so grid evaluation parallelizes without
    sharing sample noise between nodes.
    """
    schedule = schedule or Schedule()
    y_grid = np.asarray(y_grid, dtype=float)
    traces = []
    flags = []
    for i, y in enumerate(y_grid):
        node_space = space.substream(i) if isinstance(space, Sampler) else space
        try:
            traces.append(window_estimate(node_space, X, Y, float(y),
                                          schedule=schedule, tol=tol, n_min=n_min))
        except NonApproachablePoint as exc:
            traces.append(None)
            flags.append((float(y), str(exc)))
    return PointwiseCondExp(space, X, Y, y_grid, traces, schedule, tol, n_min, flags)


def convergence_order(trace: WindowTrace, min_eps: float | None = None) -> float:
    """Empirical order: least-squares slope of log|e_k - e_last| vs log eps_k.

    Steps too close to the final estimate to carry signal are dropped: below
    the roundoff floor, below three combined standard errors (samplers), or
    inside the mesh resolution (grids, eps < 4 * pitch) where the surrogate
    interpolant plateaus.  An all-floor trace means a constant limit curve
    and reports +inf.
    """
    if len(trace.steps) < 3:
        raise InsufficientTrace("need at least 3 estimates to fit an order")
    e = trace.estimates
    eps = trace.epsilons
    if not np.all(np.isfinite(e)):
        raise InsufficientTrace("non-finite estimates in trace")
    ref = e[-1]
    r = np.abs(e[:-1] - ref)
    floor = 1e3 * np.finfo(float).eps * max(1.0, abs(ref))
    usable = r > floor
    if trace.steps[-1].n is not None:
        ses = np.array([s.se for s in trace.steps])
        usable &= r > 3.0 * (ses[:-1] + ses[-1])
    if min_eps is None and trace.resolution is not None:
        min_eps = 4.0 * trace.resolution
    if min_eps is not None:
        usable &= eps[:-1] >= min_eps
    if not np.any(usable):
        if np.all(r <= floor):
            return math.inf
        raise InsufficientTrace("no usable steps above the noise floor")
    if int(usable.sum()) < 3:
        if np.all(r[~usable] <= floor):
            return math.inf
        raise InsufficientTrace("fewer than 3 usable steps to fit an order")
    return quad.loglog_slope(eps[:-1][usable], r[usable])
