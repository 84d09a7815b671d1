"""Probability spaces, random variables, and events at desk scale.

Four space variants share one estimator API:

* ``DiscreteAtoms``   -- finite weighted atoms, exact arithmetic via fsum;
* ``DensityGrid1D``   -- density values on a uniform node grid, trapezoid
  quadrature, window events integrated exactly against the piecewise-linear
  interpolant;
* ``DensityGrid2D``   -- same on a rectangle, axis-aligned windows clipped
  exactly along either axis;
* ``Sampler``         -- a seeded Monte Carlo column store; every estimate
  carries a standard error and an effective sample count.

Random variables evaluate on a space's "frame": the atom itself on discrete
spaces, a dict of named coordinate arrays on grids and samplers.  Events are
atom sets, predicates, unions of open intervals of a random variable, or
complements of those.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import quadrature as quad
from .errors import EmptyRange, NonIntegrable, UndefinedPredicate

# Below this mass, grid and sampler events are treated as null: floating
# point cannot witness exact nullity off the discrete variant.
PROB_FLOOR = 1e-12


def _fsum(terms) -> float:
    return math.fsum(float(t) for t in terms)


@dataclass(frozen=True)
class Estimate:
    """Point value with a statistical standard error.

    Exact variants (atoms, grids) report ``se = 0``; sampler estimates carry
    the Monte Carlo error and the number of rows behind the value.
    """

    value: float
    se: float = 0.0
    n: int | None = None

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class ConditionalEstimate:
    """Result of conditioning on an event.

    ``degenerate`` marks the defined-by-convention branch where the event has
    (floored) zero probability and the value is 0.
    """

    value: float
    se: float = 0.0
    n: int | None = None
    prob: float = 0.0
    degenerate: bool = False

    def __float__(self) -> float:
        return self.value


# ---------------------------------------------------------------------------
# Random variables


@dataclass(frozen=True, eq=False)
class RandomVariable:
    """A named evaluation rule mapping points of a space to reals.

    ``fn`` receives the space's frame: the atom on discrete spaces, a dict of
    named coordinate arrays on grids and samplers.  ``coord`` marks pure
    coordinate extractors; interval events on such variables use the exact
    clipped-quadrature path on grids.
    """

    name: str
    fn: Callable
    coord: str | None = None

    def __call__(self, arg):
        return self.fn(arg)

    def _lift(self, other, op, sym):
        if isinstance(other, RandomVariable):
            f, g = self.fn, other.fn
            return RandomVariable(f"({self.name}{sym}{other.name})", lambda a: op(f(a), g(a)))
        f, c = self.fn, other
        return RandomVariable(f"({self.name}{sym}{other!r})", lambda a: op(f(a), c))

    def __add__(self, other):
        return self._lift(other, lambda x, y: x + y, "+")

    __radd__ = __add__

    def __sub__(self, other):
        return self._lift(other, lambda x, y: x - y, "-")

    def __mul__(self, other):
        return self._lift(other, lambda x, y: x * y, "*")

    __rmul__ = __mul__

    def __neg__(self):
        f = self.fn
        return RandomVariable(f"(-{self.name})", lambda a: -f(a))


def coordinate(name: str) -> RandomVariable:
    """The coordinate extractor for a named axis or sample column."""
    return RandomVariable(name, lambda frame: frame[name], coord=name)


def from_table(name: str, table: dict) -> RandomVariable:
    """Atom-indexed lookup table, for discrete spaces."""
    return RandomVariable(name, lambda atom: table[atom])


def constant(value: float, name: str | None = None) -> RandomVariable:
    return RandomVariable(name or repr(value), lambda arg: value)


# ---------------------------------------------------------------------------
# Events


@dataclass(frozen=True, eq=False)
class Event:
    """A measurable set: atom subset, predicate, interval union, or complement.

    The first computed probability per space is cached on the event.
    """

    name: str
    kind: str  # "atoms" | "pred" | "intervals" | "complement"
    atoms: frozenset | None = None
    pred: Callable | None = None
    rv: RandomVariable | None = None
    pieces: tuple = ()
    base: "Event | None" = None
    _prob: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_atoms(cls, atoms, name: str | None = None) -> "Event":
        atoms = frozenset(atoms)
        return cls(name or f"atoms{sorted(map(repr, atoms))}", "atoms", atoms=atoms)

    @classmethod
    def where(cls, pred: Callable, name: str) -> "Event":
        return cls(name, "pred", pred=pred)

    @classmethod
    def interval(cls, rv: RandomVariable, lo: float, hi: float, name: str | None = None) -> "Event":
        return cls(name or f"{{{lo!r}<{rv.name}<{hi!r}}}", "intervals",
                   rv=rv, pieces=((float(lo), float(hi)),))

    @classmethod
    def window(cls, rv: RandomVariable, center: float, eps: float) -> "Event":
        return cls.interval(rv, center - eps, center + eps,
                            name=f"{{|{rv.name}-{center!r}|<{eps!r}}}")

    def complement(self, name: str | None = None) -> "Event":
        return Event(name or f"not({self.name})", "complement", base=self)

    def _eval(self, arg):
        """Membership at a frame (arrays) or a single atom (scalar bool)."""
        if self.kind == "atoms":
            return arg in self.atoms
        if self.kind == "pred":
            return self.pred(arg)
        if self.kind == "intervals":
            v = self.rv.fn(arg)
            out = False
            for lo, hi in self.pieces:
                out = np.logical_or(out, np.logical_and(lo < v, v < hi))
            return out
        return np.logical_not(self.base._eval(arg))

    def intersect(self, other: "Event", name: str | None = None) -> "Event":
        """Intersection, staying on the exact interval path when possible."""
        label = name or f"({self.name})&({other.name})"
        if self.kind == "atoms" and other.kind == "atoms":
            return Event(label, "atoms", atoms=self.atoms & other.atoms)
        if (self.kind == "intervals" and other.kind == "intervals"
                and _same_variable(self.rv, other.rv)):
            pieces = []
            for a_lo, a_hi in self.pieces:
                for b_lo, b_hi in other.pieces:
                    lo, hi = max(a_lo, b_lo), min(a_hi, b_hi)
                    if lo < hi:
                        pieces.append((lo, hi))
            return Event(label, "intervals", rv=self.rv, pieces=tuple(sorted(pieces)))
        a, b = self, other
        return Event(label, "pred", pred=lambda arg: np.logical_and(a._eval(arg), b._eval(arg)))


def _same_variable(a: RandomVariable, b: RandomVariable) -> bool:
    return a is b or (a.coord is not None and a.coord == b.coord)


def union_events(events, name: str | None = None) -> Event:
    """Union of homogeneous events (all atom sets, or intervals on one rv)."""
    events = list(events)
    if not events:
        raise ValueError("empty union has no carrier; handle it at the call site")
    label = name or "|".join(e.name for e in events)
    if all(e.kind == "atoms" for e in events):
        merged: frozenset = frozenset()
        for e in events:
            merged = merged | e.atoms
        return Event(label, "atoms", atoms=merged)
    if all(e.kind == "intervals" for e in events):
        rv = events[0].rv
        if not all(_same_variable(e.rv, rv) for e in events):
            raise ValueError("interval union requires a shared variable")
        pieces = sorted(p for e in events for p in e.pieces)
        merged_pieces: list[tuple[float, float]] = []
        for lo, hi in pieces:
            if merged_pieces and lo <= merged_pieces[-1][1]:
                merged_pieces[-1] = (merged_pieces[-1][0], max(hi, merged_pieces[-1][1]))
            else:
                merged_pieces.append((lo, hi))
        return Event(label, "intervals", rv=rv, pieces=tuple(merged_pieces))
    raise ValueError("cannot union mixed event kinds exactly")


def complement_within(space, event: Event, name: str | None = None) -> Event:
    """Complement of an event, staying on an exact event kind when possible.

    Atom-set events on discrete spaces complement against the atom list;
    single-variable interval events complement to the outer interval pieces.
    Anything else falls back to a structural complement node.
    """
    label = name or f"not({event.name})"
    if event.kind == "atoms" and isinstance(space, DiscreteAtoms):
        return Event(label, "atoms", atoms=frozenset(space.atoms) - event.atoms)
    if event.kind == "intervals":
        edges = [-math.inf]
        for lo, hi in sorted(event.pieces):
            edges.extend((lo, hi))
        edges.append(math.inf)
        pieces = tuple((a, b) for a, b in zip(edges[::2], edges[1::2]) if a < b)
        return Event(label, "intervals", rv=event.rv, pieces=pieces)
    return event.complement(label)


# ---------------------------------------------------------------------------
# Space variants


@dataclass(eq=False)
class DiscreteAtoms:
    """Finite weighted atom space. Weights sum to 1 within 1e-12, >= 0.

    Zero-weight atoms are allowed; they model exactly-null events while
    keeping their points representable.
    """

    atoms: tuple
    weights: np.ndarray
    name: str = "discrete"
    meta: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.atoms = tuple(self.atoms)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (len(self.atoms),):
            raise ValueError("one weight per atom required")
        if np.any(self.weights < 0):
            raise ValueError("negative atom weight")
        total = _fsum(self.weights)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"atom weights sum to {total!r}, not 1")

    @classmethod
    def uniform(cls, atoms, name="discrete"):
        n = len(atoms)
        return cls(tuple(atoms), np.full(n, 1.0 / n), name=name)

    def values_of(self, rv: RandomVariable) -> np.ndarray:
        key = ("rv", id(rv))
        hit = self._cache.get(key)
        if hit is not None:
            return hit[1]
        vals = np.asarray([float(rv.fn(a)) for a in self.atoms])
        self._cache[key] = (rv, vals)
        return vals

    def indicator(self, event: Event) -> np.ndarray:
        if event.kind == "complement":
            return ~self.indicator(event.base)
        try:
            flags = [bool(event._eval(a)) for a in self.atoms]
        except Exception as exc:  # membership must be decidable at every atom
            raise UndefinedPredicate(
                f"event {event.name!r} undefined on some atom: {exc}") from exc
        return np.asarray(flags, dtype=bool)

    def members(self, event: Event) -> list:
        ind = self.indicator(event)
        return [a for a, m in zip(self.atoms, ind) if m]

    def moment(self, rv: RandomVariable | None, event: Event | None) -> Estimate:
        """E[1_A X]; with rv None the event mass, with event None the full mean."""
        w = self.weights
        if event is not None:
            w = np.where(self.indicator(event), w, 0.0)
        if rv is None:
            return Estimate(_fsum(w[w != 0.0]))
        x = self.values_of(rv)
        live = w != 0.0
        if not np.all(np.isfinite(x[live])):
            raise NonIntegrable(f"{rv.name} is not finite on atoms with mass")
        return Estimate(_fsum(w[live] * x[live]))

    def cond(self, rv: RandomVariable, event: Event, floor: float) -> ConditionalEstimate:
        p = self.moment(None, event).value
        if p == 0.0:
            return ConditionalEstimate(0.0, prob=0.0, degenerate=True)
        num = self.moment(rv, event).value
        return ConditionalEstimate(num / p, prob=p)


def _grid_nodes(lo: float, hi: float, n: int) -> np.ndarray:
    if n < 2 or hi <= lo:
        raise ValueError("grid needs at least 2 nodes and hi > lo")
    return np.linspace(lo, hi, n)


@dataclass(eq=False)
class DensityGrid1D:
    """Density values on a uniform 1D node grid over [lo, hi].

    The density must integrate to 1 within ``quad_tol`` under the trapezoid
    rule; the construction-time defect is recorded in ``meta``.
    """

    axis: str
    lo: float
    hi: float
    values: np.ndarray
    quad_tol: float = 1e-8
    name: str = "grid1d"
    meta: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.nodes = _grid_nodes(self.lo, self.hi, self.values.shape[0])
        self.pitch = float(self.nodes[1] - self.nodes[0])
        if np.any(self.values < 0):
            raise ValueError("density values must be non-negative")
        defect = float(quad.integrate(self.values, self.pitch)) - 1.0
        if abs(defect) > self.quad_tol:
            raise ValueError(f"density integrates to 1{defect:+e}, beyond quad_tol")
        self.meta.setdefault("normalization_defect", defect)

    def frame(self) -> dict:
        return {self.axis: self.nodes}

    def values_of(self, rv: RandomVariable) -> np.ndarray:
        key = ("rv", id(rv))
        hit = self._cache.get(key)
        if hit is not None:
            return hit[1]
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.broadcast_to(np.asarray(rv.fn(self.frame()), dtype=float),
                                   self.nodes.shape).copy()
        self._cache[key] = (rv, vals)
        return vals

    def indicator(self, event: Event) -> np.ndarray:
        if event.kind == "complement":
            return ~self.indicator(event.base)
        if event.kind == "atoms":
            raise UndefinedPredicate("atom-set events are undefined on density grids")
        try:
            ind = np.broadcast_to(np.asarray(event._eval(self.frame())),
                                  self.nodes.shape)
        except Exception as exc:
            raise UndefinedPredicate(f"event {event.name!r} failed on the grid: {exc}") from exc
        if ind.dtype != bool:
            raise UndefinedPredicate(f"event {event.name!r} is not boolean on the grid")
        return ind

    def _integrand(self, rv: RandomVariable | None) -> tuple:
        """(node values, cached cumulative antiderivative) of x*f or f."""
        key = ("prod", id(rv) if rv is not None else None)
        hit = self._cache.get(key)
        if hit is not None:
            return hit[1], hit[2]
        g = self.values if rv is None else self.values_of(rv) * self.values
        cum = quad.cumulative(g, self.pitch)
        self._cache[key] = (rv, g, cum)
        return g, cum

    def _exact_pieces(self, event: Event):
        if event.kind == "intervals" and event.rv.coord == self.axis:
            return event.pieces
        return None

    def moment(self, rv: RandomVariable | None, event: Event | None) -> Estimate:
        if rv is not None and not np.all(np.isfinite(self.values_of(rv))):
            raise NonIntegrable(f"{rv.name} is not finite on the grid")
        g, cum = self._integrand(rv)
        if event is None:
            return Estimate(float(quad.integrate(g, self.pitch)))
        if event.kind == "complement":
            return Estimate(self.moment(rv, None).value - self.moment(rv, event.base).value)
        pieces = self._exact_pieces(event)
        if pieces is not None:
            total = sum(quad.clip_integral(self.nodes, g, lo, hi, cum=cum)
                        for lo, hi in pieces)
            return Estimate(float(total))
        # Node-indicator fallback: O(pitch) accuracy at region boundaries.
        ind = self.indicator(event)
        w = np.full_like(self.values, self.pitch)
        w[0] *= 0.5
        w[-1] *= 0.5
        return Estimate(float(np.sum(w * g * ind)))

    def cond(self, rv: RandomVariable, event: Event, floor: float) -> ConditionalEstimate:
        p = self.moment(None, event).value
        if p < floor:
            return ConditionalEstimate(0.0, prob=p, degenerate=True)
        num = self.moment(rv, event).value
        return ConditionalEstimate(num / p, prob=p)


@dataclass(eq=False)
class DensityGrid2D:
    """Joint density values on a uniform rectangle grid.

    ``values[i, j]`` is the density at ``(nodes0[i], nodes1[j])``.  Interval
    events on either coordinate integrate exactly against the interpolant;
    general predicates fall back to node-indicator quadrature.
    """

    axes: tuple
    ranges: tuple
    values: np.ndarray
    quad_tol: float = 1e-8
    name: str = "grid2d"
    meta: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.axes = tuple(self.axes)
        self.values = np.asarray(self.values, dtype=float)
        (a, b), (c, d) = self.ranges
        n0, n1 = self.values.shape
        self.nodes0 = _grid_nodes(a, b, n0)
        self.nodes1 = _grid_nodes(c, d, n1)
        self.pitch0 = float(self.nodes0[1] - self.nodes0[0])
        self.pitch1 = float(self.nodes1[1] - self.nodes1[0])
        if np.any(self.values < 0):
            raise ValueError("density values must be non-negative")
        defect = float(quad.integrate(quad.integrate(self.values, self.pitch1),
                                      self.pitch0)) - 1.0
        if abs(defect) > self.quad_tol:
            raise ValueError(f"density integrates to 1{defect:+e}, beyond quad_tol")
        self.meta.setdefault("normalization_defect", defect)

    def frame(self) -> dict:
        key = "frame"
        if key not in self._cache:
            m0, m1 = np.meshgrid(self.nodes0, self.nodes1, indexing="ij")
            self._cache[key] = {self.axes[0]: m0, self.axes[1]: m1}
        return self._cache[key]

    def axis_index(self, coord: str) -> int:
        return self.axes.index(coord)

    def values_of(self, rv: RandomVariable) -> np.ndarray:
        key = ("rv", id(rv))
        hit = self._cache.get(key)
        if hit is not None:
            return hit[1]
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.broadcast_to(np.asarray(rv.fn(self.frame()), dtype=float),
                                   self.values.shape).copy()
        self._cache[key] = (rv, vals)
        return vals

    def indicator(self, event: Event) -> np.ndarray:
        if event.kind == "complement":
            return ~self.indicator(event.base)
        if event.kind == "atoms":
            raise UndefinedPredicate("atom-set events are undefined on density grids")
        try:
            ind = np.broadcast_to(np.asarray(event._eval(self.frame())),
                                  self.values.shape)
        except Exception as exc:
            raise UndefinedPredicate(f"event {event.name!r} failed on the grid: {exc}") from exc
        if ind.dtype != bool:
            raise UndefinedPredicate(f"event {event.name!r} is not boolean on the grid")
        return ind

    def _product(self, rv: RandomVariable | None) -> np.ndarray:
        key = ("prod", id(rv) if rv is not None else None)
        hit = self._cache.get(key)
        if hit is not None:
            return hit[1]
        g = self.values if rv is None else self.values_of(rv) * self.values
        self._cache[key] = (rv, g)
        return g

    def _cum_along(self, rv: RandomVariable | None, axis: int) -> np.ndarray:
        key = ("cum", id(rv) if rv is not None else None, axis)
        hit = self._cache.get(key)
        if hit is not None:
            return hit[1]
        g = self._product(rv)
        if axis == 1:
            cum = quad.cumulative(g, self.pitch1)
        else:
            cum = quad.cumulative(g.T.copy(), self.pitch0)
        self._cache[key] = (rv, cum)
        return cum

    def moment(self, rv: RandomVariable | None, event: Event | None) -> Estimate:
        if rv is not None and not np.all(np.isfinite(self.values_of(rv))):
            raise NonIntegrable(f"{rv.name} is not finite on the grid")
        g = self._product(rv)
        if event is None:
            return Estimate(float(quad.integrate(quad.integrate(g, self.pitch1),
                                                 self.pitch0)))
        if event.kind == "complement":
            return Estimate(self.moment(rv, None).value - self.moment(rv, event.base).value)
        if event.kind == "intervals" and event.rv.coord in self.axes:
            if not event.pieces:
                return Estimate(0.0)
            axis = self.axis_index(event.rv.coord)
            cum = self._cum_along(rv, axis)
            if axis == 1:
                rows = sum(quad.clip_integral(self.nodes1, g, lo, hi, cum=cum)
                           for lo, hi in event.pieces)
                return Estimate(float(quad.integrate(rows, self.pitch0)))
            cols = sum(quad.clip_integral(self.nodes0, g.T, lo, hi, cum=cum)
                       for lo, hi in event.pieces)
            return Estimate(float(quad.integrate(cols, self.pitch1)))
        ind = self.indicator(event)
        w0 = np.full(self.values.shape[0], self.pitch0)
        w0[0] *= 0.5
        w0[-1] *= 0.5
        w1 = np.full(self.values.shape[1], self.pitch1)
        w1[0] *= 0.5
        w1[-1] *= 0.5
        return Estimate(float(np.sum(np.outer(w0, w1) * g * ind)))

    def cond(self, rv: RandomVariable, event: Event, floor: float) -> ConditionalEstimate:
        p = self.moment(None, event).value
        if p < floor:
            return ConditionalEstimate(0.0, prob=p, degenerate=True)
        num = self.moment(rv, event).value
        return ConditionalEstimate(num / p, prob=p)


def _draw_standard_normal_pair(rng, n, params):
    return {"z": rng.standard_normal(n), "y": rng.standard_normal(n)}


def _draw_bivariate_normal(rng, n, params):
    rho = float(params["rho"])
    z = rng.standard_normal(n)
    y = rho * z + math.sqrt(1.0 - rho * rho) * rng.standard_normal(n)
    return {"z": z, "y": y}


def _draw_gaussian_sum(rng, n, params):
    sd_x = math.sqrt(float(params.get("var_x", 1.0)))
    sd_e = math.sqrt(float(params.get("var_noise", 1.0)))
    x = sd_x * rng.standard_normal(n)
    eps = sd_e * rng.standard_normal(n)
    return {"x": x, "eps": eps, "y": x + eps}


def _draw_uniform_square(rng, n, params):
    return {"z": rng.random(n), "y": rng.random(n)}


DRAW_FAMILIES = {
    "standard-normal-pair": _draw_standard_normal_pair,
    "bivariate-normal": _draw_bivariate_normal,
    "gaussian-sum": _draw_gaussian_sum,
    "uniform-square": _draw_uniform_square,
}


@dataclass(eq=False)
class Sampler:
    """Seeded Monte Carlo space over named sample columns.

    Rows are drawn once, lazily, from ``DRAW_FAMILIES[family]`` (or a custom
    ``draw`` callable) with a PCG64 generator; the same seed always yields
    the identical sample, and ``substream(i)`` derives an independent child
    stream for parallel use.
    """

    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    budget: int = 100_000
    spawn: tuple = ()
    draw: Callable | None = None
    name: str = "sampler"
    meta: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def columns(self) -> dict:
        cols = self._cache.get("columns")
        if cols is None:
            seq = np.random.SeedSequence(self.seed, spawn_key=self.spawn)
            rng = np.random.default_rng(seq)
            draw = self.draw if self.draw is not None else DRAW_FAMILIES[self.family]
            cols = draw(rng, int(self.budget), self.params)
            self._cache["columns"] = cols
        return cols

    def substream(self, index: int) -> "Sampler":
        return replace(self, spawn=self.spawn + (int(index),),
                       meta=dict(self.meta), _cache={})

    def values_of(self, rv: RandomVariable) -> np.ndarray:
        key = ("rv", id(rv))
        hit = self._cache.get(key)
        if hit is not None:
            return hit[1]
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.broadcast_to(np.asarray(rv.fn(self.columns()), dtype=float),
                                   (int(self.budget),))
        self._cache[key] = (rv, vals)
        return vals

    def indicator(self, event: Event) -> np.ndarray:
        if event.kind == "complement":
            return ~self.indicator(event.base)
        if event.kind == "atoms":
            raise UndefinedPredicate("atom-set events are undefined on samplers")
        if event.kind == "intervals":
            v = self.values_of(event.rv)
            out = np.zeros(v.shape, dtype=bool)
            for lo, hi in event.pieces:
                out |= (lo < v) & (v < hi)
            return out
        try:
            with np.errstate(divide="ignore", invalid="ignore"):
                ind = np.broadcast_to(np.asarray(event.pred(self.columns())),
                                      (int(self.budget),))
        except Exception as exc:
            raise UndefinedPredicate(f"event {event.name!r} failed on samples: {exc}") from exc
        if ind.dtype != bool:
            raise UndefinedPredicate(f"event {event.name!r} is not boolean on samples")
        return ind

    def _masked_values(self, rv: RandomVariable, mask: np.ndarray) -> np.ndarray:
        sub = {k: v[mask] for k, v in self.columns().items()}
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.broadcast_to(np.asarray(rv.fn(sub), dtype=float),
                                   (int(mask.sum()),))

    def moment(self, rv: RandomVariable | None, event: Event | None) -> Estimate:
        n = int(self.budget)
        if event is None and rv is None:
            return Estimate(1.0, 0.0, n)
        if event is None:
            x = self.values_of(rv)
            return Estimate(float(x.mean()), float(x.std(ddof=1) / math.sqrt(n)), n)
        mask = self.indicator(event)
        k = int(mask.sum())
        if rv is None:
            p = k / n
            return Estimate(p, math.sqrt(max(p * (1.0 - p), 0.0) / n), n)
        if k == 0:
            return Estimate(0.0, 0.0, n)
        xs = self._masked_values(rv, mask)
        m1 = float(xs.sum()) / n
        m2 = float((xs * xs).sum()) / n
        return Estimate(m1, math.sqrt(max(m2 - m1 * m1, 0.0) / n), n)

    def cond(self, rv: RandomVariable, event: Event, floor: float) -> ConditionalEstimate:
        mask = self.indicator(event)
        k = int(mask.sum())
        n = int(self.budget)
        p = k / n
        if p < floor:
            return ConditionalEstimate(0.0, n=k, prob=p, degenerate=True)
        xs = self._masked_values(rv, mask)
        mean = float(xs.mean())
        se = float(xs.std(ddof=1) / math.sqrt(k)) if k > 1 else float("inf")
        return ConditionalEstimate(mean, se=se, n=k, prob=p)


ProbabilitySpace = DiscreteAtoms | DensityGrid1D | DensityGrid2D | Sampler


# ---------------------------------------------------------------------------
# Operations


def probability(space: ProbabilitySpace, event: Event) -> Estimate:
    """P(A) by exact weight sum, clipped quadrature, or sample fraction."""
    hit = event._prob.get(id(space))
    if hit is not None:
        return hit[1]
    est = space.moment(None, event)
    # keep the space alive alongside its estimate so the id cannot be reused
    event._prob[id(space)] = (space, est)
    return est


def expectation(space: ProbabilitySpace, rv: RandomVariable) -> Estimate:
    """E[X] by weighted sum, quadrature, or sample mean."""
    return space.moment(rv, None)


def indicator_moment(space: ProbabilitySpace, rv: RandomVariable, event: Event) -> Estimate:
    """E[1_A X], the one-sided building block of every conditioning formula."""
    return space.moment(rv, event)


def cond_expectation_event(space: ProbabilitySpace, rv: RandomVariable,
                           event: Event, floor: float = PROB_FLOOR) -> ConditionalEstimate:
    """E[X | A] = E[1_A X] / P(A) for P(A) > 0, and 0 on the degenerate branch.

    On discrete spaces the degenerate branch fires only at exactly zero mass;
    grids and samplers use ``floor`` because quadrature cannot witness exact
    nullity.
    """
    if isinstance(space, DiscreteAtoms):
        return space.cond(rv, event, 0.0)
    return space.cond(rv, event, floor)


def variance(space: ProbabilitySpace, rv: RandomVariable) -> float:
    m = expectation(space, rv).value
    m2 = expectation(space, rv * rv).value
    return max(m2 - m * m, 0.0)


def std(space: ProbabilitySpace, rv: RandomVariable) -> float:
    return math.sqrt(variance(space, rv))


def pushforward(space: ProbabilitySpace, rv: RandomVariable,
                bins: tuple | None = None) -> ProbabilitySpace:
    """The law of ``rv`` as a new space.

    Discrete spaces group atoms by exact value.  Grid coordinates marginalize
    onto their axis.  Anything else is binned into ``bins = (lo, hi, count)``
    with the lost tail mass recorded in ``meta['mass_defect']``.
    """
    if isinstance(space, DiscreteAtoms):
        vals = space.values_of(rv)
        levels = np.unique(vals)
        weights = np.array([_fsum(space.weights[vals == lv]) for lv in levels])
        return DiscreteAtoms(tuple(float(lv) for lv in levels), weights,
                             name=f"law({rv.name})")
    if isinstance(space, DensityGrid1D) and rv.coord == space.axis:
        return space
    if isinstance(space, DensityGrid2D) and rv.coord in space.axes:
        axis = space.axis_index(rv.coord)
        if axis == 1:
            dens = quad.integrate(space.values.T, space.pitch0)
            lo, hi = space.ranges[1]
        else:
            dens = quad.integrate(space.values, space.pitch1)
            lo, hi = space.ranges[0]
        return DensityGrid1D(rv.coord, lo, hi, dens, quad_tol=space.quad_tol,
                             name=f"law({rv.name})")
    if bins is None:
        raise ValueError("pushforward of a non-coordinate variable needs bins=(lo, hi, count)")
    lo, hi, count = float(bins[0]), float(bins[1]), int(bins[2])
    vals = space.values_of(rv).ravel()
    if isinstance(space, Sampler):
        mass = np.full(vals.shape, 1.0 / float(space.budget))
    elif isinstance(space, DensityGrid1D):
        w = np.full_like(space.values, space.pitch)
        w[0] *= 0.5
        w[-1] *= 0.5
        mass = (w * space.values).ravel()
    else:
        w0 = np.full(space.values.shape[0], space.pitch0)
        w0[0] *= 0.5
        w0[-1] *= 0.5
        w1 = np.full(space.values.shape[1], space.pitch1)
        w1[0] *= 0.5
        w1[-1] *= 0.5
        mass = (np.outer(w0, w1) * space.values).ravel()
    hist, edges = np.histogram(vals, bins=count, range=(lo, hi), weights=mass)
    total = float(hist.sum())
    if total < PROB_FLOOR:
        raise EmptyRange(f"no mass of {rv.name} falls inside [{lo}, {hi}]")
    centers = 0.5 * (edges[:-1] + edges[1:])
    out = DiscreteAtoms(tuple(float(c) for c in centers), hist / total,
                        name=f"law({rv.name})")
    out.meta["mass_defect"] = 1.0 - total
    return out
