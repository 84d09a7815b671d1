"""Conditional densities from 2D joints.

The second grid axis is the conditioning one: with a joint density f(z, y)
on a rectangle, the marginal at y is the z-quadrature of the interpolated
column, and the conditional density of z given y is the pointwise ratio of
joint to marginal.  The ratio is renormalized so its quadrature integral is
exactly 1, with the pre-normalization defect kept on record; conditioning is
only defined where the marginal clears the density floor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import quadrature as quad
from .errors import NullMarginal, OutOfRectangle
from .spaces import DensityGrid2D

# A joint density is just a 2D density grid; the name marks intent.
JointDensity = DensityGrid2D

DENSITY_FLOOR = 1e-12


def _column_at(joint: JointDensity, y: float) -> np.ndarray:
    """Density profile z -> f(z, y), linear between the two nearest columns."""
    c, d = joint.ranges[1]
    if not (c <= y <= d):
        raise OutOfRectangle(f"y={y!r} outside [{c!r}, {d!r}]")
    return np.asarray(quad.interp_at(joint.nodes1, joint.values, float(y)))


def marginal(joint: JointDensity, y: float) -> float:
    """Marginal density of the conditioning axis at y."""
    return float(quad.integrate(_column_at(joint, y), joint.pitch0))


@dataclass(eq=False)
class ConditionalDensity:
    """The z-density given a fixed conditioning value.

    ``defect`` is the pre-normalization quadrature error of the raw ratio;
    after renormalization the density integrates to 1 exactly (to roundoff),
    which keeps downstream distribution functions ending at 1.
    """

    y: float
    nodes: np.ndarray
    values: np.ndarray
    marginal_value: float
    defect: float
    pitch: float

    def __post_init__(self):
        if np.any(self.values < 0):
            raise ValueError("conditional density values must be non-negative")
        total = float(quad.integrate(self.values, self.pitch))
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"conditional density integrates to {total!r}")

    def expectation(self, g=None) -> float:
        """Integral of g(z) against the density; identity when g is None."""
        gz = self.nodes if g is None else np.broadcast_to(
            np.asarray(g(self.nodes), dtype=float), self.nodes.shape)
        return float(quad.integrate(gz * self.values, self.pitch))

    def cdf(self, x: float) -> float:
        """Mass at or below x."""
        return float(quad.clip_integral(self.nodes, self.values, self.nodes[0], x))

    def to_json_dict(self) -> dict:
        return {
            "kind": "conditional_density",
            "y": float(self.y),
            "marginal": float(self.marginal_value),
            "defect": float(self.defect),
            "nodes": [float(v) for v in self.nodes],
            "values": [float(v) for v in self.values],
        }


def conditional_density(joint: JointDensity, y: float,
                        floor: float = DENSITY_FLOOR) -> ConditionalDensity:
    """The ratio construction f(z, y) / f_Y(y) on the z grid."""
    col = _column_at(joint, y)
    fy = float(quad.integrate(col, joint.pitch0))
    if fy < floor:
        raise NullMarginal(f"marginal at y={y!r} is {fy!r}, below the floor {floor!r}")
    ratio = col / fy
    raw = float(quad.integrate(ratio, joint.pitch0))
    return ConditionalDensity(y=float(y), nodes=joint.nodes0, values=ratio / raw,
                              marginal_value=fy, defect=raw - 1.0, pitch=joint.pitch0)


def conditional_expectation_via_density(joint: JointDensity, y: float, g=None) -> float:
    """Integral of g(z) against the conditional density at y.

    With g None this is the conditional mean, the density-ratio counterpart
    of the shrinking-window limit.
    """
    return conditional_density(joint, y).expectation(g)
