#!/usr/bin/env python3
"""Regenerate the paradox oracle fixture by brute-force quadrature.

For independent standard normal (Z, Y), the two shrinking families at the
null line {Y = 0} weight Z differently:

* Y-windows |Y| < eps leave Z alone: limit density phi(z);
* ratio windows |Y/Z| < eps weight by P(|Y| < eps |z|) ~ |z|: limit density
  proportional to |z| phi(z).

Every number consumed by the tests (limit moments, finite-eps values along
the shipped schedule, the moment gap) is integrated here with scipy's
adaptive quadrature, independently of the package's own quadrature and
Monte Carlo machinery.
"""

import json
import math
from pathlib import Path

from scipy import integrate
from scipy.stats import norm

SCHEDULE = [0.4, 0.2, 0.1, 0.05]
OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "paradox_oracle.json"


def weighted_moment(weight, g):
    """E[g(Z) w(Z)] / E[w(Z)] against the standard normal, by quadrature."""
    num = integrate.quad(lambda z: g(z) * weight(z) * norm.pdf(z), -12, 12,
                         limit=200, epsabs=1e-13, epsrel=1e-13)[0]
    den = integrate.quad(lambda z: weight(z) * norm.pdf(z), -12, 12,
                         limit=200, epsabs=1e-13, epsrel=1e-13)[0]
    return num / den


def ratio_window_weight(eps):
    # P(|Y| < eps * |z|) for Y standard normal
    return lambda z: 2.0 * norm.cdf(eps * abs(z)) - 1.0


def family_block(weight_at, make_limit_weight):
    return {
        "limit_second_moment": weighted_moment(make_limit_weight, lambda z: z * z),
        "limit_abs_moment": weighted_moment(make_limit_weight, abs),
        "finite_eps_second_moment": {
            str(e): weighted_moment(weight_at(e), lambda z: z * z) for e in SCHEDULE
        },
    }


def main() -> None:
    fixture = {
        "schedule": SCHEDULE,
        "via_y": family_block(lambda e: (lambda z: 1.0), lambda z: 1.0),
        "via_ratio": family_block(ratio_window_weight, lambda z: abs(z)),
    }
    fixture["gap_second_moment"] = (fixture["via_ratio"]["limit_second_moment"]
                                    - fixture["via_y"]["limit_second_moment"])
    fixture["reference"] = {
        "sqrt_2_over_pi": math.sqrt(2.0 / math.pi),
        "sqrt_pi_over_2": math.sqrt(math.pi / 2.0),
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(fixture, indent=2, sort_keys=True) + "\n")
    print(f"wrote {OUT}")
    print(f"  via_y limit     = {fixture['via_y']['limit_second_moment']!r}")
    print(f"  via_ratio limit = {fixture['via_ratio']['limit_second_moment']!r}")
    print(f"  gap             = {fixture['gap_second_moment']!r}")


if __name__ == "__main__":
    main()
