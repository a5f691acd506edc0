"""Deterministic quasi-random point sampling for checks and acceptance runs."""

from __future__ import annotations

import numpy as np
from scipy.stats import qmc

__all__ = ["halton_box", "on_manifold_sample"]


def halton_box(variables, box, count, default_range=(-1.0, 1.0)):
    """`count` Halton points in the per-variable box (unscrambled: reruns match).

    `box` maps variable name -> (lo, hi); variables not listed use
    `default_range`.
    """
    names = list(variables)
    lo = np.array([(box or {}).get(v, default_range)[0] for v in names])
    hi = np.array([(box or {}).get(v, default_range)[1] for v in names])
    sampler = qmc.Halton(d=len(names), scramble=False)
    unit = sampler.random(count)
    return lo + unit * (hi - lo)


def on_manifold_sample(constraints, variables, box, count, oversample=3,
                       tol=1e-8):
    """Quasi-random points projected onto M = {phi = 0}.

    Draws `oversample * count` box points, Gauss-Newton projects each, and
    keeps the first `count` that converge. Deterministic for fixed inputs.
    """
    raw = halton_box(variables, box, oversample * count)
    kept = []
    for row in raw:
        point, ok, _ = constraints.project(row)
        if ok and constraints.is_on(point, tol):
            kept.append(point)
            if len(kept) == count:
                break
    return np.array(kept)
