import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from debiaslr.cones import TangentConeAt


def random_pieces(rng, p):
    """Random composition of p into pieces."""
    cuts = np.sort(rng.choice(np.arange(1, p), size=rng.integers(0, p), replace=False))
    edges = np.concatenate([[0], cuts, [p]])
    return tuple(int(b - a) for a, b in zip(edges[:-1], edges[1:]))


def random_cone(rng, p, variant=None):
    """Random tangent-cone descriptor of the given variant (or any)."""
    if variant is None:
        variant = rng.choice(["monotone", "positive_monotone", "nonneg", "l1_boundary", "full_space"])
    if variant == "monotone":
        return TangentConeAt.monotone(random_pieces(rng, p))
    if variant == "positive_monotone":
        return TangentConeAt.positive_monotone(random_pieces(rng, p), bool(rng.integers(0, 2)))
    if variant == "nonneg":
        size = int(rng.integers(0, p + 1))
        zero_set = rng.choice(p, size=size, replace=False)
        return TangentConeAt.nonneg(zero_set, p)
    if variant == "l1_boundary":
        s = int(rng.integers(1, p + 1))
        support = np.sort(rng.choice(p, size=s, replace=False))
        signs = rng.choice([-1.0, 1.0], size=s)
        return TangentConeAt.l1_boundary(support, signs, p)
    return TangentConeAt.full_space(p)
