import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from spotmatch import Polygon, TextInstance
from spotmatch.harness import _instance_dists
from spotmatch.textmetrics import Alphabet

FIXTURES = Path(__file__).parent.parent / "fixtures"


@pytest.fixture
def alphabet() -> Alphabet:
    return Alphabet()


def star_polygon(rng, n_points: int = 10, center=(0.5, 0.5), r_lo=0.1, r_hi=0.45) -> Polygon:
    """Random simple polygon: star-shaped around its center by construction.

    Consecutive angular gaps are kept under pi (each chord then stays inside
    its own convex wedge), which guarantees simplicity for any radii.
    """
    gaps = rng.uniform(0.5, 1.5, n_points)
    angles = 2.0 * np.pi * np.cumsum(gaps) / gaps.sum()
    radii = rng.uniform(r_lo, r_hi, n_points)
    return Polygon(
        tuple(
            (center[0] + r * np.cos(a), center[1] + r * np.sin(a))
            for a, r in zip(angles, radii)
        )
    )


def ribbon_polygon(rng, k: int = 5, center=(0.5, 0.5), width=0.6, height=0.2) -> Polygon:
    """Random paired-boundary text ribbon with K top and K bottom points."""
    xs = np.linspace(center[0] - width / 2, center[0] + width / 2, k)
    wobble = 0.1 * height
    top = [(x, center[1] - height / 2 + rng.uniform(-wobble, wobble)) for x in xs]
    bottom = [(x, center[1] + height / 2 + rng.uniform(-wobble, wobble)) for x in xs]
    return Polygon(tuple(top) + tuple(reversed(bottom)))


def make_instance(
    polygon: Polygon,
    score: float = 0.9,
    transcription: str = "TEXT",
    conf: float | tuple = 0.9,
    with_dists: bool = False,
    alphabet: Alphabet | None = None,
) -> TextInstance:
    if isinstance(conf, (int, float)):
        char_conf = (float(conf),) * len(transcription)
    else:
        char_conf = tuple(conf)
    dists = None
    if with_dists:
        dists = _instance_dists(transcription, char_conf, alphabet or Alphabet())
    return TextInstance(
        polygon=polygon,
        score=score,
        transcription=transcription,
        char_conf=char_conf,
        char_dists=dists,
    )
