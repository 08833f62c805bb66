"""Random non-degenerate LQ interval games for property tests."""

import numpy as np
from hypothesis import strategies as st

from idgame.lq import LQIntervalGameSpec


def build(a, b, c, x0, T, g1, g2, h1, h2, t0=0.0):
    """Positive interval weights given as (lo, width) pairs."""
    return LQIntervalGameSpec(
        a, b, c,
        (g1[0], g1[0] + g1[1]), (g2[0], g2[0] + g2[1]),
        (h1[0], h1[0] + h1[1]), (h2[0], h2[0] + h2[1]),
        t0, t0 + T, x0,
    )


def _weight(lo, hi):
    return st.tuples(st.floats(lo, hi), st.floats(0.0, 0.5))


@st.composite
def lq_specs(draw):
    T = draw(st.floats(0.5, 3.0))
    a = draw(st.floats(-2.0, 2.0))
    sign = st.sampled_from([-1.0, 1.0])
    b = draw(sign) * draw(st.floats(0.5, 1.5))
    c = draw(sign) * draw(st.floats(0.5, 1.5))
    x0 = draw(st.floats(-2.0, 2.0).filter(lambda v: abs(v) > 0.1))
    t0 = draw(st.floats(-1.0, 1.0))
    return build(a, b, c, x0, T, draw(_weight(0.1, 2.0)), draw(_weight(0.3, 1.0)),
                 draw(_weight(0.1, 2.0)), draw(_weight(0.3, 1.0)), t0)


def random_specs(count, seed=0):
    """Seeded list of specs from the same ranges as :func:`lq_specs`."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        T = rng.uniform(0.5, 3.0)
        w = lambda lo, hi: (rng.uniform(lo, hi), rng.uniform(0.0, 0.5))
        out.append(
            build(
                rng.uniform(-2.0, 2.0),
                rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.5),
                rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.5),
                rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 2.0),
                T, w(0.1, 2.0), w(0.3, 1.0), w(0.1, 2.0), w(0.3, 1.0),
                rng.uniform(-1.0, 1.0),
            )
        )
    return out
