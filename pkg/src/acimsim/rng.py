"""Counter-based random streams keyed by simulation coordinates.

Every stochastic operation derives its draws from (seed, RngContext, source tag)
alone, so results never depend on call order or worker scheduling.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

# Source tags keep independent noise sources statistically independent even
# when they share the same simulation coordinates.
TAG_RANDOM = 0
TAG_NONLIN = 1
TAG_NAT = 2
TAG_DATA = 3


@dataclass(frozen=True)
class RngContext:
    """Coordinates of one stochastic event inside a simulation run.

    Vectorized operations draw one value per element of their level array in
    flat C order, so an element's draw is a pure function of (context, flat
    position); `column` and `sample` disambiguate scalar call sites and
    oversampled readouts.
    """

    layer: int = 0
    tile: int = 0
    w_bit: int = 0
    act_group: int = 0
    column: int = 0
    sample: int = 0

    def replace(self, **kw) -> "RngContext":
        return dataclasses.replace(self, **kw)

    def key(self) -> tuple:
        return (self.layer, self.tile, self.w_bit, self.act_group,
                self.column, self.sample)


def stream(seed: int, ctx: RngContext, tag: int) -> np.random.Generator:
    """Return the deterministic generator for (seed, ctx, tag).

    Philox is counter based: distinct spawn keys give independent streams and
    identical keys replay identical draws, independent of thread schedule.
    """
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(tag, *ctx.key()))
    return np.random.Generator(np.random.Philox(ss))


def normal(seed: int, ctx: RngContext, tag: int, shape) -> np.ndarray:
    """Standard-normal draws for (seed, ctx, tag), C-order over `shape`."""
    return stream(seed, ctx, tag).standard_normal(shape)
