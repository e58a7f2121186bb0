import math
import random
from dataclasses import dataclass


@dataclass(frozen=True)
class RadioModel:
    """Unit-disk radio with distance loss: ``p(d) = p_max * (1 - (d/R)**exponent)``."""

    p_max: float = 0.9
    range: float = 20.0
    exponent: float = 2.0

    def __post_init__(self):
        if not 0.0 <= self.p_max <= 1.0:
            raise ValueError("p_max must be a probability")
        if self.range <= 0 or self.exponent <= 0:
            raise ValueError("range and exponent must be positive")

    def probability(self, d):
        if d < 0:
            raise ValueError("negative distance")
        if d > self.range:
            return 0.0
        return self.p_max * (1.0 - (d / self.range) ** self.exponent)


def reception_roll(model, d, rng):
    p = model.probability(d)
    return p > 0.0 and rng.random() < p


class LinkStreams:
    """One independent ``random.Random`` per ordered (sender, receiver) pair."""

    def __init__(self, seed):
        self.seed = seed
        self._streams = {}

    def get(self, sender, receiver):
        key = (sender, receiver)
        rng = self._streams.get(key)
        if rng is None:
            rng = random.Random(f"link:{self.seed}:{sender}:{receiver}")
            self._streams[key] = rng
        return rng


def distance(a, b):
    return math.hypot(a[0] - b[0], a[1] - b[1])
