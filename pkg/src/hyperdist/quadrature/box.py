from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CompactBox:
    """Closed box [a1,b1] x ... x [an,bn] with finite a_i < b_i."""

    lows: tuple
    highs: tuple

    def __post_init__(self):
        lows = tuple(float(v) for v in self.lows)
        highs = tuple(float(v) for v in self.highs)
        object.__setattr__(self, "lows", lows)
        object.__setattr__(self, "highs", highs)
        if len(lows) != len(highs) or not lows:
            raise ValueError("box needs matching, nonempty bounds")
        for a, b in zip(lows, highs):
            if not (np.isfinite(a) and np.isfinite(b)) or not a < b:
                raise ValueError(f"invalid box interval [{a}, {b}]")

    @classmethod
    def from_intervals(cls, intervals):
        intervals = list(intervals)
        return cls(tuple(a for a, _ in intervals), tuple(b for _, b in intervals))

    @classmethod
    def cube(cls, a, b, n):
        return cls((a,) * n, (b,) * n)

    @property
    def dim(self):
        return len(self.lows)

    @property
    def intervals(self):
        return tuple(zip(self.lows, self.highs))

    @property
    def lengths(self):
        return tuple(b - a for a, b in self.intervals)

    @property
    def center(self):
        return tuple(0.5 * (a + b) for a, b in self.intervals)

    @property
    def volume(self):
        return float(np.prod(self.lengths))

    def inside(self, domain, strict=True):
        """True if the box lies in the open box `domain` (sequence of (a, b))."""
        for (a, b), (lo, hi) in zip(self.intervals, domain):
            if strict and not (lo < a and b < hi):
                return False
            if not strict and not (lo <= a and b <= hi):
                return False
        return True

    def contains_box(self, other, strict=False):
        for (a, b), (c, d) in zip(self.intervals, other.intervals):
            if strict and not (a < c and d < b):
                return False
            if not strict and not (a <= c and d <= b):
                return False
        return True

    def inflate(self, fraction):
        """Grow every half-width by `fraction` (0.25 -> 25 %)."""
        lows, highs = [], []
        for (a, b), m in zip(self.intervals, self.center):
            h = 0.5 * (b - a) * (1.0 + fraction)
            lows.append(m - h)
            highs.append(m + h)
        return CompactBox(tuple(lows), tuple(highs))

    def clip(self, domain, margin=0.01):
        """Intersect with the open box `domain`, keeping a relative margin from its edge."""
        lows, highs = [], []
        for (a, b), (lo, hi) in zip(self.intervals, domain):
            if np.isfinite(lo) and np.isfinite(hi):
                pad = margin * (hi - lo)
            else:
                pad = margin * (b - a)
            lows.append(max(a, lo + pad) if np.isfinite(lo) else a)
            highs.append(min(b, hi - pad) if np.isfinite(hi) else b)
        return CompactBox(tuple(lows), tuple(highs))

    def grid(self, per_axis):
        """Tensor grid including the endpoints; per_axis is an int or a sequence."""
        if np.isscalar(per_axis):
            per_axis = [int(per_axis)] * self.dim
        axes = [np.linspace(a, b, int(k)) for (a, b), k in zip(self.intervals, per_axis)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1), axes

    def to_list(self):
        return [[a, b] for a, b in self.intervals]
