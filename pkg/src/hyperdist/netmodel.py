"""Asymptotic classification of quantities along a geometric omega grid.

"Infinitesimal", "finite" and "infinite" are decided by a least-squares
slope of log|q| against log(omega) over the tail of the grid, plus an
absolute bound and a noise floor.  S-continuity of a net is modelled by an
omega-uniform modulus of continuity sampled on a dense grid.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d

from .exprlang import EvalContext, NetFunction, evaluate
from .quadrature import CompactBox, QuadratureConfig
from .quadrature.ops import sup_grid

NOISE_FLOOR = 1e-14
DEFAULT_DELTAS = (0.1, 0.03, 0.01)
# modulus threshold is MODULUS_FRACTION * (1 + half the oscillation of f)
MODULUS_FRACTION = 0.05
# residual above which a fit is untrustworthy unless the data are monotone
MAX_RESIDUAL = 0.5

LABELS = ("infinitesimal", "finite", "infinite", "indeterminate")


@dataclass(frozen=True)
class NetConfig:
    omega0: float = 16.0
    ratio: float = 2.0
    levels: int = 8
    tau: float = 0.1
    abs_bound: float = 1e6

    def __post_init__(self):
        if self.tau <= 0 or self.abs_bound <= 0:
            raise ValueError("tau and abs_bound must be positive")

    def grid(self, dim=1):
        """Default grid for a dimension: J = levels in 1D, J = 4 in 2D and up."""
        levels = self.levels if dim == 1 else min(self.levels, 4)
        return OmegaGrid(self.omega0, self.ratio, levels)


@dataclass(frozen=True)
class OmegaGrid:
    """omega_j = omega0 * ratio**j for j = 0..levels."""

    omega0: float = 16.0
    ratio: float = 2.0
    levels: int = 8

    def __post_init__(self):
        if self.omega0 < 1:
            raise ValueError("omega0 must be >= 1")
        if self.ratio <= 1:
            raise ValueError("ratio must exceed 1")
        if self.levels < 3:
            raise ValueError("a grid needs at least 4 points")

    @classmethod
    def for_dim(cls, dim):
        return NetConfig().grid(dim)

    @classmethod
    def parse(cls, text):
        """Parse 'start:stop:xR', e.g. '16:4096:x2'."""
        try:
            start, stop, step = text.split(":")
            step = step.strip()
            if not step.startswith("x"):
                raise ValueError
            omega0, last, ratio = float(start), float(stop), float(step[1:])
        except ValueError:
            raise ValueError(f"bad omega grid {text!r}, expected 'start:stop:xR'") from None
        if ratio <= 1 or last < omega0:
            raise ValueError(f"bad omega grid {text!r}")
        levels = int(round(math.log(last / omega0) / math.log(ratio)))
        if not math.isclose(omega0 * ratio ** levels, last, rel_tol=1e-9):
            raise ValueError(f"stop {last:g} is not start times a power of {ratio:g}")
        return cls(omega0, ratio, levels)

    @property
    def omegas(self):
        return tuple(float(self.omega0 * self.ratio ** j) for j in range(self.levels + 1))

    @property
    def largest(self):
        return self.omegas[-1]

    def __iter__(self):
        return iter(self.omegas)

    def __len__(self):
        return self.levels + 1

    def spec(self):
        return f"{self.omega0:g}:{self.largest:g}:x{self.ratio:g}"


@dataclass
class GrowthClass:
    label: str
    p: float
    residual: float
    standard_part: float = None
    samples: list = field(default_factory=list)
    window: int = 0

    @property
    def bounded(self):
        """Finite or infinitesimal, i.e. in Fin."""
        return self.label in ("finite", "infinitesimal")

    def to_dict(self):
        return {
            "label": self.label,
            "p": _json_float(self.p),
            "residual": _json_float(self.residual),
            "standard_part": self.standard_part,
            "window": self.window,
            "samples": [[w, v] for w, v in self.samples],
        }


def _json_float(v):
    if v is None or math.isfinite(v):
        return v
    return "-inf" if v < 0 else "inf"


def _monotone(values, direction):
    d = np.diff(values)
    return bool(np.all(d < 0)) if direction < 0 else bool(np.all(d > 0))


def _fit(lw, la):
    p, c = np.polyfit(lw, la, 1)
    return float(p), float(np.sqrt(np.mean((la - (p * lw + c)) ** 2)))


def classify_growth(samples, tau=0.1, abs_bound=1e6, floor=NOISE_FLOOR):
    """Classify a sequence of (omega, value) pairs.

    `floor` is an absolute noise level, either one number or one per sample;
    magnitudes at or below it are treated as numerical zero.
    """
    samples = [(float(w), float(v)) for w, v in samples]
    if len(samples) < 4:
        raise ValueError("classification needs at least 4 samples")
    omegas = np.array([w for w, _ in samples])
    values = np.array([v for _, v in samples])
    if np.any(np.diff(omegas) <= 0):
        raise ValueError("omegas must be strictly increasing")
    if np.any(~np.isfinite(values)):
        return GrowthClass("indeterminate", math.nan, math.inf, None, samples, 0)
    floors = np.broadcast_to(np.maximum(np.asarray(floor, dtype=float), 0.0), values.shape)

    J = len(samples) - 1
    win = min(len(samples), max(4, math.ceil((J + 1) / 2)))
    w, a, fl = omegas[-win:], np.abs(values[-win:]), floors[-win:]

    def result(label, p, resid):
        st = float(values[-1]) if label == "finite" else None
        return GrowthClass(label, float(p), float(resid), st, samples, win)

    quiet = a <= fl
    if np.all(quiet):
        return result("infinitesimal", -math.inf, 0.0)
    if quiet[-1]:
        # collapsed into the noise floor; accept only if it was not rising
        live = a[~quiet]
        if live[-1] <= live[0] or live.size == 1:
            return result("infinitesimal", -math.inf, 0.0)
        return result("indeterminate", math.nan, math.inf)

    lw, la = np.log(w), np.log(np.maximum(a, np.maximum(fl, 1e-300)))
    p, resid = _fit(lw, la)
    if resid > MAX_RESIDUAL:
        direction = 1 if p > 0 else -1
        if not (abs(p) >= tau and _monotone(la, direction)):
            # oscillating data: judge decay by the tail supremum and growth by
            # the running maximum, both monotone envelopes of |q|
            # (a tenfold drop, or growth ending at the maximum, is required so
            # that bounded oscillation stays indeterminate)
            env = np.maximum.accumulate(la[::-1])[::-1]
            pe, _ = _fit(lw, env)
            if pe <= -tau and env[-1] <= env[0] - math.log(10.0):
                return result("infinitesimal", pe, resid)
            run = np.maximum.accumulate(la)
            pm, _ = _fit(lw, run)
            if pm >= tau and la[-1] == run[-1] and run[-1] >= run[0] + math.log(2.0):
                return result("infinite", pm, resid)
            return result("indeterminate", p, resid)
    if p <= -tau:
        return result("infinitesimal", p, resid)
    if p >= tau:
        return result("infinite", p, resid)
    if a.max() > abs_bound:
        return result("indeterminate", p, resid)
    if abs(p) < tau / 2:
        return result("finite", p, resid)
    tail = a[-3:]
    if (tail.max() - tail.min()) < 0.1 * tail.max():
        return result("finite", p, resid)
    return result("indeterminate", p, resid)


def _values_on_grid(f, K, omega, cfg, ctx):
    X, axes = sup_grid(K, omega, cfg)
    vals = evaluate(f.expr if isinstance(f, NetFunction) else f, X, omega, ctx)
    return vals.reshape([len(ax) for ax in axes]), axes


def _check_box(f, K):
    if isinstance(f, NetFunction) and not K.inside(f.domain, strict=False):
        raise ValueError("box leaves the domain of the net")


def sup_profile(f, K, grid, cfg=None, ctx=None, net=None):
    """Sampled sup_K |f(., omega)| per grid omega, with its classification."""
    cfg = cfg or QuadratureConfig()
    net = net or NetConfig()
    _check_box(f, K)
    ctx = ctx or EvalContext(cfg, getattr(f, "domain", None))
    sups = []
    for w in grid:
        vals, _ = _values_on_grid(f, K, w, cfg, ctx)
        sups.append((w, float(np.max(np.abs(vals)))))
    return classify_growth(sups, net.tau, net.abs_bound), sups


@dataclass
class ModulusReport:
    deltas: tuple
    rows: list  # (delta, omega, modulus)
    classes: dict  # delta -> GrowthClass
    sups: list  # (omega, sup |f|)
    threshold: float
    verdict: bool

    def modulus(self, delta, omega):
        for d, w, m in self.rows:
            if d == delta and w == omega:
                return m
        raise KeyError((delta, omega))

    def to_dict(self):
        return {
            "deltas": list(self.deltas),
            "rows": [list(r) for r in self.rows],
            "classes": {repr(d): c.to_dict() for d, c in self.classes.items()},
            "sups": [list(s) for s in self.sups],
            "threshold": self.threshold,
            "s_continuous": self.verdict,
        }


def s_modulus(f, K, grid, deltas=DEFAULT_DELTAS, cfg=None, ctx=None, net=None):
    """Sampled modulus of continuity of f on K for each delta and omega.

    Pairs are axis-aligned: along every axis, the largest spread of f over a
    window of width delta.  The verdict "S-continuous" needs every delta row
    to stay bounded across the grid and the finest modulus at the largest
    omega to be at most 0.05 * (1 + osc/2), where osc = max f - min f on K.
    """
    cfg = cfg or QuadratureConfig()
    net = net or NetConfig()
    deltas = tuple(float(d) for d in deltas)
    if not deltas or any(d <= 0 for d in deltas):
        raise ValueError("deltas must be positive")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be decreasing")
    _check_box(f, K)
    ctx = ctx or EvalContext(cfg, getattr(f, "domain", None))

    rows, sups, per_delta = [], [], {d: [] for d in deltas}
    osc_last = 0.0
    for w in grid:
        vals, axes = _values_on_grid(f, K, w, cfg, ctx)
        scale = float(np.max(np.abs(vals)))
        sups.append((w, scale))
        osc_last = float(vals.max() - vals.min())
        for d in deltas:
            m = 0.0
            for axis, ax in enumerate(axes):
                if len(ax) < 2:
                    continue
                h = ax[1] - ax[0]
                size = min(len(ax), int(math.floor(d / h + 1e-9)) + 1)
                if size < 2:
                    continue
                hi = maximum_filter1d(vals, size, axis=axis, mode="nearest")
                lo = minimum_filter1d(vals, size, axis=axis, mode="nearest")
                m = max(m, float(np.max(hi - lo)))
            rows.append((d, w, m))
            per_delta[d].append((w, m))
    floor = max(NOISE_FLOOR, 1e-13 * max(s for _, s in sups))
    classes = {d: classify_growth(per_delta[d], net.tau, net.abs_bound, floor) for d in deltas}
    threshold = MODULUS_FRACTION * (1.0 + 0.5 * osc_last)
    finest = per_delta[deltas[-1]][-1][1]
    verdict = all(c.bounded for c in classes.values()) and finest <= threshold
    return ModulusReport(deltas, rows, classes, sups, threshold, bool(verdict))


def box_around(point, radius, domain=None):
    """Closed cube of half-width radius around point, clipped into domain."""
    lows = [p - radius for p in point]
    highs = [p + radius for p in point]
    K = CompactBox(tuple(lows), tuple(highs))
    if domain is not None:
        K = K.clip(domain)
    return K
