"""Radial Hardy-type weights m(|x|) expressed in the log-radius t = log r.

A weight is a finite list of segments partitioning a core range [t_lo, t_hi].
Outside the core the weight takes its declared limits m(0) (t -> -inf) and
m(inf) (t -> +inf), joined to the core by an affine ramp of width ``ramp``
whenever the boundary segment does not already match the limit.  A weight may
instead declare a ``period``, in which case the core is one period cell and
evaluation wraps around it.

Every descriptor is piecewise linear in t, so the whole weight is represented
internally as a list of linear pieces; evaluation, extrema and linear
combinations are all exact on that representation.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "WeightSpecError",
    "Segment",
    "WeightProfile",
    "BallExtrema",
    "make_profile",
    "load_profile",
    "scaled_limits",
    "ball_extrema",
    "check_periodic",
    "combine",
    "constant_profile",
    "step_profile",
    "bump_profile",
    "counterexample_profile",
    "square_wave",
    "canonical_bump",
]

DEFAULT_RAMP = 0.01
SNAP_REL = 1e-12
PROBE_POINTS_PER_PERIOD = 10_000
_PROBE_MAX_POINTS = 2_000_000
_KINDS = ("constant", "affine", "table")


class WeightSpecError(ValueError):
    """Malformed or inadmissible weight description."""


@dataclass(frozen=True)
class Segment:
    t0: float
    t1: float
    kind: str
    value: float = 0.0
    a: float = 0.0
    b: float = 0.0
    nodes: tuple = ()
    values: tuple = ()

    def at(self, t):
        """Descriptor formula, valid on the closed interval [t0, t1]."""
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.full_like(t, self.value)
        if self.kind == "affine":
            return self.a + self.b * t
        return np.interp(t, self.nodes, self.values)

    def linear_pieces(self):
        if self.kind == "table":
            ts, vs = self.nodes, self.values
            return [(ts[i], ts[i + 1], vs[i], vs[i + 1]) for i in range(len(ts) - 1)]
        return [(self.t0, self.t1, float(self.at(self.t0)), float(self.at(self.t1)))]

    def to_json(self) -> dict:
        out = {"t0": self.t0, "t1": self.t1, "kind": self.kind}
        if self.kind == "constant":
            out["value"] = self.value
        elif self.kind == "affine":
            out["a"], out["b"] = self.a, self.b
        else:
            out["t"], out["m"] = list(self.nodes), list(self.values)
        return out


@dataclass(frozen=True)
class BallExtrema:
    r: float
    m_lower: float
    m_upper: float


@dataclass(frozen=True)
class WeightProfile:
    segments: tuple
    limit_origin: float | None
    limit_infinity: float | None
    sup_norm: float
    ramp: float = DEFAULT_RAMP
    period: float | None = None
    # (ta, tb, fa, fb): value fa at ta (right limit), fb at tb (left limit)
    _pieces: tuple = field(default=(), repr=False, compare=False)

    @property
    def t_lo(self) -> float:
        return self.segments[0].t0

    @property
    def t_hi(self) -> float:
        return self.segments[-1].t1

    @property
    def is_periodic(self) -> bool:
        return self.period is not None

    def flat_range(self) -> tuple[float, float]:
        """Interval outside of which the weight equals its limits exactly."""
        if self.is_periodic:
            return -math.inf, math.inf
        return self._pieces[0][0], self._pieces[-1][1]

    def eval(self, t):
        """m(e^t); vectorized over ``t``."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        t = self._snap(t)
        table = self._table
        idx = np.clip(np.searchsorted(table[0], t, side="right") - 1, 0, table.shape[1] - 1)
        ta, tb, fa, fb = table[:, idx]
        frac = np.clip((t - ta) / (tb - ta), 0.0, 1.0)
        out = fa + (fb - fa) * frac
        if not self.is_periodic:
            out = np.where(t < self._pieces[0][0], self.limit_origin, out)
            out = np.where(t >= self._pieces[-1][1], self.limit_infinity, out)
        return float(out[0]) if scalar else out

    __call__ = eval

    def _snap(self, t: np.ndarray) -> np.ndarray:
        # points within rounding of a breakpoint are put on it, so that grids
        # built by arithmetic sample jumps the same way regardless of offset
        if self.is_periodic:
            t = self.t_lo + np.mod(t - self.t_lo, self.period)
        bp = self._breaks
        j = np.clip(np.searchsorted(bp, t), 1, len(bp) - 1)
        near = np.where(np.abs(t - bp[j - 1]) < np.abs(t - bp[j]), bp[j - 1], bp[j])
        tol = SNAP_REL * np.maximum(1.0, np.abs(near))
        t = np.where(np.abs(t - near) <= tol, near, t)
        if self.is_periodic:
            t = np.where(t >= self.t_lo + self.period, self.t_lo, t)
        return t

    @cached_property
    def _table(self) -> np.ndarray:
        return np.array(self._pieces, dtype=float).T

    @cached_property
    def _breaks(self) -> np.ndarray:
        pts = {p[0] for p in self._pieces} | {p[1] for p in self._pieces}
        return np.array(sorted(pts))

    def breakpoints(self) -> np.ndarray:
        return self._breaks.copy()

    def translated(self, dt: float) -> "WeightProfile":
        """Profile of x -> m(e^{-dt} x): the core moves by ``dt`` in t."""
        segs = []
        for s in self.segments:
            if s.kind == "affine":
                seg = Segment(s.t0 + dt, s.t1 + dt, "affine", a=s.a - s.b * dt, b=s.b)
            elif s.kind == "table":
                seg = Segment(s.t0 + dt, s.t1 + dt, "table",
                              nodes=tuple(x + dt for x in s.nodes), values=s.values)
            else:
                seg = Segment(s.t0 + dt, s.t1 + dt, "constant", value=s.value)
            segs.append(seg)
        return _build(segs, self.limit_origin, self.limit_infinity, self.ramp,
                      self.period, None, require_positive=False)

    def scaled(self, c: float) -> "WeightProfile":
        segs = []
        for s in self.segments:
            if s.kind == "affine":
                segs.append(Segment(s.t0, s.t1, "affine", a=c * s.a, b=c * s.b))
            elif s.kind == "table":
                segs.append(Segment(s.t0, s.t1, "table", nodes=s.nodes,
                                    values=tuple(c * v for v in s.values)))
            else:
                segs.append(Segment(s.t0, s.t1, "constant", value=c * s.value))
        lo = None if self.limit_origin is None else c * self.limit_origin
        hi = None if self.limit_infinity is None else c * self.limit_infinity
        return _build(segs, lo, hi, self.ramp, self.period, None, require_positive=False)

    def is_nonnegative(self) -> bool:
        vals = [v for p in self._pieces for v in p[2:]]
        if not self.is_periodic:
            vals += [self.limit_origin, self.limit_infinity]
        return min(vals) >= 0.0

    def to_json(self) -> dict:
        out = {"segments": [s.to_json() for s in self.segments], "ramp": self.ramp}
        if self.limit_origin is not None:
            out["limit_origin"] = self.limit_origin
            out["limit_infinity"] = self.limit_infinity
        if self.period is not None:
            out["period"] = self.period
        return out

    # value just right (side=+1) or just left (side=-1) of t
    def _side_value(self, t: float, side: int) -> float:
        if self.is_periodic:
            raise WeightSpecError("one-sided values are only defined for non-periodic weights")
        first, last = self._pieces[0], self._pieces[-1]
        if t < first[0] or (side < 0 and t == first[0]):
            return self.limit_origin
        if t > last[1] or (side > 0 and t == last[1]):
            return self.limit_infinity
        for ta, tb, fa, fb in self._pieces:
            inside = ta <= t < tb if side > 0 else ta < t <= tb
            if inside:
                return fa + (fb - fa) * (t - ta) / (tb - ta)
        raise AssertionError("unreachable: pieces cover the core")


def _finite(x, what: str) -> float:
    try:
        x = float(x)
    except (TypeError, ValueError):
        raise WeightSpecError(f"{what}: expected a real number, got {x!r}") from None
    if not math.isfinite(x):
        raise WeightSpecError(f"{what}: value must be finite, got {x}")
    return x


def _parse_segment(raw: dict, i: int) -> Segment:
    where = f"segments[{i}]"
    if not isinstance(raw, dict):
        raise WeightSpecError(f"{where}: expected an object")
    kind = raw.get("kind")
    if kind not in _KINDS:
        raise WeightSpecError(f"{where}.kind: must be one of {_KINDS}, got {kind!r}")
    if "t0" not in raw or "t1" not in raw:
        raise WeightSpecError(f"{where}: missing t0/t1")
    t0 = _finite(raw["t0"], f"{where}.t0")
    t1 = _finite(raw["t1"], f"{where}.t1")
    if not t0 < t1:
        raise WeightSpecError(f"{where}: empty interval [{t0}, {t1}]")
    if kind == "constant":
        if "value" not in raw:
            raise WeightSpecError(f"{where}.value: missing")
        return Segment(t0, t1, kind, value=_finite(raw["value"], f"{where}.value"))
    if kind == "affine":
        for key in ("a", "b"):
            if key not in raw:
                raise WeightSpecError(f"{where}.{key}: missing")
        return Segment(t0, t1, kind, a=_finite(raw["a"], f"{where}.a"),
                       b=_finite(raw["b"], f"{where}.b"))
    ts, ms = raw.get("t"), raw.get("m")
    if not isinstance(ts, list) or not isinstance(ms, list) or len(ts) != len(ms) or len(ts) < 2:
        raise WeightSpecError(f"{where}: table needs equal-length lists 't' and 'm' (>= 2 entries)")
    ts = tuple(_finite(x, f"{where}.t[{j}]") for j, x in enumerate(ts))
    ms = tuple(_finite(x, f"{where}.m[{j}]") for j, x in enumerate(ms))
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise WeightSpecError(f"{where}.t: table nodes must be strictly increasing")
    if ts[0] != t0 or ts[-1] != t1:
        raise WeightSpecError(f"{where}.t: table must start at t0 and end at t1")
    return Segment(t0, t1, kind, nodes=ts, values=ms)


def _build(segments: Sequence[Segment], limit_origin, limit_infinity, ramp, period,
           declared_sup, require_positive=True) -> WeightProfile:
    if not segments:
        raise WeightSpecError("segments: at least one segment is required")
    for i, (s, nxt) in enumerate(zip(segments, segments[1:])):
        if nxt.t0 != s.t1:
            gap = "overlap" if nxt.t0 < s.t1 else "gap"
            raise WeightSpecError(f"segments[{i + 1}].t0: {gap} with previous segment "
                                  f"({s.t1} vs {nxt.t0})")
    pieces = [p for s in segments for p in s.linear_pieces()]
    t_lo, t_hi = segments[0].t0, segments[-1].t1
    if period is not None:
        period = _finite(period, "period")
        if not abs((t_hi - t_lo) - period) <= 1e-12 * max(1.0, abs(period)):
            raise WeightSpecError("period: the core range must span exactly one period")
    else:
        if limit_origin is None or limit_infinity is None:
            raise WeightSpecError("limit_origin/limit_infinity: required for non-periodic weights")
        ramp = _finite(ramp, "ramp")
        if ramp <= 0:
            raise WeightSpecError("ramp: must be positive")
        v0, v1 = pieces[0][2], pieces[-1][3]
        if not math.isclose(v0, limit_origin, rel_tol=1e-14, abs_tol=1e-15):
            pieces.insert(0, (t_lo - ramp, t_lo, limit_origin, v0))
        if not math.isclose(v1, limit_infinity, rel_tol=1e-14, abs_tol=1e-15):
            pieces.append((t_hi, t_hi + ramp, v1, limit_infinity))
    values = [v for p in pieces for v in p[2:]]
    if period is None:
        values += [limit_origin, limit_infinity]
    sup = max(abs(v) for v in values)
    if declared_sup is not None:
        declared_sup = _finite(declared_sup, "sup_norm")
        if declared_sup < sup * (1 - 1e-12):
            raise WeightSpecError(f"sup_norm: declared {declared_sup} < attained {sup}")
        sup = declared_sup
    if require_positive and max(values) <= 0.0:
        raise WeightSpecError("segments: weight is nonpositive everywhere")
    return WeightProfile(tuple(segments), limit_origin, limit_infinity, sup, ramp, period,
                         tuple(pieces))


def make_profile(spec: dict, require_positive: bool = True) -> WeightProfile:
    """Build a validated profile from its JSON-shaped description.

    ``require_positive=False`` admits weights that vanish identically, which
    the perturbation experiments need for a zero base potential.
    """
    if not isinstance(spec, dict):
        raise WeightSpecError("weight spec must be a JSON object")
    raw_segments = spec.get("segments")
    if not isinstance(raw_segments, list):
        raise WeightSpecError("segments: expected a list")
    segments = [_parse_segment(s, i) for i, s in enumerate(raw_segments)]
    period = spec.get("period")
    lo = spec.get("limit_origin")
    hi = spec.get("limit_infinity")
    if period is None or lo is not None or hi is not None:
        lo = _finite(lo, "limit_origin")
        hi = _finite(hi, "limit_infinity")
    return _build(segments, lo, hi, spec.get("ramp", DEFAULT_RAMP), period,
                  spec.get("sup_norm"), require_positive=require_positive)


def load_profile(path, require_positive: bool = True) -> WeightProfile:
    path = Path(path)
    try:
        spec = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise WeightSpecError(f"{path}: malformed JSON ({exc})") from None
    try:
        return make_profile(spec, require_positive=require_positive)
    except WeightSpecError as exc:
        raise WeightSpecError(f"{path}: {exc}") from None


def scaled_limits(profile: WeightProfile) -> tuple[float, float]:
    """(m_plus, m_minus) = (m(inf), m(0)); for radial weights the dilation limits are constants."""
    if profile.is_periodic:
        raise WeightSpecError("periodic weights have no constant limits at 0 or infinity")
    return profile.limit_infinity, profile.limit_origin


def ball_extrema(profile: WeightProfile, r: float) -> BallExtrema:
    """Exact inf/sup of m over B(0, r), i.e. over t <= log r."""
    if not r > 0:
        raise ValueError("r must be positive")
    if profile.is_periodic:
        vals = [v for p in profile._pieces for v in p[2:]]
        return BallExtrema(r, min(vals), max(vals))
    T = math.log(r)
    vals = [profile.limit_origin]
    for ta, tb, fa, fb in profile._pieces:
        if ta > T:
            break
        vals.append(fa)
        if tb <= T:
            vals.append(fb)
        else:
            vals.append(fa + (fb - fa) * (T - ta) / (tb - ta))
    if T >= profile._pieces[-1][1]:
        vals.append(profile.limit_infinity)
    return BallExtrema(r, min(vals), max(vals))


def check_periodic(profile: WeightProfile, gamma: float, tol: float = 1e-12) -> bool:
    """Whether m(gamma x) = m(x), probed at 10^4 cell midpoints per period log(gamma).

    For a declared-periodic weight one period of the weight is probed; otherwise
    the probe covers every t at which either m(t) or m(t + log gamma) leaves the
    constant tails.
    """
    if not gamma > 1:
        raise ValueError("gamma must exceed 1")
    shift = math.log(gamma)
    if profile.is_periodic:
        a, b = profile.t_lo, profile.t_lo + max(profile.period, shift)
    else:
        lo, hi = profile.flat_range()
        a, b = lo - shift, hi
        if profile.limit_origin != profile.limit_infinity:
            return False
    npts = int(min(_PROBE_MAX_POINTS, math.ceil(PROBE_POINTS_PER_PERIOD * (b - a) / shift)))
    # cell midpoints keep probes off the breakpoints, where rounding of t + shift flips sides
    t = a + (np.arange(npts) + 0.5) * ((b - a) / npts)
    diff = np.abs(profile.eval(t + shift) - profile.eval(t))
    return bool(np.all(diff <= tol))


def combine(terms: Iterable[tuple[float, WeightProfile]], offset: float = 0.0) -> WeightProfile:
    """The weight offset + sum_i c_i m_i as a new piecewise-affine profile."""
    terms = list(terms)
    if any(p.is_periodic for _, p in terms):
        raise WeightSpecError("combine: periodic weights are not supported")
    if not terms:
        return constant_profile(offset, require_positive=False)
    pts = sorted(set(np.concatenate([p.breakpoints() for _, p in terms]).tolist()))
    if len(pts) == 1:
        pts = [pts[0] - 1.0, pts[0] + 1.0]
    segs = []
    for ta, tb in zip(pts, pts[1:]):
        fa = offset + sum(c * p._side_value(ta, +1) for c, p in terms)
        fb = offset + sum(c * p._side_value(tb, -1) for c, p in terms)
        if fa == fb:
            segs.append(Segment(ta, tb, "constant", value=fa))
        else:
            slope = (fb - fa) / (tb - ta)
            segs.append(Segment(ta, tb, "affine", a=fa - slope * ta, b=slope))
    lo = offset + sum(c * p.limit_origin for c, p in terms)
    hi = offset + sum(c * p.limit_infinity for c, p in terms)
    ramp = min(p.ramp for _, p in terms)
    return _build(segs, lo, hi, ramp, None, None, require_positive=False)


# -- catalogue of weights used throughout the experiments -------------------

def constant_profile(c: float, t0: float = -1.0, t1: float = 1.0,
                     require_positive: bool = True) -> WeightProfile:
    return make_profile({"segments": [{"t0": t0, "t1": t1, "kind": "constant", "value": c}],
                         "limit_origin": c, "limit_infinity": c},
                        require_positive=require_positive)


def step_profile(breaks: Sequence[float], values: Sequence[float], limit_origin: float,
                 limit_infinity: float, require_positive: bool = True) -> WeightProfile:
    """Piecewise-constant core: values[i] on [breaks[i], breaks[i+1])."""
    if len(breaks) != len(values) + 1:
        raise WeightSpecError("step_profile: need len(breaks) == len(values) + 1")
    segs = [{"t0": a, "t1": b, "kind": "constant", "value": v}
            for a, b, v in zip(breaks, breaks[1:], values)]
    return make_profile({"segments": segs, "limit_origin": limit_origin,
                         "limit_infinity": limit_infinity}, require_positive=require_positive)


def bump_profile(amplitude: float = 10.0, base: float = 1.0, t0: float = 0.0,
                 t1: float = math.log(2.0), pad: float = 1.0) -> WeightProfile:
    """base everywhere except ``amplitude`` on t0 <= t < t1 (default: 1 < r < 2)."""
    return step_profile([t0 - pad, t0, t1, t1 + pad], [base, amplitude, base], base, base,
                        require_positive=amplitude > 0 or base > 0)


def counterexample_profile() -> WeightProfile:
    """m = 1 for r <= 1, affine in log r down to 1/2 on 1 < r < 2, 1/2 for r >= 2."""
    L = math.log(2.0)
    return make_profile({
        "segments": [
            {"t0": -1.0, "t1": 0.0, "kind": "constant", "value": 1.0},
            {"t0": 0.0, "t1": L, "kind": "affine", "a": 1.0, "b": -0.5 / L},
            {"t0": L, "t1": L + 1.0, "kind": "constant", "value": 0.5},
        ],
        "limit_origin": 1.0,
        "limit_infinity": 0.5,
    })


def square_wave(low: float = 1.0, high: float = 2.0, gamma: float = 2.0,
                start: float = 0.0, duty: float = 0.5) -> WeightProfile:
    """Declared-periodic weight: ``low`` on the first ``duty`` of each cell, then ``high``."""
    P = math.log(gamma)
    mid = start + duty * P
    return make_profile({
        "segments": [
            {"t0": start, "t1": mid, "kind": "constant", "value": low},
            {"t0": mid, "t1": start + P, "kind": "constant", "value": high},
        ],
        "period": P,
    })


def canonical_bump(height: float = 9.0) -> WeightProfile:
    """Compact bump M = height on 1 <= r < 2, zero elsewhere, limits (0, 0)."""
    L = math.log(2.0)
    return step_profile([-1.0, 0.0, L, L + 1.0], [0.0, height, 0.0], 0.0, 0.0)
