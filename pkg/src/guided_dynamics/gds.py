"""Guided dynamical systems on intervals, circles, and finite graphs.

A guided system is a family of generator maps delta_i together with closed
guiding sets Lambda_i; the step x -> delta_i(x) is forbidden whenever x lies
in Lambda_i. Orbit enumeration, minimality and weak-attractor probes, guided
cycle search, finite orbit graphs with terminal strongly connected
components, and conjugacy verification all live here.

Numerical semantics are evidence-graded: probes report verdicts at an
explicit resolution (eps) and search depth, never proofs. A point within
tol_lambda of a guiding set is treated as belonging to it, which can only
remove moves, so no improper orbit is ever emitted due to roundoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MapEscape, NotInvertible
from .exprlang import Expression, as_callable, differentiate

TOL_LAMBDA = 1e-9
TOL_STEP = 1e-9
TOL_RANGE = 1e-9

__all__ = [
    "Interval", "CircleSpace", "FiniteGraphSpace",
    "GeneratorMap", "GuidingSet", "GuidedSystem", "Orbit",
    "OrbitCloud", "MinimalityVerdict", "WeakAttractorVerdict", "CycleReport",
    "ContractionMinimalityCertificate", "ContractionRefusal",
    "OrbitGraph", "ConjugacyReport",
    "allowed_generators", "guided_orbit_set", "probe_minimality",
    "probe_weak_attractor", "find_guided_cycles",
    "check_contraction_minimality", "build_orbit_graph",
    "minimal_subsystems", "verify_conjugacy", "validate_orbit",
    "zero_band_guiding", "map_from",
]


# --------------------------------------------------------------------------
# State spaces
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"need a < b, got [{self.a}, {self.b}]")

    @property
    def length(self):
        return self.b - self.a

    def metric(self, x, y):
        return np.abs(np.asarray(x, dtype=float) - y)

    def normalize(self, x):
        return np.clip(x, self.a, self.b)

    def contains(self, x, tol=TOL_RANGE):
        x = np.asarray(x, dtype=float)
        return bool(np.all((x >= self.a - tol) & (x <= self.b + tol)))

    def cell_count(self, eps):
        return max(1, int(math.ceil(self.length / eps)))

    def cell_index(self, x, n_cells):
        w = self.length / n_cells
        idx = np.floor((np.asarray(x, dtype=float) - self.a) / w).astype(np.int64)
        return np.clip(idx, 0, n_cells - 1)

    def cell_left_edges(self, n_cells):
        w = self.length / n_cells
        return self.a + w * np.arange(n_cells)

    def grid(self, n):
        return np.linspace(self.a, self.b, n)

    def random(self, rng, size):
        return rng.uniform(self.a, self.b, size)


@dataclass(frozen=True)
class CircleSpace:
    period: float = 2.0 * math.pi

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("period must be positive")

    @property
    def length(self):
        return self.period

    def metric(self, x, y):
        d = np.mod(np.asarray(x, dtype=float) - y, self.period)
        return np.minimum(d, self.period - d)

    def normalize(self, x):
        return np.mod(x, self.period)

    def contains(self, x, tol=TOL_RANGE):
        return True

    def cell_count(self, eps):
        return max(1, int(math.ceil(self.period / eps)))

    def cell_index(self, x, n_cells):
        w = self.period / n_cells
        idx = np.floor(self.normalize(x) / w).astype(np.int64)
        return np.mod(idx, n_cells)

    def cell_left_edges(self, n_cells):
        w = self.period / n_cells
        return w * np.arange(n_cells)

    def grid(self, n):
        return np.linspace(0.0, self.period, n, endpoint=False)

    def random(self, rng, size):
        return rng.uniform(0.0, self.period, size)


@dataclass(frozen=True)
class FiniteGraphSpace:
    n_nodes: int

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError("node count must be >= 1")

    @property
    def length(self):
        return float(self.n_nodes)

    def metric(self, x, y):
        return (np.asarray(x) != np.asarray(y)).astype(float)

    def normalize(self, x):
        return np.asarray(x)

    def contains(self, x, tol=0.0):
        x = np.asarray(x)
        return bool(np.all((x >= 0) & (x < self.n_nodes)))

    def cell_count(self, eps):
        return self.n_nodes

    def cell_index(self, x, n_cells):
        return np.asarray(x, dtype=np.int64)

    def cell_left_edges(self, n_cells):
        return np.arange(self.n_nodes, dtype=float)

    def grid(self, n):
        return np.arange(self.n_nodes, dtype=float)

    def random(self, rng, size):
        return rng.integers(0, self.n_nodes, size).astype(float)


# --------------------------------------------------------------------------
# Generator maps and guiding sets
# --------------------------------------------------------------------------

class GeneratorMap:
    """One generator: a vector-capable callable plus (optionally) its
    derivative and the expression it came from.

    Circle maps must return raw (unwrapped) values; wrapping is applied by
    the orbit machinery, which keeps monotone endpoint arithmetic exact.
    """

    def __init__(self, fn, dfn=None, label=0, source=None, table=None,
                 d2fn=None):
        self.fn = fn
        self.dfn = dfn
        self.d2fn = d2fn
        self.label = label
        self.source = source
        self.table = None if table is None else np.asarray(table, dtype=np.int64)
        self.monotone = None  # "inc" | "dec" | None; set by GuidedSystem

    def __call__(self, x):
        if self.table is not None:
            return self.table[np.asarray(x, dtype=np.int64)]
        return self.fn(x)

    def derivative(self, x):
        if self.dfn is None:
            raise ValueError(f"generator {self.label} has no derivative")
        return self.dfn(x)

    @property
    def has_derivative(self):
        return self.dfn is not None

    def __repr__(self):
        src = f" {self.source}" if self.source is not None else ""
        return f"GeneratorMap(label={self.label}{src})"


def map_from(obj, label=0, var="t"):
    """Build a GeneratorMap from an Expression (derivative derived
    symbolically), a (fn, dfn) pair, or a bare callable."""
    if isinstance(obj, GeneratorMap):
        return obj
    if isinstance(obj, Expression):
        d = differentiate(obj)
        return GeneratorMap(obj.eval, d.eval, label=label, source=obj,
                            d2fn=differentiate(d).eval)
    if isinstance(obj, tuple) and len(obj) in (2, 3):
        fns = [as_callable(o) if o is not None else None for o in obj]
        fns += [None] * (3 - len(fns))
        return GeneratorMap(fns[0], fns[1], label=label, d2fn=fns[2])
    if callable(obj):
        return GeneratorMap(obj, None, label=label)
    raise TypeError(f"cannot build a generator map from {obj!r}")


class GuidingSet:
    """A closed set represented as a finite union of closed intervals
    (degenerate intervals are points)."""

    def __init__(self, intervals=()):
        ivs = []
        for lo, hi in intervals:
            lo, hi = float(lo), float(hi)
            if hi < lo:
                raise ValueError(f"interval [{lo}, {hi}] reversed")
            ivs.append((lo, hi))
        ivs.sort()
        self.intervals = tuple(ivs)
        self._lo = np.array([iv[0] for iv in ivs], dtype=float)
        self._hi = np.array([iv[1] for iv in ivs], dtype=float)

    @classmethod
    def points(cls, pts):
        return cls([(p, p) for p in pts])

    @classmethod
    def empty(cls):
        return cls(())

    @property
    def is_empty(self):
        return len(self.intervals) == 0

    def total_length(self):
        return float(np.sum(self._hi - self._lo))

    def distance(self, x, space):
        """Pointwise distance from x (scalar or array) to the set."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.is_empty:
            return np.full(x.shape, np.inf)
        if isinstance(space, CircleSpace):
            xs = space.normalize(x)
            shifts = (-space.period, 0.0, space.period)
            best = np.full(x.shape, np.inf)
            for s in shifts:
                xc = xs[:, None] + s
                d = np.maximum(np.maximum(self._lo[None, :] - xc,
                                          xc - self._hi[None, :]), 0.0)
                best = np.minimum(best, d.min(axis=1))
            return best
        xc = x[:, None]
        d = np.maximum(np.maximum(self._lo[None, :] - xc,
                                  xc - self._hi[None, :]), 0.0)
        return d.min(axis=1)

    def contains(self, x, space, tol=TOL_LAMBDA):
        return self.distance(x, space) <= tol

    def covers_interval(self, lo, hi, tol=TOL_LAMBDA):
        """True if [lo, hi] lies inside a single member interval widened
        by tol."""
        for glo, ghi in self.intervals:
            if glo - tol <= lo and hi <= ghi + tol:
                return True
        return False

    def sample(self, per_interval=9):
        pts = []
        for lo, hi in self.intervals:
            if hi - lo == 0.0:
                pts.append(lo)
            else:
                pts.extend(np.linspace(lo, hi, per_interval))
        return np.array(pts, dtype=float)

    def __repr__(self):
        return f"GuidingSet({list(self.intervals)!r})"


def _intersect_interval_lists(a, b):
    out = []
    for lo1, hi1 in a:
        for lo2, hi2 in b:
            lo, hi = max(lo1, lo2), min(hi1, hi2)
            if lo <= hi:
                out.append((lo, hi))
    return out


class GuidedSystem:
    """State space + generators + guiding sets (+ optional coefficients)."""

    def __init__(self, space, generators, guiding=None, coefficients=None,
                 tol_lambda=TOL_LAMBDA, tol_step=TOL_STEP,
                 tol_range=TOL_RANGE, validate=True):
        self.space = space
        self.generators = tuple(map_from(g, label=i)
                                for i, g in enumerate(generators))
        n = len(self.generators)
        if n < 1:
            raise ValueError("need at least one generator")
        if guiding is None:
            guiding = [GuidingSet.empty()] * n
        self.guiding = tuple(g if isinstance(g, GuidingSet) else GuidingSet(g)
                             for g in guiding)
        if len(self.guiding) != n:
            raise ValueError("one guiding set per generator required")
        self.coefficients = None
        if coefficients is not None:
            self.coefficients = tuple(as_callable(c) for c in coefficients)
            if len(self.coefficients) != n:
                raise ValueError("one coefficient per generator required")
        self.tol_lambda = tol_lambda
        self.tol_step = tol_step
        self.tol_range = tol_range
        if validate:
            self._validate()

    @property
    def n_generators(self):
        return len(self.generators)

    def _validate(self):
        space = self.space
        if isinstance(space, FiniteGraphSpace):
            for g in self.generators:
                if g.table is None:
                    raise ValueError("finite-graph generators need node tables")
                if not space.contains(g.table):
                    raise MapEscape("node table leaves the graph",
                                    generator=g.label)
        else:
            xs = space.grid(513)
            for g in self.generators:
                img = np.asarray(g(xs), dtype=float)
                if isinstance(space, Interval) and not space.contains(
                        img, self.tol_range):
                    bad = int(np.argmax(np.maximum(space.a - img,
                                                   img - space.b)))
                    raise MapEscape(
                        f"generator {g.label} leaves the interval at "
                        f"x={xs[bad]!r} (image {img[bad]!r})",
                        generator=g.label, point=xs[bad], image=img[bad])
                g.monotone = _classify_monotone(g, xs)
            if self.coefficients is not None:
                for i, c in enumerate(self.coefficients):
                    vals = np.asarray(c(xs), dtype=float)
                    if np.min(vals) < -1e-9:
                        raise ValueError(
                            f"coefficient {i} negative at "
                            f"x={xs[int(np.argmin(vals))]!r}")
        # The guiding sets must have empty common intersection.
        if all(not g.is_empty for g in self.guiding) and self.n_generators > 1:
            common = list(self.guiding[0].intervals)
            for g in self.guiding[1:]:
                common = _intersect_interval_lists(common, g.intervals)
                if not common:
                    break
            if common:
                raise ValueError(
                    f"guiding sets intersect near {common[0]!r}; the "
                    "intersection over all generators must be empty")

    def allowed_mask(self, i, points):
        return self.guiding[i].distance(points, self.space) > self.tol_lambda

    def allowed(self, x):
        return tuple(i for i in range(self.n_generators)
                     if bool(self.allowed_mask(i, np.atleast_1d(x))[0]))


def _classify_monotone(gen, xs):
    if gen.has_derivative:
        d = np.asarray(gen.derivative(xs), dtype=float)
        if np.all(d >= -1e-12):
            return "inc"
        if np.all(d <= 1e-12):
            return "dec"
        return None
    vals = np.asarray(gen(xs), dtype=float)
    dv = np.diff(vals)
    if np.all(dv >= -1e-12):
        return "inc"
    if np.all(dv <= 1e-12):
        return "dec"
    return None


def allowed_generators(system: GuidedSystem, x) -> tuple:
    """Indices i with dist(x, Lambda_i) > tol_lambda (0-based)."""
    return system.allowed(x)


# --------------------------------------------------------------------------
# Orbits
# --------------------------------------------------------------------------

@dataclass
class Orbit:
    points: np.ndarray
    gens: tuple

    def __len__(self):
        return len(self.points)


def validate_orbit(system: GuidedSystem, orbit: Orbit, tol_step=None) -> bool:
    """Re-validate an orbit: every step uses an allowed generator and
    reproduces the stored point within tol_step."""
    tol = system.tol_step if tol_step is None else tol_step
    pts = np.asarray(orbit.points, dtype=float)
    for j, i in enumerate(orbit.gens):
        x_prev, x_next = pts[j], pts[j + 1]
        if system.guiding[i].distance(x_prev, system.space)[0] <= system.tol_lambda:
            return False
        img = system.space.normalize(np.asarray(
            system.generators[i](np.atleast_1d(x_prev)), dtype=float))[0]
        if system.space.metric(img, x_next) > tol:
            return False
    return True


# --------------------------------------------------------------------------
# Breadth-first guided orbit closure
# --------------------------------------------------------------------------

@dataclass
class OrbitCloud:
    points: np.ndarray
    coverage: float
    eps: float
    n_cov_cells: int
    saturated: bool
    partial: bool
    depth_used: int
    seed: float

    def to_csv(self, path):
        np.savetxt(path, np.sort(self.points), fmt="%.17g", header="t",
                   comments="")


_REFINE_MULTS = (2, 8, 32)   # single-seed closures escalate on stalls
_PROBE_MULTS = (16, 64)      # many-seed probes start fine to avoid restarts


def _bfs_closure(system, x0, depth, eps, cell_cap=500_000, fine_mult=2,
                 target=None, target_eps=None, stop_on_full_coverage=True):
    """Guided BFS from x0, deduplicating at resolution eps/fine_mult.

    Returns (rep points array, covered eps-cell count, n_cov, saturated,
    partial, depth_used, hit_target).
    """
    space = system.space
    n_fine = space.cell_count(eps / fine_mult)
    n_cov = space.cell_count(eps)
    occupied = np.zeros(n_fine, dtype=bool)
    rep_pts = np.zeros(n_fine, dtype=float)
    covered = np.zeros(n_cov, dtype=bool)
    hit = False

    def cov_mark(pts):
        nonlocal hit
        covered[space.cell_index(pts, n_cov)] = True
        if target is not None and not hit:
            if np.any(space.metric(pts, target) <= target_eps):
                hit = True

    x0n = float(space.normalize(np.atleast_1d(np.asarray(x0, dtype=float)))[0])
    seed_arr = np.array([x0n])
    seed_cell = space.cell_index(seed_arr, n_fine)
    occupied[seed_cell] = True
    rep_pts[seed_cell] = x0n
    cov_mark(seed_arr)
    frontier = seed_arr
    saturated = False
    partial = False
    level = 0
    while level < depth:
        if target is not None and hit:
            break
        if stop_on_full_coverage and target is None and covered.all():
            break
        new_pts = []
        for i, gen in enumerate(system.generators):
            mask = system.allowed_mask(i, frontier)
            if not np.any(mask):
                continue
            img = space.normalize(np.asarray(gen(frontier[mask]), dtype=float))
            new_pts.append(img)
        if not new_pts:
            saturated = True
            break
        cand = np.concatenate(new_pts)
        cov_mark(cand)
        cells = space.cell_index(cand, n_fine)
        uniq, first = np.unique(cells, return_index=True)
        fresh_sel = ~occupied[uniq]
        fresh = cand[first[fresh_sel]]
        occupied[uniq[fresh_sel]] = True
        rep_pts[uniq[fresh_sel]] = fresh
        level += 1
        if fresh.size == 0:
            saturated = True
            break
        if int(occupied.sum()) > cell_cap:
            partial = True
            break
        frontier = fresh
    return (rep_pts[occupied], int(covered.sum()), n_cov, saturated,
            partial, level, hit)


def _bfs_refining(system, x0, depth, eps, cell_cap=500_000, target=None,
                  target_eps=None, stop_on_full_coverage=True,
                  start_level=0):
    """BFS with escalating dedup resolution.

    One representative per cell prunes the phase diversity that isometries
    (circle rotations) need to fill every cell, so a closure that saturates
    short of full coverage is retried at a finer internal resolution. The
    coverage semantics (eps-cells touched) are unchanged; only completeness
    improves. Returns (result tuple, refinement level used) so callers
    probing many seeds can skip resolutions that already proved too coarse.
    """
    out = None
    level = start_level
    for level in range(start_level, len(_REFINE_MULTS)):
        out = _bfs_closure(system, x0, depth, eps, cell_cap,
                           _REFINE_MULTS[level], target, target_eps,
                           stop_on_full_coverage)
        pts, n_hit, n_cov, saturated, partial, used, hit = out
        if hit or n_hit == n_cov or not saturated or partial:
            break
    return out, level


def guided_orbit_set(system: GuidedSystem, x0, depth: int, eps: float,
                     cell_cap: int = 500_000) -> OrbitCloud:
    """Breadth-first closure of {x0} under allowed generators, pruned to one
    representative per eps/2-cell; coverage counts eps-cells touched."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    (pts, n_hit, n_cov, saturated, partial, used, _), _ = _bfs_refining(
        system, x0, depth, eps, cell_cap, stop_on_full_coverage=False)
    space = system.space
    n_half = space.cell_count(eps / 2.0)
    cells = space.cell_index(pts, n_half)
    _, keep = np.unique(cells, return_index=True)
    return OrbitCloud(points=np.sort(pts[keep]),
                      coverage=n_hit / n_cov, eps=eps,
                      n_cov_cells=n_cov, saturated=saturated, partial=partial,
                      depth_used=used, seed=float(np.atleast_1d(x0)[0]))


# --------------------------------------------------------------------------
# Minimality probe
# --------------------------------------------------------------------------

@dataclass
class MinimalityVerdict:
    kind: str  # "minimal_evidence" | "not_minimal" | "inconclusive"
    eps: float
    depth: int
    coverage: float
    witness: tuple = None        # intervals (lo, hi) for continuous spaces
    witness_nodes: tuple = None  # node ids for finite graphs
    via: str = "orbit_probe"
    note: str = ""

    @property
    def is_minimal_evidence(self):
        return self.kind == "minimal_evidence"

    @property
    def is_not_minimal(self):
        return self.kind == "not_minimal"


def _witness_intervals(space, rep_points, pad):
    """Closed pads around cloud representatives, merged."""
    pts = np.sort(np.asarray(rep_points, dtype=float))
    ivs = []
    for p in pts:
        lo, hi = p - pad, p + pad
        if isinstance(space, Interval):
            lo, hi = max(lo, space.a), min(hi, space.b)
        if ivs and lo <= ivs[-1][1] + 1e-15:
            ivs[-1] = (ivs[-1][0], max(ivs[-1][1], hi))
        else:
            ivs.append((lo, hi))
    if isinstance(space, CircleSpace) and len(ivs) > 1:
        # merge across the wrap seam
        first_lo, first_hi = ivs[0]
        last_lo, last_hi = ivs[-1]
        if first_lo + space.period <= last_hi + 1e-15:
            ivs[0] = (last_lo - space.period, first_hi)
            ivs.pop()
    return tuple(ivs)


def _arc_inside(space, s_lo, s_hi, w_lo, w_hi, tol):
    if isinstance(space, CircleSpace):
        for k in (-space.period, 0.0, space.period):
            if w_lo - tol <= s_lo + k and s_hi + k <= w_hi + tol:
                return True
        return False
    return w_lo - tol <= s_lo and s_hi <= w_hi + tol


def _validate_witness(system, intervals):
    """Forward closure of a union of intervals: for every member interval
    and every generator allowed on it, the (exact, for monotone maps) image
    must land inside the union, dilated by tol_step."""
    space = system.space
    tol = system.tol_step
    for lo, hi in intervals:
        for i, gen in enumerate(system.generators):
            if system.guiding[i].covers_interval(lo, hi, system.tol_lambda):
                continue
            if gen.monotone is not None:
                e1 = float(np.atleast_1d(gen(np.array([lo])))[0])
                e2 = float(np.atleast_1d(gen(np.array([hi])))[0])
                img_lo, img_hi = min(e1, e2), max(e1, e2)
            else:
                xs = np.linspace(lo, hi, 33)
                img = np.asarray(gen(xs), dtype=float)
                img_lo, img_hi = float(img.min()), float(img.max())
            if isinstance(space, CircleSpace):
                span = img_hi - img_lo
                start = float(space.normalize(np.array([img_lo]))[0])
                img_lo, img_hi = start, start + span
            ok = any(_arc_inside(space, img_lo, img_hi, wlo, whi, tol)
                     for wlo, whi in intervals)
            if not ok:
                return False
    return True


def _batched_closures(system, seeds, depth, eps, fine_mult,
                      cell_cap=500_000, target=None, target_eps=None):
    """Run the guided BFS for many seeds at once (one shared vectorized
    frontier carrying a seed-id column).

    Returns (cov_count, saturated, partial, hit) arrays indexed by seed. A
    seed is retired as soon as it reaches full coverage (or, in target
    mode, hits the ball); 'saturated' marks seeds whose frontier emptied
    short of that, 'partial' those that blew the cell cap.
    """
    space = system.space
    n_seeds = len(seeds)
    n_fine = space.cell_count(eps / fine_mult)
    n_cov = space.cell_count(eps)
    occ = np.zeros((n_seeds, n_fine), dtype=bool)
    covd = np.zeros((n_seeds, n_cov), dtype=bool)
    cov_count = np.zeros(n_seeds, dtype=np.int64)
    occ_count = np.zeros(n_seeds, dtype=np.int64)
    hit = np.zeros(n_seeds, dtype=bool)
    partial = np.zeros(n_seeds, dtype=bool)
    active = np.ones(n_seeds, dtype=bool)

    pts = space.normalize(np.asarray(seeds, dtype=float)).astype(float)
    sid = np.arange(n_seeds)

    def absorb(cand, csid):
        # coverage bookkeeping
        lin = csid * n_cov + space.cell_index(cand, n_cov)
        ulin = np.unique(lin)
        fresh = ulin[~covd.ravel()[ulin]]
        covd.ravel()[fresh] = True
        np.add.at(cov_count, fresh // n_cov, 1)
        if target is not None:
            near = space.metric(cand, target) <= target_eps
            hit[csid[near]] = True

    absorb(pts, sid)
    if target is not None:
        active &= ~hit
    else:
        active &= cov_count < n_cov
    lin0 = sid * n_fine + space.cell_index(pts, n_fine)
    occ.ravel()[lin0] = True
    occ_count[:] = 1
    keep = active[sid]
    pts, sid = pts[keep], sid[keep]

    level = 0
    while level < depth and pts.size:
        outs_p, outs_s = [], []
        for i, gen in enumerate(system.generators):
            mask = system.allowed_mask(i, pts)
            if not np.any(mask):
                continue
            outs_p.append(space.normalize(
                np.asarray(gen(pts[mask]), dtype=float)))
            outs_s.append(sid[mask])
        level += 1
        if not outs_p:
            break
        cand = np.concatenate(outs_p)
        csid = np.concatenate(outs_s)
        absorb(cand, csid)
        if target is not None:
            active &= ~hit
        else:
            active &= cov_count < n_cov
        linf = csid * n_fine + space.cell_index(cand, n_fine)
        ulinf, first = np.unique(linf, return_index=True)
        new_sel = ~occ.ravel()[ulinf]
        occ.ravel()[ulinf[new_sel]] = True
        sel = first[new_sel]
        pts, sid = cand[sel], csid[sel]
        np.add.at(occ_count, sid, 1)
        over = occ_count > cell_cap
        if np.any(over):
            partial |= over & active
            active &= ~over
        keep = active[sid]
        pts, sid = pts[keep], sid[keep]
    # seeds still active with an empty frontier saturated; active seeds at
    # depth exhaustion did not saturate
    exhausted = level >= depth and pts.size > 0
    still_active = active.copy()
    if exhausted:
        frontier_seeds = np.zeros(n_seeds, dtype=bool)
        frontier_seeds[sid] = True
        saturated = still_active & ~frontier_seeds & ~partial
    else:
        saturated = still_active & ~partial
    return cov_count, saturated, partial, hit


def probe_minimality(system: GuidedSystem, eps: float, depth: int,
                     cell_cap: int = 500_000) -> MinimalityVerdict:
    """Run guided orbit closures from one seed per eps-cell.

    MinimalEvidence iff every seed reaches full eps-coverage; NotMinimal iff
    some seed's closure saturates on a proper subset whose padded hull is
    verified forward-closed; Inconclusive otherwise.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    space = system.space
    if isinstance(space, FiniteGraphSpace):
        return _probe_minimality_graph(system, eps, depth)
    n_cov = space.cell_count(eps)
    n_half = space.cell_count(eps / 2.0)
    pad = space.length / n_half / 2.0
    seeds = space.cell_left_edges(n_cov)
    unresolved = np.arange(n_cov)
    worst = 1.0
    any_inconclusive = False
    tight_fallback = None
    for mult in _PROBE_MULTS:
        batch = seeds[unresolved]
        cov_count, saturated, partial, _ = _batched_closures(
            system, batch, depth, eps, mult, cell_cap)
        coverage = cov_count / n_cov
        done = coverage >= 1.0
        # saturated seeds stopped short of full coverage: candidate
        # witnesses for NotMinimal
        for k in np.nonzero(saturated & ~done)[0]:
            seed = batch[k]
            pts, n_hit, _, sat, part, _, _ = _bfs_closure(
                system, seed, depth, eps, cell_cap, mult)
            if not (sat and not part) or n_hit >= n_cov:
                continue
            # Prefer witnesses whose cell-sized pads validate (robustly
            # forward-closed); keep a tolerance-band-sized fallback that
            # certifies sets invariant through exact guiding exclusions.
            witness = _witness_intervals(space, pts, pad)
            if _validate_witness(system, witness):
                return MinimalityVerdict(
                    kind="not_minimal", eps=eps, depth=depth,
                    coverage=n_hit / n_cov, witness=witness,
                    note=f"seed {seed!r}: forward-closed set of "
                         f"{len(witness)} interval(s)")
            if tight_fallback is None:
                tight = _witness_intervals(space, pts, system.tol_lambda)
                if _validate_witness(system, tight):
                    tight_fallback = MinimalityVerdict(
                        kind="not_minimal", eps=eps, depth=depth,
                        coverage=n_hit / n_cov, witness=tight,
                        note=f"seed {seed!r}: set invariant through exact "
                             f"guiding exclusions "
                             f"({len(tight)} interval(s))")
        if np.any(~done):
            worst = min(worst, float(np.min(coverage[~done])))
        unresolved = unresolved[~done]
        if unresolved.size == 0:
            break
        any_inconclusive = True
    if tight_fallback is not None:
        return tight_fallback
    if any_inconclusive and unresolved.size > 0:
        return MinimalityVerdict(kind="inconclusive", eps=eps, depth=depth,
                                 coverage=worst)
    return MinimalityVerdict(kind="minimal_evidence", eps=eps, depth=depth,
                             coverage=1.0)


def _probe_minimality_graph(system, eps, depth):
    graph = build_orbit_graph(system, cells=system.space.n_nodes)
    comps = minimal_subsystems(graph)
    n = system.space.n_nodes
    if len(comps) == 1 and len(comps[0]) == n:
        return MinimalityVerdict(kind="minimal_evidence", eps=eps,
                                 depth=depth, coverage=1.0,
                                 via="terminal_scc")
    witness = comps[0]
    return MinimalityVerdict(kind="not_minimal", eps=eps, depth=depth,
                             coverage=len(witness) / n,
                             witness_nodes=tuple(witness),
                             via="terminal_scc")


# --------------------------------------------------------------------------
# Weak attractor probe
# --------------------------------------------------------------------------

@dataclass
class WeakAttractorVerdict:
    kind: str  # "yes" | "no" | "inconclusive"
    x0: float
    eps: float
    depth: int
    witness_seed: float = None
    note: str = ""

    @property
    def is_yes(self):
        return self.kind == "yes"


def probe_weak_attractor(system: GuidedSystem, x0, eps: float, depth: int,
                         cell_cap: int = 500_000) -> WeakAttractorVerdict:
    """Yes iff from every eps-cell seed some proper orbit enters B(x0, eps)
    within depth; No with a witness seed whose saturated closure never
    does; Inconclusive on budget exhaustion."""
    space = system.space
    if isinstance(space, FiniteGraphSpace):
        return _probe_weak_attractor_graph(system, x0, eps, depth)
    n_cov = space.cell_count(eps)
    seeds = space.cell_left_edges(n_cov)
    unresolved = np.arange(n_cov)
    saturated_last = np.zeros(0, dtype=bool)
    for mult in _PROBE_MULTS:
        batch = seeds[unresolved]
        _, saturated, partial, hit = _batched_closures(
            system, batch, depth, eps, mult, cell_cap,
            target=x0, target_eps=eps)
        unresolved = unresolved[~hit]
        saturated_last = (saturated & ~hit)[~hit]
        if unresolved.size == 0:
            return WeakAttractorVerdict(kind="yes", x0=float(x0), eps=eps,
                                        depth=depth)
    if np.any(saturated_last):
        witness = float(seeds[unresolved[np.argmax(saturated_last)]])
        return WeakAttractorVerdict(kind="no", x0=float(x0), eps=eps,
                                    depth=depth, witness_seed=witness)
    return WeakAttractorVerdict(kind="inconclusive", x0=float(x0),
                                eps=eps, depth=depth)


def _probe_weak_attractor_graph(system, x0, eps, depth):
    graph = build_orbit_graph(system, cells=system.space.n_nodes)
    n = system.space.n_nodes
    target = int(x0)
    rev = [[] for _ in range(n)]
    for src, dst, _ in graph.edges:
        rev[int(dst)].append(int(src))
    seen = {target}
    stack = [target]
    while stack:
        v = stack.pop()
        for u in rev[v]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    if len(seen) == n:
        return WeakAttractorVerdict(kind="yes", x0=float(x0), eps=eps,
                                    depth=depth)
    witness = min(set(range(n)) - seen)
    return WeakAttractorVerdict(kind="no", x0=float(x0), eps=eps,
                                depth=depth, witness_seed=float(witness))


# --------------------------------------------------------------------------
# Guided cycle search
# --------------------------------------------------------------------------

@dataclass
class CycleReport:
    cycles: list
    max_len: int
    n_seeds: int
    tol_cycle: float

    @property
    def empty(self):
        return len(self.cycles) == 0


def find_guided_cycles(system: GuidedSystem, max_len: int,
                       tol_cycle: float = 1e-7) -> CycleReport:
    """Search for proper cycles whose points all lie inside the union of
    guiding sets (within tol_lambda), starting from seeds inside that
    union. An empty list is evidence that no guided cycle exists up to
    max_len at the working resolution."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    space = system.space
    seeds = []
    for gset in system.guiding:
        for lo, hi in gset.intervals:
            seeds.extend([lo, hi] if hi > lo else [lo])
            if hi > lo:
                seeds.append(0.5 * (lo + hi))
    uniq = []
    for s in seeds:
        if all(space.metric(s, u) > 1e-12 for u in uniq):
            uniq.append(float(s))

    def in_lambda(x):
        return any(g.distance(x, space)[0] <= system.tol_lambda
                   for g in system.guiding)

    found = []
    seen_keys = set()

    def dfs(start, point, path_pts, path_gens):
        if len(path_gens) >= max_len:
            return
        for i in range(system.n_generators):
            if system.guiding[i].distance(point, space)[0] <= system.tol_lambda:
                continue
            nxt = float(space.normalize(np.atleast_1d(np.asarray(
                system.generators[i](np.atleast_1d(point)), dtype=float)))[0])
            gens = path_gens + (i,)
            if space.metric(nxt, start) <= tol_cycle and len(gens) >= 1:
                pts = np.array(path_pts + [nxt])
                key = _cycle_key(space, pts[:-1], gens, tol_cycle)
                if key not in seen_keys:
                    seen_keys.add(key)
                    found.append(Orbit(points=pts, gens=gens))
                continue
            if not in_lambda(nxt):
                continue
            # prune revisits inside the current path
            if any(space.metric(nxt, q) <= 1e-12 for q in path_pts[1:]):
                continue
            dfs(start, nxt, path_pts + [nxt], gens)

    for s in uniq:
        dfs(s, s, [s], ())
    return CycleReport(cycles=found, max_len=max_len, n_seeds=len(uniq),
                       tol_cycle=tol_cycle)


def _cycle_key(space, pts, gens, tol_cycle):
    scale = max(tol_cycle, 1e-12) * 10.0
    n = len(pts)
    variants = []
    for r in range(n):
        rolled_p = tuple(
            int(round(float(space.normalize(np.atleast_1d(p))[0]) / scale))
            for p in np.roll(pts, -r))
        rolled_g = tuple(int(g) for g in np.roll(np.array(gens), -r))
        variants.append((rolled_p, rolled_g))
    return min(variants)


# --------------------------------------------------------------------------
# Contraction certificate (sufficient condition for minimality of the
# unguided dynamics: strict contraction plus range covering)
# --------------------------------------------------------------------------

@dataclass
class ContractionMinimalityCertificate:
    lipschitz: tuple
    range_cover_defect: float
    samples: int
    guiding_empty: bool
    note: str = ""


@dataclass
class ContractionRefusal:
    failed: str
    generator: int
    witness: tuple = None
    detail: str = ""


def check_contraction_minimality(system: GuidedSystem, samples: int = 256,
                                 rng=None):
    """Certificate iff every generator strictly contracts sampled pairs
    (and its grid Lipschitz estimate is < 1 when a derivative is known) and
    the union of generator ranges covers the space within tol_range.

    The certificate concerns the unguided dynamics; it implies guided
    minimality only when every guiding set is empty (guiding_empty flag).
    """
    space = system.space
    if isinstance(space, FiniteGraphSpace):
        raise ValueError("contraction certificate needs a metric space")
    rng = np.random.default_rng(0) if rng is None else rng
    lip = []
    for i, gen in enumerate(system.generators):
        xs = space.random(rng, samples)
        ys = space.random(rng, samples)
        keep = space.metric(xs, ys) > 0
        xs, ys = xs[keep], ys[keep]
        dxy = space.metric(xs, ys)
        dimg = space.metric(np.asarray(gen(xs), dtype=float),
                            np.asarray(gen(ys), dtype=float))
        bad = dimg >= dxy
        if np.any(bad):
            k = int(np.argmax(bad))
            return ContractionRefusal(
                failed="contraction", generator=i,
                witness=(float(xs[k]), float(ys[k])),
                detail=f"d(images)={float(dimg[k])!r} >= "
                       f"d(points)={float(dxy[k])!r}")
        grid = space.grid(2049)
        if gen.has_derivative:
            est = float(np.max(np.abs(np.asarray(gen.derivative(grid),
                                                 dtype=float))))
        elif gen.monotone is not None and isinstance(space, Interval):
            est = abs(float(np.atleast_1d(gen(np.array([space.b])))[0]) -
                      float(np.atleast_1d(gen(np.array([space.a])))[0])) \
                / space.length
        else:
            vals = np.asarray(gen(grid), dtype=float)
            est = float(np.max(np.abs(np.diff(vals) / np.diff(grid))))
        lip.append(est)
        if est >= 1.0:
            return ContractionRefusal(
                failed="contraction", generator=i,
                detail=f"Lipschitz estimate {est!r} >= 1")
    defect = _range_cover_defect(system)
    if defect > system.tol_range:
        return ContractionRefusal(failed="range_cover", generator=-1,
                                  detail=f"uncovered gap {defect!r}")
    return ContractionMinimalityCertificate(
        lipschitz=tuple(lip), range_cover_defect=defect, samples=samples,
        guiding_empty=all(g.is_empty for g in system.guiding))


def _range_cover_defect(system):
    """Largest distance from a space point to the union of generator
    ranges (0 means covered)."""
    space = system.space
    arcs = []
    for gen in system.generators:
        if gen.monotone is not None:
            lo_val = float(np.atleast_1d(gen(np.array([_space_lo(space)])))[0])
            hi_val = float(np.atleast_1d(gen(np.array([_space_hi(space)])))[0])
            lo, hi = min(lo_val, hi_val), max(lo_val, hi_val)
        else:
            img = np.asarray(gen(space.grid(4097)), dtype=float)
            lo, hi = float(img.min()), float(img.max())
        arcs.append((lo, hi))
    if isinstance(space, CircleSpace):
        if any(hi - lo >= space.period for lo, hi in arcs):
            return 0.0
        arcs = [(float(space.normalize(np.array([lo]))[0]),
                 float(space.normalize(np.array([lo]))[0]) + (hi - lo))
                for lo, hi in arcs]
        pts = space.grid(4096)
        best = np.full(pts.shape, np.inf)
        for lo, hi in arcs:
            for k in (-space.period, 0.0, space.period):
                d = np.maximum(np.maximum(lo - (pts + k), (pts + k) - hi), 0.0)
                best = np.minimum(best, d)
        return float(best.max())
    arcs.sort()
    gap = max(arcs[0][0] - space.a, 0.0)
    reach = arcs[0][1]
    for lo, hi in arcs[1:]:
        gap = max(gap, lo - reach)
        reach = max(reach, hi)
    gap = max(gap, space.b - reach)
    return float(max(gap, 0.0))


def _space_lo(space):
    return space.a if isinstance(space, Interval) else 0.0


def _space_hi(space):
    return space.b if isinstance(space, Interval) else space.period


# --------------------------------------------------------------------------
# Finite orbit graph and terminal strongly connected components
# --------------------------------------------------------------------------

@dataclass
class OrbitGraph:
    n_nodes: int
    edges: np.ndarray  # rows (src, dst, gen)
    approximate: bool
    cell_width: float = 0.0

    def adjacency(self):
        adj = [set() for _ in range(self.n_nodes)]
        for src, dst, _ in self.edges:
            adj[int(src)].add(int(dst))
        return [sorted(s) for s in adj]

    def to_edge_list_text(self):
        return "\n".join(f"{int(s)} {int(d)} {int(g)}"
                         for s, d, g in self.edges)


def build_orbit_graph(system: GuidedSystem, cells: int) -> OrbitGraph:
    """Discretize the system into a finite directed multigraph.

    Interval/circle: nodes are equal cells; for each generator allowed on a
    cell, edges go to every cell its image overlaps with positive length
    (exact endpoint images for monotone maps, 9-point sampling otherwise).
    Finite graphs embed their edge tables directly.
    """
    space = system.space
    if isinstance(space, FiniteGraphSpace):
        rows = []
        for i, gen in enumerate(system.generators):
            for v in range(space.n_nodes):
                if system.guiding[i].distance(float(v), space)[0] \
                        <= system.tol_lambda:
                    continue
                rows.append((v, int(gen.table[v]), i))
        edges = np.array(rows, dtype=np.int64).reshape(-1, 3)
        return OrbitGraph(n_nodes=space.n_nodes, edges=edges,
                          approximate=False)
    if cells < 2:
        raise ValueError("cells must be >= 2")
    w = space.length / cells
    lo0 = _space_lo(space)
    tau = w * 1e-9
    approx = False
    rows = []
    for i, gen in enumerate(system.generators):
        for c in range(cells):
            clo, chi = lo0 + c * w, lo0 + (c + 1) * w
            if system.guiding[i].covers_interval(clo, chi,
                                                 system.tol_lambda):
                continue
            if gen.monotone is not None:
                e1 = float(np.atleast_1d(gen(np.array([clo])))[0])
                e2 = float(np.atleast_1d(gen(np.array([chi])))[0])
                ilo, ihi = min(e1, e2), max(e1, e2)
            else:
                approx = True
                img = np.asarray(gen(np.linspace(clo, chi, 9)), dtype=float)
                ilo, ihi = float(img.min()), float(img.max())
            for dst in _cells_overlapping(space, ilo, ihi, cells, w, lo0, tau):
                rows.append((c, dst, i))
    edges = np.array(rows, dtype=np.int64).reshape(-1, 3)
    return OrbitGraph(n_nodes=cells, edges=edges, approximate=approx,
                      cell_width=w)


def _cells_overlapping(space, ilo, ihi, cells, w, lo0, tau):
    """Cells meeting [ilo, ihi] with positive length (touching endpoints
    excluded); degenerate images map to the single containing cell."""
    if isinstance(space, CircleSpace):
        if ihi - ilo >= space.period:
            return list(range(cells))
        start = float(space.normalize(np.array([ilo]))[0])
        span = ihi - ilo
        ilo, ihi = start, start + span
    if ihi - ilo <= 2 * tau:
        mid = 0.5 * (ilo + ihi)
        k = int(math.floor((mid - lo0) / w))
        return [k % cells if isinstance(space, CircleSpace)
                else min(max(k, 0), cells - 1)]
    jlo = int(math.floor((ilo - lo0 + tau) / w))
    jhi = int(math.floor((ihi - lo0 - tau) / w))
    ks = range(jlo, jhi + 1)
    if isinstance(space, CircleSpace):
        return [k % cells for k in ks]
    return [min(max(k, 0), cells - 1) for k in ks]


def minimal_subsystems(graph: OrbitGraph) -> list:
    """Terminal strongly connected components, each sorted, ordered by
    smallest member. At least one is always returned for graphs whose
    every node has out-degree >= 1 (and singletons without self-loops are
    reported when a node has no outgoing edges at all)."""
    n = graph.n_nodes
    adj = graph.adjacency()
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack = []
    comp_id = [-1] * n
    comps = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            while pi < len(adj[v]):
                u = adj[v][pi]
                pi += 1
                if index[u] == -1:
                    work[-1] = (v, pi)
                    work.append((u, 0))
                    advanced = True
                    break
                if on_stack[u]:
                    low[v] = min(low[v], index[u])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                comp = []
                while True:
                    u = stack.pop()
                    on_stack[u] = False
                    comp_id[u] = len(comps)
                    comp.append(u)
                    if u == v:
                        break
                comps.append(sorted(comp))
            if work:
                p, _ = work[-1]
                low[p] = min(low[p], low[v])
    terminal = []
    for k, comp in enumerate(comps):
        members = set(comp)
        if all(comp_id[u] == k for v in comp for u in adj[v]):
            terminal.append(sorted(members))
    terminal.sort(key=lambda c: c[0])
    return terminal


# --------------------------------------------------------------------------
# Conjugacy verification
# --------------------------------------------------------------------------

@dataclass
class ConjugacyReport:
    map_defect: float
    guiding_defects: tuple
    inv_defect: float
    properness_checked: int
    properness_violations: int
    samples: int
    tol: float
    ok: bool


def verify_conjugacy(sys_a: GuidedSystem, sys_b: GuidedSystem, phi,
                     phi_inv, samples: int = 100, rng=None,
                     tol: float = 1e-9, n_orbits: int = 100,
                     orbit_len: int = 8) -> ConjugacyReport:
    """Check that phi intertwines the generators (max defect over samples),
    carries guiding sets onto guiding sets (sampled Hausdorff distance),
    and maps proper orbits to proper orbits."""
    if sys_a.n_generators != sys_b.n_generators:
        raise ValueError("systems must share the generator count")
    rng = np.random.default_rng(0) if rng is None else rng
    f = as_callable(phi)
    f_inv = as_callable(phi_inv)
    xs = sys_a.space.random(rng, samples)
    fx = np.asarray(f(xs), dtype=float)
    back = np.asarray(f_inv(fx), dtype=float)
    inv_defect = float(np.max(sys_a.space.metric(back, xs)))
    if inv_defect > tol:
        k = int(np.argmax(sys_a.space.metric(back, xs)))
        raise NotInvertible("phi_inv fails to invert phi",
                            point=float(xs[k]), defect=inv_defect)
    map_defect = 0.0
    for i in range(sys_a.n_generators):
        img_a = sys_a.space.normalize(
            np.asarray(sys_a.generators[i](xs), dtype=float))
        lhs = np.asarray(f(img_a), dtype=float)
        rhs = np.asarray(sys_b.generators[i](fx), dtype=float)
        d = sys_b.space.metric(sys_b.space.normalize(lhs),
                               sys_b.space.normalize(rhs))
        map_defect = max(map_defect, float(np.max(d)))
    guiding_defects = []
    for i in range(sys_a.n_generators):
        ga, gb = sys_a.guiding[i], sys_b.guiding[i]
        if ga.is_empty and gb.is_empty:
            guiding_defects.append(0.0)
            continue
        if ga.is_empty != gb.is_empty:
            guiding_defects.append(float("inf"))
            continue
        sa = np.asarray(f(ga.sample(33)), dtype=float)
        d1 = float(np.max(gb.distance(sa, sys_b.space)))
        sb = gb.sample(33)
        d2 = float(np.max(np.min(np.abs(
            sys_b.space.metric(sb[:, None], sa[None, :])), axis=1)))
        guiding_defects.append(max(d1, d2))
    violations = 0
    checked = 0
    pts = sys_a.space.random(rng, n_orbits)
    for _ in range(orbit_len):
        masks = np.column_stack([sys_a.allowed_mask(i, pts)
                                 for i in range(sys_a.n_generators)])
        counts = masks.sum(axis=1)
        live = counts > 0
        if not np.any(live):
            break
        # pick a random allowed generator per orbit
        pick = (rng.random(pts.size) * counts).astype(np.int64)
        chosen = np.full(pts.size, -1, dtype=np.int64)
        running = np.zeros(pts.size, dtype=np.int64)
        for i in range(sys_a.n_generators):
            sel = live & masks[:, i] & (running == pick)
            chosen[sel] = i
            running += masks[:, i]
        fx_pts = np.asarray(f(pts), dtype=float)
        nxt = pts.copy()
        for i in range(sys_a.n_generators):
            sel = chosen == i
            if not np.any(sel):
                continue
            checked += int(sel.sum())
            dist_b = sys_b.guiding[i].distance(fx_pts[sel], sys_b.space)
            violations += int(np.sum(dist_b <= 1e-12))
            nxt[sel] = sys_a.space.normalize(np.asarray(
                sys_a.generators[i](pts[sel]), dtype=float))
        pts = nxt
    max_guid = max(guiding_defects) if guiding_defects else 0.0
    ok = (map_defect <= tol and max_guid <= tol and violations == 0)
    return ConjugacyReport(map_defect=map_defect,
                           guiding_defects=tuple(guiding_defects),
                           inv_defect=inv_defect,
                           properness_checked=checked,
                           properness_violations=violations,
                           samples=samples, tol=tol, ok=ok)


# --------------------------------------------------------------------------
# Zero-band scanning (derivative roots -> guiding sets)
# --------------------------------------------------------------------------

def zero_band_guiding(fn, interval: Interval, tol: float = 1e-9,
                      grid_n: int = 8193) -> GuidingSet:
    """Roots of a nonnegative function as a union of closed intervals:
    contiguous sub-tolerance runs are widened to where fn crosses tol, and
    grid-local minima whose refined value dips below tol are included as
    tangential roots."""
    f = as_callable(fn)
    ts = np.linspace(interval.a, interval.b, grid_n)
    vs = np.asarray(f(ts), dtype=float)
    below = vs < tol
    bands = []

    def cross(lo, hi, rising):
        # fn - tol changes sign on [lo, hi]; bisect to the crossing
        flo = float(np.atleast_1d(f(np.array([lo])))[0]) - tol
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            fm = float(np.atleast_1d(f(np.array([mid])))[0]) - tol
            if (fm > 0) == (flo > 0):
                lo, flo = mid, fm
            else:
                hi = mid
        return 0.5 * (lo + hi)

    j = 0
    while j < grid_n:
        if not below[j]:
            j += 1
            continue
        k = j
        while k + 1 < grid_n and below[k + 1]:
            k += 1
        lo = ts[j] if j == 0 else cross(ts[j - 1], ts[j], rising=False)
        hi = ts[k] if k == grid_n - 1 else cross(ts[k], ts[k + 1], rising=True)
        bands.append((lo, hi))
        j = k + 1

    # tangential dips the grid may have straddled
    for j in range(1, grid_n - 1):
        if below[j - 1] or below[j] or below[j + 1]:
            continue
        if not (vs[j] <= vs[j - 1] and vs[j] <= vs[j + 1]):
            continue
        denom = vs[j - 1] - 2 * vs[j] + vs[j + 1]
        fitted = vs[j] if denom <= 0 else \
            vs[j] - (vs[j - 1] - vs[j + 1]) ** 2 / (8 * denom)
        if fitted >= tol and vs[j] >= 10 * tol and fitted >= 0.01 * vs[j]:
            continue
        lo, hi = ts[j - 1], ts[j + 1]
        tm, vm = _golden_min(f, lo, hi)
        if vm < tol:
            blo = cross(lo, tm, rising=False) if vs[j - 1] >= tol else lo
            bhi = cross(tm, hi, rising=True) if vs[j + 1] >= tol else hi
            bands.append((blo, bhi))

    bands.sort()
    merged = []
    for lo, hi in bands:
        if merged and lo <= merged[-1][1] + (ts[1] - ts[0]) * 1e-6:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return GuidingSet(merged)


def _golden_min(f, lo, hi, iters=200):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1 = float(np.atleast_1d(f(np.array([x1])))[0])
    f2 = float(np.atleast_1d(f(np.array([x2])))[0])
    for _ in range(iters):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = float(np.atleast_1d(f(np.array([x1])))[0])
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = float(np.atleast_1d(f(np.array([x2])))[0])
        if hi - lo < 1e-15 * (1 + abs(lo)):
            break
    xm = 0.5 * (lo + hi)
    return xm, float(np.atleast_1d(f(np.array([xm])))[0])
