"""Germ processes and germ-grain random sets.

Two Gibbs models drive the experiments:

* mixture model: two components with point densities beta1, beta2 and a hard
  cross-component exclusion at distance r (no pair from different components
  closer than r);
* dual model: component 2 is confined to the r-neighbourhood of component 1
  (density beta1^n1 * beta2^n2 * 1{phi2 subset U_r(phi1)}).

Both are sampled by a birth-death Metropolis-Hastings chain started from the
empty configuration (default), or exactly by dominated
coupling-from-the-past.  Samplers work on the margin-extended window so the
rasterized sets are edge-effect free on the core window.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonConvergence
from .grid import REL_TOL, BinaryField, GridSpec
from .randfield import SeedKey


@dataclass
class PointPattern:
    """Finite planar point set with a component label (1 or 2)."""

    points: np.ndarray
    label: int
    window: GridSpec

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        if self.label not in (1, 2):
            raise ValueError("component label must be 1 or 2")

    @property
    def n(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class WrConfig:
    """Parameters and sampler settings for the two Gibbs models."""

    beta1: float
    beta2: float
    r: float
    mode: str = "mh"  # "mh" | "cftp"
    burn_in: int = 100_000
    sweeps: int = 1
    cftp_t0: float = 1.0
    cftp_max_doublings: int = 20

    def __post_init__(self):
        if min(self.beta1, self.beta2) < 0 or self.r <= 0:
            raise ValueError("betas must be non-negative and r positive")
        if self.mode not in ("mh", "cftp"):
            raise ValueError("sampler mode must be 'mh' or 'cftp'")
        if self.burn_in < 0 or self.sweeps < 1:
            raise ValueError("burn_in >= 0 and sweeps >= 1 required")


def sample_poisson(spec: GridSpec, intensity: float, key: SeedKey, label: int = 1) -> PointPattern:
    """Homogeneous Poisson pattern on the margin-extended window."""
    if intensity < 0:
        raise ValueError("intensity must be non-negative")
    lox, hix, loy, hiy = spec.extended_bounds()
    area = (hix - lox) * (hiy - loy)
    rng = key.rng()
    n = rng.poisson(intensity * area)
    pts = np.empty((n, 2))
    pts[:, 0] = lox + rng.random(n) * (hix - lox)
    pts[:, 1] = loy + rng.random(n) * (hiy - loy)
    return PointPattern(pts, label, spec)


def union_balls(pattern: PointPattern, radius: float, spec: GridSpec) -> BinaryField:
    """Rasterize the union of closed balls around the germs (pixel-centre
    rule).  Germs in the margin contribute, so the core window has no edge
    artefacts."""
    if radius <= 0:
        raise ValueError("grain radius must be positive")
    out = np.zeros(spec.shape, dtype=bool)
    h = spec.h
    r2 = radius * radius * (1.0 + REL_TOL)
    for px, py in pattern.points:
        ix_lo = max(0, int(np.floor((px - radius - spec.x_min) / h - 0.5)))
        ix_hi = min(spec.nx - 1, int(np.ceil((px + radius - spec.x_min) / h - 0.5)))
        iy_lo = max(0, int(np.floor((py - radius - spec.y_min) / h - 0.5)))
        iy_hi = min(spec.ny - 1, int(np.ceil((py + radius - spec.y_min) / h - 0.5)))
        if ix_lo > ix_hi or iy_lo > iy_hi:
            continue
        gx = spec.x_min + (np.arange(ix_lo, ix_hi + 1) + 0.5) * h
        gy = spec.y_min + (np.arange(iy_lo, iy_hi + 1) + 0.5) * h
        d2 = (gx[None, :] - px) ** 2 + (gy[:, None] - py) ** 2
        out[iy_lo : iy_hi + 1, ix_lo : ix_hi + 1] |= d2 <= r2
    return BinaryField(spec, out)


class _CellGrid:
    """Flat cell-list index over a rectangle; cell size >= r so a 3x3
    neighbourhood covers every disc of radius r."""

    def __init__(self, lox, hix, loy, hiy, r):
        self.lox, self.loy = lox, loy
        self.ncx = max(1, int((hix - lox) / r))
        self.ncy = max(1, int((hiy - loy) / r))
        self.csx = (hix - lox) / self.ncx
        self.csy = (hiy - loy) / self.ncy
        self.cells = [[] for _ in range(self.ncx * self.ncy)]

    def _cell(self, x, y):
        cx = int((x - self.lox) / self.csx)
        cy = int((y - self.loy) / self.csy)
        if cx >= self.ncx:
            cx = self.ncx - 1
        if cy >= self.ncy:
            cy = self.ncy - 1
        if cx < 0:
            cx = 0
        if cy < 0:
            cy = 0
        return cy * self.ncx + cx

    def insert(self, x, y):
        self.cells[self._cell(x, y)].append((x, y))

    def remove(self, x, y):
        self.cells[self._cell(x, y)].remove((x, y))

    def neighbours(self, x, y):
        cx = min(max(int((x - self.lox) / self.csx), 0), self.ncx - 1)
        cy = min(max(int((y - self.loy) / self.csy), 0), self.ncy - 1)
        cells = self.cells
        ncx = self.ncx
        for dy in (-1, 0, 1):
            yy = cy + dy
            if yy < 0 or yy >= self.ncy:
                continue
            base = yy * ncx
            for dx in (-1, 0, 1):
                xx = cx + dx
                if xx < 0 or xx >= ncx:
                    continue
                for p in cells[base + xx]:
                    yield p

    def any_within(self, x, y, r2) -> bool:
        for px, py in self.neighbours(x, y):
            if (px - x) ** 2 + (py - y) ** 2 <= r2:
                return True
        return False

    def count_within(self, x, y, r2, skip=None) -> int:
        n = 0
        for p in self.neighbours(x, y):
            if skip is not None and p == skip:
                continue
            if (p[0] - x) ** 2 + (p[1] - y) ** 2 <= r2:
                n += 1
        return n


class _Uniforms:
    """Blocked uniform stream; one rng.random() call per move is too slow."""

    def __init__(self, rng, block=65536):
        self.rng = rng
        self.block = block
        self.buf = rng.random(block)
        self.i = 0

    def take(self) -> float:
        if self.i >= self.block:
            self.buf = self.rng.random(self.block)
            self.i = 0
        v = self.buf[self.i]
        self.i += 1
        return v


class _ChainState:
    """Two labelled point lists with parallel cell indices."""

    def __init__(self, bounds, r):
        lox, hix, loy, hiy = bounds
        self.bounds = bounds
        self.area = (hix - lox) * (hiy - loy)
        self.pts = ([], [])
        self.grid = (_CellGrid(lox, hix, loy, hiy, r), _CellGrid(lox, hix, loy, hiy, r))

    def insert(self, comp, x, y):
        self.pts[comp].append((x, y))
        self.grid[comp].insert(x, y)

    def remove_at(self, comp, j):
        x, y = self.pts[comp][j]
        lst = self.pts[comp]
        lst[j] = lst[-1]
        lst.pop()
        self.grid[comp].remove(x, y)
        return x, y

    def counts(self):
        return len(self.pts[0]), len(self.pts[1])


def _mixture_move(state: _ChainState, betas, r2, u: _Uniforms) -> None:
    comp = 0 if u.take() < 0.5 else 1
    other = 1 - comp
    lox, hix, loy, hiy = state.bounds
    if u.take() < 0.5:
        x = lox + u.take() * (hix - lox)
        y = loy + u.take() * (hiy - loy)
        if state.grid[other].any_within(x, y, r2):
            return
        n = len(state.pts[comp])
        if u.take() * (n + 1) < betas[comp] * state.area:
            state.insert(comp, x, y)
    else:
        n = len(state.pts[comp])
        if n == 0:
            return
        j = int(u.take() * n)
        if j == n:
            j = n - 1
        if u.take() * betas[comp] * state.area < n:
            state.remove_at(comp, j)


def _dual_move(state: _ChainState, betas, r2, u: _Uniforms) -> None:
    comp = 0 if u.take() < 0.5 else 1
    lox, hix, loy, hiy = state.bounds
    if u.take() < 0.5:
        x = lox + u.take() * (hix - lox)
        y = loy + u.take() * (hiy - loy)
        if comp == 1 and not state.grid[0].any_within(x, y, r2):
            return  # component-2 point must sit in the cover of component 1
        n = len(state.pts[comp])
        if u.take() * (n + 1) < betas[comp] * state.area:
            state.insert(comp, x, y)
    else:
        n = len(state.pts[comp])
        if n == 0:
            return
        j = int(u.take() * n)
        if j == n:
            j = n - 1
        if comp == 0:
            # removing a component-1 germ must keep every nearby
            # component-2 point covered by another component-1 germ
            x, y = state.pts[0][j]
            for qx, qy in state.grid[1].neighbours(x, y):
                if (qx - x) ** 2 + (qy - y) ** 2 <= r2:
                    if state.grid[0].count_within(qx, qy, r2, skip=(x, y)) == 0:
                        return
        if u.take() * betas[comp] * state.area < n:
            state.remove_at(comp, j)


def _run_chain(cfg: WrConfig, spec: GridSpec, key: SeedKey, move, n_moves: int) -> _ChainState:
    bounds = spec.extended_bounds()
    state = _ChainState(bounds, cfg.r)
    u = _Uniforms(key.rng())
    betas = (cfg.beta1, cfg.beta2)
    r2 = cfg.r * cfg.r
    for _ in range(n_moves):
        move(state, betas, r2, u)
    return state


def _state_to_patterns(state: _ChainState, spec: GridSpec) -> tuple[PointPattern, PointPattern]:
    p1 = np.array(state.pts[0], dtype=np.float64).reshape(-1, 2)
    p2 = np.array(state.pts[1], dtype=np.float64).reshape(-1, 2)
    return PointPattern(p1, 1, spec), PointPattern(p2, 2, spec)


def sample_wr_mixture(cfg: WrConfig, spec: GridSpec, key: SeedKey):
    """One draw of the mixture model on the extended window.

    MH mode runs burn_in + sweeps birth-death moves from the empty state;
    cftp mode is exact via dominated coupling-from-the-past.
    """
    if cfg.mode == "cftp":
        return _cftp_mixture(cfg, spec, key)
    state = _run_chain(cfg, spec, key, _mixture_move, cfg.burn_in + cfg.sweeps)
    return _state_to_patterns(state, spec)


def sample_dual_wr(cfg: WrConfig, spec: GridSpec, key: SeedKey):
    """One draw of the dual model on the extended window."""
    if cfg.mode == "cftp":
        return _cftp_dual(cfg, spec, key)
    state = _run_chain(cfg, spec, key, _dual_move, cfg.burn_in + cfg.sweeps)
    return _state_to_patterns(state, spec)


def chain_count_samples(
    cfg: WrConfig, spec: GridSpec, key: SeedKey, n_samples: int, model: str = "mixture"
) -> np.ndarray:
    """Record (n1, n2) every cfg.sweeps moves after burn-in; used to compare
    the chain against the exact rejection sampler on small windows."""
    move = _mixture_move if model == "mixture" else _dual_move
    bounds = spec.extended_bounds()
    state = _ChainState(bounds, cfg.r)
    u = _Uniforms(key.rng())
    betas = (cfg.beta1, cfg.beta2)
    r2 = cfg.r * cfg.r
    for _ in range(cfg.burn_in):
        move(state, betas, r2, u)
    out = np.empty((n_samples, 2), dtype=np.int64)
    for k in range(n_samples):
        for _ in range(cfg.sweeps):
            move(state, betas, r2, u)
        out[k, 0], out[k, 1] = state.counts()
    return out


# ----------------------------------------------------------------------
# exact rejection samplers (cost exponential in the window size; reference
# oracles for small windows only)


def rejection_mixture_counts(
    cfg: WrConfig, spec: GridSpec, rng: np.random.Generator, n_samples: int, batch: int = 8192
) -> np.ndarray:
    """Joint count law of the mixture model: propose two independent Poisson
    patterns, accept when no cross pair is closer than r."""
    lox, hix, loy, hiy = spec.extended_bounds()
    area = (hix - lox) * (hiy - loy)
    r2 = cfg.r * cfg.r
    out = np.empty((n_samples, 2), dtype=np.int64)
    filled = 0
    while filled < n_samples:
        n1 = rng.poisson(cfg.beta1 * area, batch)
        n2 = rng.poisson(cfg.beta2 * area, batch)
        m1, m2 = int(n1.max()), int(n2.max())
        p1 = rng.random((batch, max(m1, 1), 2))
        p2 = rng.random((batch, max(m2, 1), 2))
        p1[..., 0] = lox + p1[..., 0] * (hix - lox)
        p1[..., 1] = loy + p1[..., 1] * (hiy - loy)
        p2[..., 0] = lox + p2[..., 0] * (hix - lox)
        p2[..., 1] = loy + p2[..., 1] * (hiy - loy)
        d2 = ((p1[:, :, None, :] - p2[:, None, :, :]) ** 2).sum(axis=3)
        valid1 = np.arange(max(m1, 1))[None, :] < n1[:, None]
        valid2 = np.arange(max(m2, 1))[None, :] < n2[:, None]
        pair_valid = valid1[:, :, None] & valid2[:, None, :]
        d2 = np.where(pair_valid, d2, np.inf)
        accept = d2.reshape(batch, -1).min(axis=1) > r2
        take = min(int(accept.sum()), n_samples - filled)
        idx = np.flatnonzero(accept)[:take]
        out[filled : filled + take, 0] = n1[idx]
        out[filled : filled + take, 1] = n2[idx]
        filled += take
    return out


def rejection_dual_counts(
    cfg: WrConfig, spec: GridSpec, rng: np.random.Generator, n_samples: int, batch: int = 8192
) -> np.ndarray:
    """Joint count law of the dual model: accept when every component-2
    point lies within r of a component-1 point."""
    lox, hix, loy, hiy = spec.extended_bounds()
    area = (hix - lox) * (hiy - loy)
    r2 = cfg.r * cfg.r
    out = np.empty((n_samples, 2), dtype=np.int64)
    filled = 0
    while filled < n_samples:
        n1 = rng.poisson(cfg.beta1 * area, batch)
        n2 = rng.poisson(cfg.beta2 * area, batch)
        m1, m2 = int(n1.max()), int(n2.max())
        p1 = rng.random((batch, max(m1, 1), 2))
        p2 = rng.random((batch, max(m2, 1), 2))
        p1[..., 0] = lox + p1[..., 0] * (hix - lox)
        p1[..., 1] = loy + p1[..., 1] * (hiy - loy)
        p2[..., 0] = lox + p2[..., 0] * (hix - lox)
        p2[..., 1] = loy + p2[..., 1] * (hiy - loy)
        d2 = ((p2[:, :, None, :] - p1[:, None, :, :]) ** 2).sum(axis=3)
        valid1 = np.arange(max(m1, 1))[None, :] < n1[:, None]
        d2 = np.where(valid1[:, None, :], d2, np.inf)
        covered = d2.min(axis=2) <= r2
        relevant = np.arange(max(m2, 1))[None, :] < n2[:, None]
        accept = np.all(covered | ~relevant, axis=1)
        take = min(int(accept.sum()), n_samples - filled)
        idx = np.flatnonzero(accept)[:take]
        out[filled : filled + take, 0] = n1[idx]
        out[filled : filled + take, 1] = n2[idx]
        filled += take
    return out


# ----------------------------------------------------------------------
# dominated coupling-from-the-past
#
# Dominating process per component: spatial M/M/infinity with birth intensity
# lambda*_i and unit death rate (stationary law Poisson(lambda*_i)).  The
# path is generated backwards from 0 (the stationary process is reversible),
# events keep their marks across restarts, and upper/lower processes evolve
# forward with the anti-monotone (cross-over) update: cross-component
# inhibition means a birth enters the upper chain when the *lower* chain of
# the interacting component permits it, and vice versa.  Coalescence of
# upper and lower at time 0 yields an exact draw.


@dataclass
class _Event:
    t: float
    kind: str  # "birth" | "death"
    pid: int
    comp: int = 0
    x: float = 0.0
    y: float = 0.0
    mark: np.ndarray | None = None


class _BackwardPath:
    """Lazily extended backward trajectory of the dominating process."""

    def __init__(self, bounds, rates, rng, mark_fn=None):
        self.bounds = bounds
        self.rates = rates  # per-component birth intensity lambda*_i
        self.rng = rng
        self.mark_fn = mark_fn
        lox, hix, loy, hiy = bounds
        self.area = (hix - lox) * (hiy - loy)
        self.birth_rate = [rate * self.area for rate in rates]
        self.total_birth = sum(self.birth_rate)
        self.events: list[_Event] = []  # recorded in decreasing time order
        self.state: dict[int, tuple[int, float, float]] = {}
        self.next_id = 0
        self.time = 0.0
        for comp, rate in enumerate(rates):
            n = rng.poisson(rate * self.area)
            for _ in range(n):
                self._add_point(comp)

    def _add_point(self, comp):
        lox, hix, loy, hiy = self.bounds
        x = lox + self.rng.random() * (hix - lox)
        y = loy + self.rng.random() * (hiy - loy)
        self.state[self.next_id] = (comp, x, y)
        self.next_id += 1
        return self.next_id - 1

    def extend_to(self, horizon: float):
        """Generate the path backwards until time reaches `horizon`.

        A waiting time that crosses the horizon is discarded and the clock
        parked at the horizon: exponential waits are memoryless, so the
        continuation below is a fresh draw while everything already
        generated above the horizon stays fixed (required for restarts).
        """
        rng = self.rng
        while self.time > horizon:
            total = self.total_birth + len(self.state)
            t_next = self.time - rng.exponential(1.0 / total)
            if t_next <= horizon:
                self.time = horizon
                break
            self.time = t_next
            if rng.random() * total < self.total_birth:
                # backward birth = forward death of a point alive earlier
                u = rng.random() * self.total_birth
                comp = 0 if u < self.birth_rate[0] else 1
                pid = self._add_point(comp)
                self.events.append(_Event(self.time, "death", pid))
            else:
                # backward death = forward birth; marks are attached now and
                # reused by every restart
                pid = list(self.state.keys())[int(rng.random() * len(self.state))]
                comp, x, y = self.state.pop(pid)
                mark = self.mark_fn(x, y) if self.mark_fn is not None else None
                self.events.append(_Event(self.time, "birth", pid, comp, x, y, mark))


def _run_cftp(path: _BackwardPath, horizon, accept_upper, accept_lower, grids_factory):
    """One forward sweep from `horizon`; returns the coalesced state or None.

    accept_upper(ev, lower_grids) and accept_lower(ev, upper_grids) implement
    the cross-over update rule of the model.
    """
    upper, lower = grids_factory(), grids_factory()
    up_pts: dict[int, tuple[int, float, float]] = {}
    lo_pts: dict[int, tuple[int, float, float]] = {}
    for pid, (comp, x, y) in path.state.items():
        up_pts[pid] = (comp, x, y)
        upper[comp].insert(x, y)
    coalesced = len(up_pts) == 0
    for ev in reversed(path.events):
        if ev.t <= horizon:
            continue
        if ev.kind == "death":
            if ev.pid in up_pts:
                comp, x, y = up_pts.pop(ev.pid)
                upper[comp].remove(x, y)
            if ev.pid in lo_pts:
                comp, x, y = lo_pts.pop(ev.pid)
                lower[comp].remove(x, y)
        else:
            if accept_upper(ev, lower):
                up_pts[ev.pid] = (ev.comp, ev.x, ev.y)
                upper[ev.comp].insert(ev.x, ev.y)
            if accept_lower(ev, upper):
                lo_pts[ev.pid] = (ev.comp, ev.x, ev.y)
                lower[ev.comp].insert(ev.x, ev.y)
        if not coalesced and len(up_pts) == len(lo_pts):
            coalesced = True
    if coalesced and len(up_pts) == len(lo_pts):
        return up_pts
    return None


def _cftp_loop(cfg: WrConfig, path: _BackwardPath, accept_upper, accept_lower, grids_factory):
    horizon = -cfg.cftp_t0
    for _ in range(cfg.cftp_max_doublings + 1):
        path.extend_to(horizon)
        result = _run_cftp(path, horizon, accept_upper, accept_lower, grids_factory)
        if result is not None:
            return result
        horizon *= 2.0
    raise NonConvergence(
        "dominated CFTP did not coalesce within %g time units" % (-horizon / 2.0)
    )


def _cftp_mixture(cfg: WrConfig, spec: GridSpec, key: SeedKey):
    bounds = spec.extended_bounds()
    rng = key.rng()
    path = _BackwardPath(bounds, (cfg.beta1, cfg.beta2), rng)
    r2 = cfg.r * cfg.r
    lox, hix, loy, hiy = bounds

    def factory():
        return (_CellGrid(lox, hix, loy, hiy, cfg.r), _CellGrid(lox, hix, loy, hiy, cfg.r))

    def accept_upper(ev, lower):
        return not lower[1 - ev.comp].any_within(ev.x, ev.y, r2)

    def accept_lower(ev, upper):
        return not upper[1 - ev.comp].any_within(ev.x, ev.y, r2)

    final = _cftp_loop(cfg, path, accept_upper, accept_lower, factory)
    pts = ([], [])
    for comp, x, y in final.values():
        pts[comp].append((x, y))
    p1 = np.array(pts[0], dtype=np.float64).reshape(-1, 2)
    p2 = np.array(pts[1], dtype=np.float64).reshape(-1, 2)
    return PointPattern(p1, 1, spec), PointPattern(p2, 2, spec)


def _cftp_dual(cfg: WrConfig, spec: GridSpec, key: SeedKey):
    """Exact dual-model draw: component 1 is the marginal area-interaction
    process (repulsive; conditional intensity beta1 * exp(beta2 * fresh
    area)), sampled by dominated CFTP; component 2 given component 1 is a
    Poisson(beta2) pattern thinned to the r-cover of component 1.

    The acceptance probability lambda(u; phi)/lambda* equals the probability
    that a Poisson(beta2) mark set on B(u, r) avoids both the r-cover of phi
    and the window complement, so each birth event carries such a mark set
    and acceptance reduces to distance checks (exact, no area computation).
    """
    bounds = spec.extended_bounds()
    rng = key.rng()
    lox, hix, loy, hiy = bounds
    r = cfg.r
    r2 = r * r
    lam_star = cfg.beta1 * float(np.exp(cfg.beta2 * np.pi * r2))

    def mark_fn(x, y):
        # Poisson(beta2) points in the closed disc B((x, y), r)
        k = rng.poisson(cfg.beta2 * np.pi * r2)
        rad = r * np.sqrt(rng.random(k))
        ang = 2.0 * np.pi * rng.random(k)
        return np.column_stack([x + rad * np.cos(ang), y + rad * np.sin(ang)])

    path = _BackwardPath(bounds, (lam_star,), rng, mark_fn=mark_fn)

    def factory():
        return (_CellGrid(lox, hix, loy, hiy, r),)

    def mark_clear(mark, grids) -> bool:
        for qx, qy in mark:
            if qx < lox or qx > hix or qy < loy or qy > hiy:
                return False  # mark mass outside the window never thins
            if grids[0].any_within(qx, qy, r2):
                return False
        return True

    def accept_upper(ev, lower):
        return mark_clear(ev.mark, lower)

    def accept_lower(ev, upper):
        return mark_clear(ev.mark, upper)

    final = _cftp_loop(cfg, path, accept_upper, accept_lower, factory)
    germs1 = np.array([(x, y) for _, x, y in final.values()], dtype=np.float64).reshape(-1, 2)

    # exact conditional draw of component 2
    n = rng.poisson(cfg.beta2 * (hix - lox) * (hiy - loy))
    cand = np.empty((n, 2))
    cand[:, 0] = lox + rng.random(n) * (hix - lox)
    cand[:, 1] = loy + rng.random(n) * (hiy - loy)
    if germs1.size:
        d2 = ((cand[:, None, :] - germs1[None, :, :]) ** 2).sum(axis=2)
        keep = d2.min(axis=1) <= r2
    else:
        keep = np.zeros(n, dtype=bool)
    return PointPattern(germs1, 1, spec), PointPattern(cand[keep], 2, spec)
