"""Element-wise sequential optimisation of pinching-antenna positions.

Each antenna is moved in turn to the best point of a uniform candidate grid
along its waveguide while all other antennas stay fixed.  The baseband
beamformer never has to be iterated: for every candidate position the
closed-form objective of the chosen linear scheme is evaluated directly.
"""

from dataclasses import dataclass, field
import logging
import math
import time

import numpy as np

from . import downlink, uplink
from .channel import (
    attenuation_ul,
    check_layout,
    derive_wavenumbers,
    make_layout,
    pi_coefficient,
)
from .errors import InvalidConfigError, PinchError, SchemeInfeasibleError

log = logging.getLogger(__name__)

# candidates scored per objective call; keeps the work arrays cache-sized
CHUNK = 8192


@dataclass(frozen=True, eq=False)
class CandidateGrid:
    """``num`` uniformly spaced candidates on ``[origin_m, origin_m + length]``."""

    origin: np.ndarray
    length: float
    num: int

    @property
    def step(self):
        return self.length / (self.num - 1)

    def positions(self, m):
        return np.linspace(self.origin[m], self.origin[m] + self.length, self.num)


def build_grid(config):
    if config.N_s < 2:
        raise InvalidConfigError("N_s", "need at least two candidate points")
    return CandidateGrid(np.full(config.M, config.feed_point), config.guide_length, config.N_s)


def exclusion_indices(grid, layout, m, n, min_spacing):
    """Grid indices lying within ``min_spacing`` of any other PA on guide m.

    For each other antenna the closed index range
    ``[floor((p - o - Delta)/delta), ceil((p - o + Delta)/delta)]`` is
    removed, which is conservative: every surviving point keeps at least
    ``Delta`` from all other antennas.
    """
    step = grid.step
    excluded = []
    for n2 in range(layout.N):
        if n2 == n:
            continue
        rel = layout.P[m, n2] - grid.origin[m]
        lo = max(math.floor((rel - min_spacing) / step), 0)
        hi = min(math.ceil((rel + min_spacing) / step), grid.num - 1)
        if lo <= hi:
            excluded.append(np.arange(lo, hi + 1))
    if not excluded:
        return np.empty(0, dtype=int)
    return np.unique(np.concatenate(excluded))


def update_position(objective, candidates, excluded, incumbent):
    """Best feasible candidate, or the incumbent if nothing is strictly better.

    ``objective`` maps an array of positions to an array of scores.  The
    incumbent is scored first, so ``np.argmax`` keeps it on ties and
    otherwise breaks ties toward the smallest grid index.  Returns
    ``(position, score)``.
    """
    feasible = np.delete(np.asarray(candidates, float), excluded)
    points = np.concatenate([[incumbent], feasible])
    scores = np.concatenate([_score_chunk(objective, points[i:i + CHUNK]) for i in range(0, len(points), CHUNK)])
    bad = ~np.isfinite(scores)
    if np.any(bad):
        log.debug("skipping %d candidate(s) with non-finite objective", int(bad.sum()))
        scores = np.where(bad, -np.inf, scores)
    best = int(np.argmax(scores))
    return float(points[best]), float(scores[best])


def _score_chunk(objective, points):
    try:
        return np.asarray(objective(points), float)
    except (PinchError, ArithmeticError, np.linalg.LinAlgError) as exc:
        log.warning("batched objective failed (%s); scoring candidates one by one", exc)
        return np.array([_score_one(objective, x) for x in points])


def _score_one(objective, x):
    try:
        return float(np.asarray(objective(np.array([x])), float)[0])
    except (PinchError, ArithmeticError, np.linalg.LinAlgError):
        return -np.inf


def init_layout(config, rng):
    """Random feasible layout: sequential uniform draws with rejection.

    A guide that collects more than ``100 N`` rejections falls back to
    equispaced antennas over the full span.
    """
    o, L, delta, N = config.feed_point, config.guide_length, config.min_spacing, config.N
    slack = 1e-9 * max(L, delta)
    P = np.empty((config.M, N))
    for m in range(config.M):
        placed, rejections = [], 0
        while len(placed) < N and rejections <= 100 * N:
            x = rng.uniform(o, o + L)
            if all(abs(x - p) >= delta for p in placed):
                placed.append(x)
            else:
                rejections += 1
        if len(placed) < N:
            placed = [o + L / 2] if N == 1 else list(o + L * np.arange(N) / (N - 1))
        P[m] = np.sort(placed)
    layout = make_layout(config, P)
    assert layout.is_feasible(config.min_spacing - slack, config.guide_length)
    return layout


@dataclass
class SweepTrace:
    """Objective history of one optimiser run (bit/s/Hz)."""

    initial: float
    values: list = field(default_factory=list)  # after every single-PA update
    sweep_values: list = field(default_factory=list)  # after every full sweep
    sweeps: int = 0
    converged: bool = False
    walltime: float = 0.0


@dataclass(frozen=True, eq=False)
class SweepResult:
    layout: object
    trace: SweepTrace
    beamformer: object
    sumrate: float


class _LinkModel:
    """Mutable per-run bookkeeping of PA coefficients for one direction."""

    def __init__(self, config, users, layout, direction, scheme):
        self.config = config
        self.users = users
        self.direction = direction
        self.scheme = scheme
        self.waves = derive_wavenumbers(config)
        self.P = np.array(layout.P)
        self.feed = np.array(layout.feed)
        self.y = np.array(layout.y)
        self.pis = np.stack(
            [self._pi(m, self.P[m]) for m in range(config.M)], axis=1
        )  # (K, M, N)
        if direction == "ul":
            self.zeta = attenuation_ul(self.P, self.feed[:, None], config.kappa)
            self.powers = np.full(config.K, config.P_u)

    def _pi(self, m, x):
        return pi_coefficient(self.users, x, self.feed[m], self.y[m], self.config, self.direction, self.waves)

    @property
    def columns(self):
        return self.pis.sum(axis=2)

    @property
    def noise(self):
        return self.config.sigma2 * self.zeta.sum(axis=1)

    @property
    def H(self):
        cols = self.pis.sum(axis=2)
        return cols if self.direction == "dl" else cols.conj().T

    def sumrate(self):
        cfg = self.config
        if self.direction == "dl":
            return downlink.dl_sumrate(self.H, self.scheme, cfg.P_d, cfg.sigma2)
        return uplink.ul_sumrate(self.H, self.scheme, self.powers, np.diag(self.noise))

    def state(self, m):
        cfg = self.config
        if self.direction == "dl":
            return downlink.build_dl_state(self.scheme, self.columns, m, cfg.P_d, cfg.sigma2)
        return uplink.build_ul_state(self.scheme, self.columns, self.noise, m, self.powers)

    def objective(self, state, m, n):
        """Candidate positions of PA (m, n) -> objective scores."""
        rest = self.pis[:, m, :].sum(axis=1) - self.pis[:, m, n]
        if self.direction == "dl":

            def score(x):
                return downlink.dl_objective(state, self._pi(m, x) + rest[:, None])

            return score
        cfg = self.config
        zeta_rest = self.zeta[m].sum() - self.zeta[m, n]

        def score(x):
            U = self._pi(m, x) + rest[:, None]
            s = cfg.sigma2 * (attenuation_ul(x, self.feed[m], cfg.kappa) + zeta_rest)
            return uplink.ul_objective(state, U, s)

        return score

    def move(self, m, n, x):
        self.P[m, n] = x
        self.pis[:, m, n] = self._pi(m, np.array([x]))[:, 0]
        if self.direction == "ul":
            self.zeta[m, n] = attenuation_ul(x, self.feed[m], self.config.kappa)

    def layout(self):
        return make_layout(self.config, self.P)

    def beamformer(self):
        cfg = self.config
        if self.direction == "dl":
            return downlink.dl_beamformer(self.scheme, self.H, cfg.P_d, cfg.sigma2)
        return uplink.ul_combiner(self.scheme, self.H, self.powers, np.diag(self.noise))


def _check_scheme(config, direction, scheme):
    schemes = downlink.SCHEMES if direction == "dl" else uplink.SCHEMES if direction == "ul" else None
    if schemes is None:
        raise ValueError(f"direction must be 'dl' or 'ul', got {direction!r}")
    if scheme not in schemes:
        raise ValueError(f"scheme {scheme!r} not available for direction {direction!r}")
    if scheme == "zf" and config.K > config.M:
        raise SchemeInfeasibleError(f"zero-forcing needs K <= M, got K={config.K}, M={config.M}")


def run_sweep(config, users, direction, scheme, layout=None, rng=None, grid=None):
    """Optimise all PA positions for one link direction and linear scheme.

    Waveguides are visited in ascending order and, within a guide, antennas
    in ascending order.  Full sweeps repeat until the relative sum-rate gain
    of a sweep drops below ``config.rel_tol`` or ``config.max_sweeps`` is
    reached.  A move is only kept if the directly evaluated sum-rate does
    not drop, so the trace is non-decreasing.
    """
    _check_scheme(config, direction, scheme)
    start = time.perf_counter()
    if layout is None:
        layout = init_layout(config, rng if rng is not None else np.random.default_rng(config.seed))
    check_layout(layout, config)
    grid = grid or build_grid(config)
    model = _LinkModel(config, np.asarray(users, float), layout, direction, scheme)

    current = model.sumrate()
    trace = SweepTrace(initial=current)
    for _ in range(config.max_sweeps):
        sweep_start = current
        for m in range(config.M):
            state = model.state(m)
            candidates = grid.positions(m)
            for n in range(config.N):
                incumbent = model.P[m, n]
                excluded = exclusion_indices(grid, model.layout(), m, n, config.min_spacing)
                x, _ = update_position(model.objective(state, m, n), candidates, excluded, incumbent)
                if x != incumbent:
                    model.move(m, n, x)
                    value = model.sumrate()
                    if value < current:
                        model.move(m, n, incumbent)
                    else:
                        current = value
                trace.values.append(current)
        trace.sweeps += 1
        trace.sweep_values.append(current)
        gain = (current - sweep_start) / max(abs(sweep_start), np.finfo(float).tiny)
        if gain < config.rel_tol:
            trace.converged = True
            break
    trace.walltime = time.perf_counter() - start
    return SweepResult(model.layout(), trace, model.beamformer(), current)
