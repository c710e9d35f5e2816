"""Oracle-equivalence checks that can run on any installation.

Each check compares a fast path of the library against a slow, direct
computation on random instances and reports the worst relative error.
"""

from dataclasses import dataclass

import numpy as np

from . import downlink, uplink
from .channel import effective_channel, free_space_matrix, guide_matrix, pa_coordinates, sample_users
from .config import ScenarioConfig
from .optimizer import _LinkModel, init_layout
from .rankone import CachedInverse, sherman_morrison_apply, trace_inverse_rank1, woodbury_M

OBJECTIVES = (("dl", "mrt"), ("dl", "zf"), ("dl", "mmse"), ("ul", "mrc"), ("ul", "zf"), ("ul", "mmse"))


@dataclass(frozen=True)
class CheckResult:
    name: str
    error: float
    tol: float

    @property
    def ok(self):
        return bool(self.error <= self.tol)

    def line(self):
        return f"{'PASS' if self.ok else 'FAIL'}  {self.name:<34} max rel err {self.error:.2e} (tol {self.tol:.0e})"


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), np.finfo(float).tiny)))


def _crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def objective_scores(model, m, n, xs):
    """Objective of PA (m, n) at positions ``xs``, shifted to the true sum-rate."""
    state = model.state(m)
    scores = model.objective(state, m, n)(xs)
    if model.direction == "dl" and model.scheme == "zf":
        return downlink.zf_sumrate(state, scores, model.config.K)
    if model.direction == "ul" and model.scheme == "mmse":
        return scores + state.log_constant
    return scores


def pipeline_rates(model, m, n, xs):
    """Full-pipeline sum-rate with PA (m, n) moved to each of ``xs``."""
    old = model.P[m, n]
    out = []
    for x in xs:
        model.move(m, n, x)
        out.append(model.sumrate())
    model.move(m, n, old)
    return np.array(out)


def check_objectives(instances=100, points=5, seed=0, config=None):
    """Element-wise objectives against the full pipeline, one result per scheme."""
    config = config or ScenarioConfig()
    rng = np.random.default_rng(seed)
    worst = dict.fromkeys(OBJECTIVES, 0.0)
    for _ in range(instances):
        users = sample_users(config, rng)
        layout = init_layout(config, rng)
        m, n = int(rng.integers(config.M)), int(rng.integers(config.N))
        xs = rng.uniform(config.feed_point, config.feed_point + config.guide_length, points)
        for direction, scheme in OBJECTIVES:
            model = _LinkModel(config, users, layout, direction, scheme)
            err = _rel(objective_scores(model, m, n, xs), pipeline_rates(model, m, n, xs))
            worst[direction, scheme] = max(worst[direction, scheme], err)
    return [CheckResult(f"objective {d}/{s}", e, 1e-8) for (d, s), e in worst.items()]


def check_rankone(instances=1000, seed=0):
    rng = np.random.default_rng(seed)
    errs = {"sherman-morrison": 0.0, "trace update": 0.0, "woodbury": 0.0}
    for _ in range(instances):
        K = int(rng.integers(1, 9))
        X = _crandn(rng, K, K + 2)
        A = X @ X.conj().T + 0.1 * np.eye(K)
        u = _crandn(rng, K)
        cache = CachedInverse.from_matrix(A, with_square=True)
        direct = np.linalg.inv(A + np.outer(u, u.conj()))
        scale = np.linalg.norm(direct)
        errs["sherman-morrison"] = max(errs["sherman-morrison"],
                                       np.linalg.norm(sherman_morrison_apply(cache, u) - direct) / scale)
        errs["trace update"] = max(errs["trace update"], _rel(trace_inverse_rank1(cache, u), np.trace(direct).real))
        M = int(rng.integers(1, 9))
        H = _crandn(rng, K, M)
        rho = float(10 ** rng.uniform(-2, 2))
        ref = np.linalg.inv(rho * H.conj().T @ H + np.eye(M))
        errs["woodbury"] = max(errs["woodbury"], np.linalg.norm(woodbury_M(H, rho) - ref) / np.linalg.norm(ref))
    return [CheckResult(name, e, 1e-9) for name, e in errs.items()]


def check_closed_forms(instances=200, seed=0, config=None):
    config = config or ScenarioConfig()
    rng = np.random.default_rng(seed)
    errs = dict.fromkeys(["sinr dl/mrt", "sinr dl/zf", "sinr dl/mmse", "sinr ul/mrc", "sinr ul/zf", "rate ul/mmse"], 0.0)
    sylvester = 0.0
    for _ in range(instances):
        users = sample_users(config, rng)
        layout = init_layout(config, rng)
        H = effective_channel(users, layout, config, "dl").H
        P, s2 = config.P_d, config.sigma2
        for scheme, closed in (("mrt", downlink.sinr_mrt_closed), ("zf", downlink.sinr_zf_closed),
                               ("mmse", downlink.sinr_mmse_closed)):
            W = downlink.dl_beamformer(scheme, H, P, s2).W
            ref = downlink.sinr_dl_direct(H, W, s2)
            errs[f"sinr dl/{scheme}"] = max(errs[f"sinr dl/{scheme}"], _rel(closed(H, P, s2) * np.ones_like(ref), ref))
        ch = effective_channel(users, layout, config, "ul")
        Hu, R = ch.H, ch.noise_cov
        powers = np.full(config.K, config.P_u)
        for scheme, closed in (("mrc", uplink.sinr_mrc_closed), ("zf", uplink.sinr_zf_closed)):
            V = uplink.ul_combiner(scheme, Hu, powers, R).V
            ref = uplink.sinr_ul_direct(Hu, V, powers, R)
            errs[f"sinr ul/{scheme}"] = max(errs[f"sinr ul/{scheme}"], _rel(closed(Hu, powers, R), ref))
        V = uplink.mmse_combiner(Hu, powers, R).V
        ref = np.log2(1 + uplink.sinr_ul_direct(Hu, V, powers, R))
        rates = uplink.ul_rate_mmse_det(Hu, powers, R)
        errs["rate ul/mmse"] = max(errs["rate ul/mmse"], _rel(rates.full, ref))
        sylvester = max(sylvester, _rel(rates.reduced, rates.full))
    out = [CheckResult(name, e, 1e-10) for name, e in errs.items()]
    out.append(CheckResult("sylvester det form", sylvester, 1e-8))
    return out


def check_layout_path(instances=50, seed=0, config=None):
    """Vectorised effective channel against the explicit G-matrix product."""
    config = config or ScenarioConfig()
    rng = np.random.default_rng(seed)
    err = 0.0
    for _ in range(instances):
        users = sample_users(config, rng)
        layout = init_layout(config, rng)
        h = free_space_matrix(users, pa_coordinates(layout), config)
        ref = h @ guide_matrix(layout, config, "dl")
        fast = effective_channel(users, layout, config, "dl").H
        err = max(err, np.linalg.norm(fast - ref) / np.linalg.norm(ref))
    return [CheckResult("effective channel", err, 1e-10)]


def run_all(quick=False):
    """Run every check; ``quick`` shrinks the instance counts."""
    scale = 10 if quick else 1
    results = []
    results += check_layout_path(50 // scale)
    results += check_rankone(1000 // scale)
    results += check_closed_forms(200 // scale)
    results += check_objectives(100 // scale, config=ScenarioConfig(N_s=1000))
    return results
