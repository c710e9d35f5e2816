# How fine does the candidate grid need to be?  The sum-rate grows with the
# number of candidate points N_s and flattens out; at 28 GHz the grid step
# has to get well below a wavelength (about 1 cm) before the phase
# alignment of the PAs stops improving.

import time

import numpy as np

from pinchbeam import ScenarioConfig, run_sweep, sample_users

for N_s in (100, 1000, 10_000):
    cfg = ScenarioConfig(N_s=N_s)
    rates, t0 = [], time.perf_counter()
    for seed in range(5):
        rng = np.random.default_rng(seed)
        rates.append(run_sweep(cfg, sample_users(cfg, rng), "dl", "zf", rng=rng).sumrate)
    step = cfg.guide_length / (N_s - 1)
    print("N_s=%6d  step %.4f m (%.2f wavelengths)  mean ZF sum-rate %6.2f  [%.1fs]" % (
        N_s, step, step / cfg.wavelength, np.mean(rates), time.perf_counter() - t0))
