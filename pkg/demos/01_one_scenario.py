# One random drop of the default scenario: users, a random PA layout,
# then element-wise optimisation of the PA positions for each scheme.

import numpy as np

from pinchbeam import ScenarioConfig, effective_channel, init_layout, run_sweep, sample_users
from pinchbeam.hmimo import baseline_sumrate
from pinchbeam.downlink import dl_sumrate

cfg = ScenarioConfig(N_s=2000)  # coarser grid than the default 1e4, runs in seconds
rng = np.random.default_rng(7)
users = sample_users(cfg, rng)
layout = init_layout(cfg, rng)

print("users (x, y):")
print(np.round(users[:, :2], 2))
print("waveguide ordinates:", cfg.guide_y())
print("wavelength %.4f m, min PA spacing %.4f m" % (cfg.wavelength, cfg.min_spacing))

# sum-rate before any optimisation
H = effective_channel(users, layout, cfg, "dl").H
for scheme in ("mrt", "zf", "mmse"):
    print("random layout, dl %-4s %6.2f bit/s/Hz" % (scheme, dl_sumrate(H, scheme, cfg.P_d, cfg.sigma2)))

# optimise; every scheme starts from the same layout
for direction, schemes in (("dl", ("mrt", "zf", "mmse")), ("ul", ("mrc", "zf", "mmse"))):
    for scheme in schemes:
        res = run_sweep(cfg, users, direction, scheme, layout=layout)
        fixed = baseline_sumrate(cfg, users, direction, scheme)
        print("%s %-4s  PASS %6.2f (from %6.2f, %d sweeps)   fixed hMIMO %6.2f" % (
            direction, scheme, res.sumrate, res.trace.initial, res.trace.sweeps, fixed))

# where did the antennas go?  (MMSE downlink)
res = run_sweep(cfg, users, "dl", "mmse", layout=layout)
print("optimised x-positions per waveguide:")
print(np.round(np.sort(res.layout.P, axis=1), 2))
