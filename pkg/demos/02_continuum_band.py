# %% [markdown]
# # Continuum bands from the forward recursion
#
# Seed the three-term recursion with `psi_0 = 0, psi_1 = 1` at a trial energy.
# Inside the band the amplitudes decay, outside they grow. Comparing the
# fitted growth rate with a winding test against the periodic loop shows the
# loop is the band edge.

# %%
import time

from nhlab import ModelSpec
from nhlab.recursion import band_scan, recurse

t0 = time.perf_counter()
scan = band_scan(ModelSpec("hatano", 10, 0.6), (-2, 2, -1, 1), 101)
print(f"agreement with winding test: {scan.agreement():.4f} ({time.perf_counter() - t0:.1f}s)")

# %% [markdown]
# At `gamma = 0` the recursion is geometric, so the boundary amplitude of a
# hundred-site chain is tiny for any `|E| < 1`. With the seed `psi_1 = E`:

# %%
spec = ModelSpec("hatano", 100, 0.0)
for E in (0.5, 0.8):
    print(E, recurse(spec, E, seed=E).boundary)

# %% [markdown]
# The gain/loss chain splits into two lobes once `V0 > 1`.

# %%
from nhlab.analytic import gainloss_band_morphology

for V0 in (0.5, 1.0, 1.5):
    scan = band_scan(ModelSpec("gainloss", 10, 0.0, V0=V0), (-2, 2, -2, 2), 61, J=1000)
    print(V0, gainloss_band_morphology(V0).name, f"agreement {scan.agreement():.3f}")
