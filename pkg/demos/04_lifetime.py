# %% [markdown]
# # How long a quasi-stationary state lasts
#
# Evolve the zero-energy profile and watch the projective distance from the
# initial ray. The lifetime is the first time that distance passes 0.01.

# %%
from nhlab import ModelSpec, build_hamiltonian
from nhlab.analytic import ssh_zero_mode
from nhlab.dynamics import evolve

for N in (20, 30, 40, 60):
    spec = ModelSpec("ssh", N, 0.2, delta=-0.4)
    psi0 = ssh_zero_mode(N, 0.2, -0.4).amplitudes
    res = evolve(build_hamiltonian(spec), psi0, 60.0, store_states=False)
    print(f"N={N:3d}  lifetime {res.lifetime:.2f}  steps {res.integrator_stats['accepted_steps']}")

# %% [markdown]
# The topological mode at positive `delta` is an exact eigenvector up to
# exponentially small corrections and does not move.

# %%
spec = ModelSpec("ssh", 40, 0.2, delta=0.4)
res = evolve(build_hamiltonian(spec), ssh_zero_mode(40, 0.2, 0.4).amplitudes, 60.0, store_states=False)
print("lifetime:", res.lifetime, " max deviation:", res.deviation.max())
