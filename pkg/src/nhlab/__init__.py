"""Non-Hermitian tight-binding chains: OBC/PBC spectra, quasi-stationary
states, continuum bands and zero-mode dynamics."""

__version__ = "0.1.0"

from .lattice import (  # noqa: E402
    Boundary,
    DisorderSpec,
    Hamiltonian,
    ModelKind,
    ModelSpec,
    apply_disorder,
    build_hamiltonian,
)
from .eigen import (  # noqa: E402
    Spectrum,
    eigenvalues_qr,
    gauge_transform,
    match_spectra,
    obc_spectrum,
    pbc_spectrum,
)
from .analytic import (  # noqa: E402
    ellipse_membership,
    gainloss_band_membership,
    gainloss_band_morphology,
    hatano_obc_eigs,
    ssh_zero_mode,
    ssh_zero_mode_domain,
)
from .recursion import (  # noqa: E402
    band_scan,
    classify_growth,
    pbc_loop_polygon,
    quasi_stationary_state,
    recurse,
    winding_membership,
)
from .dynamics import disorder_robustness, evolve, lifetime, stationarity_deviation  # noqa: E402
