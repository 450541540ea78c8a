"""PT-symmetry breaking in non-Hermitian transverse-field Ising chains."""

__version__ = "1.0.0"

from ptchain.errors import (  # noqa: E402
    ConfigError,
    ConvergenceError,
    DomainError,
    NumericError,
    PTChainError,
    SweepError,
)
from ptchain.model import (  # noqa: E402
    Boundary,
    NoPerturbation,
    SingleSite,
    SiteClass,
    SpinChainConfig,
    TwoSiteDoublePlus,
    TwoSiteMinus,
    TwoSitePlus,
    build_h0,
    build_hamiltonian,
    classify_sites,
)
from ptchain.eig import Spectrum, eigenvalues  # noqa: E402
from ptchain.pt import find_threshold, flow_sweep, is_broken, max_imag  # noqa: E402
