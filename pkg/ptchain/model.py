"""Spin-chain domain types and dense Hamiltonian construction.

Basis convention (used by every matrix in the package and by the CSV spectra):
site 1 is the most-significant qubit of the tensor-product index, and bit value
0 is the sigma-z eigenvalue +1. Sites are 1-indexed in every public function.

All Hamiltonians built here are real: sigma-x, sigma-z, sigma-plus, sigma-minus
and i*sigma-y are real matrices in this basis, so matrices are float64 arrays.
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import ClassVar, List, Tuple, Union

import numpy as np
import numpy.typing as npt
import scipy.sparse

from ptchain.errors import DomainError

logger = logging.getLogger(__name__)

RealMatrix = npt.NDArray[np.float64]

# 2^12 x 2^12 doubles is ~134 MB; larger chains are out of reach for dense solvers.
MAX_DENSE_SITES = 12


class Boundary(str, Enum):
    OPEN = "open"
    PERIODIC = "periodic"


class PauliKind(str, Enum):
    X = "x"
    Z = "z"
    PLUS = "plus"
    MINUS = "minus"


_SINGLE_SITE_MATRICES = {
    PauliKind.X: np.array([[0.0, 1.0], [1.0, 0.0]]),
    PauliKind.Z: np.array([[1.0, 0.0], [0.0, -1.0]]),
    PauliKind.PLUS: np.array([[0.0, 1.0], [0.0, 0.0]]),
    PauliKind.MINUS: np.array([[0.0, 0.0], [1.0, 0.0]]),
}


class SiteClass(str, Enum):
    HERMITIAN = "hermitian"
    ADJACENT = "adjacent"
    EDGE_INVOLVED = "edge"
    BULK_PAIR = "bulk"
    SINGLE_EDGE = "single_edge"
    SINGLE_BULK = "single_bulk"


@dataclass(frozen=True)
class SpinChainConfig:
    """Transverse-field Ising chain: N sites, coupling J, field h_z, boundary."""

    n_sites: int
    coupling_j: float = 1.0
    field_hz: float = 0.0
    boundary: Boundary = Boundary.OPEN

    def __post_init__(self):
        if not isinstance(self.boundary, Boundary):
            try:
                object.__setattr__(self, "boundary", Boundary(str(self.boundary).lower()))
            except ValueError:
                raise DomainError(f"boundary must be 'open' or 'periodic', got {self.boundary!r}")
        if isinstance(self.n_sites, bool) or int(self.n_sites) != self.n_sites:
            raise DomainError(f"n_sites must be an integer, got {self.n_sites!r}")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        if not 1 <= self.n_sites <= MAX_DENSE_SITES:
            raise DomainError(f"n_sites must be in 1..{MAX_DENSE_SITES}, got {self.n_sites}")
        object.__setattr__(self, "coupling_j", float(self.coupling_j))
        object.__setattr__(self, "field_hz", float(self.field_hz))
        if not (math.isfinite(self.coupling_j) and math.isfinite(self.field_hz)):
            raise DomainError("coupling_j and field_hz must be finite")
        if self.coupling_j < 0:
            raise DomainError(f"coupling_j must be >= 0 (ferromagnetic), got {self.coupling_j}")
        if self.boundary is Boundary.PERIODIC and self.n_sites < 3:
            raise DomainError("periodic boundary needs at least 3 sites")

    @property
    def dim(self) -> int:
        return 2 ** self.n_sites

    @property
    def energy_scale(self) -> float:
        """J when J > 0, otherwise the field (or 1 for a completely empty chain)."""
        if self.coupling_j > 0:
            return self.coupling_j
        return abs(self.field_hz) if self.field_hz != 0 else 1.0

    def with_field(self, field_hz: float) -> "SpinChainConfig":
        return replace(self, field_hz=float(field_hz))

    def with_coupling(self, coupling_j: float) -> "SpinChainConfig":
        return replace(self, coupling_j=float(coupling_j))

    def bonds(self) -> List[Tuple[int, int]]:
        pairs = [(i, i + 1) for i in range(1, self.n_sites)]
        if self.boundary is Boundary.PERIODIC:
            pairs.append((self.n_sites, 1))
        return pairs

    def neighbors(self, site: int) -> List[int]:
        self.check_site(site)
        found = []
        for i, j in self.bonds():
            if i == site:
                found.append(j)
            elif j == site:
                found.append(i)
        return found

    def is_edge(self, site: int) -> bool:
        self.check_site(site)
        return self.boundary is Boundary.OPEN and site in (1, self.n_sites)

    def are_adjacent(self, p: int, q: int) -> bool:
        return p != q and q in self.neighbors(p)

    def check_site(self, site: int) -> None:
        if isinstance(site, bool) or int(site) != site or not 1 <= site <= self.n_sites:
            raise DomainError(f"site {site!r} outside 1..{self.n_sites}")


@dataclass(frozen=True)
class TwoSitePlus:
    """gamma * (sigma+_p + sigma-_q); Hermitian when p == q."""

    kind: ClassVar[str] = "two_site_plus"
    p: int
    q: int

    @property
    def sites(self) -> Tuple[int, ...]:
        return (self.p, self.q)


@dataclass(frozen=True)
class TwoSiteMinus:
    """gamma * (sigma+_p - sigma-_q); anti-Hermitian (gamma i sigma-y) when p == q."""

    kind: ClassVar[str] = "two_site_minus"
    p: int
    q: int

    @property
    def sites(self) -> Tuple[int, ...]:
        return (self.p, self.q)


@dataclass(frozen=True)
class TwoSiteDoublePlus:
    """gamma * (sigma+_p + sigma+_q)."""

    kind: ClassVar[str] = "two_site_double_plus"
    p: int
    q: int

    @property
    def sites(self) -> Tuple[int, ...]:
        return (self.p, self.q)


@dataclass(frozen=True)
class SingleSite:
    """gamma_plus * sigma+_p + gamma_minus * sigma-_p with stored strengths.

    Strength sweeps rescale the perturbation with `scaled` instead of passing a gamma
    to build_hamiltonian, because the (gamma+, gamma-) plane has two axes.
    """

    kind: ClassVar[str] = "single_site"
    p: int
    gamma_plus: float = 1.0
    gamma_minus: float = 0.0

    @property
    def sites(self) -> Tuple[int, ...]:
        return (self.p,)

    def scaled(self, factor: float) -> "SingleSite":
        return SingleSite(self.p, self.gamma_plus * factor, self.gamma_minus * factor)


@dataclass(frozen=True)
class NoPerturbation:
    kind: ClassVar[str] = "none"

    @property
    def sites(self) -> Tuple[int, ...]:
        return ()


PerturbationSpec = Union[TwoSitePlus, TwoSiteMinus, TwoSiteDoublePlus, SingleSite, NoPerturbation]
TWO_SITE_KINDS = (TwoSitePlus, TwoSiteMinus, TwoSiteDoublePlus)


def validate_perturbation(config: SpinChainConfig, pert: PerturbationSpec) -> None:
    for site in pert.sites:
        config.check_site(site)
    if isinstance(pert, SingleSite):
        if not (math.isfinite(pert.gamma_plus) and math.isfinite(pert.gamma_minus)):
            raise DomainError("single-site strengths must be finite")


def site_terms(pert: PerturbationSpec, gamma: float) -> List[Tuple[int, float, float]]:
    """Decompose a perturbation into (site, sigma+ coefficient, sigma- coefficient).

    Terms on the same site are merged, so p == q perturbations come back as a
    single entry. For SingleSite the stored strengths are used and `gamma` is
    ignored.
    """
    if isinstance(pert, NoPerturbation):
        return []
    if isinstance(pert, SingleSite):
        return [(pert.p, pert.gamma_plus, pert.gamma_minus)]
    if isinstance(pert, TwoSitePlus):
        raw = [(pert.p, gamma, 0.0), (pert.q, 0.0, gamma)]
    elif isinstance(pert, TwoSiteMinus):
        raw = [(pert.p, gamma, 0.0), (pert.q, 0.0, -gamma)]
    elif isinstance(pert, TwoSiteDoublePlus):
        raw = [(pert.p, gamma, 0.0), (pert.q, gamma, 0.0)]
    else:
        raise DomainError(f"unknown perturbation {pert!r}")

    merged = {}
    for site, c_plus, c_minus in raw:
        old_plus, old_minus = merged.get(site, (0.0, 0.0))
        merged[site] = (old_plus + c_plus, old_minus + c_minus)
    return [(site, cp, cm) for site, (cp, cm) in merged.items()]


def _site_operator(n_sites: int, site: int, kind: PauliKind) -> scipy.sparse.csr_matrix:
    left = scipy.sparse.identity(2 ** (site - 1), format="csr")
    right = scipy.sparse.identity(2 ** (n_sites - site), format="csr")
    op = scipy.sparse.csr_matrix(_SINGLE_SITE_MATRICES[kind])
    return scipy.sparse.kron(scipy.sparse.kron(left, op, format="csr"), right, format="csr")


def pauli_operator(config: SpinChainConfig, site: int, kind: Union[PauliKind, str]) -> RealMatrix:
    """Dense 2^N operator acting as sigma-`kind` on `site` and identity elsewhere."""
    config.check_site(site)
    return _site_operator(config.n_sites, site, PauliKind(kind)).toarray()


def _h0_sparse(config: SpinChainConfig) -> scipy.sparse.csr_matrix:
    n = config.n_sites
    h = scipy.sparse.csr_matrix((config.dim, config.dim), dtype=float)
    if config.coupling_j != 0:
        for i, j in config.bonds():
            xx = _site_operator(n, i, PauliKind.X) @ _site_operator(n, j, PauliKind.X)
            h = h - (config.coupling_j / 4.0) * xx
    if config.field_hz != 0:
        for i in range(1, n + 1):
            h = h - (config.field_hz / 2.0) * _site_operator(n, i, PauliKind.Z)
    return h


def build_h0(config: SpinChainConfig) -> RealMatrix:
    """H_0 = -(J/4) sum_bonds X_i X_j - (h_z/2) sum_i Z_i as a dense symmetric matrix."""
    return _h0_sparse(config).toarray()


def build_hamiltonian(config: SpinChainConfig, pert: PerturbationSpec, gamma: float) -> RealMatrix:
    """H_0 plus the exceptional perturbation at strength `gamma`.

    SingleSite carries its own strengths and requires gamma == 1.0.
    """
    validate_perturbation(config, pert)
    if not math.isfinite(gamma):
        raise DomainError(f"gamma must be finite, got {gamma}")
    if isinstance(pert, SingleSite):
        if gamma != 1.0:
            raise DomainError("SingleSite carries its own strengths; pass gamma=1.0 and rescale with .scaled()")
    elif isinstance(pert, TWO_SITE_KINDS) and gamma < 0:
        raise DomainError(f"two-site strength must be >= 0, got {gamma}")

    h = _h0_sparse(config)
    for site, c_plus, c_minus in site_terms(pert, gamma):
        if c_plus != 0:
            h = h + c_plus * _site_operator(config.n_sites, site, PauliKind.PLUS)
        if c_minus != 0:
            h = h + c_minus * _site_operator(config.n_sites, site, PauliKind.MINUS)
    logger.debug("built %dx%d Hamiltonian for %s at gamma=%g", config.dim, config.dim, pert, gamma)
    return h.toarray()


def classify_sites(config: SpinChainConfig, pert: PerturbationSpec) -> SiteClass:
    if isinstance(pert, NoPerturbation):
        raise DomainError("cannot classify the unperturbed chain")
    validate_perturbation(config, pert)

    if isinstance(pert, SingleSite):
        return SiteClass.SINGLE_EDGE if config.is_edge(pert.p) else SiteClass.SINGLE_BULK

    p, q = pert.p, pert.q
    if p == q:
        if isinstance(pert, TwoSitePlus):
            return SiteClass.HERMITIAN
        return SiteClass.SINGLE_EDGE if config.is_edge(p) else SiteClass.SINGLE_BULK
    if config.are_adjacent(p, q):
        return SiteClass.ADJACENT
    if config.is_edge(p) or config.is_edge(q):
        return SiteClass.EDGE_INVOLVED
    return SiteClass.BULK_PAIR


def edge_site_count(config: SpinChainConfig, pert: PerturbationSpec) -> int:
    """Number of distinct perturbed sites sitting at an open-chain end."""
    validate_perturbation(config, pert)
    return sum(1 for site in set(pert.sites) if config.is_edge(site))


def describe(pert: PerturbationSpec) -> str:
    if isinstance(pert, NoPerturbation):
        return "none"
    if isinstance(pert, SingleSite):
        return f"single_site(p={pert.p}, g+={pert.gamma_plus:g}, g-={pert.gamma_minus:g})"
    return f"{pert.kind}(p={pert.p}, q={pert.q})"
