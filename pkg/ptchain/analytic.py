"""Closed-form PT thresholds at zero field.

At h_z = 0 every term of H_0 is diagonal in the sigma-x product basis, so the
Hamiltonian splits into blocks labelled by the sigma-x values of all sites
the perturbation does not touch. A perturbed site only sees the sum of its
neighbours' sigma-x values (the neighbour pattern), which turns each block
into an effective single-spin problem

    H_p = h_x sigma-x + i (gamma / 2) sigma-y,  h_x = -(J/4) sum(pattern) + gamma/2,

with eigenvalues +-sqrt(h_x^2 - gamma^2/4). The chain breaks as soon as the
first pattern does, so thresholds are minima over patterns. Two adjacent
perturbed sites share a bond and need the 4x4 block instead.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ptchain.eig import charpoly_roots
from ptchain.errors import DomainError
from ptchain.model import (
    NoPerturbation,
    PerturbationSpec,
    SingleSite,
    SiteClass,
    SpinChainConfig,
    classify_sites,
    site_terms,
    validate_perturbation,
)

logger = logging.getLogger(__name__)

Pattern = Tuple[int, ...]


class ReducedKind(str, Enum):
    TWO_BY_TWO = "2x2"
    FOUR_BY_FOUR = "4x4"


@dataclass(frozen=True)
class ReducedProblem:
    """Effective single-spin problem for one neighbour pattern."""

    h_x: float
    gamma: float
    kind: ReducedKind = ReducedKind.TWO_BY_TWO
    neighbor_pattern: Pattern = ()

    def __post_init__(self):
        if any(s not in (-1, 1) for s in self.neighbor_pattern):
            raise DomainError(f"neighbor pattern entries must be +-1, got {self.neighbor_pattern}")
        if self.kind is ReducedKind.TWO_BY_TWO and self.neighbor_pattern and len(self.neighbor_pattern) > 2:
            raise DomainError("a chain site has at most two neighbours")

    @classmethod
    def from_pattern(cls, coupling_j: float, pattern: Sequence[int],
                     gamma_plus: float, gamma_minus: float = 0.0) -> "ReducedProblem":
        """Reduce gamma_plus sigma+ + gamma_minus sigma- on a site with the given neighbours.

        One-sided sigma+ of strength gamma gives h_x = -(J/4) sum(pattern) + gamma/2.
        """
        pattern = tuple(int(s) for s in pattern)
        if not 1 <= len(pattern) <= 2:
            raise DomainError(f"pattern must list one (edge) or two (bulk) neighbours, got {pattern}")
        h_x = -(coupling_j / 4.0) * sum(pattern) + 0.5 * (gamma_plus + gamma_minus)
        return cls(h_x, gamma_plus - gamma_minus, ReducedKind.TWO_BY_TWO, pattern)

    def matrix(self) -> np.ndarray:
        return np.array([[self.h_x, 0.5 * self.gamma], [-0.5 * self.gamma, -self.h_x]])


def reduced_eigenvalues(r: ReducedProblem) -> Tuple[complex, complex]:
    if r.kind is not ReducedKind.TWO_BY_TWO:
        raise DomainError("reduced_eigenvalues handles the 2x2 reduction only")
    half = 0.5 * r.gamma
    # factored form keeps the discriminant exact at the exceptional point
    root = np.sqrt(complex((r.h_x - half) * (r.h_x + half)))
    return complex(root), complex(-root)


def neighbor_patterns(config: SpinChainConfig, site: int) -> List[Pattern]:
    k = len(config.neighbors(site))
    return [tuple(p) for p in itertools.product((1, -1), repeat=k)]


def pattern_threshold(coupling_j: float, pattern: Sequence[int],
                      c_plus: float, c_minus: float) -> Optional[float]:
    """Smallest t > 0 breaking the block t * (c_plus sigma+ + c_minus sigma-), or None.

    The block is broken iff |a + s t| < |d| t with a = -(J/4) sum(pattern),
    s = (c_plus + c_minus)/2 and d = (c_plus - c_minus)/2: two linear
    inequalities in t whose common solution is an interval.
    """
    a = -(coupling_j / 4.0) * sum(pattern)
    s = 0.5 * (c_plus + c_minus)
    d = abs(0.5 * (c_plus - c_minus))
    lo, hi = 0.0, math.inf
    for slope, bound in ((s + d, -a), (d - s, a)):
        # slope * t > bound
        if slope > 0:
            lo = max(lo, bound / slope)
        elif slope < 0:
            hi = min(hi, bound / slope)
        elif bound >= 0:
            return None
    return lo if lo < hi else None


def site_threshold(config: SpinChainConfig, site: int, c_plus: float, c_minus: float) -> Optional[float]:
    found = [pattern_threshold(config.coupling_j, pat, c_plus, c_minus) for pat in neighbor_patterns(config, site)]
    found = [t for t in found if t is not None]
    return min(found) if found else None


def _require_zero_field(config: SpinChainConfig) -> None:
    if config.field_hz != 0:
        raise DomainError("the closed-form reduction holds at h_z = 0 only")
    if config.n_sites < 3:
        raise DomainError("the closed-form reduction needs at least 3 sites")


def analytic_threshold_h0(config: SpinChainConfig, pert: PerturbationSpec) -> Optional[float]:
    """Closed-form gamma_PT at h_z = 0, or None when the spectrum never breaks.

    For SingleSite the threshold is the scale factor along the ray of its
    stored strengths, matching how the numeric search sweeps it.
    """
    _require_zero_field(config)
    if isinstance(pert, NoPerturbation):
        return None
    validate_perturbation(config, pert)
    classification = classify_sites(config, pert)
    if classification is SiteClass.HERMITIAN:
        return None
    if classification is SiteClass.ADJACENT:
        return 0.0

    found = []
    for site, c_plus, c_minus in site_terms(pert, 1.0):
        t = site_threshold(config, site, c_plus, c_minus)
        if t is not None:
            found.append(t)
    result = min(found) if found else None
    logger.debug("analytic threshold for %s (%s): %s", pert, classification.value, result)
    return result


def single_site_max_imag_h0(config: SpinChainConfig, site: int, gamma_plus: float, gamma_minus: float) -> float:
    """max Im(E) of the whole chain under gamma_plus sigma+_p + gamma_minus sigma-_p at h_z = 0."""
    _require_zero_field(config)
    s = 0.5 * (gamma_plus + gamma_minus)
    d = 0.5 * (gamma_plus - gamma_minus)
    best = 0.0
    for pat in neighbor_patterns(config, site):
        a = -(config.coupling_j / 4.0) * sum(pat)
        gap = (d - (a + s)) * (d + (a + s))
        best = max(best, math.sqrt(gap) if gap > 0 else 0.0)
    return best


def flat_band_count(config: SpinChainConfig, site: int) -> int:
    """Eigenvalues pinned at an exceptional point by a one-sided single-site term.

    Anti-aligned neighbours cancel the effective field, leaving the reduced
    problem at its EP for every strength: two gamma-independent eigenvalues
    per sigma-x product state of the remaining sites.
    """
    k = len(config.neighbors(site))
    states_per_pattern = 2 ** (config.n_sites - 1 - k)
    cancelling = sum(1 for pat in neighbor_patterns(config, site) if sum(pat) == 0)
    return 2 * cancelling * states_per_pattern


_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]])
_I2 = np.eye(2)

ADJACENT_PATTERNS: List[Tuple[int, int]] = [(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1)]


def adjacent_block_matrix(coupling_j: float, gamma: float, pattern: Tuple[int, int]) -> np.ndarray:
    """4x4 block of an adjacent pair (p, q) perturbed by gamma (sigma+_p + sigma-_q).

    pattern = (n_p, n_q) is the summed sigma-x of each site's outer neighbours
    (0 at a chain end).
    """
    n_p, n_q = pattern
    h = -(coupling_j / 4.0) * np.kron(_X, _X)
    h -= (coupling_j / 4.0) * (n_p * np.kron(_X, _I2) + n_q * np.kron(_I2, _X))
    h += gamma * (np.kron(_PLUS, _I2) + np.kron(_I2, _PLUS.T))
    return h


def adjacent_block_spectrum(coupling_j: float, gamma: float) -> Dict[Tuple[int, int], np.ndarray]:
    """Pattern-resolved eigenvalues of the adjacent-pair block, from its characteristic polynomial."""
    if gamma < 0:
        raise DomainError(f"gamma must be >= 0, got {gamma}")
    spectra = {}
    for pattern in ADJACENT_PATTERNS:
        roots = charpoly_roots(adjacent_block_matrix(coupling_j, gamma, pattern))
        spectra[pattern] = roots[np.lexsort((roots.imag, roots.real))]
    return spectra
