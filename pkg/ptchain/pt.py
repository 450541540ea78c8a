"""PT-symmetry analysis on top of spectra.

Detection snaps |Im E| <= snap_tol * scale to zero (scale is the Frobenius
norm recorded on the Spectrum). At zero field two perturbed sites can sit on
exceptional points together; the resulting third-order Jordan blocks split by
roughly eps**(1/3) * scale under roundoff, well above the snap level, so small
imaginary parts are only trusted once they beat their own condition bound
(see `certified_max_imag`).
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.stats
from joblib import Parallel, delayed

from ptchain.eig import EPS, Spectrum, eigenvalue_conditions, eigenvalues
from ptchain.errors import DomainError, PTChainError, SweepError
from ptchain.model import (
    NoPerturbation,
    PerturbationSpec,
    SingleSite,
    SiteClass,
    SpinChainConfig,
    build_hamiltonian,
    classify_sites,
    edge_site_count,
)

logger = logging.getLogger(__name__)

DEFAULT_SNAP_TOL = 1e-7
DEFAULT_COARSE_POINTS = 64
DEFAULT_SOLVER = "lapack"
RELATIVE_TOL = 1e-3
# relative |Im E| no roundoff on a defective cluster reaches
CERTAIN_IMAG = 1e-3
CERTIFY_FACTOR = 1e3


@dataclass(frozen=True)
class ThresholdResult:
    """Outcome of a threshold search; gamma_pt is None when the scan never breaks."""

    gamma_pt: Optional[float]
    bracket: Tuple[float, float]
    classification: SiteClass
    evaluations: int
    reentrant: bool = False
    iterations: int = 0

    @property
    def found(self) -> bool:
        return self.gamma_pt is not None


@dataclass(frozen=True)
class ThresholdSettings:
    """Search settings shared by every sample of a field-response fit.

    None for gamma_max or tol means "derive from the chain" (see
    `default_gamma_max` and `default_tol`).
    """

    gamma_max: Optional[float] = None
    tol: Optional[float] = None
    snap_tol: float = DEFAULT_SNAP_TOL
    coarse_points: int = DEFAULT_COARSE_POINTS
    solver: str = DEFAULT_SOLVER

    def as_kwargs(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class FlowTable:
    gamma_grid: np.ndarray
    rows: np.ndarray  # (len(gamma_grid), dim) complex, rows sorted by (re, im)
    scales: np.ndarray
    iterations: int = 0

    def max_imag_per_row(self, snap_tol: float = DEFAULT_SNAP_TOL) -> np.ndarray:
        im = self.rows.imag.copy()
        im[np.abs(im) <= snap_tol * self.scales[:, None]] = 0.0
        return np.maximum(im.max(axis=1), 0.0)


@dataclass(frozen=True, eq=False)
class PhaseGrid:
    """max Im(E) on a 2-D grid; max_im[i, j] sits at (x_axis[j], y_axis[i])."""

    x_axis: np.ndarray
    y_axis: np.ndarray
    max_im: np.ndarray
    x_label: str = "x"
    y_label: str = "y"
    iterations: int = 0


@dataclass(frozen=True)
class FieldResponseFit:
    """Line through the thresholds of the samples with h_z <= fit_max_hz.

    hz_samples and thresholds hold every searched sample; `fitted` counts the
    ones inside the window. fit_max_hz is None when every sample was fitted.
    """

    slope: float
    intercept: float
    classification: SiteClass
    hz_samples: List[float]
    thresholds: List[float]
    residual: float
    stderr: float = 0.0
    excluded_zero: bool = False
    edge_sites: int = 0
    results: List[ThresholdResult] = field(default_factory=list)
    fit_max_hz: Optional[float] = None
    fitted: int = 0
    iterations: int = 0


@dataclass(frozen=True)
class CouplingSweep:
    """Thresholds against J at the template's fixed field; None where nothing breaks."""

    field_hz: float
    j_grid: List[float]
    thresholds: List[Optional[float]]
    results: List[ThresholdResult]
    iterations: int = 0

    def ratios(self) -> List[Tuple[float, Optional[float]]]:
        """(J / h_z, gamma_PT / h_z) per grid point."""
        hz = abs(self.field_hz)
        return [(j / hz, None if g is None else g / hz) for j, g in zip(self.j_grid, self.thresholds)]


def default_gamma_max(config: SpinChainConfig) -> float:
    return 2.0 * config.energy_scale + 4.0 * abs(config.field_hz)


def default_tol(config: SpinChainConfig) -> float:
    return RELATIVE_TOL * config.energy_scale


def hamiltonian_at(config: SpinChainConfig, pert: PerturbationSpec, gamma: float) -> np.ndarray:
    """Hamiltonian at strength gamma; SingleSite strengths are scaled by gamma."""
    if isinstance(pert, SingleSite):
        return build_hamiltonian(config, pert.scaled(gamma), 1.0)
    return build_hamiltonian(config, pert, gamma)


def spectrum_at(config: SpinChainConfig, pert: PerturbationSpec, gamma: float,
                solver: str = DEFAULT_SOLVER) -> Spectrum:
    return eigenvalues(hamiltonian_at(config, pert, gamma), solver=solver)


def max_imag(s: Spectrum, snap_tol: float = DEFAULT_SNAP_TOL) -> float:
    if snap_tol < 0:
        raise DomainError(f"snap_tol must be >= 0, got {snap_tol}")
    if len(s) == 0:
        return 0.0
    scale = s.scale if s.scale > 0 else float(np.abs(s.eigenvalues).max())
    im = s.eigenvalues.imag
    im = np.where(np.abs(im) <= snap_tol * scale, 0.0, im)
    return max(0.0, float(im.max()))


def certified_max_imag(h: np.ndarray, snap_tol: float = DEFAULT_SNAP_TOL,
                       solver: str = DEFAULT_SOLVER) -> float:
    """max Im(E) counting only imaginary parts larger than their roundoff.

    Values between snap_tol * scale and CERTAIN_IMAG * scale are rechecked:
    an eigenvalue with condition number kappa keeps its imaginary part only if
    |Im E| > CERTIFY_FACTOR * kappa * eps * scale.
    """
    return _certified(h, snap_tol, solver)[0]


def _certified(h: np.ndarray, snap_tol: float, solver: str) -> Tuple[float, int]:
    s = eigenvalues(h, solver=solver)
    raw = max_imag(s, snap_tol)
    if raw == 0.0 or raw >= CERTAIN_IMAG * s.scale:
        return raw, s.iterations
    values, kappa = eigenvalue_conditions(h)
    bound = np.maximum(snap_tol, CERTIFY_FACTOR * EPS * kappa) * s.scale
    im = np.where(np.abs(values.imag) > bound, values.imag, 0.0)
    certified = max(0.0, float(im.max()))
    if certified == 0.0:
        logger.debug("max |Im E| = %.3g is roundoff on a defective cluster", raw)
    return certified, s.iterations


def check_breaking(config: SpinChainConfig, pert: PerturbationSpec, gamma: float,
                   snap_tol: float = DEFAULT_SNAP_TOL, solver: str = DEFAULT_SOLVER) -> Tuple[bool, int]:
    """`is_broken` plus the QR iterations the solver spent deciding it."""
    if gamma < 0:
        raise DomainError(f"gamma must be >= 0, got {gamma}")
    if isinstance(pert, NoPerturbation):
        return False, 0
    value, iterations = _certified(hamiltonian_at(config, pert, gamma), snap_tol, solver)
    return value > 0.0, iterations


def is_broken(config: SpinChainConfig, pert: PerturbationSpec, gamma: float,
              snap_tol: float = DEFAULT_SNAP_TOL, solver: str = DEFAULT_SOLVER) -> bool:
    return check_breaking(config, pert, gamma, snap_tol, solver)[0]


def find_threshold(config: SpinChainConfig, pert: PerturbationSpec,
                   gamma_max: Optional[float] = None, tol: Optional[float] = None,
                   snap_tol: float = DEFAULT_SNAP_TOL,
                   coarse_points: int = DEFAULT_COARSE_POINTS,
                   solver: str = DEFAULT_SOLVER) -> ThresholdResult:
    """Smallest gamma at which complex-conjugate pairs appear.

    An ascending scan of `coarse_points` strengths over [0, gamma_max] finds
    the first broken point, then bisection narrows the bracketing interval to
    width `tol`. Broken points followed by unbroken ones mark the result as
    re-entrant; gamma_pt is still the first breaking.
    """
    gamma_max = default_gamma_max(config) if gamma_max is None else float(gamma_max)
    tol = default_tol(config) if tol is None else float(tol)
    if not gamma_max > 0:
        raise DomainError(f"gamma_max must be > 0, got {gamma_max}")
    if not tol > 0:
        raise DomainError(f"tol must be > 0, got {tol}")
    if coarse_points < 2:
        raise DomainError(f"coarse_points must be >= 2, got {coarse_points}")

    if isinstance(pert, NoPerturbation):
        return ThresholdResult(None, (gamma_max, math.inf), SiteClass.HERMITIAN, 0)
    classification = classify_sites(config, pert)

    evaluations = 0
    iterations = 0
    lo, hi = 0.0, gamma_max

    def broken(gamma: float) -> bool:
        nonlocal evaluations, iterations
        evaluations += 1
        try:
            flag, spent = check_breaking(config, pert, gamma, snap_tol, solver)
        except PTChainError as e:
            raise SweepError("threshold search failed", {"gamma": gamma, "bracket_lo": lo, "bracket_hi": hi}, e) from e
        iterations += spent
        return flag

    grid = np.linspace(0.0, gamma_max, coarse_points)
    flags = [broken(float(g)) for g in grid]
    if not any(flags):
        logger.debug("%s: no breaking up to gamma_max=%g", classification.value, gamma_max)
        return ThresholdResult(None, (gamma_max, math.inf), classification, evaluations, iterations=iterations)

    first = flags.index(True)
    reentrant = not all(flags[first:])
    if first == 0:
        return ThresholdResult(0.0, (0.0, 0.0), classification, evaluations, reentrant, iterations)

    lo, hi = float(grid[first - 1]), float(grid[first])
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if broken(mid):
            hi = mid
        else:
            lo = mid
    gamma_pt = 0.5 * (lo + hi)
    if reentrant:
        logger.warning("%s: broken set is re-entrant in gamma; reporting the first breaking at %g",
                       classification.value, gamma_pt)
    return ThresholdResult(gamma_pt, (lo, hi), classification, evaluations, reentrant, iterations)


def parallel_map(func: Callable, args: Sequence[tuple], jobs: int) -> list:
    if jobs == 1 or len(args) <= 1:
        return [func(*a) for a in args]
    return Parallel(n_jobs=jobs)(delayed(func)(*a) for a in args)


def _flow_row(config, pert, gamma, solver):
    try:
        s = spectrum_at(config, pert, gamma, solver)
    except PTChainError as e:
        raise SweepError("flow sweep failed", {"gamma": gamma}, e) from e
    return s.sorted(), s.scale, s.iterations


def _ascending(grid: Sequence[float], name: str) -> np.ndarray:
    values = np.asarray(grid, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise DomainError(f"{name} must be a nonempty 1-D grid")
    if not np.all(np.isfinite(values)):
        raise DomainError(f"{name} must be finite")
    if np.any(np.diff(values) <= 0):
        raise DomainError(f"{name} must be strictly ascending")
    return values


def flow_sweep(config: SpinChainConfig, pert: PerturbationSpec, gamma_grid: Sequence[float],
               solver: str = DEFAULT_SOLVER, jobs: int = 1) -> FlowTable:
    """Full sorted spectrum at every strength of the grid."""
    grid = _ascending(gamma_grid, "gamma_grid")
    if grid[0] < 0:
        raise DomainError("gamma_grid must be >= 0")
    out = parallel_map(_flow_row, [(config, pert, float(g), solver) for g in grid], jobs)
    rows = np.vstack([r for r, _, _ in out])
    scales = np.array([sc for _, sc, _ in out])
    iterations = sum(it for _, _, it in out)
    logger.info("flow sweep: %d strengths x %d eigenvalues", len(grid), rows.shape[1])
    return FlowTable(grid, rows, scales, iterations)


def first_broken_index(flow: FlowTable, snap_tol: float = DEFAULT_SNAP_TOL) -> Optional[int]:
    """Grid index of the first row holding a complex pair, or None."""
    hits = np.flatnonzero(flow.max_imag_per_row(snap_tol) > 0)
    return int(hits[0]) if hits.size else None


def count_flat_eigenvalues(flow: FlowTable, snap_tol: float = DEFAULT_SNAP_TOL) -> int:
    """Eigenvalues (with multiplicity) that stay put across the whole grid.

    Two eigenvalues coincide when they differ by at most snap_tol times the
    largest matrix scale of the flow. For each cluster of the first row, the
    multiplicity is the smallest count of eigenvalues within that distance of
    it over all rows, so bands crossing the cluster at some strengths are not
    counted.
    """
    if snap_tol < 0:
        raise DomainError(f"snap_tol must be >= 0, got {snap_tol}")
    tol = snap_tol * float(flow.scales.max())
    ref = flow.rows[0]
    seen = np.zeros(ref.size, dtype=bool)
    total = 0
    for i, value in enumerate(ref):
        if seen[i]:
            continue
        seen |= np.abs(ref - value) <= tol
        total += min(int(np.count_nonzero(np.abs(row - value) <= tol)) for row in flow.rows)
    return total


def _cell_max_imag(config, pert, gamma, snap_tol, solver, point):
    try:
        return _certified(hamiltonian_at(config, pert, gamma), snap_tol, solver)
    except PTChainError as e:
        raise SweepError("phase-grid cell failed", point, e) from e


def _phase_grid(cells: list, x_axis: np.ndarray, y_axis: np.ndarray, x_label: str, y_label: str) -> PhaseGrid:
    values = np.array([v for v, _ in cells]).reshape(len(y_axis), len(x_axis))
    return PhaseGrid(x_axis, y_axis, values, x_label, y_label, sum(it for _, it in cells))


def phase_grid_single_site(config: SpinChainConfig, p: int, gp_grid: Sequence[float],
                           gm_grid: Sequence[float], snap_tol: float = DEFAULT_SNAP_TOL,
                           solver: str = DEFAULT_SOLVER, jobs: int = 1) -> PhaseGrid:
    """max Im(E) over the (gamma+, gamma-) plane for a single-site perturbation at p."""
    gp = _ascending(gp_grid, "gp_grid")
    gm = _ascending(gm_grid, "gm_grid")
    config.check_site(p)
    args = [
        (config, SingleSite(p, float(x), float(y)), 1.0, snap_tol, solver,
         {"gamma_plus": float(x), "gamma_minus": float(y)})
        for y in gm for x in gp
    ]
    cells = parallel_map(_cell_max_imag, args, jobs)
    logger.info("single-site phase grid at p=%d: %d x %d cells", p, len(gm), len(gp))
    return _phase_grid(cells, gp, gm, "gamma_plus", "gamma_minus")


def phase_grid_gamma_hz(config: SpinChainConfig, pert: PerturbationSpec, gamma_grid: Sequence[float],
                        hz_grid: Sequence[float], snap_tol: float = DEFAULT_SNAP_TOL,
                        solver: str = DEFAULT_SOLVER, jobs: int = 1) -> PhaseGrid:
    """max Im(E) over (gamma, h_z); the template's own field is ignored."""
    gammas = _ascending(gamma_grid, "gamma_grid")
    fields = _ascending(hz_grid, "hz_grid")
    if gammas[0] < 0:
        raise DomainError("gamma_grid must be >= 0")
    args = [
        (config.with_field(float(hz)), pert, float(g), snap_tol, solver, {"gamma": float(g), "hz": float(hz)})
        for hz in fields for g in gammas
    ]
    cells = parallel_map(_cell_max_imag, args, jobs)
    logger.info("gamma-hz phase grid: %d x %d cells", len(fields), len(gammas))
    return _phase_grid(cells, gammas, fields, "gamma", "hz")


def excludes_zero_field(classification: SiteClass, edge_sites: int) -> bool:
    """Categories whose threshold jumps between h_z = 0 and h_z = 0+."""
    if classification in (SiteClass.BULK_PAIR, SiteClass.SINGLE_BULK):
        return True
    return classification is SiteClass.EDGE_INVOLVED and edge_sites == 1


def _sample_threshold(config, pert, kwargs):
    try:
        return find_threshold(config, pert, **kwargs)
    except PTChainError as e:
        return e


def fit_field_response(config: SpinChainConfig, pert: PerturbationSpec, hz_samples: Sequence[float],
                       settings: Optional[ThresholdSettings] = None, jobs: int = 1,
                       fit_max_hz: Optional[float] = None) -> FieldResponseFit:
    """Least-squares line gamma_PT(h_z) = intercept + slope * h_z.

    The h_z = 0 sample is dropped for one-edge pairs, bulk pairs and single
    bulk sites, whose zero-field threshold is not the limit of small fields.
    Thresholds are searched at every sample; with fit_max_hz only samples
    h_z <= fit_max_hz enter the line, which confines it to the linear regime.
    """
    settings = settings or ThresholdSettings()
    if fit_max_hz is not None and not fit_max_hz > 0:
        raise DomainError(f"fit_max_hz must be > 0, got {fit_max_hz}")
    if isinstance(pert, NoPerturbation):
        raise DomainError("field response needs a perturbation")
    classification = classify_sites(config, pert)
    if classification is SiteClass.HERMITIAN:
        raise DomainError("Hermitian perturbation has no threshold to fit")
    edges = edge_site_count(config, pert)

    samples = [float(h) for h in hz_samples]
    if any(not math.isfinite(h) or h < 0 for h in samples):
        raise DomainError("hz_samples must be finite and >= 0")
    excluded = excludes_zero_field(classification, edges) and 0.0 in samples
    if excluded:
        samples = [h for h in samples if h != 0.0]
    window = [h for h in samples if fit_max_hz is None or h <= fit_max_hz]
    if len(set(window)) < 2:
        raise DomainError("field-response fit needs at least two distinct h_z samples"
                          + ("" if fit_max_hz is None else f" up to fit_max_hz={fit_max_hz:g}"))

    kwargs = settings.as_kwargs()
    outcomes = parallel_map(_sample_threshold, [(config.with_field(h), pert, kwargs) for h in samples], jobs)

    failed = []
    for h, outcome in zip(samples, outcomes):
        if isinstance(outcome, PTChainError):
            failed.append(f"hz={h:g} ({outcome})")
        elif not outcome.found:
            failed.append(f"hz={h:g} (no threshold below gamma_max)")
    if failed:
        raise SweepError("threshold search failed for " + "; ".join(failed), {})

    thresholds = [r.gamma_pt for r in outcomes]
    x = np.array([h for h in samples if h in window])
    y = np.array([t for h, t in zip(samples, thresholds) if h in window])
    fit = scipy.stats.linregress(x, y)
    residual = float(np.sqrt(np.mean((y - (fit.intercept + fit.slope * x)) ** 2)))
    logger.info("field response %s: slope=%.4g intercept=%.4g rms=%.2e over %d of %d samples",
                classification.value, fit.slope, fit.intercept, residual, x.size, len(samples))
    return FieldResponseFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        classification=classification,
        hz_samples=samples,
        thresholds=thresholds,
        residual=residual,
        stderr=float(fit.stderr),
        excluded_zero=excluded,
        edge_sites=edges,
        results=list(outcomes),
        fit_max_hz=fit_max_hz,
        fitted=int(x.size),
        iterations=sum(r.iterations for r in outcomes),
    )


def coupling_sweep(config: SpinChainConfig, pert: PerturbationSpec, j_grid: Sequence[float],
                   settings: Optional[ThresholdSettings] = None, jobs: int = 1) -> CouplingSweep:
    """gamma_PT at each coupling of j_grid with h_z held at the template's field.

    At J = 0 a sigma+/sigma- term sits on its exceptional point and the field
    moves it onto the real axis, so small J pushes the threshold past any
    gamma_max; such points come back as None rather than failing the sweep.
    """
    if config.field_hz == 0:
        raise DomainError("coupling sweep needs a nonzero field to measure J and gamma_PT against")
    if isinstance(pert, NoPerturbation):
        raise DomainError("coupling sweep needs a perturbation")
    grid = _ascending(j_grid, "J_grid")
    if grid[0] < 0:
        raise DomainError("J_grid must be >= 0")
    kwargs = (settings or ThresholdSettings()).as_kwargs()
    outcomes = parallel_map(_sample_threshold, [(config.with_coupling(float(j)), pert, kwargs) for j in grid], jobs)
    failed = [f"J={j:g} ({outcome})" for j, outcome in zip(grid, outcomes) if isinstance(outcome, PTChainError)]
    if failed:
        raise SweepError("threshold search failed for " + "; ".join(failed), {})
    logger.info("coupling sweep: %d couplings at h_z=%g, %d without a threshold",
                len(grid), config.field_hz, sum(1 for r in outcomes if not r.found))
    return CouplingSweep(
        field_hz=config.field_hz,
        j_grid=grid.tolist(),
        thresholds=[r.gamma_pt for r in outcomes],
        results=list(outcomes),
        iterations=sum(r.iterations for r in outcomes),
    )
