"""Dense eigenvalues of real nonsymmetric matrices.

The in-house path is balance -> Householder Hessenberg -> Francis implicit
double-shift QR on the Hessenberg matrix, eigenvalues only (Schur vectors are
never accumulated, so each QR step only touches the active window). The
"lapack" path keeps the balancing and hands the matrix to LAPACK's dense
nonsymmetric driver, which runs the same algorithm family in compiled code.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import numpy.typing as npt
import scipy.linalg
import scipy.optimize

from ptchain.errors import ConvergenceError, DomainError, NumericError

logger = logging.getLogger(__name__)

EPS = float(np.finfo(np.float64).eps)
SOLVERS = ("francis", "lapack")
DEFAULT_MAX_ITER_PER_EIG = 30
EXCEPTIONAL_SHIFT_EVERY = 10

_RADIX = 2.0
_SQRDX = _RADIX * _RADIX


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues (with multiplicity) of one matrix plus solver diagnostics.

    `scale` is the Frobenius norm of the input matrix; `max_residual` is the
    trace-moment residual (see `trace_moment_residual`).
    """

    eigenvalues: npt.NDArray[np.complex128]
    max_residual: float
    iterations: int
    solver: str = "francis"
    scale: float = 0.0

    def __len__(self) -> int:
        return len(self.eigenvalues)

    @property
    def real(self) -> np.ndarray:
        return self.eigenvalues.real

    @property
    def imag(self) -> np.ndarray:
        return self.eigenvalues.imag

    def sorted(self) -> np.ndarray:
        """Eigenvalues ordered by real part, then imaginary part."""
        vals = self.eigenvalues
        return vals[np.lexsort((vals.imag, vals.real))]


@dataclass(frozen=True, eq=False)
class BalanceRecord:
    """Diagonal similarity D with balanced = D^-1 @ m @ D (powers of two)."""

    scaling: np.ndarray
    sweeps: int


def _as_square_real(m) -> np.ndarray:
    a = np.array(m, dtype=np.float64, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericError("matrix has non-finite entries")
    return a


def balance(m) -> Tuple[np.ndarray, BalanceRecord]:
    """Scale rows and columns by powers of two until their 1-norms roughly match."""
    a = _as_square_real(m)
    n = a.shape[0]
    scaling = np.ones(n)
    sweeps = 0
    done = n < 2
    while not done:
        done = True
        sweeps += 1
        for i in range(n):
            col = np.abs(a[:, i])
            row = np.abs(a[i, :])
            col[i] = 0.0
            row[i] = 0.0
            c = col.sum()
            r = row.sum()
            if c == 0.0 or r == 0.0:
                continue
            g = r / _RADIX
            f = 1.0
            s = c + r
            while c < g:
                f *= _RADIX
                c *= _SQRDX
            g = r * _RADIX
            while c > g:
                f /= _RADIX
                c /= _SQRDX
            if (c + r) / f < 0.95 * s:
                done = False
                scaling[i] *= f
                a[i, :] /= f
                a[:, i] *= f
    return a, BalanceRecord(scaling=scaling, sweeps=sweeps)


def hessenberg(m) -> np.ndarray:
    """Orthogonally similar upper Hessenberg form via Householder reflections."""
    a = _as_square_real(m)
    n = a.shape[0]
    for k in range(n - 2):
        x = a[k + 1:, k]
        if not np.any(x[1:]):
            continue
        norm_x = float(np.linalg.norm(x))
        alpha = -math.copysign(norm_x, x[0])
        v = x.copy()
        v[0] -= alpha
        v /= np.linalg.norm(v)
        a[k + 1:, k:] -= 2.0 * np.outer(v, v @ a[k + 1:, k:])
        a[:, k + 1:] -= 2.0 * np.outer(a[:, k + 1:] @ v, v)
        a[k + 1, k] = alpha
        a[k + 2:, k] = 0.0
    return a


def real_schur_eigenvalues(h, max_iter_per_eig: int = DEFAULT_MAX_ITER_PER_EIG,
                           tol: Optional[float] = None) -> Spectrum:
    """Francis double-shift QR on an upper Hessenberg matrix.

    Deflates when |h[i+1,i]| <= tol * (|h[i,i]| + |h[i+1,i+1]|) and reads the
    eigenvalues off the 1x1 and 2x2 diagonal blocks. An ad-hoc exceptional
    shift is used after every 10 iterations without a deflation; the total
    number of iterations is capped at max_iter_per_eig * dim.
    """
    a = _as_square_real(h)
    n = a.shape[0]
    if n == 0:
        return Spectrum(np.zeros(0, dtype=complex), 0.0, 0, "francis", 0.0)
    if np.any(np.tril(a, -2)):
        raise DomainError("real_schur_eigenvalues expects an upper Hessenberg matrix")
    eps = EPS if tol is None else float(tol)
    scale = float(np.linalg.norm(a))

    wr = np.zeros(n)
    wi = np.zeros(n)
    anorm = float(np.abs(np.triu(a, -1)).sum())
    cap = max_iter_per_eig * n
    total = 0
    shift = 0.0
    nn = n - 1

    while nn >= 0:
        its = 0
        while True:
            l = nn
            while l > 0:
                s = abs(a[l - 1, l - 1]) + abs(a[l, l])
                if s == 0.0:
                    s = anorm
                if abs(a[l, l - 1]) <= eps * s:
                    a[l, l - 1] = 0.0
                    break
                l -= 1

            x = a[nn, nn]
            if l == nn:
                wr[nn] = x + shift
                nn -= 1
                break

            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = math.sqrt(abs(q))
                x += shift
                if q >= 0.0:
                    z = p + math.copysign(z, p)
                    wr[nn - 1] = wr[nn] = x + z
                    if z != 0.0:
                        wr[nn] = x - w / z
                else:
                    wr[nn - 1] = wr[nn] = x + p
                    wi[nn - 1] = z
                    wi[nn] = -z
                nn -= 2
                break

            if total >= cap:
                partial = wr[nn + 1:] + 1j * wi[nn + 1:]
                raise ConvergenceError(
                    f"QR iteration did not converge after {total} iterations "
                    f"({n - nn - 1} of {n} eigenvalues found)",
                    partial=partial,
                    iterations=total,
                )
            if its > 0 and its % EXCEPTIONAL_SHIFT_EVERY == 0:
                shift += x
                diag = np.arange(nn + 1)
                a[diag, diag] -= x
                s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                x = y = 0.75 * s
                w = -0.4375 * s * s
                logger.debug("exceptional shift at nn=%d after %d iterations", nn, its)
            its += 1
            total += 1

            # Look for two consecutive small subdiagonal elements.
            m = nn - 2
            while True:
                z = a[m, m]
                r = x - z
                s = y - z
                p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                q = a[m + 1, m + 1] - z - r - s
                r = a[m + 2, m + 1]
                s = abs(p) + abs(q) + abs(r)
                if s != 0.0:
                    p /= s
                    q /= s
                    r /= s
                if m == l:
                    break
                u = abs(a[m, m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
                if u <= eps * v:
                    break
                m -= 1

            for i in range(m, nn - 1):
                a[i + 2, i] = 0.0
                if i != m:
                    a[i + 2, i - 1] = 0.0

            # Chase the bulge from row m down to nn.
            for k in range(m, nn):
                if k != m:
                    p = a[k, k - 1]
                    q = a[k + 1, k - 1]
                    r = a[k + 2, k - 1] if k + 1 != nn else 0.0
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = math.copysign(math.sqrt(p * p + q * q + r * r), p)
                if s == 0.0:
                    continue
                if k == m:
                    if l != m:
                        a[k, k - 1] = -a[k, k - 1]
                else:
                    a[k, k - 1] = -s * x
                p += s
                x = p / s
                y = q / s
                z = r / s
                q /= p
                r /= p
                three = k + 1 != nn

                cols = slice(k, nn + 1)
                pv = a[k, cols] + q * a[k + 1, cols]
                if three:
                    pv += r * a[k + 2, cols]
                    a[k + 2, cols] -= pv * z
                a[k + 1, cols] -= pv * y
                a[k, cols] -= pv * x

                rows = slice(l, min(nn, k + 3) + 1)
                pv = x * a[rows, k] + y * a[rows, k + 1]
                if three:
                    pv += z * a[rows, k + 2]
                    a[rows, k + 2] -= pv * r
                a[rows, k + 1] -= pv * q
                a[rows, k] -= pv

    values = wr + 1j * wi
    return Spectrum(values, trace_moment_residual(h, values), total, "francis", scale)


def trace_moment_residual(m, values) -> float:
    """max over k in {1, 2} of |sum(lambda^k) - tr(m^k)| / (dim * ||m||_inf^k)."""
    a = np.asarray(m, dtype=np.float64)
    n = a.shape[0]
    if n == 0:
        return 0.0
    vals = np.asarray(values, dtype=complex)
    norm_inf = float(np.abs(a).sum(axis=1).max())
    first = abs(vals.sum() - np.trace(a))
    second = abs((vals * vals).sum() - np.sum(a * a.T))
    if norm_inf == 0.0:
        return float(max(first, second))
    return float(max(first / (n * norm_inf), second / (n * norm_inf ** 2)))


def eigenvalues(m, solver: str = "francis", max_iter_per_eig: int = DEFAULT_MAX_ITER_PER_EIG,
                tol: Optional[float] = None) -> Spectrum:
    """Full complex spectrum of a real square matrix."""
    if solver not in SOLVERS:
        raise DomainError(f"unknown solver {solver!r}; expected one of {SOLVERS}")
    a = _as_square_real(m)
    scale = float(np.linalg.norm(a))
    balanced, record = balance(a)

    if solver == "francis":
        spectrum = real_schur_eigenvalues(hessenberg(balanced), max_iter_per_eig, tol)
        values, iterations = spectrum.eigenvalues, spectrum.iterations
    else:
        try:
            values = scipy.linalg.eigvals(balanced, check_finite=False, overwrite_a=True)
        except scipy.linalg.LinAlgError as e:
            raise NumericError(f"LAPACK eigenvalue driver failed: {e}") from e
        values = np.asarray(values, dtype=complex)
        iterations = 0

    residual = trace_moment_residual(a, values)
    logger.debug("%s solver: dim=%d, balance sweeps=%d, iterations=%d, residual=%.2e",
                 solver, a.shape[0], record.sweeps, iterations, residual)
    return Spectrum(values, residual, iterations, solver, scale)


def eigenvalue_conditions(m) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues with their condition numbers 1 / |y^H x| (unit left/right eigenvectors).

    Uses LAPACK with eigenvectors; the vectors themselves are discarded.
    """
    a = _as_square_real(m)
    try:
        values, left, right = scipy.linalg.eig(a, left=True, right=True, check_finite=False)
    except scipy.linalg.LinAlgError as e:
        raise NumericError(f"LAPACK eigenvector driver failed: {e}") from e
    overlap = np.abs(np.einsum("ij,ij->j", left.conj(), right))
    with np.errstate(divide="ignore"):
        kappa = np.where(overlap > 0, 1.0 / overlap, np.inf)
    return np.asarray(values, dtype=complex), kappa


def characteristic_polynomial(m) -> np.ndarray:
    """Faddeev-LeVerrier coefficients of det(lambda I - m), highest power first."""
    a = _as_square_real(m)
    n = a.shape[0]
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    ident = np.eye(n)
    mk = np.zeros_like(a)
    for k in range(1, n + 1):
        mk = a @ mk + coeffs[k - 1] * ident
        coeffs[k] = -np.trace(a @ mk) / k
    return coeffs


def charpoly_roots(m) -> np.ndarray:
    """Eigenvalues as roots of the characteristic polynomial; an independent oracle for small matrices."""
    return np.asarray(np.roots(characteristic_polynomial(m)), dtype=complex)


def spectrum_distance(a, b) -> float:
    """Largest deviation after optimally pairing two eigenvalue multisets."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.shape != b.shape:
        raise DomainError(f"spectra differ in size: {a.size} vs {b.size}")
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = scipy.optimize.linear_sum_assignment(cost)
    return float(cost[rows, cols].max())
