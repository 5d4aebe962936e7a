"""Frequency extraction from Toeplitz covariance estimates.

Root-MUSIC with known model order, the MUSIC pseudospectrum for plotting,
and the classical PSD-Toeplitz decomposition into atoms (frequencies plus
nonnegative powers) for round-trip validation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.optimize
from numpy.typing import NDArray

from .errors import DomainError, FullRankError
from .model import FrequencySet, ToeplitzSpec, toeplitz_embed

__all__ = [
    "SubspaceSplit",
    "PseudospectrumCurve",
    "VandermondeDecomposition",
    "subspace_split",
    "estimate_model_order",
    "root_music",
    "music_pseudospectrum",
    "vandermonde_decompose",
    "fit_powers",
    "toeplitz_first_row",
]


@dataclass(frozen=True, eq=False)
class SubspaceSplit:
    """Signal/noise eigenspace split of a Hermitian Toeplitz matrix.

    Eigenvalues are stored descending and clipped at zero (the input is
    projected onto the PSD cone first); the Frobenius distance moved by that
    projection is recorded.
    """

    signal_basis: NDArray[np.complex128]
    noise_basis: NDArray[np.complex128]
    eigenvalues: NDArray[np.float64]
    psd_projection_distance: float


class PseudospectrumCurve(NamedTuple):
    freqs: NDArray[np.float64]
    values: NDArray[np.float64]


class VandermondeDecomposition(NamedTuple):
    freqs: FrequencySet
    variances: NDArray[np.float64]


def _as_toeplitz(u) -> NDArray[np.complex128]:
    if isinstance(u, ToeplitzSpec):
        return toeplitz_embed(u.u)
    arr = np.asarray(u, dtype=complex)
    if arr.ndim == 1:
        return toeplitz_embed(arr)
    if arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
        return arr.copy()
    raise DomainError("expected a lag vector or a square matrix")


def subspace_split(u, r: int) -> SubspaceSplit:
    """Top-r eigenvectors as the signal basis, the rest as noise.

    Negative eigenvalues are clipped (PSD projection leaves eigenvectors
    unchanged); the clipped mass is reported as the projection distance.
    """
    T = _as_toeplitz(u)
    n = T.shape[0]
    if not (1 <= r < n):
        raise DomainError(f"model order {r} must satisfy 1 <= r < {n}")
    herm_gap = np.max(np.abs(T - T.conj().T), initial=0.0)
    if herm_gap > 1e-8 * max(1.0, np.abs(T).max(initial=0.0)):
        raise DomainError("matrix is not Hermitian")
    w, V = np.linalg.eigh((T + T.conj().T) / 2.0)
    w = w[::-1]
    V = V[:, ::-1]
    dist = float(np.sqrt(np.sum(np.minimum(w, 0.0) ** 2)))
    return SubspaceSplit(
        signal_basis=V[:, :r],
        noise_basis=V[:, r:],
        eigenvalues=np.maximum(w, 0.0),
        psd_projection_distance=dist,
    )


def estimate_model_order(u, rel_threshold: float = 1e-3) -> int:
    """Count of eigenvalues above ``rel_threshold`` times the largest.

    A crude gap rule for when the true order is unknown; every estimator
    here otherwise takes the order as an input.
    """
    T = _as_toeplitz(u)
    w = np.linalg.eigvalsh((T + T.conj().T) / 2.0)
    top = w.max(initial=0.0)
    if top <= 0:
        return 0
    return int(np.sum(w >= rel_threshold * top))


def _noise_poly_sums(noise_basis: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """Diagonal sums g_d of E E* for d = -(n-1) .. n-1, ascending."""
    C = noise_basis @ noise_basis.conj().T
    n = C.shape[0]
    return np.array([np.trace(C, offset=d) for d in range(-(n - 1), n)])


def _polish_minimum(g: NDArray[np.complex128], n: int, f: float) -> float:
    # Newton steps on q(f) = a(f)* E E* a(f); the circle roots of the noise
    # polynomial come in nearly-coincident pairs that the companion-matrix
    # rooter resolves to ~1e-6 only, while q has a clean quadratic minimum
    d = np.arange(-(n - 1), n)
    for _ in range(3):
        ph = np.exp(2j * np.pi * f * d)
        q1 = np.real(2j * np.pi * np.sum(d * g * ph)) / n
        q2 = np.real(-4.0 * np.pi**2 * np.sum(d * d * g * ph)) / n
        if q2 <= 0.0:
            break
        step = q1 / q2
        if abs(step) > 0.5 / n:
            break
        f -= step
    return f % 1.0


def root_music(u, r: int) -> FrequencySet:
    """Frequencies of the r roots hugging the unit circle from inside.

    The noise-subspace polynomial has 2(n-1) roots in conjugate-reciprocal
    pairs; the inner half is kept, the r closest to the circle (largest
    modulus) are taken, and each angle is polished by a few Newton steps on
    the subspace projection (the rooter alone loses precision on the
    near-double circle roots of exactly low-rank inputs).
    """
    split = subspace_split(u, r)
    g = _noise_poly_sums(split.noise_basis)
    coeffs = g[::-1]
    roots = np.roots(coeffs)
    if roots.size < 2 * r:
        raise DomainError("noise polynomial degenerated below the model order")
    n = split.noise_basis.shape[0]
    mods = np.abs(roots)
    inner = roots[np.argsort(mods)[: roots.size // 2]]
    chosen = inner[np.argsort(np.abs(inner))[-r:]]
    fs = np.mod(np.angle(chosen) / (2.0 * np.pi), 1.0)
    fs = np.array([_polish_minimum(g, n, f) for f in fs])
    return FrequencySet(fs)


def music_pseudospectrum(u, r: int, grid_size: int = 4096) -> PseudospectrumCurve:
    """Sampled 1 / ||E_noise* a(f)||^2 on a uniform frequency grid.

    Exactly rank-r input makes the curve diverge at the true frequencies;
    the reciprocal of a zero projection is returned as inf, not an error.
    """
    split = subspace_split(u, r)
    n = split.noise_basis.shape[0]
    if grid_size < 2 * n:
        raise DomainError(f"grid_size {grid_size} below 2n = {2 * n}")
    G = int(grid_size)
    g = _noise_poly_sums(split.noise_basis)
    h = np.zeros(G, dtype=complex)
    for d, val in zip(range(-(n - 1), n), g):
        h[d % G] += val
    p = np.real(G * np.fft.ifft(h)) / n
    p = np.maximum(p, 0.0)
    with np.errstate(divide="ignore"):
        S = 1.0 / p
    return PseudospectrumCurve(np.arange(G) / G, S)


def vandermonde_decompose(u, tol: float = 1e-8) -> VandermondeDecomposition:
    """Split a PSD Toeplitz matrix into frequencies and positive powers.

    Rebuilding the lag vector from the returned pairs reproduces the input
    within ``tol * ||u||`` whenever the numerical rank is below n.

    Raises
    ------
    DomainError
        Input not PSD within tol.
    FullRankError
        Numerical rank n; no strict decomposition with fewer than n atoms.
    """
    T = _as_toeplitz(u)
    n = T.shape[0]
    w = np.linalg.eigvalsh((T + T.conj().T) / 2.0)
    top = w.max(initial=0.0)
    if w.min(initial=0.0) < -tol * max(1.0, top):
        raise DomainError("matrix is not PSD within tolerance")
    rank = int(np.sum(w > tol * max(top, 0.0))) if top > 0 else 0
    if rank == 0:
        return VandermondeDecomposition(FrequencySet([]), np.zeros(0))
    if rank >= n:
        raise FullRankError("full numerical rank; no low-order decomposition exists")
    fs = root_music(T, rank)
    var = fit_powers(T, fs)
    keep = var > 0
    return VandermondeDecomposition(FrequencySet(fs.as_array()[keep]), var[keep])


def fit_powers(u, freqs) -> NDArray[np.float64]:
    """Nonnegative per-frequency powers matching the lag vector in least squares.

    Useful after ``root_music`` when the model order is known; the fit is on
    the stacked real and imaginary parts of the lag equations.
    """
    T = _as_toeplitz(u)
    n = T.shape[0]
    fs = np.asarray(list(freqs), dtype=float)
    d = np.arange(n)
    A = np.exp(-2j * np.pi * np.outer(d, fs)) / n
    lag = toeplitz_first_row(T)
    stacked = np.vstack([A.real, A.imag])
    target = np.concatenate([lag.real, lag.imag])
    var, _ = scipy.optimize.nnls(stacked, target)
    return var


def toeplitz_first_row(T: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """Lag vector read off the first row (averaging with the column's conjugate)."""
    return (T[0, :] + T[:, 0].conj()) / 2.0
