"""Signal model: unit-norm sinusoidal atoms, Toeplitz linear operators,
observation masks, and seeded random instance generation.

Conventions used throughout the package:

* Time indices are 0-based: ``atom(f, n)[i] = exp(2j*pi*f*i) / sqrt(n)``.
* Frequencies live on the circle ``[0, 1)`` and all comparisons use the
  wrap-around metric ``min(|d|, 1 - |d|)``.
* A Hermitian Toeplitz matrix is described by its lag vector ``u`` where
  ``u[d]`` is the constant value on super-diagonal ``d``; that is,
  ``T(u)[p, q] = u[q - p]`` for ``q >= p`` and conjugate symmetry below.
* ``diag_sum(A)[d]`` sums super-diagonal ``d`` (``d = 0`` is the main
  diagonal); this is the 1-based "q - p + 1 = i" map shifted to 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import DomainError

__all__ = [
    "FrequencySet",
    "CoefficientMatrix",
    "SignalEnsemble",
    "ObservationMask",
    "ToeplitzSpec",
    "rng_from_seed",
    "atom",
    "synthesize",
    "toeplitz_embed",
    "diag_sum",
    "toeplitz_adjoint",
    "upsilon_weights",
    "wrap_distance",
    "min_separation",
    "is_complete_sparse_ruler",
    "sample_coefficients",
    "mask_project",
    "draw_frequencies",
]

# Two frequencies closer than this (wrap-around) are considered duplicates.
DUPLICATE_TOL = 1e-12


def rng_from_seed(seed: int, word: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, word)``.

    Philox is counter-based, so streams built from distinct keys are
    independent and reproducible regardless of draw order.
    """
    lo = int(seed) & 0xFFFFFFFFFFFFFFFF
    hi = int(word) & 0xFFFFFFFFFFFFFFFF
    return np.random.Generator(np.random.Philox(key=(hi << 64) | lo))


def wrap_distance(a, b):
    """Wrap-around distance on the unit circle, elementwise."""
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % 1.0
    return np.minimum(d, 1.0 - d)


@dataclass(frozen=True)
class FrequencySet:
    """Ordered distinct frequencies on the unit circle.

    Values are stored sorted; construction rejects out-of-range values and
    pairs closer than ``DUPLICATE_TOL`` in wrap-around distance.
    """

    freqs: tuple[float, ...]

    def __init__(self, values):
        vals = tuple(sorted(float(v) for v in values))
        for v in vals:
            if not (0.0 <= v < 1.0):
                raise DomainError(f"frequency {v} outside [0, 1)")
        for a, b in zip(vals, vals[1:]):
            if wrap_distance(a, b) <= DUPLICATE_TOL:
                raise DomainError(f"duplicate frequencies {a} and {b}")
        if len(vals) >= 2 and wrap_distance(vals[0], vals[-1]) <= DUPLICATE_TOL:
            raise DomainError(f"duplicate frequencies {vals[0]} and {vals[-1]} (wrap-around)")
        object.__setattr__(self, "freqs", vals)

    def __len__(self) -> int:
        return len(self.freqs)

    def __iter__(self):
        return iter(self.freqs)

    def __getitem__(self, k):
        return self.freqs[k]

    def as_array(self) -> NDArray[np.float64]:
        return np.asarray(self.freqs, dtype=float)


@dataclass(frozen=True, eq=False)
class CoefficientMatrix:
    """r x L complex coefficient matrix, one row per frequency."""

    entries: NDArray[np.complex128]

    def __init__(self, entries):
        arr = np.atleast_2d(np.asarray(entries, dtype=complex))
        if arr.ndim != 2:
            raise DomainError("coefficient matrix must be 2-D")
        if arr.size and not np.all(np.isfinite(arr)):
            raise DomainError("coefficient matrix has non-finite entries")
        object.__setattr__(self, "entries", arr)

    @property
    def r(self) -> int:
        return self.entries.shape[0]

    @property
    def L(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True, eq=False)
class SignalEnsemble:
    """n x L complex matrix of L length-n snapshots sharing one spectrum."""

    data: NDArray[np.complex128]

    def __init__(self, data):
        arr = np.asarray(data, dtype=complex)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DomainError("ensemble must be a nonempty 2-D array")
        if not np.all(np.isfinite(arr)):
            raise DomainError("ensemble has non-finite entries")
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def L(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class ObservationMask:
    """Observation pattern for an n x L ensemble.

    Three kinds:

    * ``full``: every entry observed.
    * ``common-rows``: the same row subset (the set Omega, size m) is
      observed in every snapshot.
    * ``entrywise``: an arbitrary set of (row, column) cells, columns
      0-based.
    """

    kind: str
    n: int
    L: int
    rows: tuple[int, ...] = ()
    cells: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        if self.kind not in ("full", "common-rows", "entrywise"):
            raise DomainError(f"unknown mask kind {self.kind!r}")
        if self.n < 1 or self.L < 1:
            raise DomainError("mask dimensions must be positive")
        if self.kind == "common-rows":
            rows = tuple(sorted(int(i) for i in self.rows))
            if len(set(rows)) != len(rows):
                raise DomainError("duplicate rows in mask")
            if rows and not (0 <= rows[0] and rows[-1] < self.n):
                raise DomainError("mask row index out of range")
            if len(rows) > self.n:
                raise DomainError("mask size m exceeds n")
            object.__setattr__(self, "rows", rows)
        elif self.kind == "entrywise":
            cells = tuple(sorted((int(i), int(l)) for i, l in self.cells))
            if len(set(cells)) != len(cells):
                raise DomainError("duplicate cells in mask")
            for i, l in cells:
                if not (0 <= i < self.n and 0 <= l < self.L):
                    raise DomainError(f"mask cell ({i}, {l}) out of range")
            object.__setattr__(self, "cells", cells)

    @classmethod
    def full(cls, n: int, L: int) -> "ObservationMask":
        return cls("full", n, L)

    @classmethod
    def common_rows(cls, omega, n: int, L: int) -> "ObservationMask":
        return cls("common-rows", n, L, rows=tuple(omega))

    @classmethod
    def entrywise(cls, cells, n: int, L: int) -> "ObservationMask":
        return cls("entrywise", n, L, cells=tuple(cells))

    @property
    def m(self) -> int:
        """Number of observed rows (common-rows masks only)."""
        if self.kind != "common-rows":
            raise DomainError("m is defined for common-rows masks only")
        return len(self.rows)

    def bool_array(self) -> NDArray[np.bool_]:
        """Dense n x L indicator of observed entries."""
        if self.kind == "full":
            return np.ones((self.n, self.L), dtype=bool)
        out = np.zeros((self.n, self.L), dtype=bool)
        if self.kind == "common-rows":
            out[list(self.rows), :] = True
        else:
            for i, l in self.cells:
                out[i, l] = True
        return out

    def observed_count(self) -> int:
        return int(self.bool_array().sum())


@dataclass(frozen=True, eq=False)
class ToeplitzSpec:
    """Lag vector u of a Hermitian Toeplitz matrix T(u), with PSD tolerance.

    ``u[d]`` is the value on super-diagonal ``d``; the main-diagonal value
    ``u[0]`` must be real.
    """

    u: NDArray[np.complex128]
    psd_tol: float = 1e-8

    def __init__(self, u, psd_tol: float = 1e-8):
        arr = np.asarray(u, dtype=complex).ravel().copy()
        if arr.size < 1:
            raise DomainError("lag vector must be nonempty")
        if not np.all(np.isfinite(arr)):
            raise DomainError("lag vector has non-finite entries")
        if abs(arr[0].imag) > 1e-10 * max(1.0, abs(arr[0])):
            raise DomainError("u[0] must be real (Hermitian diagonal)")
        arr[0] = arr[0].real
        if psd_tol < 0:
            raise DomainError("psd_tol must be nonnegative")
        object.__setattr__(self, "u", arr)
        object.__setattr__(self, "psd_tol", float(psd_tol))

    @property
    def n(self) -> int:
        return self.u.size

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(toeplitz_embed(self))[0])

    def is_psd(self) -> bool:
        return self.min_eigenvalue() >= -self.psd_tol


def atom(f: float, n: int) -> NDArray[np.complex128]:
    """Unit-norm sinusoid ``exp(2j*pi*f*i)/sqrt(n)``, ``i = 0..n-1``.

    Parameters
    ----------
    f : float
        Frequency in ``[0, 1)``.
    n : int
        Signal length, at least 1.
    """
    if n < 1:
        raise DomainError("atom length must be positive")
    if not (0.0 <= f < 1.0):
        raise DomainError(f"frequency {f} outside [0, 1)")
    i = np.arange(n)
    return np.exp(2j * np.pi * f * i) / np.sqrt(n)


def steering_matrix(freqs, n: int) -> NDArray[np.complex128]:
    """n x r matrix with columns ``atom(f_k, n)``."""
    fs = list(freqs)
    if not fs:
        return np.zeros((n, 0), dtype=complex)
    i = np.arange(n)[:, None]
    f = np.asarray(fs, dtype=float)[None, :]
    return np.exp(2j * np.pi * f * i) / np.sqrt(n)


def synthesize(freqs, coeffs, n: int) -> SignalEnsemble:
    """Build the ensemble X = V C from frequencies and coefficients.

    Parameters
    ----------
    freqs : FrequencySet or sequence of float
    coeffs : CoefficientMatrix or array_like, shape (r, L)
    n : int
        Ambient signal length.
    """
    C = coeffs.entries if isinstance(coeffs, CoefficientMatrix) else np.atleast_2d(np.asarray(coeffs, dtype=complex))
    fs = list(freqs)
    if C.shape[0] != len(fs):
        raise DomainError(f"coefficient rows {C.shape[0]} != frequency count {len(fs)}")
    if n < 1:
        raise DomainError("ambient length must be positive")
    if len(fs) == 0:
        L = C.shape[1] if C.ndim == 2 and C.shape[1] >= 1 else 1
        return SignalEnsemble(np.zeros((n, L), dtype=complex))
    V = steering_matrix(fs, n)
    return SignalEnsemble(V @ C)


def toeplitz_embed(u) -> NDArray[np.complex128]:
    """Hermitian Toeplitz matrix with ``u[q - p]`` at entry (p, q), q >= p."""
    vec = u.u if isinstance(u, ToeplitzSpec) else np.asarray(u, dtype=complex).ravel()
    n = vec.size
    idx = np.arange(n)
    lag = idx[None, :] - idx[:, None]          # q - p
    T = np.where(lag >= 0, vec[np.abs(lag)], np.conj(vec[np.abs(lag)]))
    return T


def diag_sum(A) -> NDArray[np.complex128]:
    """Vector of super-diagonal sums; entry d sums ``A[p, p + d]``."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError("diag_sum requires a square matrix")
    n = A.shape[0]
    return np.array([np.trace(A, offset=d) for d in range(n)], dtype=complex)


def toeplitz_adjoint(A) -> NDArray[np.complex128]:
    """Adjoint of the Toeplitz embedding under the real inner product.

    For Hermitian A and any u, ``Re<A, T(u)> == Re<toeplitz_adjoint(A), u>``.
    The main diagonal counts once; every other lag appears on both sides of
    the diagonal, hence the factor 2.
    """
    g = diag_sum(A)
    g[1:] *= 2.0
    return g


def upsilon_weights(n: int) -> NDArray[np.float64]:
    """Per-lag averaging weights 1/(n - d), d = 0..n-1."""
    if n < 1:
        raise DomainError("n must be positive")
    return 1.0 / (n - np.arange(n))


def min_separation(freqs) -> float:
    """Smallest pairwise wrap-around distance within the set."""
    fs = np.sort(np.asarray(list(freqs), dtype=float))
    if fs.size < 2:
        raise DomainError("minimum separation needs at least two frequencies")
    gaps = np.diff(np.concatenate([fs, [fs[0] + 1.0]]))
    return float(gaps.min())


def is_complete_sparse_ruler(omega, n: int) -> bool:
    """True iff every lag 0..n-1 is a difference of two indices in omega."""
    idx = sorted(set(int(i) for i in omega))
    if idx and (idx[0] < 0 or idx[-1] >= n):
        raise DomainError("index out of range")
    diffs = {q - p for p in idx for q in idx if q >= p}
    return all(d in diffs for d in range(n))


def sample_coefficients(r: int, L: int, variances, seed: int) -> CoefficientMatrix:
    """Circular complex Gaussian coefficients, row k with variance sigma_k^2.

    Deterministic given ``seed``; rows are mutually independent and entries
    within a row are i.i.d.
    """
    var = np.asarray(variances, dtype=float).ravel()
    if var.size != r:
        raise DomainError(f"need {r} variances, got {var.size}")
    if np.any(var < 0):
        raise DomainError("variances must be nonnegative")
    rng = rng_from_seed(seed)
    z = rng.standard_normal((r, L)) + 1j * rng.standard_normal((r, L))
    return CoefficientMatrix(z * np.sqrt(var / 2.0)[:, None])


def mask_project(X, mask: ObservationMask):
    """Apply an observation mask.

    Entrywise and full masks zero out (or keep) entries of an n x L array.
    Common-rows masks extract the observed rows; for a square n x n matrix
    they extract the principal submatrix on rows and columns Omega.
    """
    A = X.data if isinstance(X, SignalEnsemble) else np.asarray(X, dtype=complex)
    if mask.kind == "full":
        if A.shape[0] != mask.n:
            raise DomainError("mask/array shape mismatch")
        return A.copy()
    if mask.kind == "entrywise":
        if A.shape != (mask.n, mask.L):
            raise DomainError("mask/array shape mismatch")
        out = np.zeros_like(A)
        sel = mask.bool_array()
        out[sel] = A[sel]
        return out
    # common-rows
    rows = list(mask.rows)
    if A.ndim == 2 and A.shape[0] == A.shape[1] == mask.n:
        return A[np.ix_(rows, rows)]
    if A.shape[0] != mask.n:
        raise DomainError("mask/array shape mismatch")
    return A[rows, :]


def draw_frequencies(r: int, seed_or_rng, min_sep: float = 0.0,
                     max_tries: int = 100000) -> FrequencySet:
    """Uniform frequencies on [0, 1), rejection-sampled to honor min_sep."""
    if r < 0:
        raise DomainError("r must be nonnegative")
    if min_sep * r >= 1.0:
        raise DomainError(f"cannot place {r} frequencies at separation {min_sep}")
    rng = seed_or_rng if isinstance(seed_or_rng, np.random.Generator) else rng_from_seed(seed_or_rng)
    if r == 0:
        return FrequencySet(())
    for _ in range(max_tries):
        f = np.sort(rng.random(r))
        if r == 1 or min_separation(f) >= max(min_sep, DUPLICATE_TOL * 10):
            return FrequencySet(f)
    raise DomainError("rejection sampling failed; separation too demanding")
