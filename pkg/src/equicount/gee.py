"""The Gaussian Elliptic Ensemble: sampling, ordered spectra, joint density.

The ensemble at size n and parameter tau in (-1, 1] consists of real n x n
matrices with E[X_ij X_lk] = (delta_il delta_jk + tau delta_ik delta_jl) / n.
It is realized exactly as X = a G + b G^T with G iid centered Gaussian of
variance 1/n and a, b = (sqrt(1+tau) +- sqrt(1-tau)) / 2, which gives
a^2 + b^2 = 1 and 2ab = tau. tau = 0 is the real Ginibre ensemble, tau = 1
the GOE.

Ordering convention: eigenvalues sorted by decreasing real part; among members
of a conjugate pair the one with positive imaginary part comes first. Realness
is structural (1 x 1 vs 2 x 2 blocks of the real Schur form), never an
|Im| < eps test: the LAPACK drivers set the imaginary part of real eigenvalues
to an exact zero, so events like {lambda_m real} carry no threshold bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import DomainError, EigensolverError
from .sampling import DEFAULT_BATCH_SIZE, MCEstimate, batch_sizes, substream
from .special_functions import log_erfc, log_norm_constant


@dataclass(frozen=True)
class GeeMatrix:
    """A sampled ensemble member."""

    n: int
    tau: float
    entries: np.ndarray

    def __post_init__(self):
        if self.entries.shape != (self.n, self.n):
            raise DomainError(
                f"entries shape {self.entries.shape} does not match n={self.n}"
            )
        if not np.all(np.isfinite(self.entries)):
            raise DomainError("matrix entries must be finite")


@dataclass(frozen=True)
class RealSpectrumPoint:
    """One ordered eigenvalue with its structural realness flag."""

    re: float
    im: float
    is_real: bool

    def __post_init__(self):
        if self.is_real and self.im != 0.0:
            raise DomainError("structurally real eigenvalues must have im == 0 exactly")


@dataclass(frozen=True)
class Spectrum:
    """Ordered eigenvalues of one matrix.

    ``values`` is complex, sorted by decreasing real part with the positive
    imaginary member of each conjugate pair first; ``is_real`` marks the
    structurally real entries. Exactly equal real parts beyond the
    conjugate-pair rule are measure zero and resolved by a stable sort that
    preserves conjugate adjacency.
    """

    values: np.ndarray
    is_real: np.ndarray
    n: int

    def __post_init__(self):
        if self.values.shape != (self.n,) or self.is_real.shape != (self.n,):
            raise DomainError("spectrum arrays must have shape (n,)")

    @property
    def k_real(self) -> int:
        return int(self.is_real.sum())


def _mixing_coefficients(tau: float) -> tuple[float, float]:
    a = 0.5 * (math.sqrt(1.0 + tau) + math.sqrt(1.0 - tau))
    b = 0.5 * (math.sqrt(1.0 + tau) - math.sqrt(1.0 - tau))
    return a, b


def sample_gee(n: int, tau: float, rng: np.random.Generator) -> GeeMatrix:
    """Draw one ensemble member (tau = 1 gives an exactly symmetric matrix)."""
    if n < 1:
        raise DomainError(f"sample_gee requires n >= 1, got {n}")
    tau = float(tau)
    if not -1.0 < tau <= 1.0:
        raise DomainError(f"sample_gee requires -1 < tau <= 1, got tau={tau}")
    a, b = _mixing_coefficients(tau)
    g = rng.standard_normal((n, n)) / math.sqrt(n)
    entries = a * g + b * g.T
    return GeeMatrix(n=n, tau=tau, entries=entries)


def sample_gee_entries(n: int, tau: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """(size, n, n) stack of ensemble members; the batch workhorse."""
    if not -1.0 < tau <= 1.0:
        raise DomainError(f"sample_gee_entries requires -1 < tau <= 1, got tau={tau}")
    a, b = _mixing_coefficients(tau)
    g = rng.standard_normal((size, n, n)) / math.sqrt(n)
    return a * g + b * np.swapaxes(g, 1, 2)


def _order_key(values: np.ndarray) -> np.ndarray:
    # Complex sort is lexicographic (real, then imaginary); negating both parts
    # yields decreasing real part with +im before -im inside a conjugate pair.
    return -values.real - 1j * values.imag


def spectrum(m: GeeMatrix) -> Spectrum:
    """Ordered spectrum via the real Schur form.

    1 x 1 diagonal blocks are the structurally real eigenvalues; 2 x 2 blocks
    carry conjugate pairs (LAPACK standardizes blocks so a 2 x 2 block never
    holds real eigenvalues).
    """
    try:
        t_mat, _ = linalg.schur(m.entries, output="real")
    except (linalg.LinAlgError, ValueError) as exc:
        raise EigensolverError(f"real Schur decomposition failed: {exc}", matrix=m.entries) from exc
    n = m.n
    values = np.empty(n, dtype=complex)
    is_real = np.zeros(n, dtype=bool)
    i = 0
    while i < n:
        if i + 1 < n and t_mat[i + 1, i] != 0.0:
            a_, b_ = t_mat[i, i], t_mat[i, i + 1]
            c_, d_ = t_mat[i + 1, i], t_mat[i + 1, i + 1]
            re = 0.5 * (a_ + d_)
            disc = (a_ - d_) ** 2 + 4.0 * b_ * c_
            im = 0.5 * math.sqrt(-disc)
            values[i] = re + 1j * im
            values[i + 1] = re - 1j * im
            i += 2
        else:
            values[i] = t_mat[i, i]
            is_real[i] = True
            i += 1
    order = np.argsort(_order_key(values), kind="stable")
    return Spectrum(values=values[order], is_real=is_real[order], n=n)


def eigvals_batch(mats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ordered eigenvalues and structural realness for a (batch, n, n) stack.

    n = 2 uses the exact quadratic formula (realness = nonnegative
    discriminant, an exact-arithmetic statement about the entries); larger n
    goes through the LAPACK nonsymmetric eigensolver, whose real eigenvalues
    come back with an exact zero imaginary part. Both criteria agree with the
    Schur-block classification of :func:`spectrum`.
    """
    batch, n, _ = mats.shape
    if n == 2:
        tr = mats[:, 0, 0] + mats[:, 1, 1]
        det = mats[:, 0, 0] * mats[:, 1, 1] - mats[:, 0, 1] * mats[:, 1, 0]
        disc = tr * tr - 4.0 * det
        real_pair = disc >= 0.0
        root = np.sqrt(np.abs(disc))
        values = np.empty((batch, 2), dtype=complex)
        values[real_pair, 0] = 0.5 * (tr[real_pair] + root[real_pair])
        values[real_pair, 1] = 0.5 * (tr[real_pair] - root[real_pair])
        values[~real_pair, 0] = 0.5 * (tr[~real_pair] + 1j * root[~real_pair])
        values[~real_pair, 1] = 0.5 * (tr[~real_pair] - 1j * root[~real_pair])
        is_real = np.repeat(real_pair[:, None], 2, axis=1)
        return values, is_real
    try:
        values = np.linalg.eigvals(mats).astype(complex)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"batched eigensolver failed: {exc}", matrix=mats) from exc
    is_real = values.imag == 0.0
    order = np.argsort(_order_key(values), axis=1, kind="stable")
    values = np.take_along_axis(values, order, axis=1)
    is_real = np.take_along_axis(is_real, order, axis=1)
    return values, is_real


def ranked_eigenvalue(s: Spectrum, rank: int) -> RealSpectrumPoint:
    """The rank-th eigenvalue (1-indexed from the largest real part)."""
    if not 1 <= rank <= s.n:
        raise IndexError(f"rank must be in [1, {s.n}], got {rank}")
    value = s.values[rank - 1]
    return RealSpectrumPoint(re=float(value.real), im=float(value.imag), is_real=bool(s.is_real[rank - 1]))


def count_unstable(s: Spectrum, t: float) -> int:
    """Number of eigenvalues with real part - t >= 0."""
    return int((s.values.real >= t).sum())


def log_eigenvalue_density(sigmas, xs, ys, n: int, tau: float) -> float:
    """log joint density of the spectrum on the k-real sector.

    ``sigmas`` are the k real eigenvalues, ``xs`` +- i ``ys`` (ys >= 0) the
    (n - k)/2 conjugate pairs. The density is taken with respect to
    prod dsigma prod dx dy on the ordered sector, so the 2^{(n-k)/2} pairing
    factor is included here. The value is symmetric under permutations within
    each group; the unordered variant divides by k! ((n-k)/2)!.

    Computed entirely in log domain:

        -log Kn + ((n-k)/2) log 2 + sum_{pairs} log|u - v|
        - sum_i n sigma_i^2 / (2 (1+tau))
        + sum_j [ -n (x_j^2 - y_j^2) / (1+tau) + log erfc(sqrt(2n/(1-tau^2)) y_j) ]

    Returns -inf when two spectrum points coincide. tau = 1 is rejected: the
    density needs 1 - tau^2 > 0.
    """
    sigmas = np.atleast_1d(np.asarray(sigmas, dtype=float))
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    if sigmas.size == 0:
        sigmas = sigmas.reshape(0)
    if xs.size == 0:
        xs = xs.reshape(0)
    if ys.size == 0:
        ys = ys.reshape(0)
    k = sigmas.size
    if xs.size != ys.size:
        raise DomainError(f"xs and ys must have equal length, got {xs.size} and {ys.size}")
    if k + 2 * xs.size != n:
        raise DomainError(
            f"k={k} real plus {xs.size} conjugate pairs does not fill n={n} eigenvalues"
        )
    if np.any(ys < 0.0):
        raise DomainError("ys must be >= 0")
    tau = float(tau)
    if not -1.0 < tau < 1.0:
        raise DomainError(f"log_eigenvalue_density requires -1 < tau < 1, got tau={tau}")

    points = np.concatenate([sigmas.astype(complex), xs + 1j * ys, xs - 1j * ys])
    diffs = np.abs(points[:, None] - points[None, :])[np.triu_indices(n, k=1)]
    if np.any(diffs == 0.0):
        return -math.inf
    log_vandermonde = float(np.log(diffs).sum())

    scale = n / (2.0 * (1.0 + tau))
    log_weight = -scale * float(np.square(sigmas).sum())
    log_weight -= 2.0 * scale * float((np.square(xs) - np.square(ys)).sum())
    erfc_arg = math.sqrt(2.0 * n / (1.0 - tau * tau))
    log_weight += float(sum(log_erfc(erfc_arg * y) for y in ys))

    pair_factor = 0.5 * (n - k) * math.log(2.0)
    return -log_norm_constant(n, tau) + pair_factor + log_vandermonde + log_weight


def prob_k_real(
    n: int,
    tau: float,
    n_trials: int,
    seed: int,
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> list[MCEstimate]:
    """Empirical distribution of the number of real eigenvalues.

    Returns estimates indexed by k = 0..n (parity-impossible k have mean 0);
    standard errors are binomial.
    """
    if n < 1:
        raise DomainError(f"prob_k_real requires n >= 1, got {n}")
    counts = np.zeros(n + 1, dtype=np.int64)
    for index, take in batch_sizes(n_trials, batch_size):
        mats = sample_gee_entries(n, tau, substream(seed, index), take)
        _, is_real = eigvals_batch(mats)
        k_real = is_real.sum(axis=1)
        counts += np.bincount(k_real, minlength=n + 1)
    out = []
    for k in range(n + 1):
        p_hat = counts[k] / n_trials
        stderr = math.sqrt(p_hat * (1.0 - p_hat) / n_trials)
        out.append(MCEstimate(mean=float(p_hat), stderr=float(stderr), n_trials=n_trials, seed=seed))
    return out
