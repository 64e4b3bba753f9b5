"""Brute-force equilibrium counting for the random field on low-dim spheres.

The field on the sphere of radius sqrt(n) is

    F(x) = -lam(x) x + f(x) + h,      lam(x) = <x, f(x) + h> / n,

with f_i(x) = sum_{jk} J_ijk x_j x_k for an iid Gaussian tensor J of entry
variance 1/n^2 and h iid Gaussian of variance sigma2. This realizes the
covariance E[f_i(x) f_j(y)] = delta_ij (<x, y>/n)^2: diagonal kernel q -> q^2,
no positional kernel, hence tau = 0 and b^2 = (sigma2 + 1) / 2. The Lagrange
multiplier lam makes F tangent to the sphere by construction.

Equilibria (zeros of F) are found exhaustively:

* n = 2: F restricted to the circle is g(t) * unit tangent, with g a degree-3
  trigonometric polynomial; a dense scan plus bisection cannot miss sign
  changes once the count is stable under grid doubling.
* n = 3: Newton iteration on the tangential equations from an icosahedral
  mesh of seeds, with the chart re-rotated to each iterate (an orthonormal
  tangent frame), deduplicated, and re-run on a finer mesh until the count
  stabilizes.

Each equilibrium carries its unstable-direction count m (eigenvalues of the
tangential Jacobian with nonnegative real part) and its multiplier value.
Degenerate configurations (roots with near-zero Jacobian eigenvalues,
non-stabilizing counts, an index sum violating the Euler characteristic) are
measure zero; such samples raise SampleFlaggedError and batch drivers exclude
them, reporting the exclusion rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, SampleFlaggedError
from .rates import ModelParams
from .sampling import MCEstimate, substream

#: Classification threshold on |Re eigenvalue| of the tangential Jacobian
#: below which a sample is flagged as a boundary case.
_JACOBIAN_EIG_FLOOR = 1e-10
#: Slope floor below which a circle root counts as degenerate (tangency).
_SLOPE_FLOOR = 1e-8
_MAX_REFINEMENTS = 6


@dataclass(frozen=True)
class FieldSample:
    """One draw of the random field: the quadratic tensor and the drift."""

    n: int
    coeffs: np.ndarray  # (n, n, n), f_i = x^T coeffs[i] x
    drift: np.ndarray  # (n,)
    sigma2: float

    def __post_init__(self):
        if self.n not in (2, 3):
            raise DomainError(f"FieldSample supports n in (2, 3), got {self.n}")
        if self.coeffs.shape != (self.n,) * 3 or self.drift.shape != (self.n,):
            raise DomainError("coeffs must be (n, n, n) and drift (n,)")


@dataclass(frozen=True)
class Equilibrium:
    """A zero of the field with its stability classification."""

    position: np.ndarray
    m: int
    lagrange: float
    residual: float


def field_model_params(sigma2: float) -> ModelParams:
    """The ModelParams realized by the quadratic tensor field."""
    return ModelParams(phi1=1.0, dphi1=2.0, phi2=0.0, sigma2=sigma2)


def sample_field(n: int, sigma2: float, rng: np.random.Generator) -> FieldSample:
    """Draw the tensor (entry variance 1/n^2) and the drift (variance sigma2)."""
    if n not in (2, 3):
        raise DomainError(f"sample_field supports n in (2, 3), got {n}")
    if sigma2 < 0.0:
        raise DomainError(f"sigma2 must be >= 0, got {sigma2}")
    coeffs = rng.standard_normal((n, n, n)) / n
    drift = math.sqrt(sigma2) * rng.standard_normal(n)
    return FieldSample(n=n, coeffs=coeffs, drift=drift, sigma2=sigma2)


def _f_value(fs: FieldSample, x: np.ndarray) -> np.ndarray:
    return np.einsum("ijk,j,k->i", fs.coeffs, x, x)


def _f_jacobian(fs: FieldSample, x: np.ndarray) -> np.ndarray:
    # d f_i / d x_l = sum_k J_ilk x_k + sum_j J_ijl x_j
    return np.einsum("ilk,k->il", fs.coeffs, x) + np.einsum("ijl,j->il", fs.coeffs, x)


def eval_field(fs: FieldSample, x: np.ndarray) -> tuple[np.ndarray, float]:
    """(tangent field, multiplier) at an on-sphere point.

    The multiplier lam(x) = <x, f(x) + h>/n removes the radial component, so
    <F(x), x> = 0 to rounding.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (fs.n,):
        raise DomainError(f"x must have shape ({fs.n},)")
    if abs(float(x @ x) - fs.n) > 1e-8 * fs.n:
        raise DomainError(f"x is off the sphere: |x|^2 = {float(x @ x)}, expected {fs.n}")
    ambient = _f_value(fs, x) + fs.drift
    lam = float(x @ ambient) / fs.n
    return ambient - lam * x, lam


def _euclidean_field_jacobian(fs: FieldSample, x: np.ndarray, lam: float) -> np.ndarray:
    """d F_i / d x_j in ambient coordinates at x (for F = -lam x + f + h)."""
    df = _f_jacobian(fs, x)
    ambient = _f_value(fs, x) + fs.drift
    grad_lam = (ambient + df.T @ x) / fs.n
    return df - lam * np.eye(fs.n) - np.outer(x, grad_lam)


# ---------------------------------------------------------------------------
# n = 2: exhaustive scan of the circle
# ---------------------------------------------------------------------------


def _circle_g(fs: FieldSample, theta: np.ndarray) -> np.ndarray:
    """Tangential component g(theta) = <f(x) + h, t> at x = sqrt(2)(cos, sin).

    The multiplier term drops out because <x, t> = 0; g is a trigonometric
    polynomial of degree 3, so it has at most 6 zeros.
    """
    c, s = np.cos(theta), np.sin(theta)
    x = math.sqrt(2.0) * np.stack([c, s], axis=-1)
    f = np.einsum("ijk,...j,...k->...i", fs.coeffs, x, x) + fs.drift
    return -f[..., 0] * s + f[..., 1] * c


def _circle_g_slope(fs: FieldSample, theta: float) -> float:
    """dg/dtheta = sqrt(2) (t^T Df t - lam): the 1-d tangential Jacobian scaled."""
    c, s = math.cos(theta), math.sin(theta)
    x = math.sqrt(2.0) * np.array([c, s])
    t = np.array([-s, c])
    df = _f_jacobian(fs, x)
    ambient = _f_value(fs, x) + fs.drift
    lam = float(x @ ambient) / 2.0
    return math.sqrt(2.0) * (float(t @ df @ t) - lam)


def _circle_roots(fs: FieldSample, grid_size: int, refine_tol: float) -> list[Equilibrium]:
    thetas = np.linspace(0.0, 2.0 * math.pi, grid_size, endpoint=False)
    values = _circle_g(fs, thetas)
    if np.any(values == 0.0):
        raise SampleFlaggedError("degenerate-root", "grid point is an exact zero")
    sign_change = np.nonzero(values * np.roll(values, -1) < 0.0)[0]
    los = thetas[sign_change]
    his = los + 2.0 * math.pi / grid_size
    f_los = values[sign_change]
    # Vectorized bisection across all brackets.
    while np.any(his - los > refine_tol):
        mids = 0.5 * (los + his)
        f_mids = _circle_g(fs, mids)
        go_right = np.sign(f_mids) == np.sign(f_los)
        los = np.where(go_right, mids, los)
        f_los = np.where(go_right, f_mids, f_los)
        his = np.where(go_right, his, mids)
    out = []
    for theta in 0.5 * (los + his):
        slope = _circle_g_slope(fs, theta)
        if abs(slope) < _SLOPE_FLOOR:
            raise SampleFlaggedError("degenerate-root", f"|dg/dtheta| = {abs(slope)}")
        x = math.sqrt(2.0) * np.array([math.cos(theta), math.sin(theta)])
        residual = abs(float(_circle_g(fs, np.array([theta]))[0]))
        lam = float(x @ (_f_value(fs, x) + fs.drift)) / 2.0
        out.append(
            Equilibrium(position=x, m=1 if slope >= 0.0 else 0, lagrange=lam, residual=residual)
        )
    return out


def find_equilibria_circle(
    fs: FieldSample, grid_size: int = 2048, refine_tol: float = 1e-12
) -> list[Equilibrium]:
    """All equilibria on the circle, by dense scan plus bisection.

    The grid is doubled until two consecutive scans agree on the count; zeros
    of a smooth function on the circle alternate in slope sign, so retained
    samples always satisfy count(m=0) = count(m=1).
    """
    if fs.n != 2:
        raise DomainError("find_equilibria_circle requires n = 2")
    previous = None
    for _ in range(_MAX_REFINEMENTS + 1):
        roots = _circle_roots(fs, grid_size, refine_tol)
        if previous is not None and len(previous) == len(roots):
            counts = [r.m for r in roots]
            if counts.count(0) != counts.count(1):
                raise SampleFlaggedError("alternation-violation", f"m counts {counts}")
            return roots
        previous = roots
        grid_size *= 2
    raise SampleFlaggedError("count-not-stabilized", f"after {_MAX_REFINEMENTS} doublings")


# ---------------------------------------------------------------------------
# n = 3: Newton from an icosahedral mesh
# ---------------------------------------------------------------------------


@lru_cache(maxsize=16)
def icosphere_vertices(level: int) -> np.ndarray:
    """Unit vertices of the icosahedron subdivided ``level`` times.

    Cached and returned read-only: the mesh is reused across samples.
    """
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    verts = []
    for a in (-1.0, 1.0):
        for b_ in (-phi, phi):
            verts += [(0.0, a, b_), (a, b_, 0.0), (b_, 0.0, a)]
    verts = np.array(verts)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = []
    for i in range(len(verts)):
        for j in range(i + 1, len(verts)):
            for k in range(j + 1, len(verts)):
                # icosahedron edge length in these coordinates is 2/sqrt(1+phi^2)
                dd = (
                    np.linalg.norm(verts[i] - verts[j]),
                    np.linalg.norm(verts[j] - verts[k]),
                    np.linalg.norm(verts[i] - verts[k]),
                )
                if all(abs(d - 2.0 / math.sqrt(1 + phi * phi)) < 1e-9 for d in dd):
                    faces.append((i, j, k))
    faces = np.array(faces)
    points = {tuple(np.round(v, 12)) for v in verts}
    tris = [verts[list(f)] for f in faces]
    for _ in range(level):
        new_tris = []
        for tri in tris:
            a, b_, c = tri
            ab = (a + b_) / np.linalg.norm(a + b_)
            bc = (b_ + c) / np.linalg.norm(b_ + c)
            ca = (c + a) / np.linalg.norm(c + a)
            new_tris += [
                np.array([a, ab, ca]),
                np.array([ab, b_, bc]),
                np.array([ca, bc, c]),
                np.array([ab, bc, ca]),
            ]
        tris = new_tris
        for tri in tris:
            for v in tri:
                points.add(tuple(np.round(v, 12)))
    out = np.array(sorted(points))
    out.flags.writeable = False
    return out


def _tangent_frame(xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal (e1, e2) spanning the tangent plane at each row of xs."""
    radial = xs / np.linalg.norm(xs, axis=1)[:, None]
    # Pick the coordinate axis least aligned with the radial direction.
    pick = np.argmin(np.abs(radial), axis=1)
    helper = np.zeros_like(radial)
    helper[np.arange(len(xs)), pick] = 1.0
    e1 = helper - (helper * radial).sum(axis=1)[:, None] * radial
    e1 /= np.linalg.norm(e1, axis=1)[:, None]
    e2 = np.cross(radial, e1)
    return e1, e2


def _newton_on_sphere(fs: FieldSample, seeds: np.ndarray, newton_tol: float) -> np.ndarray:
    """Run tangential Newton from every seed; return converged positions.

    Works on the shrinking set of not-yet-converged seeds; anything still
    moving after the iteration cap (Newton converges quadratically from any
    reasonable basin) is discarded as a wanderer.
    """
    n = fs.n
    xs = seeds * math.sqrt(n)
    done: list[np.ndarray] = []
    eye = np.eye(n)
    for _ in range(30):
        if len(xs) == 0:
            break
        f = np.einsum("ijk,sj,sk->si", fs.coeffs, xs, xs) + fs.drift
        lam = (xs * f).sum(axis=1) / n
        tangent = f - lam[:, None] * xs
        res = np.linalg.norm(tangent, axis=1)
        converged = res <= newton_tol
        if converged.any():
            done.append(xs[converged])
            keep = ~converged
            xs, f, lam, tangent = xs[keep], f[keep], lam[keep], tangent[keep]
            if len(xs) == 0:
                break
        e1, e2 = _tangent_frame(xs)
        df = np.einsum("ilk,sk->sil", fs.coeffs, xs) + np.einsum("ijl,sj->sil", fs.coeffs, xs)
        grad_lam = (f + np.einsum("sil,si->sl", df, xs)) / n
        jac = df - lam[:, None, None] * eye - np.einsum("si,sl->sil", xs, grad_lam)
        # Project to the tangent frame: 2x2 systems solved in closed form.
        je1 = np.einsum("sil,sl->si", jac, e1)
        je2 = np.einsum("sil,sl->si", jac, e2)
        a11 = (e1 * je1).sum(axis=1)
        a12 = (e1 * je2).sum(axis=1)
        a21 = (e2 * je1).sum(axis=1)
        a22 = (e2 * je2).sum(axis=1)
        r1 = -(e1 * tangent).sum(axis=1)
        r2 = -(e2 * tangent).sum(axis=1)
        det = a11 * a22 - a12 * a21
        ok = np.abs(det) >= 1e-14
        if not ok.all():
            xs, e1, e2 = xs[ok], e1[ok], e2[ok]
            r1, r2 = r1[ok], r2[ok]
            a11, a12, a21, a22, det = a11[ok], a12[ok], a21[ok], a22[ok], det[ok]
            if len(xs) == 0:
                break
        d1 = (a22 * r1 - a12 * r2) / det
        d2 = (a11 * r2 - a21 * r1) / det
        step = d1[:, None] * e1 + d2[:, None] * e2
        norms = np.linalg.norm(step, axis=1)
        cap = 0.5 * math.sqrt(n)
        scale = np.where(norms > cap, cap / np.maximum(norms, 1e-300), 1.0)
        moved = xs + scale[:, None] * step
        xs = math.sqrt(n) * moved / np.linalg.norm(moved, axis=1)[:, None]
    if not done:
        return np.empty((0, n))
    return np.concatenate(done, axis=0)


def _classify(fs: FieldSample, x: np.ndarray) -> tuple[int, float, float]:
    """(m, lagrange, residual) from the 2x2 tangential Jacobian at a root."""
    tangent, lam = eval_field(fs, x)
    jac = _euclidean_field_jacobian(fs, x, lam)
    e1, e2 = _tangent_frame(x[None, :])
    e1, e2 = e1[0], e2[0]
    a11, a12 = float(e1 @ jac @ e1), float(e1 @ jac @ e2)
    a21, a22 = float(e2 @ jac @ e1), float(e2 @ jac @ e2)
    tr = a11 + a22
    disc = (a11 - a22) ** 2 + 4.0 * a12 * a21
    if disc >= 0.0:
        root = math.sqrt(disc)
        re_parts = (0.5 * (tr + root), 0.5 * (tr - root))
    else:
        re_parts = (0.5 * tr, 0.5 * tr)
    if any(abs(re) < _JACOBIAN_EIG_FLOOR for re in re_parts):
        raise SampleFlaggedError("near-zero-jacobian-eigenvalue", f"re parts {re_parts}")
    m = sum(re >= 0.0 for re in re_parts)
    return m, lam, float(np.linalg.norm(tangent))


def _dedupe(points: np.ndarray, radius: float) -> np.ndarray:
    if len(points) == 0:
        return points
    kept = points[:1]
    for p in points[1:]:
        if (np.square(kept - p).sum(axis=1) >= radius * radius).all():
            kept = np.vstack([kept, p])
    return kept


def find_equilibria_sphere(
    fs: FieldSample,
    mesh_level: int = 2,
    newton_tol: float = 1e-11,
    dedupe_radius: float = 1e-6,
) -> list[Equilibrium]:
    """All equilibria on the 2-sphere, by mesh-seeded Newton iteration.

    Seeds come from an icosahedral mesh refined ``mesh_level`` times; the mesh
    is refined further until two consecutive levels agree on the equilibrium
    count. Retained samples must satisfy the Euler-characteristic identity
    sum (-1)^m = 2 (a root-completeness certificate); violations flag the
    sample rather than returning a silently short list.
    """
    if fs.n != 3:
        raise DomainError("find_equilibria_sphere requires n = 3")
    previous = None
    for level in range(mesh_level, mesh_level + _MAX_REFINEMENTS + 1):
        seeds = icosphere_vertices(level)
        roots = _dedupe(_newton_on_sphere(fs, seeds, newton_tol), dedupe_radius)
        if previous is not None and len(previous) == len(roots):
            out = []
            for x in roots:
                m, lam, residual = _classify(fs, x)
                out.append(Equilibrium(position=x, m=m, lagrange=lam, residual=residual))
            index_sum = sum((-1) ** e.m for e in out)
            if index_sum != 2:
                raise SampleFlaggedError("euler-characteristic-violation", f"sum (-1)^m = {index_sum}")
            return out
        previous = roots
    raise SampleFlaggedError("count-not-stabilized", f"after {_MAX_REFINEMENTS} refinements")


# ---------------------------------------------------------------------------
# Batch driver and the multiplier histogram
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleCounts:
    """Mean equilibrium counts per index from a batch of field samples."""

    per_m: dict[int, MCEstimate]
    total: MCEstimate
    n_samples: int
    n_retained: int
    flagged_rate: float
    flag_reasons: dict[str, int]


def oracle_mean_counts(
    n: int,
    sigma2: float,
    n_samples: int,
    seed: int,
    collect: list | None = None,
    **solver_kwargs,
) -> OracleCounts:
    """Sample fields and count equilibria per index, excluding flagged samples.

    ``collect``, if given, receives a (sample_index, Equilibrium) pair for
    every retained equilibrium (histogram work, CSV dumps). Flagged-sample
    reasons and the exclusion rate are reported.
    """
    counts: list[np.ndarray] = []
    reasons: dict[str, int] = {}
    for i in range(n_samples):
        fs = sample_field(n, sigma2, substream(seed, i))
        try:
            if n == 2:
                eqs = find_equilibria_circle(fs, **solver_kwargs)
            else:
                eqs = find_equilibria_sphere(fs, **solver_kwargs)
        except SampleFlaggedError as exc:
            reasons[exc.reason] = reasons.get(exc.reason, 0) + 1
            continue
        row = np.zeros(n, dtype=float)
        for eq in eqs:
            row[eq.m] += 1.0
        counts.append(row)
        if collect is not None:
            collect.extend((i, eq) for eq in eqs)
    retained = len(counts)
    if retained == 0:
        raise SampleFlaggedError("all-samples-flagged", f"{n_samples} samples")
    stack = np.array(counts)
    per_m = {}
    for m in range(n):
        col = stack[:, m]
        per_m[m] = MCEstimate(
            mean=float(col.mean()),
            stderr=float(col.std(ddof=1) / math.sqrt(retained)) if retained > 1 else 0.0,
            n_trials=retained,
            seed=seed,
        )
    totals = stack.sum(axis=1)
    total = MCEstimate(
        mean=float(totals.mean()),
        stderr=float(totals.std(ddof=1) / math.sqrt(retained)) if retained > 1 else 0.0,
        n_trials=retained,
        seed=seed,
    )
    return OracleCounts(
        per_m=per_m,
        total=total,
        n_samples=n_samples,
        n_retained=retained,
        flagged_rate=1.0 - retained / n_samples,
        flag_reasons=reasons,
    )


def lagrange_histogram(equilibria, bins=20) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Multiplier histograms split by unstable-direction count.

    Shared bin edges across all indices so the per-m histograms are directly
    comparable; returns {m: (counts, edges)}.
    """
    eqs = list(equilibria)
    if not eqs:
        raise DomainError("lagrange_histogram needs a nonempty equilibrium list")
    values = np.array([e.lagrange for e in eqs])
    edges = np.histogram_bin_edges(values, bins=bins)
    out = {}
    for m in sorted({e.m for e in eqs}):
        sub = np.array([e.lagrange for e in eqs if e.m == m])
        counts, _ = np.histogram(sub, bins=edges)
        out[m] = (counts, edges)
    return out
