"""Two-view and multiview CCA solvers with ridge regularization.

The two-view solver uses the whitened-SVD route: invert the square roots of
the within-view covariances, SVD the whitened cross-covariance, and read the
canonical correlations off the singular values.  The multiview solver targets
the sum-of-pairwise-correlations objective via the generalized eigenproblem
C w = lambda D w, with C the joint covariance of the stacked views and D its
block diagonal.

``brute_force_first_correlation`` is an independent oracle (alternating least
squares from random restarts) used by the tests to validate the solvers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

# correlations computed above 1 + CLAMP_TOL are a hard numerical failure;
# anything in (1, 1 + CLAMP_TOL] is clamped to 1
CLAMP_TOL = 1e-8

# relative eigenvalue cutoff below which a covariance counts as singular
_SINGULAR_RTOL = 1e-10

# auto ridge: 1e-6 * trace(cov)/dim per view block, floored for zero-variance blocks
_AUTO_RIDGE_SCALE = 1e-6
_AUTO_RIDGE_FLOOR = 1e-12


class SpectralError(ValueError):
    """Base class for solver failures."""


class RankDeficiencyError(SpectralError):
    """A within-view covariance is singular and no ridge was requested."""


class NumericalFailureError(SpectralError):
    """A computed correlation exceeded 1 beyond the clamping tolerance."""


def _as_matrix(m, name: str) -> np.ndarray:
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise SpectralError(f"{name} must be a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise SpectralError(f"{name} contains non-finite entries")
    return a


def center_columns(m) -> tuple[np.ndarray, np.ndarray]:
    """Subtract column means; returns (centered matrix, mean vector)."""
    a = _as_matrix(m, "matrix")
    means = a.mean(axis=0)
    return a - means, means


def _resolve_ridge(cov: np.ndarray, ridge: float | None) -> float:
    if ridge is not None:
        if ridge < 0:
            raise SpectralError(f"ridge must be nonnegative, got {ridge}")
        return float(ridge)
    scaled = _AUTO_RIDGE_SCALE * np.trace(cov) / cov.shape[0]
    return max(scaled, _AUTO_RIDGE_FLOOR)


def _inv_sqrt(cov: np.ndarray, ridge: float, name: str) -> np.ndarray:
    """Inverse symmetric square root of cov + ridge*I."""
    w, v = scipy.linalg.eigh(cov + ridge * np.eye(cov.shape[0]))
    cutoff = max(w[-1], 0.0) * _SINGULAR_RTOL
    if w[0] <= cutoff:
        raise RankDeficiencyError(
            f"{name} covariance is rank-deficient (min eigenvalue {w[0]:.3e}); "
            "pass ridge > 0 to regularize"
        )
    return v @ ((1.0 / np.sqrt(w)) * v).T


def _fix_signs(*blocks: np.ndarray) -> None:
    """Flip each weight column so the stacked column's largest-magnitude entry
    is positive.  Paired blocks flip together, preserving correlations."""
    stacked = np.vstack(blocks)
    flips = np.sign(stacked[np.abs(stacked).argmax(axis=0), np.arange(stacked.shape[1])])
    flips[flips == 0] = 1.0
    for b in blocks:
        b *= flips


@dataclass(frozen=True)
class CcaModel:
    weights_x: np.ndarray  # p x l
    weights_y: np.ndarray  # q x l
    correlations: np.ndarray  # length l, non-increasing, in [0, 1]
    means_x: np.ndarray
    means_y: np.ndarray
    ridge_x: float
    ridge_y: float
    n_components: int


@dataclass(frozen=True)
class MccaModel:
    per_view_weights: list[np.ndarray]  # v_i x k each
    eigenvalues: np.ndarray  # length k, non-increasing
    per_view_means: list[np.ndarray]
    ridges: list[float]
    n_components: int


def fit_cca(x, y, n_components: int, ridge: float | None = None) -> CcaModel:
    """Canonical correlation analysis of two views sharing rows.

    ``ridge=None`` applies the scaled auto ridge per view block; ``ridge=0``
    disables regularization and raises ``RankDeficiencyError`` on singular
    within-view covariance.
    """
    xm = _as_matrix(x, "x")
    ym = _as_matrix(y, "y")
    n, p = xm.shape
    q = ym.shape[1]
    if ym.shape[0] != n:
        raise SpectralError(f"x has {n} rows but y has {ym.shape[0]}")
    if n < 2:
        raise SpectralError("need at least 2 samples to estimate covariances")
    if not 1 <= n_components <= min(p, q):
        raise SpectralError(
            f"n_components must be in [1, {min(p, q)}], got {n_components}"
        )

    xc, mx = center_columns(xm)
    yc, my = center_columns(ym)
    cxx = xc.T @ xc / (n - 1)
    cyy = yc.T @ yc / (n - 1)
    cxy = xc.T @ yc / (n - 1)

    rx = _resolve_ridge(cxx, ridge)
    ry = _resolve_ridge(cyy, ridge)
    kx = _inv_sqrt(cxx, rx, "x")
    ky = _inv_sqrt(cyy, ry, "y")

    u, s, vt = scipy.linalg.svd(kx @ cxy @ ky, full_matrices=False)
    if s[0] > 1.0 + CLAMP_TOL:
        raise NumericalFailureError(
            f"leading correlation {s[0]} exceeds 1 beyond tolerance"
        )
    corr = np.clip(s[:n_components], 0.0, 1.0)

    wx = kx @ u[:, :n_components]
    wy = ky @ vt[:n_components].T
    _fix_signs(wx, wy)
    return CcaModel(wx, wy, corr, mx, my, rx, ry, n_components)


def cca_transform(model: CcaModel, x, y) -> tuple[np.ndarray, np.ndarray]:
    """Project new rows of both views into the canonical-variate space."""
    xm = _as_matrix(x, "x")
    ym = _as_matrix(y, "y")
    if xm.shape[1] != model.means_x.shape[0]:
        raise SpectralError(
            f"x has {xm.shape[1]} columns, model expects {model.means_x.shape[0]}"
        )
    if ym.shape[1] != model.means_y.shape[0]:
        raise SpectralError(
            f"y has {ym.shape[1]} columns, model expects {model.means_y.shape[0]}"
        )
    return (
        (xm - model.means_x) @ model.weights_x,
        (ym - model.means_y) @ model.weights_y,
    )


def fit_mcca(views, n_components: int, ridge: float | None = None) -> MccaModel:
    """Multiview CCA maximizing the sum of pairwise projected correlations."""
    mats = [_as_matrix(v, f"views[{i}]") for i, v in enumerate(views)]
    if len(mats) < 2:
        raise SpectralError("need at least 2 views")
    n = mats[0].shape[0]
    for i, m in enumerate(mats[1:], start=1):
        if m.shape[0] != n:
            raise SpectralError(f"views[{i}] has {m.shape[0]} rows, expected {n}")
    if n < 2:
        raise SpectralError("need at least 2 samples to estimate covariances")
    dims = [m.shape[1] for m in mats]
    if not 1 <= n_components <= min(dims):
        raise SpectralError(
            f"n_components must be in [1, {min(dims)}], got {n_components}"
        )

    centered, means = zip(*(center_columns(m) for m in mats))
    z = np.hstack(centered)
    c = z.T @ z / (n - 1)

    d = np.zeros_like(c)
    ridges = []
    offsets = np.cumsum([0] + dims)
    for i, dim in enumerate(dims):
        lo, hi = offsets[i], offsets[i + 1]
        block = c[lo:hi, lo:hi]
        r = _resolve_ridge(block, ridge)
        ridges.append(r)
        d[lo:hi, lo:hi] = block + r * np.eye(dim)
        ew = scipy.linalg.eigvalsh(d[lo:hi, lo:hi])
        if ew[0] <= max(ew[-1], 0.0) * _SINGULAR_RTOL:
            raise RankDeficiencyError(
                f"views[{i}] covariance is rank-deficient; pass ridge > 0"
            )

    try:
        eigvals, eigvecs = scipy.linalg.eigh(c, d)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - guarded above
        raise RankDeficiencyError(f"generalized eigenproblem failed: {exc}") from exc

    # descending, stable in the original index on ties
    order = np.argsort(-eigvals, kind="stable")[:n_components]
    eigvals = eigvals[order]
    w = eigvecs[:, order]

    blocks = [w[offsets[i] : offsets[i + 1]] for i in range(len(mats))]
    _fix_signs(*blocks)
    return MccaModel(blocks, eigvals, [np.asarray(m) for m in means], ridges, n_components)


def mcca_transform(model: MccaModel, views) -> list[np.ndarray]:
    """Project each view through its fitted weights; one n x k matrix per view."""
    mats = [_as_matrix(v, f"views[{i}]") for i, v in enumerate(views)]
    if len(mats) != len(model.per_view_weights):
        raise SpectralError(
            f"model was fit on {len(model.per_view_weights)} views, got {len(mats)}"
        )
    out = []
    for i, (m, w, mu) in enumerate(zip(mats, model.per_view_weights, model.per_view_means)):
        if m.shape[1] != w.shape[0]:
            raise SpectralError(
                f"views[{i}] has {m.shape[1]} columns, model expects {w.shape[0]}"
            )
        out.append((m - mu) @ w)
    return out


def _sample_corr(a: np.ndarray, b: np.ndarray) -> float | None:
    sa, sb = a.std(), b.std()
    if sa < 1e-12 or sb < 1e-12:
        return None
    return float(np.corrcoef(a, b)[0, 1])


def brute_force_first_correlation(x, y, n_restarts: int = 20, seed: int = 0) -> float:
    """Oracle for the first canonical correlation.

    Alternating least squares over unit weight vectors from ``n_restarts``
    seeded random starts; intended for small dims (p, q <= 4).  Kept free of
    the whitened-SVD machinery above so it can serve as an independent check.
    """
    xm = _as_matrix(x, "x")
    ym = _as_matrix(y, "y")
    xc, _ = center_columns(xm)
    yc, _ = center_columns(ym)
    n = xc.shape[0]
    cxx = xc.T @ xc / (n - 1)
    cyy = yc.T @ yc / (n - 1)
    cxy = xc.T @ yc / (n - 1)
    cxx_inv = np.linalg.pinv(cxx)
    cyy_inv = np.linalg.pinv(cyy)

    rng = np.random.default_rng(seed)
    best = -1.0
    for _ in range(n_restarts):
        b = rng.standard_normal(ym.shape[1])
        b /= np.linalg.norm(b)
        prev = -np.inf
        for _ in range(200):
            a = cxx_inv @ (cxy @ b)
            na = np.linalg.norm(a)
            if na < 1e-15:
                break
            a /= na
            b = cyy_inv @ (cxy.T @ a)
            nb = np.linalg.norm(b)
            if nb < 1e-15:
                break
            b /= nb
            corr = _sample_corr(xc @ a, yc @ b)
            if corr is None:
                break
            corr = abs(corr)
            if corr - prev < 1e-12:
                prev = max(prev, corr)
                break
            prev = corr
        if np.isfinite(prev) and prev > best:
            best = prev
    if best < 0:
        raise SpectralError("all restarts hit degenerate projections")
    return min(best, 1.0)
