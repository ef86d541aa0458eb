"""Multivariate functional PCA for gridded bivariate observations.

The data live in the product of two L2 spaces over the unit square; the
inner product is the sum of the two component inner products, each
discretized with product trapezoid weights. The decomposition runs
through the N x N matrix of centered inner products (the dual route),
which shares its nonzero spectrum with the discretized covariance
operator; :func:`covariance_oracle` keeps the direct operator route
available on coarse grids as an independent cross-check.

Bivariate grid functions are ndarrays of shape (2, nx, ny) with the
missed component first and the made component second; `FunctionalSample`
instances are accepted anywhere such an array is.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from court_fda.density import FunctionalSample
from court_fda.grids import GridSpec, trapezoid_weights

#: Relative cutoff under which a Gram eigenvalue counts as numerically zero.
RANK_RTOL = 1e-12

#: Largest per-axis node count the direct covariance route will accept.
MAX_ORACLE_NODES = 21


class GridMismatchError(ValueError):
    """Operands are defined on different grids."""


class RankDeficiencyError(ValueError):
    """More components requested than the data's numerical rank supports."""

    def __init__(self, achievable_rank: int, message: str):
        super().__init__(message)
        self.achievable_rank = achievable_rank


@dataclass(frozen=True)
class QuadratureWeights:
    """Product trapezoid weights discretizing the unit-square integral.

    The combined weight of node (i, j) is wx[i] * wy[j]; each 1-D weight
    vector sums to 1 and every weight is positive.
    """

    wx: np.ndarray
    wy: np.ndarray

    def __post_init__(self) -> None:
        for name, w in (("wx", self.wx), ("wy", self.wy)):
            if np.any(w <= 0):
                raise ValueError(f"{name} must be strictly positive")
            if abs(float(w.sum()) - 1.0) > 1e-12:
                raise ValueError(f"{name} must sum to 1 over the unit interval")

    @classmethod
    def for_grid(cls, grid: GridSpec) -> "QuadratureWeights":
        return cls(trapezoid_weights(grid.nx), trapezoid_weights(grid.ny))

    @property
    def w2d(self) -> np.ndarray:
        """Node-weight matrix of shape (nx, ny)."""
        return np.outer(self.wx, self.wy)


@dataclass(frozen=True)
class EigenPair:
    """One mode of variation: eigenvalue plus unit-norm bivariate eigenfunction."""

    eigenvalue: float
    eigenfunction: np.ndarray


@dataclass
class ScoreMatrix:
    """Per-player component scores; rows follow the dataset order."""

    player_ids: list[str]
    values: np.ndarray

    @property
    def n_components(self) -> int:
        return self.values.shape[1]


@dataclass
class MfpcaModel:
    """Fitted decomposition: mean, ordered eigenpairs, and training scores.

    Eigenvalues are variances under the n-1 convention, so the k-th score
    column of the training set has sample variance equal to
    pairs[k].eigenvalue. variance_ratios divide each eigenvalue by the
    total spectral mass of the data, retained or not.
    """

    grid: GridSpec
    weights: QuadratureWeights
    mean: np.ndarray
    pairs: list[EigenPair]
    n_samples: int
    variance_ratios: np.ndarray
    total_variance: float
    scores: ScoreMatrix

    @property
    def n_components(self) -> int:
        return len(self.pairs)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([p.eigenvalue for p in self.pairs])

    def eigenfunctions(self) -> np.ndarray:
        """Stacked eigenfunctions, shape (K, 2, nx, ny)."""
        return np.stack([p.eigenfunction for p in self.pairs])


def as_bivariate(f) -> np.ndarray:
    """Coerce a FunctionalSample or array-like to a (2, nx, ny) ndarray."""
    if isinstance(f, FunctionalSample):
        return f.stacked()
    arr = np.asarray(f, dtype=float)
    if arr.ndim != 3 or arr.shape[0] != 2:
        raise ValueError(f"expected a bivariate grid function of shape (2, nx, ny), got {arr.shape}")
    return arr


def inner_product(f, g, weights: QuadratureWeights) -> float:
    """Product-space inner product: the two component integrals, summed."""
    F = as_bivariate(f)
    G = as_bivariate(g)
    if F.shape != G.shape:
        raise GridMismatchError(f"shape mismatch: {F.shape} vs {G.shape}")
    if F.shape[1] != len(weights.wx) or F.shape[2] != len(weights.wy):
        raise GridMismatchError(f"function shape {F.shape} does not match quadrature weights")
    both = (F * G).sum(axis=0)
    return float(weights.wx @ both @ weights.wy)


def h_norm(f, weights: QuadratureWeights) -> float:
    """Norm induced by :func:`inner_product`."""
    return float(np.sqrt(max(inner_product(f, f, weights), 0.0)))


def _common_grid(samples: Sequence) -> GridSpec:
    first = as_bivariate(samples[0])
    grid = samples[0].grid if isinstance(samples[0], FunctionalSample) else GridSpec(*first.shape[1:])
    for s in samples[1:]:
        if as_bivariate(s).shape != first.shape:
            raise GridMismatchError("samples are not on a common grid")
    return grid


def mean_function(samples: Sequence) -> np.ndarray:
    """Pointwise arithmetic mean of the samples, per component."""
    if len(samples) == 0:
        raise ValueError("cannot average an empty sample list")
    _common_grid(samples)
    stacked = np.stack([as_bivariate(s) for s in samples])
    return stacked.mean(axis=0)


def _centered_matrix(samples: Sequence, mean: np.ndarray) -> np.ndarray:
    """Centered samples flattened to rows of length 2 * nx * ny."""
    stacked = np.stack([as_bivariate(s) for s in samples])
    if stacked.shape[1:] != mean.shape:
        raise GridMismatchError(f"samples have shape {stacked.shape[1:]}, mean has {mean.shape}")
    return (stacked - mean).reshape(len(samples), -1)


def gram_matrix(samples: Sequence, mean: np.ndarray, weights: QuadratureWeights) -> np.ndarray:
    """Matrix of centered inner products, exactly symmetric by mirroring.

    Entry (i, j) is the product-space inner product of the centered
    samples i and j; the upper triangle is computed and reflected.
    """
    if len(samples) < 2:
        raise ValueError("need at least 2 samples")
    flat = _centered_matrix(samples, mean)
    sqrt_w = np.sqrt(np.tile(weights.w2d.ravel(), 2))
    weighted = flat * sqrt_w
    raw = weighted @ weighted.T
    return np.triu(raw) + np.triu(raw, 1).T


def eigendecompose(gram: np.ndarray, *, symmetry_tol: float = 1e-12, clamp_tol: float = 1e-10):
    """Full spectral decomposition of a symmetric PSD matrix.

    Returns eigenvalues in descending order and the matching orthonormal
    eigenvectors as columns. Small negative eigenvalues (within clamp_tol
    of zero) are clamped to 0.
    """
    G = np.asarray(gram, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {G.shape}")
    asym = float(np.max(np.abs(G - G.T))) if G.size else 0.0
    if asym > symmetry_tol:
        raise ValueError(f"matrix is asymmetric beyond tolerance: max |G - G^T| = {asym:.3e}")
    vals, vecs = np.linalg.eigh(G)
    vals = vals[::-1].copy()
    vecs = vecs[:, ::-1].copy()
    vals[(vals < 0.0) & (vals >= -clamp_tol)] = 0.0
    return vals, vecs


def _signed_canonical(phi: np.ndarray) -> tuple[np.ndarray, float]:
    """Flip a grid function so its largest-magnitude value is positive.

    Ties break at the lowest row-major node index, scanning the missed
    component before the made one; this pins an otherwise arbitrary sign.
    """
    flat = phi.ravel()
    idx = int(np.argmax(np.abs(flat)))
    sign = -1.0 if flat[idx] < 0.0 else 1.0
    return phi * sign, sign


def fit_mfpca(
    samples: Sequence,
    n_components: int | None = None,
    variance_threshold: float | None = None,
) -> MfpcaModel:
    """Fit the decomposition through the Gram (dual) route.

    Exactly one of n_components and variance_threshold must be given.
    With a threshold, the smallest K whose cumulative variance ratio
    reaches it (within 1e-12) is retained. Gram eigenvalues below
    RANK_RTOL times the leading one are never retained; asking for more
    components than that numerical rank raises
    :class:`RankDeficiencyError` stating the achievable rank.
    """
    if (n_components is None) == (variance_threshold is None):
        raise ValueError("specify exactly one of n_components and variance_threshold")
    n = len(samples)
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    grid = _common_grid(samples)
    weights = QuadratureWeights.for_grid(grid)
    mean = mean_function(samples)
    gram = gram_matrix(samples, mean, weights)
    ell, u = eigendecompose(gram)

    rank = int(np.sum(ell > RANK_RTOL * ell[0])) if ell[0] > 0 else 0
    if rank == 0:
        raise RankDeficiencyError(0, "all samples are identical; no variance to decompose")
    total_variance = float(ell[ell > 0].sum() / (n - 1))
    ratios_all = (ell / (n - 1)) / total_variance

    if n_components is not None:
        if not 1 <= n_components <= n - 1:
            raise ValueError(f"n_components must be in [1, {n - 1}], got {n_components}")
        if n_components > rank:
            raise RankDeficiencyError(
                rank, f"requested {n_components} components but the numerical rank is {rank}"
            )
        k = n_components
    else:
        if not 0.0 < variance_threshold <= 1.0:
            raise ValueError(f"variance_threshold must lie in (0, 1], got {variance_threshold}")
        cumulative = np.cumsum(ratios_all[:rank])
        reached = np.nonzero(cumulative >= variance_threshold - 1e-12)[0]
        if len(reached) == 0:
            raise RankDeficiencyError(
                rank,
                f"threshold {variance_threshold} is unreachable: rank {rank} covers "
                f"{cumulative[-1]:.6f} of the variance",
            )
        k = int(reached[0]) + 1

    flat = _centered_matrix(samples, mean)
    pairs: list[EigenPair] = []
    score_values = u[:, :k] * np.sqrt(ell[:k])
    for j in range(k):
        phi = (u[:, j] @ flat).reshape(mean.shape) / np.sqrt(ell[j])
        phi, sign = _signed_canonical(phi)
        score_values[:, j] *= sign
        pairs.append(EigenPair(float(ell[j] / (n - 1)), phi))

    ids = [s.player_id if isinstance(s, FunctionalSample) else str(i) for i, s in enumerate(samples)]
    return MfpcaModel(
        grid=grid,
        weights=weights,
        mean=mean,
        pairs=pairs,
        n_samples=n,
        variance_ratios=ratios_all[:k].copy(),
        total_variance=total_variance,
        scores=ScoreMatrix(ids, score_values),
    )


def project_scores(sample, model: MfpcaModel) -> np.ndarray:
    """Score vector of a sample: centered projections onto each eigenfunction."""
    x = as_bivariate(sample)
    if x.shape != model.mean.shape:
        raise GridMismatchError(f"sample shape {x.shape} does not match model grid {model.mean.shape}")
    centered = x - model.mean
    return np.array([inner_product(centered, p.eigenfunction, model.weights) for p in model.pairs])


def project_scores_all(samples: Sequence, model: MfpcaModel) -> ScoreMatrix:
    """Scores for a whole dataset, one row per sample."""
    ids = [s.player_id if isinstance(s, FunctionalSample) else str(i) for i, s in enumerate(samples)]
    return ScoreMatrix(ids, np.stack([project_scores(s, model) for s in samples]))


def reconstruct(scores: Sequence[float], model: MfpcaModel) -> np.ndarray:
    """Truncated expansion: mean plus the score-weighted eigenfunctions."""
    c = np.asarray(scores, dtype=float)
    if c.ndim != 1 or len(c) > model.n_components:
        raise ValueError(f"score vector of shape {c.shape} exceeds the model's {model.n_components} components")
    out = model.mean.copy()
    for ck, pair in zip(c, model.pairs):
        out += ck * pair.eigenfunction
    return out


def covariance_oracle(samples: Sequence) -> tuple[np.ndarray, np.ndarray]:
    """Direct route: eigendecompose the discretized covariance operator.

    Builds the full (2 nx ny) square covariance matrix of the stacked
    component vectors, symmetrizes it in the quadrature metric, and
    solves the dense eigenproblem. Intended as an independent check of
    the Gram route on coarse grids; refuses grids above
    MAX_ORACLE_NODES nodes per axis.

    Returns (eigenvalues, eigenfunctions) down to the numerical-rank
    cutoff, eigenfunctions stacked as (K, 2, nx, ny) and sign-fixed with
    the same convention as :func:`fit_mfpca`.
    """
    n = len(samples)
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    grid = _common_grid(samples)
    if grid.nx > MAX_ORACLE_NODES or grid.ny > MAX_ORACLE_NODES:
        raise ValueError(
            f"covariance oracle refuses grids above {MAX_ORACLE_NODES}x{MAX_ORACLE_NODES}; got {grid.nx}x{grid.ny}"
        )
    weights = QuadratureWeights.for_grid(grid)
    stacked = np.stack([as_bivariate(s) for s in samples]).reshape(n, -1)
    centered = stacked - stacked.mean(axis=0)
    cov = centered.T @ centered / (n - 1)
    sqrt_w = np.sqrt(np.tile(weights.w2d.ravel(), 2))
    sym = sqrt_w[:, None] * cov * sqrt_w[None, :]
    sym = 0.5 * (sym + sym.T)
    vals, vecs = np.linalg.eigh(sym)
    vals = vals[::-1].copy()
    vecs = vecs[:, ::-1].copy()
    vals[(vals < 0.0) & (vals >= -1e-10)] = 0.0
    rank = int(np.sum(vals > RANK_RTOL * vals[0])) if vals[0] > 0 else 0
    funcs = []
    for j in range(rank):
        phi = (vecs[:, j] / sqrt_w).reshape((2, grid.nx, grid.ny))
        funcs.append(_signed_canonical(phi)[0])
    return vals[:rank], np.stack(funcs) if funcs else np.empty((0, 2, grid.nx, grid.ny))


def save_model(model: MfpcaModel, path: str | Path) -> None:
    """Serialize a model to one JSON document.

    Bivariate functions are stored as flat row-major lists, missed
    component first; floats use Python's shortest round-trip repr, so
    loading restores bit-identical values.
    """
    doc = {
        "grid": {"nx": model.grid.nx, "ny": model.grid.ny},
        "quadrature": {"wx": model.weights.wx.tolist(), "wy": model.weights.wy.tolist()},
        "mean": model.mean.ravel().tolist(),
        "eigenvalues": [p.eigenvalue for p in model.pairs],
        "eigenfunctions": [p.eigenfunction.ravel().tolist() for p in model.pairs],
        "variance_ratios": model.variance_ratios.tolist(),
        "total_variance": model.total_variance,
        "n_samples": model.n_samples,
        "player_ids": model.scores.player_ids,
        "scores": model.scores.values.tolist(),
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> MfpcaModel:
    """Inverse of :func:`save_model`."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    required = {
        "grid", "quadrature", "mean", "eigenvalues", "eigenfunctions",
        "variance_ratios", "total_variance", "n_samples", "player_ids", "scores",
    }
    missing = required - set(doc)
    if missing:
        raise ValueError(f"malformed model document {path}: missing keys {sorted(missing)}")
    grid = GridSpec(doc["grid"]["nx"], doc["grid"]["ny"])
    shape = (2, grid.nx, grid.ny)
    weights = QuadratureWeights(np.array(doc["quadrature"]["wx"]), np.array(doc["quadrature"]["wy"]))
    pairs = [
        EigenPair(float(val), np.array(fun, dtype=float).reshape(shape))
        for val, fun in zip(doc["eigenvalues"], doc["eigenfunctions"])
    ]
    return MfpcaModel(
        grid=grid,
        weights=weights,
        mean=np.array(doc["mean"], dtype=float).reshape(shape),
        pairs=pairs,
        n_samples=int(doc["n_samples"]),
        variance_ratios=np.array(doc["variance_ratios"], dtype=float),
        total_variance=float(doc["total_variance"]),
        scores=ScoreMatrix(list(doc["player_ids"]), np.array(doc["scores"], dtype=float).reshape(len(doc["player_ids"]), -1)),
    )


def flip_component_signs(model: MfpcaModel, signs: Sequence[float]) -> MfpcaModel:
    """Return a copy of the model with selected components negated.

    signs holds +1/-1 per component; scores flip along with their
    eigenfunctions so reconstructions are unchanged.
    """
    if len(signs) != model.n_components:
        raise ValueError(f"expected {model.n_components} signs, got {len(signs)}")
    pairs = [
        EigenPair(p.eigenvalue, p.eigenfunction * s) if s < 0 else p
        for p, s in zip(model.pairs, signs)
    ]
    values = model.scores.values * np.asarray(signs, dtype=float)
    return replace(model, pairs=pairs, scores=ScoreMatrix(list(model.scores.player_ids), values))
