"""Weighted metric MDS in two dimensions via stress majorization.

The Guttman-transform update is used, generalized to arbitrary
non-negative pair weights; uniform weights take a fast path that avoids
the pseudo-inverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .core import DistanceMatrix, ValidationError

_EPS_DIST = 1e-15


@dataclass(frozen=True)
class MdsConfig:
    n_init: int = 4
    max_iter: int = 300
    eps: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.n_init < 1 or self.max_iter < 1:
            raise ValidationError("n_init and max_iter must be positive")
        if not (0 < self.eps < 1):
            raise ValidationError("eps must lie in (0, 1)")


@dataclass(frozen=True)
class WeightSpec:
    """Pair weights: a uniform scalar, optionally overridden per cluster.

    Pairs inside cluster k get per_cluster[k] (falling back to the uniform
    value); pairs across clusters always use the uniform value.
    """

    uniform: float = 1.0
    per_cluster: dict[int, float] | None = None

    def __post_init__(self):
        if self.uniform < 0:
            raise ValidationError("weights must be non-negative")
        if self.per_cluster is not None and any(w < 0 for w in self.per_cluster.values()):
            raise ValidationError("weights must be non-negative")

    def matrix(self, m: int, labels=None) -> np.ndarray:
        w = np.full((m, m), self.uniform)
        if self.per_cluster:
            if labels is None:
                raise ValidationError("per-cluster weights require cluster labels")
            labels = np.asarray(labels)
            same = labels[:, None] == labels[None, :]
            for k, wk in self.per_cluster.items():
                mask = same & (labels[:, None] == k)
                w[mask] = wk
        np.fill_diagonal(w, 0.0)
        return w


def _weight_matrix(D: DistanceMatrix, w, labels=None) -> np.ndarray:
    m = D.n_points
    if w is None:
        w = WeightSpec()
    if isinstance(w, WeightSpec):
        wm = w.matrix(m, labels)
    else:
        wm = np.array(w, dtype=float)
        if wm.shape != (m, m):
            raise ValidationError("weight matrix shape mismatch")
        np.fill_diagonal(wm, 0.0)
    if np.any(wm < 0):
        raise ValidationError("weights must be non-negative")
    if m > 1 and not np.any(wm > 0):
        raise ValidationError("all-zero weights")
    return wm


def _check_connected(wm: np.ndarray):
    m = wm.shape[0]
    seen = np.zeros(m, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        i = stack.pop()
        for j in np.flatnonzero(wm[i] > 0):
            if not seen[j]:
                seen[j] = True
                stack.append(j)
    if not seen.all():
        raise ValidationError("weight pattern disconnects the point set")


def stress(D: DistanceMatrix, coords: np.ndarray, w=None, labels=None) -> float:
    """Weighted squared-error between input and embedded distances."""
    coords = np.asarray(coords, dtype=float)
    if coords.shape[0] != D.n_points:
        raise ValidationError("coords row count does not match distance matrix")
    wm = _weight_matrix(D, w, labels)
    d = cdist(coords, coords)
    iu = np.triu_indices(D.n_points, k=1)
    return float(np.sum(wm[iu] * (D.d[iu] - d[iu]) ** 2))


def _stress_from_dists(d_emb, d_in, wm, iu) -> float:
    return float(np.sum(wm[iu] * (d_in[iu] - d_emb[iu]) ** 2))


def _smacof(d_in, wm, x0, max_iter, eps, uniform_w):
    m = d_in.shape[0]
    iu = np.triu_indices(m, k=1)
    x = x0 - x0.mean(axis=0)
    if uniform_w is None:
        # weighted case: V = diag(W 1) - W, update via its pseudo-inverse
        v = np.diag(wm.sum(axis=1)) - wm
        v_pinv = np.linalg.pinv(v)
    d_emb = cdist(x, x)
    sig = _stress_from_dists(d_emb, d_in, wm, iu)
    for _ in range(max_iter):
        ratio = np.where(d_emb > _EPS_DIST, d_in / np.maximum(d_emb, _EPS_DIST), 0.0)
        b = -wm * ratio
        np.fill_diagonal(b, 0.0)
        np.fill_diagonal(b, -b.sum(axis=1))
        if uniform_w is None:
            x_new = v_pinv @ (b @ x)
        else:
            x_new = (b @ x) / (m * uniform_w)
        x_new -= x_new.mean(axis=0)
        d_emb = cdist(x_new, x_new)
        new_sig = _stress_from_dists(d_emb, d_in, wm, iu)
        if new_sig > sig:  # majorization guarantees descent; guard fp noise
            break
        done = sig - new_sig < eps * max(sig, _EPS_DIST)
        x, sig = x_new, new_sig
        if done:
            break
    return x, sig


def _classical_start(d: np.ndarray) -> np.ndarray | None:
    """Classical-scaling start: top-2 eigenpairs of the double-centered
    squared distances. Returns None when the leading eigenvalue is not
    positive (no useful planar structure)."""
    m = d.shape[0]
    sq = d ** 2
    b = -0.5 * (sq - sq.mean(axis=0) - sq.mean(axis=1)[:, None] + sq.mean())
    vals, vecs = np.linalg.eigh(b)
    if vals[-1] <= 0:
        return None
    top = np.maximum(vals[-2:], 0.0)
    return vecs[:, -2:] * np.sqrt(top)


def mds_embed(D: DistanceMatrix, w=None, cfg: MdsConfig | None = None,
              labels=None) -> tuple[np.ndarray, float]:
    """Embed D in the plane, keeping the lowest-stress of n_init starts.

    The first start is the classical-scaling solution (when defined), the
    rest are random. Returns origin-centered coordinates and the achieved
    stress. One point maps to the origin; two points are placed exactly.
    """
    if cfg is None:
        cfg = MdsConfig()
    m = D.n_points
    wm = _weight_matrix(D, w, labels)
    if m == 1:
        return np.zeros((1, 2)), 0.0
    if m == 2:
        h = 0.5 * D.d[0, 1]
        return np.array([[-h, 0.0], [h, 0.0]]), 0.0
    _check_connected(wm)
    off = wm[np.triu_indices(m, k=1)]
    uniform_w = float(off[0]) if np.all(off == off[0]) and off[0] > 0 else None
    rng = np.random.default_rng(cfg.seed)
    starts = [_classical_start(D.d)]
    while len([s for s in starts if s is not None]) < cfg.n_init:
        starts.append(rng.uniform(-1.0, 1.0, size=(m, 2)))
    best_x, best_sig = None, np.inf
    for x0 in starts:
        if x0 is None:
            continue
        x, sig = _smacof(D.d, wm, x0, cfg.max_iter, cfg.eps, uniform_w)
        if sig < best_sig:
            best_x, best_sig = x, sig
    return best_x - best_x.mean(axis=0), best_sig
