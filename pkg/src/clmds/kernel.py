"""Kernel similarities and kernel-induced distances for descriptor vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Clustering, DistanceMatrix, FeatureSet, ValidationError, validate_distance_matrix

_UNIT_NORM_TOL = 1e-6


@dataclass(frozen=True)
class KernelConfig:
    zeta: float = 1.0
    eta: int = 1
    normalize: bool = False

    def __post_init__(self):
        if self.zeta <= 0:
            raise ValidationError("zeta must be positive")
        if int(self.eta) != self.eta or self.eta < 1:
            raise ValidationError("eta must be a positive integer")


def kernel_matrix(fs: FeatureSet, cfg: KernelConfig | None = None) -> np.ndarray:
    """Polynomial similarity K_ij = (q_i . q_j)^zeta for unit-norm descriptors.

    Negative dot products are clamped to zero before exponentiation so
    fractional zeta stays defined.
    """
    if cfg is None:
        cfg = KernelConfig()
    q = fs.vectors
    norms = np.linalg.norm(q, axis=1)
    if cfg.normalize:
        if np.any(norms == 0):
            raise ValidationError("zero-norm descriptor cannot be normalized")
        q = q / norms[:, None]
    elif np.max(np.abs(norms - 1.0)) > _UNIT_NORM_TOL:
        raise ValidationError("descriptors must be unit-normalized (or pass normalize=True)")
    k = np.clip(q @ q.T, 0.0, None) ** cfg.zeta
    k = 0.5 * (k + k.T)
    np.fill_diagonal(k, 1.0)
    return k


def _check_kernel(k: np.ndarray):
    k = np.asarray(k, dtype=float)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ValidationError("kernel matrix must be square")
    if np.max(np.abs(k - k.T)) > 1e-9:
        raise ValidationError("kernel matrix must be symmetric")
    if np.max(np.abs(np.diag(k) - 1.0)) > 1e-12:
        raise ValidationError("kernel matrix must have unit diagonal")
    if np.min(k) < -1e-12 or np.max(k) > 1.0 + 1e-12:
        raise ValidationError("kernel entries must lie in [0, 1]")
    return k


def kernel_to_distance(k: np.ndarray) -> DistanceMatrix:
    """Induced distance D_ij = sqrt(1 - K_ij)."""
    k = _check_kernel(k)
    d = np.sqrt(np.clip(1.0 - k, 0.0, None))
    np.fill_diagonal(d, 0.0)
    return validate_distance_matrix(d)


def medoid_weighted_distance(k: np.ndarray, c: Clustering,
                             cfg: KernelConfig | None = None) -> DistanceMatrix:
    """Cross-cluster distances inflated by the medoid-pair similarity.

    D_ij = sqrt(1 - K_ij * K(m_k, m_s)^eta) for i in cluster k, j in
    cluster s; same-cluster pairs keep the plain kernel distance.
    """
    if cfg is None:
        cfg = KernelConfig()
    k = _check_kernel(k)
    if c.n_points != k.shape[0]:
        raise ValidationError("clustering size does not match kernel matrix")
    med_sim = k[np.ix_(c.medoids, c.medoids)] ** cfg.eta
    km = med_sim[c.assignment[:, None], c.assignment[None, :]]
    same = c.assignment[:, None] == c.assignment[None, :]
    km[same] = 1.0
    d = np.sqrt(np.clip(1.0 - k * km, 0.0, None))
    np.fill_diagonal(d, 0.0)
    return validate_distance_matrix(d)
