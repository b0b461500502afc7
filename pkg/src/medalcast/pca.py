"""Principal component projection of athlete vectors."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import (
    DegenerateError,
    DomainRangeError,
    InsufficientDataError,
    IterationLimitError,
    ShapeError,
)

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


@dataclass
class EigenDecomposition:
    values: np.ndarray  # descending
    vectors: np.ndarray  # columns paired with values
    sweeps: int = 0


@dataclass
class ProjectionMatrix:
    matrix: np.ndarray  # (dim, k), orthonormal columns
    mean: np.ndarray  # training mean subtracted before projecting
    eigenvalues: np.ndarray

    @property
    def k(self) -> int:
        return self.matrix.shape[1]

    def to_json(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "matrix": self.matrix.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ProjectionMatrix":
        return cls(
            matrix=np.array(doc["matrix"], dtype=np.float64),
            mean=np.array(doc["mean"], dtype=np.float64),
            eigenvalues=np.array(doc["eigenvalues"], dtype=np.float64),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ProjectionMatrix":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def covariance(vectors) -> np.ndarray:
    """Mean-centred covariance with 1/N normalisation."""
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise InsufficientDataError("covariance needs at least 2 vectors")
    D = X - X.mean(axis=0)
    return D.T @ D / X.shape[0]


def eigen_sym(C, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Eigenvalues come back in descending order (ties keep their diagonal
    order) and each eigenvector's largest-magnitude entry is positive.
    """
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {C.shape}")
    scale = max(1.0, float(np.abs(C).max(initial=0.0)))
    if np.abs(C - C.T).max(initial=0.0) > 1e-12 * scale:
        raise ShapeError("matrix is not symmetric")
    values, vectors, sweeps, converged = kernels.jacobi_eigh(C, tol, max_sweeps)
    if not converged:
        raise IterationLimitError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]
    lead = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[lead, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return EigenDecomposition(values=values, vectors=vectors * signs, sweeps=sweeps)


def projection(decomp: EigenDecomposition, k: int = 5, mean=None) -> ProjectionMatrix:
    n = decomp.vectors.shape[0]
    if not 1 <= k <= n:
        raise DomainRangeError(f"k={k} outside [1, {n}]")
    mean = np.zeros(n) if mean is None else np.asarray(mean, dtype=np.float64)
    return ProjectionMatrix(
        matrix=decomp.vectors[:, :k].copy(),
        mean=mean.copy(),
        eigenvalues=decomp.values[:k].copy(),
    )


def project(v, P: ProjectionMatrix) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != P.matrix.shape[0]:
        raise ShapeError(f"vector has {v.shape[-1]} entries, projection expects {P.matrix.shape[0]}")
    return (v - P.mean) @ P.matrix


def explained_variance(decomp: EigenDecomposition, k: int) -> float:
    lam = np.clip(decomp.values, 0.0, None)
    total = lam.sum()
    if total <= 0.0:
        raise DegenerateError("spectrum is all zero")
    return float(lam[:k].sum() / total)


def fit_pca(vectors, k: int = 5) -> tuple[ProjectionMatrix, EigenDecomposition]:
    X = np.asarray(vectors, dtype=np.float64)
    decomp = eigen_sym(covariance(X))
    return projection(decomp, k, mean=X.mean(axis=0)), decomp
