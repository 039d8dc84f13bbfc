"""Graphon kernels: evaluation, sampling, quadrature, and spectra.

A graphon is a symmetric measurable kernel g: [0,1]^2 -> [0,1].  It acts
on node profiles h through (G h)(a) = int_0^1 g(a, b) h(b) db, discretized
everywhere here by the midpoint rule on the shared node grid.
"""

from __future__ import annotations

import csv
import warnings as _warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError

KINDS = ("constant", "sinusoidal", "uniform_attachment", "half", "step")


@dataclass(frozen=True)
class Graphon:
    """Analytic kernel family plus step kernels induced by weight matrices.

    sinusoidal          cos^2(pi (a - b) / 2)
    uniform_attachment  1 - max(a, b)
    half                1{b >= a + 0.5 or a >= b + 0.5}   (non-strict >=)
    constant            c
    step                cell value of an N_g-regular step function
    """

    kind: str
    c: float = 1.0
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown graphon kind '{self.kind}'")
        if self.kind == "constant" and not (0.0 <= self.c <= 1.0):
            raise ConfigError("constant graphon level must lie in [0, 1]")
        if self.kind == "step":
            W = self.weights
            if W is None or W.ndim != 2 or W.shape[0] != W.shape[1]:
                raise ConfigError("step graphon needs a square weight matrix")
            if np.max(np.abs(W - W.T)) > 1e-12 or W.min() < 0 or W.max() > 1:
                raise ConfigError("step weights must be symmetric with entries in [0, 1]")

    @staticmethod
    def constant(c: float) -> "Graphon":
        return Graphon(kind="constant", c=float(c))

    @staticmethod
    def sinusoidal() -> "Graphon":
        return Graphon(kind="sinusoidal")

    @staticmethod
    def uniform_attachment() -> "Graphon":
        return Graphon(kind="uniform_attachment")

    @staticmethod
    def half() -> "Graphon":
        return Graphon(kind="half")

    @staticmethod
    def step(weights: np.ndarray) -> "Graphon":
        W = np.asarray(weights, dtype=float)
        asym = np.max(np.abs(W - W.T)) if W.ndim == 2 else 0.0
        if asym > 1e-12:
            _warnings.warn(
                f"step weights symmetrized; asymmetry was {asym:.3e}",
                stacklevel=2)
        W = 0.5 * (W + W.T)
        return Graphon(kind="step", weights=W)


@dataclass(frozen=True)
class StepWeights:
    """Finite network weights g^N_ij in [0,1] on N nodes."""

    gN: np.ndarray

    @property
    def N(self) -> int:
        return self.gN.shape[0]


@dataclass(frozen=True)
class SpectralDecomposition:
    """Retained eigenpairs of the discretized kernel operator.

    eigenvalues are ordered by decreasing |lambda|; eigenvectors holds the
    eigenfunction samples f_l on the node grid, column per eigenvalue,
    normalized so that mean(f_l^2) = 1 (grid orthonormality).  residual is
    the grid L2 norm of the kernel minus its retained-rank expansion.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    rank: int
    residual: float
    alphas: np.ndarray


def _cell_index(x: np.ndarray, n_cells: int) -> np.ndarray:
    # cells (0, 1/N], ..., ((N-1)/N, 1] with 0 assigned to the first cell
    idx = np.ceil(np.asarray(x) * n_cells).astype(int) - 1
    return np.clip(idx, 0, n_cells - 1)


def evaluate(g: Graphon, alpha, beta):
    """Kernel value g(alpha, beta); vectorized with numpy broadcasting."""
    a = np.asarray(alpha, dtype=float)
    b = np.asarray(beta, dtype=float)
    if np.any(a < 0) or np.any(a > 1) or np.any(b < 0) or np.any(b > 1):
        raise ValueError("graphon arguments must lie in [0, 1]")
    if g.kind == "constant":
        out = np.full(np.broadcast_shapes(a.shape, b.shape), g.c)
    elif g.kind == "sinusoidal":
        out = np.cos(0.5 * np.pi * (a - b)) ** 2
    elif g.kind == "uniform_attachment":
        out = 1.0 - np.maximum(a, b)
    elif g.kind == "half":
        out = ((b >= a + 0.5) | (a >= b + 0.5)).astype(float)
    else:  # step
        W = g.weights
        out = W[_cell_index(a, W.shape[0]), _cell_index(b, W.shape[0])]
    if out.ndim == 0:
        return float(out)
    return out


def grid_matrix(g: Graphon, alphas: np.ndarray) -> np.ndarray:
    """Kernel sampled on a node grid: G_ij = g(alpha_i, alpha_j)."""
    a = np.asarray(alphas, dtype=float)
    return np.asarray(evaluate(g, a[:, None], a[None, :]), dtype=float)


def section_apply(g: Graphon, alpha: float, h: np.ndarray,
                  alphas: np.ndarray) -> np.ndarray:
    """Midpoint-rule quadrature of int g(alpha, b) h(b) db over the grid.

    ``h`` holds samples of a (possibly vector-valued) profile on the same
    midpoint grid ``alphas``.
    """
    h = np.asarray(h, dtype=float)
    row = np.asarray(evaluate(g, alpha, np.asarray(alphas)), dtype=float)
    return row @ h / len(alphas)


def sample_step(g: Graphon, N: int) -> StepWeights:
    """Finite weights by midpoint sampling: g^N_ij = g(I_i*, I_j*)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    mids = (np.arange(N) + 0.5) / N
    return StepWeights(gN=grid_matrix(g, mids))


def spectral_decompose(g: Graphon, alphas: np.ndarray,
                       rank_tol: float = 1e-8) -> SpectralDecomposition:
    """Eigendecomposition of the midpoint-discretized kernel operator.

    The operator matrix is K_ij = g(a_i, a_j)/N, whose eigenvalues converge
    to the kernel's; eigenvectors are rescaled by sqrt(N) so the sampled
    eigenfunctions are orthonormal under the grid inner product
    (1/N) sum_i f(a_i) f'(a_i).  All eigenvalues with |lambda| > rank_tol
    are retained.
    """
    a = np.asarray(alphas, dtype=float)
    N = len(a)
    if N < 2:
        raise ValueError("need at least 2 grid nodes")
    G = grid_matrix(g, a)
    K = G / N
    evals, evecs = np.linalg.eigh(0.5 * (K + K.T))
    order = np.argsort(-np.abs(evals), kind="stable")
    evals = evals[order]
    evecs = evecs[:, order]
    keep = np.abs(evals) > rank_tol
    evals = evals[keep]
    evecs = evecs[:, keep] * np.sqrt(N)
    # deterministic sign: largest-magnitude component positive
    for k in range(evecs.shape[1]):
        j = int(np.argmax(np.abs(evecs[:, k])))
        if evecs[j, k] < 0:
            evecs[:, k] = -evecs[:, k]
    recon = (evecs * evals) @ evecs.T
    residual = float(np.sqrt(np.mean((G - recon) ** 2)))
    return SpectralDecomposition(eigenvalues=evals, eigenvectors=evecs,
                                 rank=int(evals.size), residual=residual,
                                 alphas=a)


def coupling_error_eps1(gN: StepWeights | np.ndarray, g: Graphon,
                        refine: int = 16) -> float:
    """Row-wise network-vs-kernel mass error.

        max_i sum_j | g^N_ij / N - int_{I_j} g(I_i*, b) db |

    with per-cell integrals by a ``refine``-point midpoint rule.
    """
    W = gN.gN if isinstance(gN, StepWeights) else np.asarray(gN, dtype=float)
    N = W.shape[0]
    mids = (np.arange(N) + 0.5) / N
    sub = (np.arange(N)[:, None] + (np.arange(refine)[None, :] + 0.5) / refine) / N
    fine = np.asarray(evaluate(g, mids[:, None], sub.reshape(-1)[None, :]),
                      dtype=float)
    cell_int = fine.reshape(N, N, refine).mean(axis=2) / N
    return float(np.max(np.abs(W / N - cell_int).sum(axis=1)))


def graphon_from_config(cfg: dict, base_dir: str | Path | None = None) -> Graphon:
    """Build a Graphon from the config sub-dictionary."""
    if cfg is None:
        raise ConfigError("missing 'graphon' configuration")
    kind = str(cfg.get("kind", "")).lower()
    if kind == "constant":
        return Graphon.constant(float(cfg.get("c", 1.0)))
    if kind in ("sinusoidal", "uniform_attachment", "half"):
        return Graphon(kind=kind)
    if kind == "step":
        if "weights" in cfg:
            return Graphon.step(np.asarray(cfg["weights"], dtype=float))
        if "csv" in cfg:
            path = Path(cfg["csv"])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            return load_step_csv(path)
        raise ConfigError("step graphon needs 'weights' or 'csv'")
    raise ConfigError(f"unknown graphon kind '{kind}'")


def spectral_to_json(dec: SpectralDecomposition) -> dict:
    """JSON-ready summary of a decomposition: eigenvalues, residual, rank."""
    return {"eigenvalues": [float(v) for v in dec.eigenvalues],
            "residual": dec.residual, "rank": dec.rank}


def eigenvectors_to_csv(dec: SpectralDecomposition, path: str | Path) -> None:
    """Eigenfunction samples, one column per retained eigenvalue."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha"] + [f"f{j + 1}" for j in range(dec.rank)])
        for i, a in enumerate(dec.alphas):
            writer.writerow([format(a, ".12g")]
                            + [format(v, ".12g") for v in dec.eigenvectors[i]])


def load_step_csv(path: str | Path) -> Graphon:
    """Read an N x N weight matrix from CSV; symmetrizes with a warning."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"step graphon file not found: {p}")
    with p.open(newline="") as fh:
        rows = [[float(x) for x in row] for row in csv.reader(fh) if row]
    W = np.asarray(rows, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ConfigError("step graphon CSV must be a square matrix")
    return Graphon.step(W)
