"""Classification of symplectic maps that keep two-arm covariances uncorrelated.

The for-all-covariances condition is discharged exactly through the
symmetric-subspace projector: with S split into 2n x 2n blocks A, B, C, D,

    S (Gamma (+) Gamma) S^T block-diagonal for every symmetric Gamma
        <=>  (A (x) C + B (x) D) P_plus = 0,

a finite linear identity.  Random covariance sampling is used only to
produce a human-readable witness when the criterion fails.

Admissible maps decompose as S = diag(X, Y) (1 + a^2)^(-1/2)
[[I, -aI], [aI, I]] with X, Y symplectic; a = -Tr(A^{-1} B) / 2n.  With
this sign convention the two-arm block rotation at angle t has a = tan t
and X = Y = I.  The swap family is the a -> +-infinity limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import DecompositionError, DimensionError, ValidationError
from .symplectic import is_symplectic, random_covariance, symplectic_defect


def split_blocks(s: np.ndarray) -> tuple:
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 4:
        raise DimensionError(f"need a 4n x 4n matrix, got {s.shape}")
    half = s.shape[0] // 2
    return (s[:half, :half], s[:half, half:],
            s[half:, :half], s[half:, half:])


def symmetric_projector(dim: int) -> np.ndarray:
    """Projector onto the symmetric subspace of R^dim (x) R^dim."""
    eye = np.eye(dim * dim)
    swap = eye.reshape(dim, dim, dim, dim).transpose(0, 1, 3, 2) \
        .reshape(dim * dim, dim * dim)
    return (eye + swap) / 2.0


def preserves_identical(s: np.ndarray,
                        tol: Tolerances = DEFAULT_TOLERANCES) -> tuple:
    """(verdict, residual) for the identical-input condition
    (A x C + B x D) P+ = 0."""
    a, b, c, d = split_blocks(s)
    if not is_symplectic(s, tol.symplectic):
        raise ValidationError(
            f"matrix is not symplectic (defect {symplectic_defect(s):.3e})"
        )
    proj = symmetric_projector(a.shape[0])
    residual = float(np.max(np.abs((np.kron(a, c) + np.kron(b, d)) @ proj)))
    return residual <= 10 * tol.symplectic, residual


def preserves_arbitrary(s: np.ndarray,
                        tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """True when the two summands vanish separately, i.e. the map keeps
    arbitrary (not just identical) input pairs uncorrelated."""
    a, b, c, d = split_blocks(s)
    if not is_symplectic(s, tol.symplectic):
        raise ValidationError(
            f"matrix is not symplectic (defect {symplectic_defect(s):.3e})"
        )
    proj = symmetric_projector(a.shape[0])
    r1 = float(np.max(np.abs(np.kron(a, c) @ proj)))
    r2 = float(np.max(np.abs(np.kron(b, d) @ proj)))
    return max(r1, r2) <= 10 * tol.symplectic


def find_witness(s: np.ndarray, seed: int = 0, trials: int = 64) -> tuple:
    """Covariance Gamma for which S (Gamma (+) Gamma) S^T has the largest
    off-diagonal block, as a counterexample certificate."""
    rng = np.random.default_rng(seed)
    n2 = s.shape[0] // 2
    best, best_gamma = -np.inf, None
    for _ in range(trials):
        gamma = random_covariance(n2 // 2, rng)
        big = np.zeros((2 * n2, 2 * n2))
        big[:n2, :n2] = gamma
        big[n2:, n2:] = gamma
        out = s @ big @ s.T
        off = float(np.max(np.abs(out[:n2, n2:])))
        if off > best:
            best, best_gamma = off, gamma
    return best_gamma, best


@dataclass(frozen=True)
class ClassificationResult:
    verdict: str                      # local | swap | beam_splitter_like | not_preserving
    blocks: tuple | None              # (X, Y) symplectic factors when applicable
    alpha: float                      # 0 for local, +-inf for swap
    residual: float                   # defining-equation residual
    reconstruction_residual: float | None = None
    witness_gamma: np.ndarray | None = None
    witness_offdiag: float | None = None

    def to_dict(self) -> dict:
        out = {
            "verdict": self.verdict,
            "alpha": None if math.isinf(self.alpha) else self.alpha,
            "alpha_infinite": math.isinf(self.alpha),
            "residual": self.residual,
            "reconstruction_residual": self.reconstruction_residual,
        }
        if self.blocks is not None:
            out["X"] = self.blocks[0].tolist()
            out["Y"] = self.blocks[1].tolist()
        if self.witness_gamma is not None:
            out["witness_gamma"] = self.witness_gamma.tolist()
            out["witness_offdiag"] = self.witness_offdiag
        return out


def build_canonical(x: np.ndarray, y: np.ndarray, alpha: float) -> np.ndarray:
    """S from the canonical factors; the inverse of ``decompose``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if math.isinf(alpha):
        return np.block([[np.zeros_like(x), x], [y, np.zeros_like(y)]])
    scale = 1.0 / math.sqrt(1.0 + alpha * alpha)
    return scale * np.block([[x, -alpha * x], [alpha * y, y]])


def decompose(s: np.ndarray, seed: int = 0,
              tol: Tolerances = DEFAULT_TOLERANCES) -> ClassificationResult:
    """Classify S and, when admissible, extract (X, Y, alpha).

    Near-singular A (condition number above 1e8) switches to the
    swap-branch parametrization through B, which stays well conditioned
    exactly where A degenerates.
    """
    s = np.asarray(s, dtype=float)
    ok, residual = preserves_identical(s, tol)
    if not ok:
        gamma, off = find_witness(s, seed=seed)
        return ClassificationResult("not_preserving", None, math.nan, residual,
                                    witness_gamma=gamma, witness_offdiag=off)

    a, b, c, d = split_blocks(s)
    n2 = a.shape[0]
    use_gamma_branch = np.linalg.cond(a) > 1e8
    if not use_gamma_branch:
        alpha = float(-np.trace(np.linalg.solve(a, b)) / n2)
        if abs(alpha) > tol.alpha_swap:
            use_gamma_branch = True
    if use_gamma_branch:
        gamma_par = float(-np.trace(np.linalg.solve(b, a)) / n2)
        if abs(gamma_par) < 1.0 / tol.alpha_swap:
            x, y = b.copy(), c.copy()
            result = _finalize(s, x, y, math.inf, residual, tol)
            return result
        alpha = 1.0 / gamma_par
        root = math.sqrt(1.0 + gamma_par * gamma_par)
        sign = math.copysign(1.0, gamma_par)
        x = -sign * root * b
        y = sign * root * c
    else:
        root = math.sqrt(1.0 + alpha * alpha)
        x = root * a
        y = root * d
    return _finalize(s, x, y, alpha, residual, tol)


def _finalize(s, x, y, alpha, residual, tol) -> ClassificationResult:
    for name, block in (("X", x), ("Y", y)):
        defect = symplectic_defect(block)
        if defect > 1e3 * tol.symplectic:
            raise DecompositionError(
                f"factor {name} is not symplectic (defect {defect:.3e}, "
                f"cond(A) = {np.linalg.cond(split_blocks(s)[0]):.3e})"
            )
    rec = build_canonical(x, y, alpha)
    rec_res = float(np.max(np.abs(rec - s)))
    if rec_res > tol.residual * max(1.0, float(np.max(np.abs(s)))):
        raise DecompositionError(
            f"reconstruction residual {rec_res:.3e} exceeds tolerance; "
            f"cond(A) = {np.linalg.cond(split_blocks(s)[0]):.3e}"
        )
    if math.isinf(alpha):
        verdict = "swap"
    elif abs(alpha) <= 1e-10:
        verdict = "local"
        alpha = 0.0
    else:
        verdict = "beam_splitter_like"
    return ClassificationResult(verdict, (x, y), alpha, residual, rec_res)
