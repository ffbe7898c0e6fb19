"""Truncated Fock-space operator algebra.

Dense complex matrices on n modes with a per-mode cutoff D (levels 0..D-1).
Combined two-arm spaces order the modes arm-1 first, then arm-2, matching
the Kronecker-product convention ``kron(arm1, arm2)``.

Truncation policy: operations never silently hide cutoff effects.  States
whose top-level population exceeds the leak budget carry a truncation flag
that downstream reports propagate.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

from .config import (DEFAULT_KAPPA, DEFAULT_QUADRATURE, DEFAULT_TOLERANCES,
                     KappaConfig, QuadratureConfig, Tolerances)
from .errors import (CalibrationError, DimensionError, QuadratureError,
                     UncertaintyViolationError, ValidationError)
from .symplectic import GaussianState, beam_splitter, symplectic_form

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class FockSpace:
    """n modes, each truncated to ``cutoff`` levels; dim = cutoff**n."""

    n_modes: int
    cutoff: int

    def __post_init__(self):
        if self.n_modes < 1 or self.cutoff < 2:
            raise ValidationError("need n_modes >= 1 and cutoff >= 2")

    @property
    def dim(self) -> int:
        return self.cutoff ** self.n_modes


@dataclass(frozen=True)
class FockOperator:
    """Dense operator on a FockSpace with a role tag and truncation flags."""

    space: FockSpace
    matrix: np.ndarray
    kind: str = "general"   # density | unitary | observable | general
    flags: tuple = ()

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.space.dim, self.space.dim):
            raise DimensionError(
                f"matrix shape {m.shape} does not match space dim {self.space.dim}"
            )
        object.__setattr__(self, "matrix", m)

    def with_flags(self, *new_flags: str) -> "FockOperator":
        merged = tuple(dict.fromkeys(self.flags + new_flags))
        return FockOperator(self.space, self.matrix, self.kind, merged)

    def dagger(self) -> "FockOperator":
        return FockOperator(self.space, self.matrix.conj().T, self.kind, self.flags)


def validate_density(op: FockOperator,
                     tol: Tolerances = DEFAULT_TOLERANCES) -> FockOperator:
    """Check Hermiticity, unit trace and positivity of a density operator."""
    m = op.matrix
    herm = float(np.max(np.abs(m - m.conj().T)))
    if herm > tol.density_hermiticity:
        raise ValidationError(f"density not Hermitian: defect {herm:.3e}")
    tr = complex(np.trace(m))
    if abs(tr - 1.0) > tol.density_trace:
        raise ValidationError(f"density trace {tr!r} deviates from 1")
    mineig = float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])
    if mineig < -tol.density_psd:
        raise ValidationError(f"density has eigenvalue {mineig:.3e}")
    return op


def density(space: FockSpace, matrix: np.ndarray, flags: tuple = (),
            tol: Tolerances = DEFAULT_TOLERANCES) -> FockOperator:
    return validate_density(FockOperator(space, matrix, "density", flags), tol)


# ---------------------------------------------------------------------------
# Ladder and quadrature operators


def lowering(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1.0, cutoff)), k=1)


def _embed(op1: np.ndarray, mode: int, n_modes: int, cutoff: int) -> np.ndarray:
    left = np.eye(cutoff ** mode)
    right = np.eye(cutoff ** (n_modes - mode - 1))
    return np.kron(np.kron(left, op1), right)


@functools.lru_cache(maxsize=16)
def _quadrature_matrices(n_modes: int, cutoff: int) -> tuple:
    a = lowering(cutoff)
    q1 = (a + a.T) / SQRT2
    p1 = 1j * (a.T - a) / SQRT2
    mats = []
    for mode in range(n_modes):
        mats.append(_embed(q1, mode, n_modes, cutoff))
        mats.append(_embed(p1, mode, n_modes, cutoff))
    return tuple(m for m in mats)


def quadratures(space: FockSpace) -> list:
    """The 2n operators (Q1, P1, ..., Qn, Pn) built from truncated ladders.

    [Q_l, P_l] = i holds exactly below the top Fock level; the defect at
    level cutoff-1 is the unavoidable truncation artifact.
    """
    mats = _quadrature_matrices(space.n_modes, space.cutoff)
    return [FockOperator(space, m, "observable") for m in mats]


def total_number_matrix(space: FockSpace) -> np.ndarray:
    a = lowering(space.cutoff)
    num1 = a.T @ a
    out = np.zeros((space.dim, space.dim))
    for mode in range(space.n_modes):
        out = out + _embed(num1, mode, space.n_modes, space.cutoff)
    return out


# ---------------------------------------------------------------------------
# Weyl operators
#
# W_xi = exp(i xi . sigma R) factorizes over modes as displacement operators
# D(alpha_l) with alpha_l = -(xi_{2l} + i xi_{2l+1}) / sqrt(2).


def weyl_alphas(xs: np.ndarray, n_modes: int) -> np.ndarray:
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if xs.shape[1] != 2 * n_modes:
        raise DimensionError(f"points have dimension {xs.shape[1]}, "
                             f"expected {2 * n_modes}")
    return -(xs[:, 0::2] + 1j * xs[:, 1::2]) / SQRT2


def displacement_elements(alpha: np.ndarray, cutoff: int) -> np.ndarray:
    """Matrix elements <m|exp(alpha a^+ - conj(alpha) a)|n> for a batch.

    Closed form via associated Laguerre polynomials; exact for operators
    supported below the cutoff, unlike the exponential of the truncated
    generator.  Returns an array of shape alpha.shape + (cutoff, cutoff).
    """
    alpha = np.asarray(alpha, dtype=complex)
    x = (alpha * alpha.conj()).real
    env = np.exp(-x / 2.0)
    d = cutoff

    # alpha^k and (-conj(alpha))^k for k = 0..d-1
    pow_a = np.empty(alpha.shape + (d,), dtype=complex)
    pow_b = np.empty_like(pow_a)
    pow_a[..., 0] = 1.0
    pow_b[..., 0] = 1.0
    for k in range(1, d):
        pow_a[..., k] = pow_a[..., k - 1] * alpha
        pow_b[..., k] = pow_b[..., k - 1] * (-alpha.conj())

    # lag[n][k] = L_n^(k)(x) by the standard three-term recurrence
    lag = [[None] * d for _ in range(d)]
    for k in range(d):
        lag[0][k] = np.ones_like(x)
    if d > 1:
        for k in range(d):
            lag[1][k] = 1.0 + k - x
        for n in range(1, d - 1):
            for k in range(d):
                lag[n + 1][k] = ((2 * n + k + 1 - x) * lag[n][k]
                                 - (n + k) * lag[n - 1][k]) / (n + 1)

    lg = gammaln(np.arange(1, d + 1))
    out = np.empty(alpha.shape + (d, d), dtype=complex)
    for m in range(d):
        for n in range(m, d):
            k = n - m
            base = np.exp(0.5 * (lg[m] - lg[n])) * env * lag[m][k]
            out[..., n, m] = base * pow_a[..., k]
            out[..., m, n] = base * pow_b[..., k]
    return out


def safe_extent(space: FockSpace) -> float:
    """Heuristic radius within which truncated Weyl operators are trustworthy.

    A displacement by ``xi`` carries weight up to roughly |xi|^2/2 quanta;
    keeping a few levels of headroom gives |xi| <= sqrt(2) (sqrt(D) - 2).
    """
    return max(0.0, SQRT2 * (np.sqrt(space.cutoff) - 2.0))


def certified_levels(space: FockSpace) -> int:
    """Size of the declared low-energy block on which products of truncated
    unitaries obey their operator identities.

    The top half of the spectrum is inherently corrupted: a product of two
    truncated exponentials is missing every path through the removed levels,
    so composition laws are only certified below cutoff // 2.
    """
    return space.cutoff // 2


def weyl_operator(space: FockSpace, xi: np.ndarray) -> FockOperator:
    """Unitary exp(i xi . sigma R) on the truncated space (dense expm)."""
    xi = np.asarray(xi, dtype=float).ravel()
    if xi.size != 2 * space.n_modes:
        raise DimensionError(f"xi has size {xi.size}, expected {2 * space.n_modes}")
    if not np.all(np.isfinite(xi)):
        raise ValidationError("xi must be finite")
    sigma = symplectic_form(space.n_modes)
    coeff = sigma.T @ xi   # xi . sigma R = sum_k (sigma^T xi)_k R_k
    quads = _quadrature_matrices(space.n_modes, space.cutoff)
    gen = sum(c * m for c, m in zip(coeff, quads))
    w = expm(1j * gen)
    flags = ()
    if float(np.linalg.norm(xi)) > safe_extent(space):
        flags = ("weyl:beyond-safe-extent",)
    return FockOperator(space, w, "unitary", flags)


# ---------------------------------------------------------------------------
# Characteristic-function evaluation (trace against Weyl operators)


def char_batch(rho: FockOperator, xs: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """chi(xs) = Tr[W_xs rho] for a batch of points, shape (M, 2n) -> (M,).

    Uses the closed-form Weyl matrix elements, which evaluate the exact
    characteristic function of the truncated operator at any point.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    n, d = rho.space.n_modes, rho.space.cutoff
    if n > 2:
        raise DimensionError("characteristic evaluation supports at most 2 modes")
    out = np.empty(xs.shape[0], dtype=complex)
    if n == 1:
        rmat = rho.matrix
        for lo in range(0, xs.shape[0], chunk):
            blk = xs[lo:lo + chunk]
            t = displacement_elements(weyl_alphas(blk, 1)[:, 0], d)
            out[lo:lo + chunk] = np.einsum("mab,ba->m", t, rmat)
    else:
        rr = rho.matrix.reshape(d, d, d, d)   # [b1, b2, a1, a2] after transpose
        rr = rr.transpose(2, 3, 0, 1)         # rho[b, a] -> rr[b1, b2, a1, a2]
        for lo in range(0, xs.shape[0], chunk):
            blk = xs[lo:lo + chunk]
            alphas = weyl_alphas(blk, 2)
            t0 = displacement_elements(alphas[:, 0], d)
            t1 = displacement_elements(alphas[:, 1], d)
            out[lo:lo + chunk] = np.einsum("mik,mjl,klij->m", t0, t1, rr)
    return out


def char_point(rho: FockOperator, xi: np.ndarray) -> complex:
    return complex(char_batch(rho, np.asarray(xi, dtype=float).reshape(1, -1))[0])


# ---------------------------------------------------------------------------
# Beam-splitter unitary


@functools.lru_cache(maxsize=8)
def _beam_splitter_cached(n_per_arm: int, cutoff: int, theta: float) -> np.ndarray:
    space = FockSpace(2 * n_per_arm, cutoff)
    a = lowering(cutoff)
    gen = np.zeros((space.dim, space.dim))
    for l in range(n_per_arm):
        a1 = _embed(a, l, space.n_modes, cutoff)
        a2 = _embed(a, n_per_arm + l, space.n_modes, cutoff)
        gen += a2.T @ a1 - a1.T @ a2
    u = expm(theta * gen)
    _calibrate_beam_splitter(space, u, theta, n_per_arm)
    return u


def _calibrate_beam_splitter(space: FockSpace, u: np.ndarray, theta: float,
                             n_per_arm: int, tol: float = 1e-9) -> None:
    # Heisenberg transport must match the block rotation on every sector the
    # truncation leaves intact (total quanta <= cutoff - 2).
    s = beam_splitter(theta, n_per_arm)
    quads = _quadrature_matrices(space.n_modes, space.cutoff)
    nmat = total_number_matrix(space)
    keep = (np.real(np.diag(nmat)) <= space.cutoff - 2).astype(float)
    proj = np.outer(keep, keep)
    for k in range(2 * space.n_modes):
        lhs = u.conj().T @ quads[k] @ u
        rhs = sum(s[k, l] * quads[l] for l in range(2 * space.n_modes))
        defect = float(np.max(np.abs((lhs - rhs) * proj)))
        if defect > tol:
            raise CalibrationError(
                f"beam-splitter transport defect {defect:.3e} on component {k}; "
                "sign or phase convention broke"
            )


def beam_splitter_unitary(space: FockSpace, theta: float) -> FockOperator:
    """Unitary on a two-arm space whose moment transport realizes the block
    rotation: Gamma' = S Gamma S^T, d' = S d.

    The generator convention is verified at construction against the
    symplectic transport on all untruncated number sectors.
    """
    if space.n_modes % 2:
        raise DimensionError("beam splitter needs two equal arms (even mode count)")
    u = _beam_splitter_cached(space.n_modes // 2, space.cutoff, float(theta))
    return FockOperator(space, u, "unitary")


def evolve(rho: FockOperator, u: FockOperator) -> FockOperator:
    if rho.space != u.space:
        raise DimensionError("state and unitary live on different spaces")
    out = u.matrix @ rho.matrix @ u.matrix.conj().T
    return FockOperator(rho.space, out, rho.kind,
                        tuple(dict.fromkeys(rho.flags + u.flags)))


# ---------------------------------------------------------------------------
# Tensor algebra, partial trace, norms


def tensor(a: FockOperator, b: FockOperator) -> FockOperator:
    if a.space.cutoff != b.space.cutoff:
        raise DimensionError("tensor factors must share the cutoff")
    space = FockSpace(a.space.n_modes + b.space.n_modes, a.space.cutoff)
    kind = a.kind if a.kind == b.kind else "general"
    return FockOperator(space, np.kron(a.matrix, b.matrix), kind,
                        tuple(dict.fromkeys(a.flags + b.flags)))


def partial_trace(op: FockOperator, keep) -> FockOperator:
    """Trace out all modes not listed in ``keep`` (an iterable of mode indices,
    or "first"/"second" to keep one arm of a two-arm space)."""
    n, d = op.space.n_modes, op.space.cutoff
    if keep == "first":
        keep = tuple(range(n // 2))
    elif keep == "second":
        keep = tuple(range(n // 2, n))
    keep = tuple(sorted(keep))
    if not keep or any(k < 0 or k >= n for k in keep) or len(set(keep)) != len(keep):
        raise DimensionError(f"invalid mode subset {keep} for {n} modes")
    tensor_form = op.matrix.reshape((d,) * (2 * n))
    letters = "abcdefghijkl"
    row = list(letters[:n])
    col = [letters[i] if i not in keep else letters[i].upper() for i in range(n)]
    spec = "".join(row) + "".join(col) + "->" + \
        "".join(letters[i] for i in keep) + "".join(letters[i].upper() for i in keep)
    reduced = np.einsum(spec, tensor_form)
    dk = d ** len(keep)
    out = FockOperator(FockSpace(len(keep), d), reduced.reshape(dk, dk),
                       op.kind, op.flags)
    return out


def trace_norm(op: FockOperator | np.ndarray) -> float:
    m = op.matrix if isinstance(op, FockOperator) else np.asarray(op)
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def hs_norm(op: FockOperator | np.ndarray) -> float:
    m = op.matrix if isinstance(op, FockOperator) else np.asarray(op)
    return float(np.linalg.norm(m))


def mode_populations(rho: FockOperator) -> np.ndarray:
    """Per-mode level occupations, shape (n_modes, cutoff)."""
    out = np.empty((rho.space.n_modes, rho.space.cutoff))
    for l in range(rho.space.n_modes):
        red = partial_trace(rho, (l,)) if rho.space.n_modes > 1 else rho
        out[l] = np.real(np.diag(red.matrix))
    return out


def leak_population(rho: FockOperator) -> float:
    """Largest per-mode population above level cutoff - 3 (the top two levels)."""
    pops = mode_populations(rho)
    return float(np.max(np.sum(pops[:, rho.space.cutoff - 2:], axis=1)))


def flag_if_leaking(rho: FockOperator, label: str,
                    tol: Tolerances = DEFAULT_TOLERANCES) -> FockOperator:
    leak = leak_population(rho)
    if leak > tol.leak_budget:
        return rho.with_flags(f"truncation:{label}:leak={leak:.3e}")
    return rho


# ---------------------------------------------------------------------------
# Moments


@dataclass(frozen=True)
class MomentTable:
    """First, second and fourth moments plus the sampled kappa estimate."""

    d: np.ndarray
    gamma: np.ndarray
    fourth: np.ndarray
    kappa: float
    kappa_pair: tuple | None = None
    kappa_samples: int = 0


def _kappa_value(rho_mat: np.ndarray, quads: tuple, u: np.ndarray,
                 v: np.ndarray) -> float:
    ru = sum(c * m for c, m in zip(u, quads))
    rv = sum(c * m for c, m in zip(v, quads))
    prod = rho_mat @ (ru @ ru) @ (rv @ rv)
    return float(np.sum(np.linalg.svd(prod, compute_uv=False)))


def estimate_kappa(rho: FockOperator, seed: int = 0,
                   cfg: KappaConfig = DEFAULT_KAPPA) -> tuple:
    """Sampled maximum of the trace norm of rho R_u^2 R_v^2 over unit u, v.

    Directions are taken in quadrature space; the target supremum ranges
    over xi . sigma R, but sigma is orthogonal so both direction sets
    coincide.  Canonical axes, random pairs, then greedy local refinement.
    """
    quads = _quadrature_matrices(rho.space.n_modes, rho.space.cutoff)
    dim = 2 * rho.space.n_modes
    rng = np.random.default_rng(seed)
    best, best_pair = -np.inf, None
    n_eval = 0

    def consider(u, v):
        nonlocal best, best_pair, n_eval
        val = _kappa_value(rho.matrix, quads, u, v)
        n_eval += 1
        if val > best:
            best, best_pair = val, (u.copy(), v.copy())

    eye = np.eye(dim)
    if cfg.include_canonical:
        for i in range(dim):
            for j in range(dim):
                consider(eye[i], eye[j])
    for _ in range(cfg.random_pairs):
        u = rng.normal(size=dim)
        v = rng.normal(size=dim)
        consider(u / np.linalg.norm(u), v / np.linalg.norm(v))
    if best_pair is None:
        consider(eye[0], eye[0])
    for _ in range(cfg.refine_steps):
        u0, v0 = best_pair
        u = u0 + cfg.refine_scale * rng.normal(size=dim)
        v = v0 + cfg.refine_scale * rng.normal(size=dim)
        consider(u / np.linalg.norm(u), v / np.linalg.norm(v))
    return best, best_pair, n_eval


def moments(rho: FockOperator, *, seed: int = 0,
            cfg: KappaConfig = DEFAULT_KAPPA,
            with_kappa: bool = True) -> MomentTable:
    """Displacement, covariance (anticommutator convention), per-axis fourth
    moments Tr[rho R_k^4], and the sampled kappa of the state."""
    quads = _quadrature_matrices(rho.space.n_modes, rho.space.cutoff)
    rmat = rho.matrix
    dim = 2 * rho.space.n_modes
    d = np.array([np.trace(rmat @ q).real for q in quads])
    gamma = np.empty((dim, dim))
    prods = [q @ rmat for q in quads]
    for k in range(dim):
        for l in range(k, dim):
            skl = np.trace(quads[l] @ prods[k])   # Tr[rho R_k R_l]
            gamma[k, l] = gamma[l, k] = 2.0 * skl.real - 2.0 * d[k] * d[l]
    fourth = np.array([np.trace(rmat @ np.linalg.matrix_power(q, 4)).real
                       for q in quads])
    if with_kappa:
        kappa, pair, n_eval = estimate_kappa(rho, seed=seed, cfg=cfg)
        kappa = max(kappa, float(np.max(fourth)))
    else:
        kappa, pair, n_eval = float(np.max(fourth)), None, 0
    return MomentTable(d, gamma, fourth, kappa, pair, n_eval)


def gaussify(rho: FockOperator,
             tol: Tolerances = DEFAULT_TOLERANCES) -> GaussianState:
    """Gaussian state with the same first and second moments as rho.

    Raises when the measured covariance violates the uncertainty relation
    beyond tolerance, which signals an unphysical truncation.
    """
    table = moments(rho, with_kappa=False)
    gs = GaussianState(table.d, (table.gamma + table.gamma.T) / 2)
    from .symplectic import check_uncertainty

    mineig = check_uncertainty(gs.gamma, tol)
    if mineig < -tol.uncertainty:
        raise UncertaintyViolationError(
            f"gaussified covariance has min eig(Gamma + i sigma) = {mineig:.3e}; "
            "increase the cutoff"
        )
    return gs


# ---------------------------------------------------------------------------
# Gaussian-state synthesis (inverse Weyl transform by quadrature)


def gaussian_char_values(gs: GaussianState, xs: np.ndarray) -> np.ndarray:
    """Closed-form chi(xs) of a Gaussian state at a batch of points.

    chi(xi) = exp(-xi.(sigma Gamma sigma^T)xi/4 + i xi.(sigma d)); the sigma
    twist keeps the operator-level moment convention (vacuum -> exp(-|xi|^2/4)).
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    sigma = symplectic_form(gs.n)
    a = sigma @ gs.gamma @ sigma.T
    quad = np.einsum("mi,ij,mj->m", xs, a, xs)
    phase = xs @ (sigma @ gs.d)
    return np.exp(-quad / 4.0 + 1j * phase)


@functools.lru_cache(maxsize=3)
def _synthesis_kernel(cutoff: int, extent: float, points: int) -> tuple:
    """Grid nodes, trapezoid weights and W_{-xi} element tensor for one mode."""
    axis = np.linspace(-extent, extent, points)
    h = axis[1] - axis[0]
    w1 = np.full(points, h)
    w1[0] *= 0.5
    w1[-1] *= 0.5
    g1, g2 = np.meshgrid(axis, axis, indexing="ij")
    pts = np.column_stack([g1.ravel(), g2.ravel()])
    weights = np.outer(w1, w1).ravel()
    alphas = weyl_alphas(-pts, 1)[:, 0]
    elements = displacement_elements(alphas, cutoff)
    return pts, weights, elements


def synthesis_grid(gs: GaussianState,
                   quad: QuadratureConfig = DEFAULT_QUADRATURE) -> tuple:
    """Extent and point count resolving a Gaussian with covariance gs.gamma."""
    lam_min = float(np.linalg.eigvalsh((gs.gamma + gs.gamma.T) / 2)[0])
    if lam_min <= 0:
        raise ValidationError("covariance must be positive definite for synthesis")
    extent = np.sqrt(4.0 * np.log(1.0 / quad.tail_tol) / lam_min)
    extent = np.ceil(extent / quad.extent_round) * quad.extent_round
    h_max = 2.0 * np.pi / (extent * quad.oversample)
    points = 2 * int(np.ceil(extent / h_max)) + 1
    if points > quad.max_points_per_axis:
        raise QuadratureError(
            f"synthesis grid needs {points} points per axis "
            f"(cap {quad.max_points_per_axis}); loosen tail_tol or rescale"
        )
    return float(extent), points


def gaussian_to_fock(gs: GaussianState, space: FockSpace,
                     quad: QuadratureConfig = DEFAULT_QUADRATURE,
                     tol: Tolerances = DEFAULT_TOLERANCES) -> FockOperator:
    """Synthesize the density matrix of a Gaussian state on a truncated space.

    Trapezoidal quadrature of rho = (2pi)^-n Integral chi(xi) W_{-xi} d xi
    over a uniform grid sized by ``synthesis_grid``.  The result is
    Hermitized, validated against the residual tolerance, clipped to the
    positive cone and renormalized to unit trace.
    """
    gs = gs.validate(tol)
    if gs.n != space.n_modes:
        raise DimensionError("state and space mode counts differ")
    if space.n_modes != 1:
        return _synthesize_product(gs, space, quad, tol)
    extent, points = synthesis_grid(gs, quad)
    pts, weights, elements = _synthesis_kernel(space.cutoff, extent, points)
    chi = gaussian_char_values(gs, pts)
    rho = np.einsum("m,mab->ab", weights * chi, elements) / (2.0 * np.pi)
    rho = (rho + rho.conj().T) / 2.0

    # A trace above 1 can only come from the quadrature itself; a deficit is
    # the state's mass beyond the cutoff, which is a truncation condition.
    trace = float(np.trace(rho).real)
    flags = ()
    if trace - 1.0 > quad.residual_tol:
        raise QuadratureError(
            f"synthesis trace residual {trace - 1.0:.3e} exceeds "
            f"{quad.residual_tol:.1e}; enlarge the grid"
        )
    if 1.0 - trace > quad.residual_tol:
        flags += (f"truncation:synthesis:mass-deficit={1.0 - trace:.3e}",)
    vals, vecs = np.linalg.eigh(rho)
    if vals[0] < -1e-6:
        raise QuadratureError(f"synthesized state has eigenvalue {vals[0]:.3e}")
    vals = np.clip(vals, 0.0, None)
    rho = (vecs * vals) @ vecs.conj().T
    rho /= np.trace(rho).real
    out = FockOperator(space, rho, "density", flags)
    return flag_if_leaking(out, "synthesis", tol)


def _synthesize_product(gs: GaussianState, space: FockSpace,
                        quad: QuadratureConfig, tol: Tolerances) -> FockOperator:
    # Quadrature cost grows exponentially with mode count, so multi-mode
    # targets are supported exactly when they factorize over modes.
    gamma = gs.gamma
    cross = gamma.copy()
    for l in range(gs.n):
        cross[2 * l:2 * l + 2, 2 * l:2 * l + 2] = 0.0
    worst = float(np.max(np.abs(cross)))
    if worst > 1e-10:
        raise DimensionError(
            f"multi-mode synthesis needs a block-diagonal covariance "
            f"(largest cross term {worst:.3e}); only product Gaussians are "
            "representable per mode"
        )
    out = None
    for l in range(gs.n):
        factor = gaussian_to_fock(
            GaussianState(gs.d[2 * l:2 * l + 2],
                          gamma[2 * l:2 * l + 2, 2 * l:2 * l + 2]),
            FockSpace(1, space.cutoff), quad, tol)
        out = factor if out is None else tensor(out, factor)
    return out
