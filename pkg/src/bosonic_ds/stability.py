"""End-to-end beam-splitter stability experiments.

An experiment sends a product state through the splitter, measures how far
the output is from the product of its reductions (epsilon), Gaussifies the
inputs, and evaluates the explicit stability constants and both bounds:

    |rho_j - rho'_j|_2  <=  c1 eps^(1/3) + c2 / sqrt(ln(1/eps))
    |Gamma_1 - Gamma_2|_2  <=  c3 sqrt(eps)

epsilon is measured against the product of the true reduced states; any
product witness within eps implies the reduced product is within 3 eps, so
the report carries both numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import (DEFAULT_KAPPA, DEFAULT_QUADRATURE, DEFAULT_TOLERANCES,
                     KappaConfig, QuadratureConfig, Tolerances)
from .errors import (BoundViolationError, CalibrationError,
                     TrivialSplitterError, ValidationError)
from .fock import (FockOperator, FockSpace, beam_splitter_unitary, evolve,
                   gaussian_to_fock, gaussify, hs_norm, leak_population,
                   moments, partial_trace, tensor, trace_norm, validate_density,
                   _quadrature_matrices)
from .symplectic import is_trivial_angle

# Directly evaluated 50-50 one-mode prefactor vs the value quoted alongside
# the published curve; the ~10% gap is reported side by side, not reconciled.
C1_QUOTED_50_50 = 46.2


def c1_direct_50_50() -> float:
    return 32.0 * math.sqrt(8.0 / math.pi)


def theta_curve(theta: float) -> float:
    """Shape of the in-region constant versus transmittivity:
    sqrt((1 + 3 sin 2t) / sin 2t); diverges at t = 0 and t = pi/2."""
    s2 = math.sin(2.0 * theta)
    if s2 <= 0:
        raise ValidationError("theta must lie strictly inside (0, pi/2)")
    return math.sqrt((1.0 + 3.0 * s2) / s2)


def c1_constant(theta: float, n: int, kappa: float) -> float:
    s2 = math.sin(2.0 * theta)
    if s2 <= 0:
        raise ValidationError("c1 is defined for theta in (0, pi/2)")
    return 32.0 * math.sqrt((2.0 / math.pi ** n) * (1.0 + 3.0 * s2) / s2) \
        * n ** 2 * kappa


def c2_constant(lam: float, trace_gamma_out: float, n: int) -> float:
    return 8.0 * math.sqrt(3.0 * lam * trace_gamma_out / math.pi ** n)


def c2_shape(n: int) -> float:
    """theta-independent prefactor of c2 (multiplies sqrt(lam * Tr Gamma_out))."""
    return 8.0 * math.sqrt(3.0 / math.pi ** n)


def c3_constant(theta: float, n: int, kappa: float) -> float:
    s2 = math.sin(2.0 * theta)
    if s2 == 0:
        raise TrivialSplitterError("c3 diverges at multiples of pi/2")
    return math.sqrt(384.0 * n ** 2 * kappa) / abs(s2)


def f_bound(theta: float, n: int, kappa: float, epsilon: float,
            xi_norm: float) -> float:
    """Closed-form bound on the squared double-line-integral remainder:
    (n^2 kappa |xi|^4 / (2 tan^2 t)) eps^(2/3)."""
    if is_trivial_angle(theta):
        raise TrivialSplitterError("bound diverges at multiples of pi/2")
    t = math.tan(theta)
    return (n ** 2 * kappa * xi_norm ** 4 / (2.0 * t ** 2)) * epsilon ** (2.0 / 3.0)


def region_radius(lam: float, epsilon: float) -> tuple:
    """Radius of the ball where input characteristic functions stay away
    from zero, r = sqrt(log2(1/eps^(1/12)) / lam), with the guaranteed
    floor 12 eps^(1/12) on |chi| inside it."""
    if lam <= 0:
        raise ValidationError("largest variance must be positive")
    if not 0.0 < epsilon < 1.0:
        raise ValidationError("epsilon must lie in (0, 1)")
    r = math.sqrt(-math.log2(epsilon) / (12.0 * lam))
    return r, 12.0 * epsilon ** (1.0 / 12.0)


def constants_sweep(theta_min: float, theta_max: float, steps: int,
                    n: int, kappa: float) -> list:
    """Per-theta table of the shape curve and the three constants."""
    if steps < 1:
        raise ValidationError("steps must be >= 1")
    if not (0.0 < theta_min <= theta_max < math.pi / 2):
        raise ValidationError("theta range must lie inside (0, pi/2)")
    thetas = np.linspace(theta_min, theta_max, steps) if steps > 1 \
        else np.array([theta_min])
    rows = []
    for t in thetas:
        rows.append({
            "theta": float(t),
            "curve": theta_curve(float(t)),
            "c1": c1_constant(float(t), n, kappa),
            "c2_shape": c2_shape(n),
            "c3": c3_constant(float(t), n, kappa),
        })
    return rows


# ---------------------------------------------------------------------------
# Cross covariance


@dataclass(frozen=True)
class CrossCovariance:
    v: np.ndarray
    norm: float
    bound: float | None
    within_bound: bool | None


def _cross_cov_matrix(g_mat: np.ndarray, space: FockSpace,
                      theta: float) -> np.ndarray:
    """Entries Tr[g R_{1k} R_{2l}] / tan(theta) on a two-arm space.

    Satisfies Gamma_1 - Gamma_2 = (2 / cos^2 theta) V exactly for centered
    product inputs; its Frobenius norm matches any orthogonally conjugated
    variant of the same object.
    """
    n2 = space.n_modes
    if n2 % 2:
        raise ValidationError("cross covariance needs a two-arm space")
    n = n2 // 2
    quads = _quadrature_matrices(space.n_modes, space.cutoff)
    arm1 = quads[: 2 * n]
    arm2 = quads[2 * n:]
    t = math.tan(theta)
    if t == 0:
        raise TrivialSplitterError("cross covariance undefined at theta = m pi")
    m = np.empty((2 * n, 2 * n), dtype=complex)
    for k, r1 in enumerate(arm1):
        left = g_mat @ r1
        for l, r2 in enumerate(arm2):
            m[k, l] = np.einsum("ij,ji->", left, r2)
    return m / t


def cross_covariance_V(rho_ab: FockOperator, rho_a: FockOperator,
                       rho_b: FockOperator, theta: float, *,
                       kappa: float | None = None,
                       epsilon: float | None = None) -> CrossCovariance:
    g = rho_ab.matrix - np.kron(rho_a.matrix, rho_b.matrix)
    if epsilon is None:
        epsilon = trace_norm(g)
    v = _cross_cov_matrix(g, rho_ab.space, theta)
    norm = float(np.linalg.norm(v))
    bound = None
    within = None
    if kappa is not None:
        n = rho_ab.space.n_modes // 2
        bound = math.sqrt(24.0 * n ** 2 * kappa * epsilon) / abs(math.tan(theta))
        within = norm <= bound
    return CrossCovariance(v, norm, bound, within)


# ---------------------------------------------------------------------------
# The experiment


@dataclass(frozen=True)
class StabilityReport:
    theta: float
    modes_per_arm: int
    epsilon: float
    epsilon_3x: float
    lam: float
    kappa: float
    kappa_samples: int
    r: float | None
    r_floor: float | None
    c1: float | None
    c2: float
    c3: float
    trace_gamma_out: float
    dist_hs_1: float
    dist_hs_2: float
    cm_gap: float
    bound1: float | None
    bound2: float | None
    margin_state: float | None
    margin_cm: float | None
    v: np.ndarray
    v_norm: float
    v_bound: float
    v_within_bound: bool
    d1: np.ndarray
    d2: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    truncation_flags: tuple
    notes: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "n": self.modes_per_arm,
            "epsilon": self.epsilon,
            "epsilon_3x": self.epsilon_3x,
            "lambda": self.lam,
            "kappa": self.kappa,
            "kappa_samples": self.kappa_samples,
            "r": self.r,
            "r_floor": self.r_floor,
            "c1": self.c1,
            "c2": self.c2,
            "c3": self.c3,
            "trace_gamma_out": self.trace_gamma_out,
            "dist_hs_1": self.dist_hs_1,
            "dist_hs_2": self.dist_hs_2,
            "cm_gap": self.cm_gap,
            "bound1": self.bound1,
            "bound2": self.bound2,
            "margins": {"state_distance": self.margin_state,
                        "cm_gap": self.margin_cm},
            "V": {"re": self.v.real.tolist(), "im": self.v.imag.tolist()},
            "v_norm": self.v_norm,
            "v_bound": self.v_bound,
            "v_within_bound": self.v_within_bound,
            "d1": self.d1.tolist(),
            "d2": self.d2.tolist(),
            "gamma1": self.gamma1.tolist(),
            "gamma2": self.gamma2.tolist(),
            "truncation_flags": list(self.truncation_flags),
            "notes": self.notes,
            "config": self.config,
        }

    @property
    def bounds_hold(self) -> bool | None:
        if self.margin_state is None:
            return None
        return self.margin_state >= 0 and self.margin_cm >= 0


def _operator_norm(gamma: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvalsh(gamma))))


def run_experiment(rho1: FockOperator, rho2: FockOperator, theta: float, *,
                   seed: int = 0,
                   quad: QuadratureConfig = DEFAULT_QUADRATURE,
                   kappa_cfg: KappaConfig = DEFAULT_KAPPA,
                   tol: Tolerances = DEFAULT_TOLERANCES,
                   strict: bool = True,
                   config_echo: dict | None = None) -> StabilityReport:
    """Full stability pipeline for one input pair and splitter angle.

    With ``strict`` the guaranteed invariants abort on violation: negative
    bound margins on clean (unflagged) runs raise BoundViolationError, and a
    mismatch between the covariance gap and the cross-covariance identity
    raises CalibrationError.  With ``strict=False`` the report is returned
    regardless, for callers that surface failures through exit codes.
    """
    if is_trivial_angle(theta):
        raise TrivialSplitterError(f"theta = {theta} does not mix the arms")
    validate_density(rho1, tol)
    validate_density(rho2, tol)
    if rho1.space != rho2.space:
        raise ValidationError("input states live on different spaces")
    n = rho1.space.n_modes
    cutoff = rho1.space.cutoff

    flags = []
    for label, op in (("input1", rho1), ("input2", rho2)):
        leak = leak_population(op)
        if leak > tol.leak_budget:
            flags.append(f"truncation:{label}:leak={leak:.3e}")
    flags.extend(rho1.flags)
    flags.extend(rho2.flags)

    pair_space = FockSpace(2 * n, cutoff)
    u = beam_splitter_unitary(pair_space, theta)
    rho_ab = evolve(tensor(rho1, rho2), u)
    leak_out = leak_population(rho_ab)
    if leak_out > tol.leak_budget:
        flags.append(f"truncation:output:leak={leak_out:.3e}")

    rho_a = partial_trace(rho_ab, "first")
    rho_b = partial_trace(rho_ab, "second")
    g_mat = rho_ab.matrix - np.kron(rho_a.matrix, rho_b.matrix)
    epsilon = trace_norm(g_mat)

    m1 = moments(rho1, with_kappa=False)
    m2 = moments(rho2, with_kappa=False)
    mab = moments(rho_ab, seed=seed, cfg=kappa_cfg)
    lam = 0.5 * max(_operator_norm(m1.gamma), _operator_norm(m2.gamma))
    kappa = mab.kappa
    trace_gamma_out = float(np.trace(mab.gamma))

    try:
        c1 = c1_constant(theta, n, kappa)
    except ValidationError:
        c1 = None
    c2 = c2_constant(lam, trace_gamma_out, n)
    c3 = c3_constant(theta, n, kappa)

    if 0.0 < epsilon < 1.0:
        r, r_floor = region_radius(lam, epsilon)
        bound1 = (c1 * epsilon ** (1.0 / 3.0)
                  + c2 / math.sqrt(math.log(1.0 / epsilon))) if c1 is not None else None
        bound2 = c3 * math.sqrt(epsilon)
    else:
        r = r_floor = bound1 = bound2 = None

    gs1 = gaussify(rho1, tol)
    gs2 = gaussify(rho2, tol)
    synth1 = gaussian_to_fock(gs1, rho1.space, quad, tol)
    synth2 = gaussian_to_fock(gs2, rho2.space, quad, tol)
    flags.extend(synth1.flags)
    flags.extend(synth2.flags)
    dist1 = hs_norm(rho1.matrix - synth1.matrix)
    dist2 = hs_norm(rho2.matrix - synth2.matrix)
    cm_gap = float(np.linalg.norm(gs1.gamma - gs2.gamma))

    v = _cross_cov_matrix(g_mat, pair_space, theta)
    v_norm = float(np.linalg.norm(v))
    v_bound = math.sqrt(24.0 * n ** 2 * kappa * epsilon) / abs(math.tan(theta))
    v_within = v_norm <= v_bound

    margin_state = margin_cm = None
    if bound1 is not None:
        margin_state = bound1 - max(dist1, dist2)
        margin_cm = bound2 - cm_gap

    flags = tuple(dict.fromkeys(flags))

    notes = {}
    if abs(theta - math.pi / 4) < 1e-9 and n == 1:
        notes["c1_prefactor_direct_50_50"] = c1_direct_50_50()
        notes["c1_prefactor_quoted_50_50"] = C1_QUOTED_50_50
        notes["c1_prefactor_gap"] = "direct evaluation and the quoted value " \
            "differ by ~10%; both are reported"

    report = StabilityReport(
        theta=float(theta), modes_per_arm=n,
        epsilon=epsilon, epsilon_3x=3.0 * epsilon,
        lam=lam, kappa=kappa, kappa_samples=mab.kappa_samples,
        r=r, r_floor=r_floor, c1=c1, c2=c2, c3=c3,
        trace_gamma_out=trace_gamma_out,
        dist_hs_1=dist1, dist_hs_2=dist2, cm_gap=cm_gap,
        bound1=bound1, bound2=bound2,
        margin_state=margin_state, margin_cm=margin_cm,
        v=v, v_norm=v_norm, v_bound=v_bound, v_within_bound=v_within,
        d1=m1.d, d2=m2.d, gamma1=m1.gamma, gamma2=m2.gamma,
        truncation_flags=flags, notes=notes,
        config=dict(config_echo or {}),
    )

    if strict and not flags:
        _enforce_invariants(report, tol)
    return report


def _enforce_invariants(report: StabilityReport,
                        tol: Tolerances = DEFAULT_TOLERANCES) -> None:
    """Abort on violations the theory guarantees cannot happen."""
    ident = (2.0 / math.cos(report.theta) ** 2) * report.v_norm
    scale = 1.0 + float(np.linalg.norm(report.gamma1))
    if abs(report.cm_gap - ident) > tol.convention_rel * max(report.cm_gap, ident) \
            + tol.convention_abs * scale:
        raise CalibrationError(
            f"covariance gap {report.cm_gap:.6e} disagrees with the "
            f"cross-covariance identity value {ident:.6e}; convention bug"
        )
    if report.margin_state is not None:
        if report.margin_state < 0 or report.margin_cm < 0:
            raise BoundViolationError(
                f"stability bound violated on a clean run: "
                f"state margin {report.margin_state}, cm margin {report.margin_cm}",
                report=report,
            )
    if not report.v_within_bound:
        raise BoundViolationError(
            f"|V| = {report.v_norm:.6e} exceeds its bound {report.v_bound:.6e}",
            report=report,
        )


def reports_to_rows(reports) -> tuple:
    """Header and rows for a CSV of experiment sweeps: angle, epsilon, both
    bounds and the measured distances."""
    header = ["theta", "epsilon", "bound1", "bound2",
              "dist_hs_1", "dist_hs_2", "cm_gap"]
    rows = [[r.theta, r.epsilon,
             math.nan if r.bound1 is None else r.bound1,
             math.nan if r.bound2 is None else r.bound2,
             r.dist_hs_1, r.dist_hs_2, r.cm_gap] for r in reports]
    return header, rows


def nongaussianity_witness(rho: FockOperator, theta: float,
                           tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Distance of U (rho x rho) U* from the product of its reductions.

    Zero (within truncation noise) exactly when rho is Gaussian; the
    canonical two-photon interference case gives 1.5 at theta = pi/4.
    """
    if is_trivial_angle(theta):
        raise TrivialSplitterError(f"theta = {theta} does not mix the arms")
    validate_density(rho, tol)
    pair_space = FockSpace(2 * rho.space.n_modes, rho.space.cutoff)
    u = beam_splitter_unitary(pair_space, theta)
    rho_ab = evolve(tensor(rho, rho), u)
    rho_a = partial_trace(rho_ab, "first")
    rho_b = partial_trace(rho_ab, "second")
    return trace_norm(rho_ab.matrix - np.kron(rho_a.matrix, rho_b.matrix))
