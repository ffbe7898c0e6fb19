"""Named state fixtures and the text/JSON spec format the CLI accepts.

Spec strings: "vacuum", "fock:2" (aliases fock1..fock3), "thermal:0.5",
"squeezed:0.3", "displaced:1,0", or a JSON object with a "kind" key
(gaussian, mixture, file).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .config import DEFAULT_QUADRATURE, DEFAULT_TOLERANCES, QuadratureConfig, Tolerances
from .errors import ValidationError
from .fock import FockOperator, FockSpace, density, flag_if_leaking, gaussian_to_fock
from .symplectic import GaussianState


def vacuum(space: FockSpace) -> FockOperator:
    m = np.zeros((space.dim, space.dim), dtype=complex)
    m[0, 0] = 1.0
    return FockOperator(space, m, "density")


def fock_state(space: FockSpace, levels) -> FockOperator:
    """Projector onto a number basis state; levels is an int (one mode)
    or a tuple with one entry per mode."""
    if isinstance(levels, (int, np.integer)):
        levels = (int(levels),)
    if len(levels) != space.n_modes:
        raise ValidationError(f"need {space.n_modes} level entries, got {levels}")
    if any(l < 0 or l >= space.cutoff for l in levels):
        raise ValidationError(f"levels {levels} outside cutoff {space.cutoff}")
    idx = 0
    for l in levels:
        idx = idx * space.cutoff + l
    m = np.zeros((space.dim, space.dim), dtype=complex)
    m[idx, idx] = 1.0
    return FockOperator(space, m, "density")


def thermal_state(space: FockSpace, nbar: float,
                  tol: Tolerances = DEFAULT_TOLERANCES) -> FockOperator:
    """Geometric-population thermal state, renormalized on the truncation."""
    if space.n_modes != 1:
        raise ValidationError("thermal fixture is single mode")
    if nbar < 0:
        raise ValidationError("mean occupation must be >= 0")
    if nbar == 0:
        return vacuum(space)
    m = np.arange(space.cutoff)
    pops = (nbar / (1.0 + nbar)) ** m / (1.0 + nbar)
    pops = pops / pops.sum()
    out = FockOperator(space, np.diag(pops.astype(complex)), "density")
    return flag_if_leaking(out, "thermal", tol)


def mixture(components) -> FockOperator:
    """Convex combination [(weight, FockOperator), ...]; weights renormalized."""
    if not components:
        raise ValidationError("mixture needs at least one component")
    weights = np.array([w for w, _ in components], dtype=float)
    if np.any(weights < 0):
        raise ValidationError("mixture weights must be nonnegative")
    weights = weights / weights.sum()
    space = components[0][1].space
    m = np.zeros((space.dim, space.dim), dtype=complex)
    flags = ()
    for w, op in zip(weights, (op for _, op in components)):
        if op.space != space:
            raise ValidationError("mixture components live on different spaces")
        m += w * op.matrix
        flags += op.flags
    return FockOperator(space, m, "density", tuple(dict.fromkeys(flags)))


def squeezed_surrogate(space: FockSpace, z: float,
                       quad: QuadratureConfig = DEFAULT_QUADRATURE,
                       tol: Tolerances = DEFAULT_TOLERANCES) -> FockOperator:
    """Gaussian state with covariance diag(e^{2z}, e^{-2z}), synthesized."""
    gs = GaussianState(np.zeros(2), np.diag([np.exp(2 * z), np.exp(-2 * z)]))
    return gaussian_to_fock(gs, space, quad, tol)


def displaced_vacuum(space: FockSpace, d,
                     quad: QuadratureConfig = DEFAULT_QUADRATURE,
                     tol: Tolerances = DEFAULT_TOLERANCES) -> FockOperator:
    gs = GaussianState(np.asarray(d, dtype=float), np.eye(2 * space.n_modes))
    return gaussian_to_fock(gs, space, quad, tol)


_ALIASES = {"fock1": "fock:1", "fock2": "fock:2", "fock3": "fock:3"}


def parse_state_spec(spec, space: FockSpace,
                     quad: QuadratureConfig = DEFAULT_QUADRATURE,
                     tol: Tolerances = DEFAULT_TOLERANCES) -> FockOperator:
    """Build a density operator from a CLI state spec (string or JSON object)."""
    if isinstance(spec, str):
        spec = _ALIASES.get(spec, spec)
        head, _, arg = spec.partition(":")
        if head == "vacuum":
            return vacuum(space)
        if head == "fock":
            levels = tuple(int(x) for x in arg.split(",")) if arg else (1,)
            return fock_state(space, levels if len(levels) > 1 else levels[0])
        if head == "thermal":
            return thermal_state(space, float(arg), tol)
        if head == "squeezed":
            return squeezed_surrogate(space, float(arg), quad, tol)
        if head == "displaced":
            d = np.array([float(x) for x in arg.split(",")])
            return displaced_vacuum(space, d, quad, tol)
        if head == "file":
            return load_density(arg, expected_space=space, tol=tol)
        raise ValidationError(f"unknown state spec {spec!r}")
    if isinstance(spec, dict):
        kind = spec.get("kind")
        if kind == "gaussian":
            gs = GaussianState(np.asarray(spec["d"], dtype=float),
                               np.asarray(spec["gamma"], dtype=float))
            return gaussian_to_fock(gs, space, quad, tol)
        if kind == "mixture":
            comps = [(c["weight"], parse_state_spec(c["state"], space, quad, tol))
                     for c in spec["components"]]
            return mixture(comps)
        if kind == "file":
            return load_density(spec["path"], expected_space=space, tol=tol)
        raise ValidationError(f"unknown state spec kind {kind!r}")
    raise ValidationError(f"state spec must be a string or object, got {type(spec)}")


# ---------------------------------------------------------------------------
# Density-matrix files: JSON {n, cutoff, real, imag}


def density_to_dict(op: FockOperator) -> dict:
    return {
        "n": op.space.n_modes,
        "cutoff": op.space.cutoff,
        "real": op.matrix.real.tolist(),
        "imag": op.matrix.imag.tolist(),
    }


def density_from_dict(data: dict, tol: Tolerances = DEFAULT_TOLERANCES) -> FockOperator:
    space = FockSpace(int(data["n"]), int(data["cutoff"]))
    m = np.asarray(data["real"], dtype=float) + 1j * np.asarray(data["imag"], dtype=float)
    return density(space, m, tol=tol)


def save_density(op: FockOperator, path) -> None:
    from .io import canonical_dumps

    Path(path).write_text(canonical_dumps(density_to_dict(op)))


def load_density(path, expected_space: FockSpace | None = None,
                 tol: Tolerances = DEFAULT_TOLERANCES) -> FockOperator:
    data = json.loads(Path(path).read_text())
    op = density_from_dict(data, tol)
    if expected_space is not None and op.space != expected_space:
        raise ValidationError(
            f"density file space {op.space} does not match expected {expected_space}"
        )
    return op


def golden_dir() -> Path:
    return Path(__file__).parent / "fixtures"


def load_golden(name: str, tol: Tolerances = DEFAULT_TOLERANCES) -> FockOperator:
    """Load one of the shipped golden states (vacuum, fock1..fock3,
    thermal_nbar05, squeezed_z025)."""
    path = golden_dir() / f"{name}.json"
    if not path.exists():
        available = sorted(p.stem for p in golden_dir().glob("*.json"))
        raise ValidationError(f"no golden state {name!r}; available: {available}")
    return load_density(path, tol=tol)
