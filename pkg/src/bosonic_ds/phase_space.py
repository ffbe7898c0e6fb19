"""Characteristic-function and Wigner-function numerics.

Grids are uniform and symmetric with an odd point count, so the origin is a
node.  The twisted-kernel positivity test is a falsifier only: sampled point
sets can reveal that a function is not a quantum characteristic function,
but no finite sample certifies that it is one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES, GridSpec, Tolerances
from .errors import DimensionError, ValidationError
from .fock import FockOperator, char_batch, gaussian_char_values
from .symplectic import GaussianState, symplectic_form


def char_callable(source):
    """Vectorized chi evaluator for a FockOperator, GaussianState or callable."""
    if isinstance(source, FockOperator):
        return lambda xs: char_batch(source, xs)
    if isinstance(source, GaussianState):
        return lambda xs: gaussian_char_values(source, xs)
    if callable(source):
        return source
    raise ValidationError(f"cannot evaluate a characteristic function of {type(source)}")


def char_function(rho: FockOperator, xi) -> complex:
    """chi(xi) = Tr[W_xi rho] at a single point."""
    xs = np.asarray(xi, dtype=float).reshape(1, -1)
    return complex(char_batch(rho, xs)[0])


# ---------------------------------------------------------------------------
# Dense grids


@dataclass(frozen=True)
class CharGrid:
    """Sampled chi on [-extent, extent]^(2n), values indexed per axis."""

    n_modes: int
    extent: float
    points: int
    values: np.ndarray
    source: str = "fock"
    flags: tuple = ()

    def __post_init__(self):
        shape = (self.points,) * (2 * self.n_modes)
        if self.values.shape != shape:
            raise DimensionError(f"grid values shape {self.values.shape} != {shape}")

    def axis(self) -> np.ndarray:
        return np.linspace(-self.extent, self.extent, self.points)

    @property
    def step(self) -> float:
        return 2.0 * self.extent / (self.points - 1)

    def origin_index(self) -> int:
        return (self.points - 1) // 2

    def nodes(self) -> np.ndarray:
        ax = self.axis()
        mesh = np.meshgrid(*([ax] * (2 * self.n_modes)), indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])


def _trapezoid_weights(points: int, step: float) -> np.ndarray:
    w = np.full(points, step)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def char_grid(source, extent: float, points: int, n_modes: int | None = None,
              tol: Tolerances = DEFAULT_TOLERANCES,
              is_density: bool = True) -> CharGrid:
    """Dense chi evaluation over a uniform symmetric grid.

    Flags the result when |chi| at the boundary exceeds the boundary
    tolerance, signaling that the extent is too small for the state.
    """
    if n_modes is None:
        if not isinstance(source, (FockOperator, GaussianState)):
            raise ValidationError("n_modes is required for a bare callable")
        n_modes = source.space.n_modes if isinstance(source, FockOperator) else source.n
    spec = GridSpec(extent=extent, points=points)
    if points ** (2 * n_modes) > 2_000_000:
        raise DimensionError("grid too large; reduce points or mode count")
    chi = char_callable(source)
    grid_label = "gaussian" if isinstance(source, GaussianState) else (
        "fock" if isinstance(source, FockOperator) else "callable")

    ax = spec.axis()
    mesh = np.meshgrid(*([ax] * (2 * n_modes)), indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    values = chi(pts).reshape((points,) * (2 * n_modes))

    flags = ()
    origin = values[(spec.points // 2,) * (2 * n_modes)]
    if is_density and abs(origin - 1.0) > 1e-8:
        raise ValidationError(f"chi(0) = {origin} deviates from 1")
    sym_defect = float(np.max(np.abs(values - np.conj(values[(slice(None, None, -1),)
                                                             * (2 * n_modes)]))))
    if is_density and sym_defect > 1e-8:
        raise ValidationError(f"chi(-xi) != conj(chi(xi)): defect {sym_defect:.3e}")
    boundary = _boundary_max(values)
    if boundary > tol.boundary:
        flags += (f"chi:boundary={boundary:.3e}",)
    if isinstance(source, FockOperator):
        flags += source.flags
    return CharGrid(n_modes, float(extent), int(points), values, grid_label, flags)


def _boundary_max(values: np.ndarray) -> float:
    worst = 0.0
    for axis in range(values.ndim):
        sl = [slice(None)] * values.ndim
        for edge in (0, -1):
            sl[axis] = edge
            worst = max(worst, float(np.max(np.abs(values[tuple(sl)]))))
    return worst


# ---------------------------------------------------------------------------
# Wigner transform and Parseval distance


def wigner_from_char(grid: CharGrid) -> np.ndarray:
    """Discrete symplectic Fourier transform of a one-mode chi grid.

    W(eta) = (2 pi)^-2 Integral exp(i eta . sigma xi) chi(xi) d xi, returned
    on the same axes; normalized so the trapezoid sum of W is ~1.
    """
    if grid.n_modes != 1:
        raise DimensionError("the Wigner transform is implemented for one mode")
    ax = grid.axis()
    w = _trapezoid_weights(grid.points, grid.step)
    # eta . sigma xi = eta_1 xi_2 - eta_2 xi_1 for one mode
    kplus = np.exp(1j * np.outer(ax, ax)) * w          # [eta_1, xi_2]
    kminus = np.exp(-1j * np.outer(ax, ax)) * w        # [eta_2, xi_1]
    wig = np.einsum("aj,bi,ij->ab", kplus, kminus, grid.values) / (2 * np.pi) ** 2
    imag_residue = float(np.max(np.abs(wig.imag)))
    if imag_residue > 1e-6:
        raise ValidationError(f"Wigner imaginary residue {imag_residue:.3e}")
    return wig.real


def wigner_normalization(grid: CharGrid, wig: np.ndarray) -> float:
    w = _trapezoid_weights(grid.points, grid.step)
    return float(np.einsum("i,j,ij->", w, w, wig))


def parseval_distance(grid1: CharGrid, grid2: CharGrid) -> float:
    """Squared Hilbert-Schmidt distance by phase-space quadrature:
    (2 pi)^-n Integral |chi_1 - chi_2|^2."""
    if (grid1.n_modes, grid1.extent, grid1.points) != \
            (grid2.n_modes, grid2.extent, grid2.points):
        raise DimensionError("grids have different geometry")
    diff = np.abs(grid1.values - grid2.values) ** 2
    w = _trapezoid_weights(grid1.points, grid1.step)
    for _ in range(2 * grid1.n_modes):
        diff = diff @ w
    return float(diff / (2 * np.pi) ** grid1.n_modes)


# ---------------------------------------------------------------------------
# Twisted-kernel (sigma) positivity


@dataclass(frozen=True)
class SigmaPositivityReport:
    point_set: np.ndarray
    min_eigenvalue: float
    passed: bool
    sets_evaluated: int


def _kernel_min_eig(chi, pts: np.ndarray, sigma: np.ndarray) -> float:
    m = pts.shape[0]
    diffs = pts[:, None, :] - pts[None, :, :]
    chi_vals = chi(diffs.reshape(m * m, -1)).reshape(m, m)
    phases = np.exp(0.5j * np.einsum("ki,ij,lj->kl", pts, sigma, pts))
    kern = chi_vals * phases
    kern = (kern + kern.conj().T) / 2
    return float(np.linalg.eigvalsh(kern)[0])


def sigma_positivity_test(source, n_modes: int | None = None, *, seed: int,
                          set_sizes=(2, 4, 8), n_sets: int = 200,
                          box: float = 2.0, search: bool = False,
                          max_trials: int = 1000, stop_below: float = -0.01,
                          tol: Tolerances = DEFAULT_TOLERANCES) -> SigmaPositivityReport:
    """Hunt for point sets violating twisted-kernel positivity.

    Builds M_kl = chi(xi_k - xi_l) exp(i xi_k . sigma xi_l / 2) for random
    point sets and reports the worst minimum eigenvalue.  With ``search``
    the worst set is refined by local perturbation until ``stop_below`` is
    reached or the trial budget runs out.  A sampled grid works as the chi
    source too: points then snap to grid nodes so that differences stay on
    the lattice.  Absence of a violation is not a proof of validity.
    """
    if isinstance(source, CharGrid):
        return _sigma_positivity_on_grid(source, seed=seed, set_sizes=set_sizes,
                                         n_sets=n_sets, box=box, search=search,
                                         max_trials=max_trials,
                                         stop_below=stop_below, tol=tol)
    if n_modes is None:
        if isinstance(source, FockOperator):
            n_modes = source.space.n_modes
        elif isinstance(source, GaussianState):
            n_modes = source.n
        else:
            raise ValidationError("n_modes is required for a bare callable")
    chi = char_callable(source)
    sigma = symplectic_form(n_modes)
    rng = np.random.default_rng(seed)
    worst = np.inf
    worst_set = np.zeros((1, 2 * n_modes))
    trials = 0
    for _ in range(n_sets):
        m = int(rng.choice(set_sizes))
        pts = rng.uniform(-box, box, size=(m, 2 * n_modes))
        val = _kernel_min_eig(chi, pts, sigma)
        trials += 1
        if val < worst:
            worst, worst_set = val, pts
        if search and worst < stop_below:
            break
    if search:
        scale = 0.3 * box
        while trials < max_trials and worst >= stop_below:
            pts = worst_set + rng.normal(scale=scale, size=worst_set.shape)
            val = _kernel_min_eig(chi, pts, sigma)
            trials += 1
            if val < worst:
                worst, worst_set = val, pts
            else:
                scale = max(0.02 * box, scale * 0.97)
    return SigmaPositivityReport(worst_set, worst, worst >= -tol.kernel_psd, trials)


def _sigma_positivity_on_grid(grid: CharGrid, *, seed, set_sizes, n_sets, box,
                              search, max_trials, stop_below,
                              tol) -> SigmaPositivityReport:
    # Sample integer lattice offsets within min(box, extent/2) of the origin;
    # differences of such nodes are nodes, so chi lookups are interpolation-free.
    dim = 2 * grid.n_modes
    origin = grid.origin_index()
    max_step = min(int(min(box, grid.extent / 2) / grid.step), origin // 2)
    if max_step < 1:
        raise ValidationError("grid too coarse for lattice positivity sampling")
    sigma = symplectic_form(grid.n_modes)
    rng = np.random.default_rng(seed)

    def min_eig(idx):
        pts = idx * grid.step
        diffs = idx[:, None, :] - idx[None, :, :] + origin
        flat = diffs.reshape(-1, dim)
        chi_vals = grid.values[tuple(flat[:, a] for a in range(dim))]
        chi_vals = chi_vals.reshape(idx.shape[0], idx.shape[0])
        phases = np.exp(0.5j * np.einsum("ki,ij,lj->kl", pts, sigma, pts))
        kern = chi_vals * phases
        return float(np.linalg.eigvalsh((kern + kern.conj().T) / 2)[0]), pts

    worst = np.inf
    worst_idx = np.zeros((1, dim), dtype=int)
    worst_pts = worst_idx * grid.step
    trials = 0
    for _ in range(n_sets):
        m = int(rng.choice(set_sizes))
        idx = rng.integers(-max_step, max_step + 1, size=(m, dim))
        val, pts = min_eig(idx)
        trials += 1
        if val < worst:
            worst, worst_idx, worst_pts = val, idx, pts
        if search and worst < stop_below:
            break
    while search and trials < max_trials and worst >= stop_below:
        jitter = rng.integers(-2, 3, size=worst_idx.shape)
        idx = np.clip(worst_idx + jitter, -max_step, max_step)
        val, pts = min_eig(idx)
        trials += 1
        if val < worst:
            worst, worst_idx, worst_pts = val, idx, pts
    return SigmaPositivityReport(worst_pts, worst, worst >= -tol.kernel_psd, trials)


# ---------------------------------------------------------------------------
# Marginals and derivative moments


def classical_marginal(source, direction, ts) -> np.ndarray:
    """Samples of t -> chi(t * direction) along a unit direction."""
    direction = np.asarray(direction, dtype=float).ravel()
    norm = float(np.linalg.norm(direction))
    if abs(norm - 1.0) > 1e-8:
        raise ValidationError(f"direction norm {norm} is not 1")
    ts = np.asarray(ts, dtype=float).ravel()
    chi = char_callable(source)
    return chi(ts[:, None] * direction[None, :])


def _finite_diff_moments(chi, dim: int, h: float) -> tuple:
    points = [np.zeros(dim)]
    for k in range(dim):
        e = np.zeros(dim)
        e[k] = h
        points.extend([e, -e])
    pair_index = {}
    for k in range(dim):
        for l in range(k + 1, dim):
            ekl = np.zeros(dim)
            ekl[k], ekl[l] = h, h
            elk = np.zeros(dim)
            elk[k], elk[l] = h, -h
            pair_index[(k, l)] = len(points)
            points.extend([ekl, -ekl, elk, -elk])
    vals = chi(np.array(points))
    chi0 = vals[0]
    grad = np.array([(vals[1 + 2 * k] - vals[2 + 2 * k]) / (2 * h)
                     for k in range(dim)])
    hess = np.empty((dim, dim), dtype=complex)
    for k in range(dim):
        hess[k, k] = (vals[1 + 2 * k] - 2 * chi0 + vals[2 + 2 * k]) / h ** 2
    for (k, l), base in pair_index.items():
        plus, minus = vals[base], vals[base + 1]
        cross, cross_m = vals[base + 2], vals[base + 3]
        hess[k, l] = hess[l, k] = (plus + minus - cross - cross_m) / (4 * h ** 2)
    return grad, hess


def derivative_moments(source, n_modes: int | None = None,
                       steps=(1e-2, 1e-3)) -> tuple:
    """Recover (d, Gamma) from central differences of chi at the origin.

    Uses grad chi(0) = i sigma d and Hess chi(0) = -sigma (Gamma/2 + d d^T)
    sigma^T, Richardson-extrapolated over the given step pair.
    """
    if n_modes is None:
        if isinstance(source, FockOperator):
            n_modes = source.space.n_modes
        elif isinstance(source, GaussianState):
            n_modes = source.n
        else:
            raise ValidationError("n_modes is required for a bare callable")
    chi = char_callable(source)
    dim = 2 * n_modes
    h1, h2 = steps
    g1, hh1 = _finite_diff_moments(chi, dim, h1)
    g2, hh2 = _finite_diff_moments(chi, dim, h2)
    ratio = (h1 / h2) ** 2
    grad = (ratio * g2 - g1) / (ratio - 1.0)
    hess = (ratio * hh2 - hh1) / (ratio - 1.0)
    sigma = symplectic_form(n_modes)
    d = np.real(1j * sigma @ grad)
    gamma = np.real(-2.0 * sigma.T @ hess @ sigma) - 2.0 * np.outer(d, d)
    return d, (gamma + gamma.T) / 2


# ---------------------------------------------------------------------------
# Beam-splitter factorization residual


@dataclass(frozen=True)
class ResidualResult:
    max_abs: float
    g: np.ndarray            # (M, M) over eta_1 x eta_2 node pairs
    nodes: np.ndarray        # (M, 2n) grid nodes shared by both factors
    excluded: int = 0


def ds_residual(state1, state2, theta: float, grid: GridSpec,
                n_modes: int | None = None,
                max_arg_norm: float | None = None) -> ResidualResult:
    """Deviation from the beam-splitter factorization identity.

    G(e1, e2) = chi1(c e1 + s e2) chi2(c e2 - s e1)
              - chi1(c e1) chi1(s e2) chi2(c e2) chi2(-s e1)
    with c = cos(theta), s = sin(theta), evaluated by direct calls (no
    interpolation) on all pairs of grid nodes.  Pairs whose rotated
    arguments exceed ``max_arg_norm`` are excluded from the sup and counted.
    """
    if n_modes is None:
        n_modes = state1.space.n_modes if isinstance(state1, FockOperator) else state1.n
    chi1 = char_callable(state1)
    chi2 = char_callable(state2)
    ax = grid.axis()
    mesh = np.meshgrid(*([ax] * (2 * n_modes)), indexing="ij")
    nodes = np.column_stack([m.ravel() for m in mesh])
    m = nodes.shape[0]
    if m * m > 20_000_000:
        raise DimensionError("residual grid too dense; reduce points")
    c, s = np.cos(theta), np.sin(theta)

    a1 = chi1(c * nodes)          # chi1(c eta1)
    a2 = chi1(s * nodes)          # chi1(s eta2)
    b1 = chi2(c * nodes)          # chi2(c eta2)
    b2 = chi2(-s * nodes)         # chi2(-s eta1)

    cross1 = c * nodes[:, None, :] + s * nodes[None, :, :]   # [eta1, eta2]
    cross2 = c * nodes[None, :, :] - s * nodes[:, None, :]   # [eta1, eta2]
    t1 = chi1(cross1.reshape(m * m, -1)).reshape(m, m)
    t2 = chi2(cross2.reshape(m * m, -1)).reshape(m, m)

    g = t1 * t2 - np.outer(a1 * b2, a2 * b1)
    excluded = 0
    mask = None
    if max_arg_norm is not None:
        n1 = np.linalg.norm(cross1, axis=2)
        n2 = np.linalg.norm(cross2, axis=2)
        mask = (n1 > max_arg_norm) | (n2 > max_arg_norm)
        excluded = int(np.sum(mask))
    mag = np.abs(g)
    if mask is not None:
        mag = np.where(mask, 0.0, mag)
    return ResidualResult(float(np.max(mag)), g, nodes, excluded)


# ---------------------------------------------------------------------------
# Grid serialization (metadata JSON + CSV of nodes)


def write_char_grid(grid: CharGrid, json_path, csv_path) -> None:
    from .io import write_csv, write_json

    write_json({
        "n": grid.n_modes,
        "extent": grid.extent,
        "points": grid.points,
        "source": grid.source,
        "flags": list(grid.flags),
        "csv": str(csv_path),
    }, json_path)
    nodes = grid.nodes()
    flat = grid.values.ravel()
    header = [f"xi{i + 1}" for i in range(2 * grid.n_modes)] + ["re", "im"]
    rows = (list(map(float, nodes[i])) + [float(flat[i].real), float(flat[i].imag)]
            for i in range(nodes.shape[0]))
    write_csv(csv_path, header, rows)


def write_wigner_csv(grid: CharGrid, wig: np.ndarray, path) -> None:
    from .io import write_csv

    ax = grid.axis()
    header = ["q", "p", "w"]
    rows = ([float(ax[i]), float(ax[j]), float(wig[i, j])]
            for i in range(grid.points) for j in range(grid.points))
    write_csv(path, header, rows)
