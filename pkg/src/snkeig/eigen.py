"""k-eigenvalue solvers: power iteration, Rayleigh quotient iteration, Arnoldi.

All three work on the generalized pair ``(I - TMS) phi = (1/k) TMF phi`` and
use the multigroup solvers for the fixed-source part.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ConvergenceError, NonFissileError
from .krylov import REORTH_THRESHOLD
from .mge import MgeParams, build_preconditioner
from .multigroup import EnergySetLayout, MultigroupConfig, krylov_block, solve_multigroup
from .operators import apply_A, apply_B, apply_fission, apply_TM, fission_density, quotient
from .sweep import default_quadrature
from .xsmodel import require_valid

log = logging.getLogger(__name__)

SOLVERS = ("power", "rqi", "arnoldi")
K_MIN = 1e-3


@dataclass(frozen=True)
class EigenConfig:
    solver: str = "power"
    k_tolerance: float = 1e-8
    flux_tolerance: float = 1e-6
    fission_l2_tolerance: float = 1.0
    fission_inf_tolerance: float = 0.01
    max_outer_iterations: int = 500
    initial_shift: float = 1.0
    arnoldi_subspace: int = 50
    arnoldi_mode: str = "energy_dependent"
    multigroup: MultigroupConfig = field(default_factory=MultigroupConfig)
    precondition: bool = False
    mge: MgeParams = field(default_factory=MgeParams)

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ConfigurationError(f"unknown eigensolver {self.solver!r}; choose from {SOLVERS}")
        for name in ("k_tolerance", "flux_tolerance", "fission_l2_tolerance", "fission_inf_tolerance"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if not self.initial_shift >= 0:
            raise ConfigurationError("initial_shift must be nonnegative")
        if self.arnoldi_subspace < 1 or self.max_outer_iterations < 1:
            raise ConfigurationError("arnoldi_subspace and max_outer_iterations must be >= 1")
        if self.arnoldi_mode not in ("energy_dependent", "energy_independent"):
            raise ConfigurationError(f"unknown Arnoldi mode {self.arnoldi_mode!r}")


@dataclass
class EigenReport:
    solver: str
    k: float
    flux: np.ndarray
    converged: bool
    outer_iterations: int
    krylov_iterations: int
    history: list = field(default_factory=list)
    seconds: float = 0.0
    message: str = ""
    shifts: list = field(default_factory=list)
    failed_inner_solves: int = 0

    @property
    def gamma(self) -> float:
        return 1.0 / self.k


def normalize_flux(phi) -> np.ndarray:
    """Unit L2 norm with the largest-magnitude entry positive."""
    phi = np.asarray(phi, dtype=float)
    nrm = np.linalg.norm(phi)
    if nrm == 0 or not np.isfinite(nrm):
        return phi
    phi = phi / nrm
    if phi[np.argmax(np.abs(phi))] < 0:
        phi = -phi
    return phi


def _initial_vector(size):
    return np.full(size, 1.0 / math.sqrt(size))


def _preconditioner(model, quad, config: EigenConfig):
    if not config.precondition:
        return None
    if config.multigroup.method != "mg_krylov":
        raise ConfigurationError("the energy multigrid preconditioner requires the mg_krylov method")
    lo, hi = krylov_block(model, None, config.multigroup.partitioning)
    layout = EnergySetLayout(lo, hi, config.multigroup.energy_sets)
    return build_preconditioner(model, quad, layout, config.mge)


def _setup(model, quadrature):
    require_valid(model)
    if not model.is_fissile:
        raise NonFissileError("the eigenvalue problem needs fissile material")
    return quadrature or default_quadrature(model)


def eigen_residual(model, quad, phi, k) -> float:
    """||(I - TMS) phi - TMF phi / k|| / ||TMF phi / k||."""
    b = apply_B(model, quad, phi) / k
    return float(np.linalg.norm(apply_A(model, quad, phi) - b) / np.linalg.norm(b))


def solve_power(model, quadrature=None, config: EigenConfig | None = None) -> EigenReport:
    config = config or EigenConfig(solver="power")
    quad = _setup(model, quadrature)
    start = time.perf_counter()
    pre = _preconditioner(model, quad, config)
    phi = _initial_vector(model.size)
    k = 1.0
    fd = fission_density(model, phi)
    krylov = 0
    history = []
    converged = False
    for it in range(1, config.max_outer_iterations + 1):
        b = apply_B(model, quad, phi) / k
        new, stats = solve_multigroup(model, quad, b, config.multigroup, precond=pre, x0=phi)
        krylov += stats.iterations
        fd_new = fission_density(model, new)
        k_new = k * np.linalg.norm(fd_new) / np.linalg.norm(fd)
        delta = fd_new - fd
        l2 = np.linalg.norm(delta) / np.linalg.norm(fd_new)
        inf = np.max(np.abs(delta)) / np.max(np.abs(fd_new))
        dk = abs(k_new - k) / k_new
        flux_delta = float(np.linalg.norm(normalize_flux(new) - normalize_flux(phi)))
        history.append({"k": float(k_new), "flux_delta": flux_delta, "k_change": float(dk)})
        phi, fd, k = new, fd_new, k_new
        if dk <= config.k_tolerance and l2 <= config.fission_l2_tolerance and inf <= config.fission_inf_tolerance:
            converged = True
            break
    return EigenReport("power", float(k), normalize_flux(phi), converged, len(history), krylov, history,
                       time.perf_counter() - start,
                       "" if converged else f"not converged after {config.max_outer_iterations} iterations")


def solve_rqi(model, quadrature=None, config: EigenConfig | None = None) -> EigenReport:
    """Rayleigh quotient iteration on the shifted system.

    Each outer solves ``(I - TM(S + rho F)) phi' = TMF phi`` with the MG
    Krylov solver; the preconditioner, if enabled, is built from the
    unshifted operator.
    """
    config = config or EigenConfig(solver="rqi")
    if config.multigroup.method != "mg_krylov":
        raise ConfigurationError("RQI requires the mg_krylov multigroup method; "
                                 "Gauss-Seidel cannot handle the shifted scattering matrix")
    quad = _setup(model, quadrature)
    start = time.perf_counter()
    pre = _preconditioner(model, quad, config)
    rho_max = 1.0 / K_MIN
    phi = _initial_vector(model.size)
    rho = min(max(config.initial_shift, 0.0), rho_max)
    k_prev = None
    last_good = None
    krylov = 0
    history, shifts = [], []
    consecutive_failures = 0
    failed = 0
    converged = False
    message = ""
    Bphi = apply_B(model, quad, phi)
    guard = 0.01 * min(config.k_tolerance, config.flux_tolerance)
    for it in range(1, config.max_outer_iterations + 1):
        if it > 1:
            # an exact eigenpair makes the shifted system singular; stop instead
            res = np.linalg.norm(Aphi - rho * Bphi) / np.linalg.norm(rho * Bphi)
            if res <= guard:
                history.append({"k": float(1.0 / rho), "flux_delta": 0.0, "k_change": 0.0, "shift": float(rho)})
                converged = True
                break
        new, stats = solve_multigroup(model, quad, Bphi, config.multigroup, shift=rho, precond=pre)
        krylov += stats.iterations
        if not np.all(np.isfinite(new)):
            relaxed = 0.5 * (rho + (last_good if last_good is not None else 0.0))
            log.info("shifted solve diverged at rho=%.10g; retrying with rho=%.10g", rho, relaxed)
            rho = relaxed
            new, stats = solve_multigroup(model, quad, Bphi, config.multigroup, shift=rho, precond=pre)
            krylov += stats.iterations
            if not np.all(np.isfinite(new)):
                message = f"shifted solve diverged at rho={rho:.10g}"
                break
        shifts.append(float(rho))
        if stats.converged:
            consecutive_failures = 0
            last_good = rho
        else:
            failed += 1
            consecutive_failures += 1
        new = normalize_flux(new)
        Aphi = apply_A(model, quad, new)
        Bphi = apply_B(model, quad, new)
        rq = quotient(float(new @ Aphi), float(new @ Bphi))
        k_new = 1.0 / rq
        flux_delta = float(np.linalg.norm(new - phi))
        dk = abs(k_new - k_prev) / abs(k_new) if k_prev is not None else math.inf
        history.append({"k": float(k_new), "flux_delta": flux_delta, "k_change": float(dk), "shift": float(rho)})
        phi, k_prev = new, k_new
        if dk <= config.k_tolerance and flux_delta <= config.flux_tolerance:
            converged = True
            break
        if consecutive_failures >= 3:
            message = (f"inner GMRES failed for 3 consecutive outers; last shift rho={rho:.10g}, "
                       f"relative residual {stats.final_relative_residual:.3e}")
            break
        rho = min(max(rq, 0.0), rho_max)
    else:
        message = f"not converged after {config.max_outer_iterations} iterations"
    k = k_prev if k_prev is not None else 1.0 / max(rho, 1e-300)
    return EigenReport("rqi", float(k), normalize_flux(phi), converged, len(history), krylov, history,
                       time.perf_counter() - start, message, shifts, failed)


def dominant_ritz(H, tol=1e-12, max_steps=10000):
    """Dominant eigenpair of a small (Hessenberg) matrix by power iteration.

    Starts from e1, finishes with a Rayleigh-quotient polish. Raises
    :class:`ConvergenceError` when the dominant eigenvalue is not real and
    simple (the iteration oscillates or stalls).
    """
    H = np.asarray(H, dtype=float)
    d = H.shape[0]
    if d == 1:
        return float(H[0, 0]), np.ones(1)
    x = np.zeros(d)
    x[0] = 1.0
    lam = None
    back2 = back1 = None
    for _ in range(max_steps):
        y = H @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            raise ConvergenceError("Ritz power iteration hit the null space; change the subspace size")
        new_lam = float(x @ y)
        x_new = y / ny
        if new_lam < 0:
            x_new = -x_new
        if lam is not None and abs(new_lam - lam) <= tol * abs(new_lam) and np.linalg.norm(x_new - x) <= tol:
            x = x_new
            break
        if back1 is not None and np.linalg.norm(x_new - back1) < 1e-10 and np.linalg.norm(x_new - x) > 1e-6:
            raise ConvergenceError("dominant Ritz value is not simple (competing eigenvalues of equal modulus); "
                                   "change the subspace size")
        back2, back1 = back1, x
        lam, x = new_lam, x_new
    else:
        raise ConvergenceError(f"dominant Ritz value did not converge in {max_steps} power steps; "
                               "change the subspace size")
    lam = float(x @ H @ x)
    for _ in range(2):
        try:
            z = np.linalg.solve(H - lam * np.eye(d), x)
        except np.linalg.LinAlgError:
            break
        nz = np.linalg.norm(z)
        if not np.isfinite(nz) or nz == 0:
            break
        z /= nz
        if z @ x < 0:
            z = -z
        x = z
        lam = float(x @ H @ x)
    return lam, x


def _arnoldi(op, v0, subspace, k_tol, res_tol, max_steps):
    """Explicitly restarted Arnoldi for the dominant eigenpair of ``op``.

    Returns (value, vector, steps, converged, history).
    """
    n = v0.size
    m = min(subspace, n)
    v = v0 / np.linalg.norm(v0)
    steps = 0
    history = []
    theta_prev = None
    while steps < max_steps:
        V = np.zeros((m + 1, n))
        H = np.zeros((m + 1, m))
        V[0] = v
        for j in range(m):
            w = op(V[j])
            steps += 1
            before = np.linalg.norm(w)
            for i in range(j + 1):
                h = float(V[i] @ w)
                H[i, j] = h
                w = w - h * V[i]
            after = np.linalg.norm(w)
            if after < REORTH_THRESHOLD * before:
                for i in range(j + 1):
                    h = float(V[i] @ w)
                    H[i, j] += h
                    w = w - h * V[i]
                after = np.linalg.norm(w)
            H[j + 1, j] = after
            theta, y = dominant_ritz(H[:j + 1, :j + 1])
            resid = abs(after * y[-1]) / abs(theta)
            dk = abs(theta - theta_prev) / abs(theta) if theta_prev is not None else math.inf
            theta_prev = theta
            ritz = V[:j + 1].T @ y
            history.append({"k": float(theta), "flux_delta": float(resid), "k_change": float(dk)})
            breakdown = after <= 1e-14 * before
            if breakdown or (dk <= k_tol and resid <= res_tol):
                return theta, ritz, steps, True, history
            if steps >= max_steps:
                return theta, ritz, steps, False, history
            V[j + 1] = w / after
        v = ritz / np.linalg.norm(ritz)
    return theta_prev, v, steps, False, history


def solve_arnoldi(model, quadrature=None, config: EigenConfig | None = None) -> EigenReport:
    """Arnoldi on ``v -> (I - TMS)^-1 TMF v`` (or its fission-source form)."""
    config = config or EigenConfig(solver="arnoldi")
    quad = _setup(model, quadrature)
    start = time.perf_counter()
    pre = _preconditioner(model, quad, config)
    counts = [0]

    def mg_solve(b):
        x, stats = solve_multigroup(model, quad, b, config.multigroup, precond=pre)
        counts[0] += stats.iterations
        return x

    if config.arnoldi_mode == "energy_dependent":
        op = lambda v: mg_solve(apply_B(model, quad, v))  # noqa: E731
        v0 = _initial_vector(model.size)
    else:
        chi = model.cell_field("chi")

        def op(gamma):
            return fission_density(model, mg_solve(apply_TM(model, quad, (chi * gamma).reshape(-1))))

        v0 = _initial_vector(model.n_cells)
    k, vec, steps, converged, history = _arnoldi(op, v0, config.arnoldi_subspace, config.k_tolerance,
                                                 config.flux_tolerance, config.max_outer_iterations)
    if config.arnoldi_mode == "energy_dependent":
        phi = vec
    else:
        phi = mg_solve(apply_TM(model, quad, (chi * vec).reshape(-1)) / k)
    message = "" if converged else f"not converged after {steps} Arnoldi steps"
    return EigenReport("arnoldi", float(k), normalize_flux(phi), converged, steps, counts[0], history,
                       time.perf_counter() - start, message)


_DISPATCH = {"power": solve_power, "rqi": solve_rqi, "arnoldi": solve_arnoldi}


def solve_eigen(model, quadrature=None, config: EigenConfig | None = None) -> EigenReport:
    config = config or EigenConfig()
    return _DISPATCH[config.solver](model, quadrature, config)


def dominance_ratio(history, tail=5) -> float:
    """Geometric decay of the per-iteration flux change near the end of a run."""
    deltas = [h["flux_delta"] for h in history if h["flux_delta"] > 0]
    if len(deltas) < tail + 1:
        return math.nan
    ratios = [deltas[i + 1] / deltas[i] for i in range(len(deltas) - tail - 1, len(deltas) - 1)]
    return float(np.exp(np.mean(np.log(ratios))))
