"""Nonlinear time evolution: reference solver, Duhamel operator, Picard iteration.

The flow solved here is u_t = |D|^alpha u_x - (1/2) d/dx (u^2), written with
the quadratic term in divergence form.  The linear part is advanced with the
exact phase factors of the free group, so only the nonlinear term carries
time-stepping error.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .spectral import (
    FrequencyGrid,
    SpectralField,
    _forward_raw,
    _inverse_raw,
    _is_hermitian,
    _l2_raw,
    bump,
    dispersion_symbol,
)


class BlowUpError(RuntimeError):
    """Raised when the L2 norm grows past the blow-up sentinel.

    L2 is conserved exactly by the flow, so any sizeable growth signals a
    numerically unstable run rather than genuine dynamics.
    """


@dataclass(frozen=True)
class Trajectory:
    """Time-indexed solution samples on a uniform grid covering [-T_span, T_span]."""

    grid: FrequencyGrid
    times: np.ndarray
    coeffs: np.ndarray  # shape (n_times, n_modes)
    alpha: float

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        coeffs = np.array(self.coeffs, dtype=complex)
        if times.ndim != 1 or times.size < 2:
            raise ValueError("trajectory needs at least two time samples")
        steps = np.diff(times)
        if np.max(np.abs(steps - steps[0])) > 1e-9 * max(1.0, abs(steps[0])):
            raise ValueError("trajectory time samples must be uniform")
        if coeffs.shape != (times.size, self.grid.n_modes):
            raise ValueError(
                f"coefficient array shape {coeffs.shape} does not match "
                f"({times.size}, {self.grid.n_modes})"
            )
        times.setflags(write=False)
        coeffs.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def n_times(self) -> int:
        return int(self.times.size)

    def state(self, i: int) -> SpectralField:
        return SpectralField(self.grid, self.coeffs[i])

    def index_of_time(self, t: float) -> int:
        i = int(round((t - float(self.times[0])) / self.dt))
        if not (0 <= i < self.n_times) or abs(float(self.times[i]) - t) > 1e-9 * max(
            1.0, abs(t)
        ):
            raise ValueError(f"time {t} is not on the trajectory grid")
        return i


@dataclass(frozen=True)
class PicardHistory:
    """Successive sup-in-time L2 gaps of the fixed-point iteration."""

    iterate_differences: tuple[float, ...]
    converged: bool
    iterations: int

    def __post_init__(self):
        if any(not np.isfinite(d) for d in self.iterate_differences):
            raise ValueError("iterate differences must be finite")


def _dealias_mask(grid: FrequencyGrid) -> np.ndarray:
    # 2/3 rule, strict: keep |k| < N/3 so that aliases of the quadratic
    # product land strictly outside the retained band.
    k = grid.mode_numbers
    limit = int(np.ceil(grid.n_modes / 3.0)) - 1
    return np.abs(k) <= limit


def _nonlinearity_raw(c: np.ndarray, grid: FrequencyGrid, mask: np.ndarray) -> np.ndarray:
    ct = np.where(mask, c, 0.0)
    samples = _inverse_raw(ct, grid.box_length)
    if _is_hermitian(ct, 1e-10):
        samples = samples.real
    squared = _forward_raw((samples * samples).astype(complex), grid.box_length)
    squared = np.where(mask, squared, 0.0)
    return -0.5j * grid.frequencies * squared


def nonlinearity(u: SpectralField) -> SpectralField:
    """-(1/2) d/dx (u^2) with 2/3-rule dealiasing of the square."""
    return SpectralField(
        u.grid, _nonlinearity_raw(u.coeffs, u.grid, _dealias_mask(u.grid))
    )


def _rk4(f, c: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(c)
    k2 = f(c + 0.5 * dt * k1)
    k3 = f(c + 0.5 * dt * k2)
    k4 = f(c + dt * k3)
    return c + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _etdrk4_coeffs(lin: np.ndarray, dt: float, n_roots: int = 32):
    # Contour-average evaluation of the phi-function combinations; the
    # integrand is entire so the mean over a full circle around z = dt*lin
    # equals the value at the center (our operator is imaginary, so the
    # half-circle-plus-real-part shortcut for real operators does not apply).
    z = dt * lin[:, None] + np.exp(
        2j * np.pi * (np.arange(n_roots) + 0.5) / n_roots
    )[None, :]
    ez = np.exp(z)
    q = dt * np.mean((np.exp(z / 2.0) - 1.0) / z, axis=1)
    f1 = dt * np.mean((-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z**3, axis=1)
    f2 = dt * np.mean((2.0 + z + ez * (z - 2.0)) / z**3, axis=1)
    f3 = dt * np.mean((-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z**3, axis=1)
    return q, f1, f2, f3


def _integrate(
    c0: np.ndarray,
    grid: FrequencyGrid,
    n_steps: int,
    dt: float,
    alpha: float,
    scheme: str,
    nonlinear: bool,
    blowup_factor: float,
) -> np.ndarray:
    """March n_steps of size dt (signed), returning all states incl. the first."""
    mask = _dealias_mask(grid)
    lin = 1j * dispersion_symbol(grid.frequencies, alpha)
    out = np.empty((n_steps + 1, grid.n_modes), dtype=complex)
    out[0] = c0
    l2_ref = _l2_raw(c0, grid.spacing)
    floor = np.finfo(float).tiny

    def nl(c):
        return _nonlinearity_raw(c, grid, mask)

    if not nonlinear:
        phase = np.exp(dt * lin)
        c = c0.copy()
        for i in range(n_steps):
            c = phase * c
            out[i + 1] = c
        return out

    if scheme == "split_step":
        half = np.exp(0.5 * dt * lin)
        c = c0.copy()
        for i in range(n_steps):
            c = half * c
            c = _rk4(nl, c, dt)
            c = half * c
            out[i + 1] = c
            if _l2_raw(c, grid.spacing) > blowup_factor * max(l2_ref, floor):
                raise BlowUpError(
                    f"L2 norm grew past {blowup_factor}x the initial value at "
                    f"t={dt * (i + 1):.6g}"
                )
    elif scheme == "exponential_integrator":
        e_full = np.exp(dt * lin)
        e_half = np.exp(0.5 * dt * lin)
        q, f1, f2, f3 = _etdrk4_coeffs(lin, dt)
        c = c0.copy()
        for i in range(n_steps):
            n0 = nl(c)
            a = e_half * c + q * n0
            na = nl(a)
            b = e_half * c + q * na
            nb = nl(b)
            cc = e_half * a + q * (2.0 * nb - n0)
            nc = nl(cc)
            c = e_full * c + f1 * n0 + 2.0 * f2 * (na + nb) + f3 * nc
            out[i + 1] = c
            if _l2_raw(c, grid.spacing) > blowup_factor * max(l2_ref, floor):
                raise BlowUpError(
                    f"L2 norm grew past {blowup_factor}x the initial value at "
                    f"t={dt * (i + 1):.6g}"
                )
    else:
        raise ValueError(
            f"unknown scheme {scheme!r}; use 'split_step' or 'exponential_integrator'"
        )
    return out


def solve_reference(
    u0: SpectralField,
    t_span: float,
    dt: float,
    alpha: float,
    scheme: str = "split_step",
    *,
    nonlinear: bool = True,
    blowup_factor: float = 10.0,
) -> Trajectory:
    """Integrate forward and backward from t=0 over [-t_span, t_span].

    The linear substeps use the exact propagator phases.  dt is adjusted to
    the nearest value that divides t_span evenly.
    """
    if not (t_span > 0.0 and dt > 0.0):
        raise ValueError(f"t_span and dt must be positive, got {t_span}, {dt}")
    if dt > t_span:
        raise ValueError(f"dt={dt} exceeds t_span={t_span}")
    n = max(1, int(round(t_span / dt)))
    dt_eff = t_span / n
    max_u = float(np.max(np.abs(_inverse_raw(u0.coeffs, u0.grid.box_length))))
    cfl = dt_eff * u0.grid.nyquist * max_u
    if cfl > 1.0:
        warnings.warn(
            f"dt*max|xi|*max|u| = {cfl:.3g} exceeds 1; the nonlinear substep "
            "may be under-resolved",
            RuntimeWarning,
            stacklevel=2,
        )
    fwd = _integrate(u0.coeffs, u0.grid, n, dt_eff, alpha, scheme, nonlinear, blowup_factor)
    bwd = _integrate(u0.coeffs, u0.grid, n, -dt_eff, alpha, scheme, nonlinear, blowup_factor)
    coeffs = np.vstack([bwd[::-1], fwd[1:]])
    times = np.arange(-n, n + 1) * dt_eff
    return Trajectory(u0.grid, times, coeffs, float(alpha))


def duhamel_apply(
    u_guess: Trajectory, u0: SpectralField, T: float, alpha: float
) -> Trajectory:
    """One application of the cutoff Duhamel operator.

    Returns t -> psi(t) W(t) u0 + psi_T(t) * integral_0^t W(t-t') N(u)(t') dt'
    on the guess trajectory's own time grid, where N(u) = -(1/2) d/dx (u^2)
    and the time integral is trapezoidal with the exact propagator inside.
    """
    if not (T > 0.0):
        raise ValueError(f"T must be positive, got {T}")
    if u_guess.grid != u0.grid:
        raise ValueError("guess trajectory and data live on different grids")
    window = 2.0 * max(T, 1.0)
    t = u_guess.times
    if t[0] > -window + 1e-9 or t[-1] < window - 1e-9:
        raise ValueError(
            f"guess window [{t[0]:.6g}, {t[-1]:.6g}] does not cover "
            f"[-{window:.6g}, {window:.6g}]"
        )
    grid = u0.grid
    mask = _dealias_mask(grid)
    dt = u_guess.dt
    symbol = dispersion_symbol(grid.frequencies, alpha)
    forcing = np.empty_like(u_guess.coeffs)
    for i in range(u_guess.n_times):
        forcing[i] = _nonlinearity_raw(u_guess.coeffs[i], grid, mask)
    # W(t-t') = W(t) W(-t'): accumulate the t'-integral of W(-t') N(u(t'))
    # cumulatively from t=0 in both directions, then apply W(t) once.
    back_phase = np.exp(-1j * np.outer(t, symbol))
    h = back_phase * forcing
    i0 = u_guess.index_of_time(0.0)
    acc = np.zeros_like(h)
    for i in range(i0 + 1, u_guess.n_times):
        acc[i] = acc[i - 1] + (0.5 * dt) * (h[i - 1] + h[i])
    for i in range(i0 - 1, -1, -1):
        acc[i] = acc[i + 1] - (0.5 * dt) * (h[i] + h[i + 1])
    psi_1 = bump(t)[:, None]
    psi_T = bump(t / T)[:, None]
    out = np.conj(back_phase) * (psi_1 * u0.coeffs[None, :] + psi_T * acc)
    return Trajectory(grid, t, out, float(alpha))


def picard_solve(
    u0: SpectralField,
    T: float,
    alpha: float,
    tol: float = 1e-8,
    max_iter: int = 30,
    *,
    dt: float | None = None,
) -> tuple[Trajectory, PicardHistory]:
    """Iterate the Duhamel operator from the zero trajectory toward a fixed point.

    Stops when the sup-in-time L2 gap between successive iterates drops to
    tol; non-convergence is reported through the history, not raised.
    """
    if not (T > 0.0 and tol > 0.0 and max_iter >= 1):
        raise ValueError("need T > 0, tol > 0 and max_iter >= 1")
    window = 2.0 * max(T, 1.0)
    if dt is None:
        dt = window / 1024.0
    n = max(1, int(round(window / dt)))
    dt_eff = window / n
    times = np.arange(-n, n + 1) * dt_eff
    grid = u0.grid
    current = Trajectory(grid, times, np.zeros((times.size, grid.n_modes), complex), float(alpha))
    gaps: list[float] = []
    converged = False
    for _ in range(max_iter):
        new = duhamel_apply(current, u0, T, alpha)
        gap = max(
            _l2_raw(new.coeffs[i] - current.coeffs[i], grid.spacing)
            for i in range(new.n_times)
        )
        gaps.append(float(gap))
        current = new
        if gap <= tol:
            converged = True
            break
    return current, PicardHistory(tuple(gaps), converged, len(gaps))


# ---------------------------------------------------------------------------
# Trajectory export (schemas documented in FORMATS.md)

_BINARY_MAGIC = b"FBOTRAJ\x00"
_BINARY_VERSION = 1
_HEADER = struct.Struct("<8sIIddI")  # magic, version, N, L, dt, count


def retained_mode_indices(grid: FrequencyGrid, max_modes: int | None) -> np.ndarray:
    """Indices of the modes kept in CSV exports: smallest |xi| first, then sign."""
    if max_modes is None or max_modes >= grid.n_modes:
        return np.arange(grid.n_modes)
    xi = grid.frequencies
    order = np.lexsort((xi < 0, np.abs(xi)))
    return np.sort(order[:max_modes])


def export_trajectory_csv(traj: Trajectory, path, max_modes: int | None = None) -> None:
    """CSV columns: t, then |coeff| and phase per retained mode, xi ascending."""
    idx = retained_mode_indices(traj.grid, max_modes)
    xi = traj.grid.frequencies[idx]
    header = ["t"]
    for f in xi:
        header.append(f"abs[xi={f!r}]")
        header.append(f"phase[xi={f!r}]")
    lines = [",".join(header)]
    sub = traj.coeffs[:, idx]
    mags = np.abs(sub)
    phases = np.angle(sub)
    for i, t in enumerate(traj.times):
        row = [repr(float(t))]
        for j in range(idx.size):
            row.append(repr(float(mags[i, j])))
            row.append(repr(float(phases[i, j])))
        lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def export_trajectory_binary(traj: Trajectory, path) -> None:
    """Compact dump: fixed header, then times (f8) and coeffs (c16, C order)."""
    header = _HEADER.pack(
        _BINARY_MAGIC,
        _BINARY_VERSION,
        traj.grid.n_modes,
        traj.grid.box_length,
        traj.dt,
        traj.n_times,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(traj.times, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(traj.coeffs, dtype="<c16").tobytes())


def load_trajectory_binary(path, alpha: float = float("nan")) -> Trajectory:
    """Read a binary dump.  alpha is not stored in the header; pass it if known."""
    with open(path, "rb") as fh:
        magic, version, n_modes, box_length, _dt, count = _HEADER.unpack(
            fh.read(_HEADER.size)
        )
        if magic != _BINARY_MAGIC:
            raise ValueError(f"not a trajectory dump (magic {magic!r})")
        if version != _BINARY_VERSION:
            raise ValueError(f"unsupported trajectory dump version {version}")
        times = np.frombuffer(fh.read(8 * count), dtype="<f8")
        coeffs = np.frombuffer(fh.read(16 * count * n_modes), dtype="<c16")
    grid = FrequencyGrid(n_modes, box_length)
    return Trajectory(grid, times.copy(), coeffs.reshape(count, n_modes).copy(), alpha)
