"""Periodic spectral representation: grids, transforms, multipliers, propagator.

Conventions used throughout the package:

* The spatial box is [-L/2, L/2) sampled at N equispaced nodes
  x_j = -L/2 + j*L/N.
* Frequencies are xi_k = 2*pi*k/L for mode numbers k = -N/2+1, ..., N/2,
  stored in ascending order.  The extreme mode k = N/2 is unpaired (it is
  its own conjugate on the grid).
* The forward transform is the discrete analogue of
  (2*pi)^(-1/2) * integral exp(-i*x*xi) u(x) dx, i.e. a Riemann sum with
  measure dx = L/N.  With the inverse using measure dxi = 2*pi/L the round
  trip is exact and Parseval holds exactly:
  sum |u_j|^2 dx == sum |c_k|^2 dxi.
* The japanese bracket is <xi> = (1 + xi^2)^(1/2).

All container types are immutable after construction and every operation is
a pure function, so everything here is safe to use concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

#: Human-readable identifier of the bump construction, echoed into run
#: manifests so the exact cutoff shape is pinned for reproducibility.
BUMP_PROFILE = "exp(-1/x) glue: S(x)=g(x)/(g(x)+g(1-x)), psi(t)=S(2-|t|)"


def _bump_step(x: np.ndarray) -> np.ndarray:
    """Smooth step S with S=0 for x<=0, S=1 for x>=1, built from exp(-1/x)."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        g = np.where(x > 0.0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)
        h = np.where(x < 1.0, np.exp(-1.0 / np.maximum(1.0 - x, 1e-300)), 0.0)
    return g / (g + h)


def bump(t) -> np.ndarray | float:
    """Smooth even bump: 1 on [-1, 1], 0 outside [-2, 2], values in [0, 1]."""
    t = np.asarray(t, dtype=float)
    out = _bump_step(2.0 - np.abs(t))
    if out.ndim == 0:
        return float(out)
    return out


def cutoff_value(t: float, T: float) -> float:
    """Evaluate the rescaled cutoff psi(t/T) for scale T > 0."""
    if not (T > 0.0):
        raise ValueError(f"cutoff scale must be positive, got T={T}")
    return float(bump(np.asarray(t, dtype=float) / T))


@dataclass(frozen=True)
class CutoffProfile:
    """Rescaled smooth time cutoff: identically 1 on [-T, T], 0 outside [-2T, 2T]."""

    scale: float
    support_radius: float = 2.0
    plateau_radius: float = 1.0

    def __post_init__(self):
        if not (self.scale > 0.0):
            raise ValueError(f"cutoff scale must be positive, got {self.scale}")

    def __call__(self, t) -> np.ndarray | float:
        return bump(np.asarray(t, dtype=float) / self.scale)


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FrequencyGrid:
    """Frequency lattice xi_k = 2*pi*k/L, k = -N/2+1 ... N/2, ascending.

    Also reused for the tau axis of space-time fields, with box_length equal
    to the time-window length.
    """

    n_modes: int
    box_length: float
    frequencies: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n, L = self.n_modes, self.box_length
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise ValueError(f"n_modes must be an integer, got {n!r}")
        if n % 2 != 0:
            raise ValueError(f"n_modes must be even, got {n}")
        if n < 8:
            raise ValueError(f"n_modes must be at least 8, got {n}")
        if not (np.isfinite(L) and L > 0.0):
            raise ValueError(f"box_length must be positive, got {L}")
        k = np.arange(-n // 2 + 1, n // 2 + 1)
        object.__setattr__(self, "n_modes", int(n))
        object.__setattr__(self, "box_length", float(L))
        object.__setattr__(self, "frequencies", _freeze(TWO_PI * k / L))

    @property
    def spacing(self) -> float:
        """Frequency spacing dxi = 2*pi/L, the Riemann measure for norms."""
        return TWO_PI / self.box_length

    @property
    def nyquist(self) -> float:
        """Largest grid frequency 2*pi*(N/2)/L (the unpaired extreme mode)."""
        return float(self.frequencies[-1])

    @property
    def mode_numbers(self) -> np.ndarray:
        return np.arange(-self.n_modes // 2 + 1, self.n_modes // 2 + 1)

    @property
    def zero_index(self) -> int:
        return self.n_modes // 2 - 1

    def nodes(self) -> np.ndarray:
        """Physical sample points x_j = -L/2 + j*L/N."""
        n, L = self.n_modes, self.box_length
        return -0.5 * L + L * np.arange(n) / n

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FrequencyGrid)
            and self.n_modes == other.n_modes
            and self.box_length == other.box_length
        )

    def __hash__(self):
        return hash((self.n_modes, self.box_length))


def make_grid(n_modes: int, box_length: float) -> FrequencyGrid:
    """Build a frequency grid; rejects odd or tiny n_modes and L <= 0."""
    return FrequencyGrid(n_modes, box_length)


@dataclass(frozen=True)
class SpectralField:
    """A band-limited periodic function stored as complex Fourier coefficients."""

    grid: FrequencyGrid
    coeffs: np.ndarray = field(repr=False, compare=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (self.grid.n_modes,):
            raise ValueError(
                f"coefficient shape {c.shape} does not match grid with "
                f"{self.grid.n_modes} modes"
            )
        object.__setattr__(self, "coeffs", _freeze(c))

    def is_conjugate_symmetric(self, rtol: float = 1e-12) -> bool:
        """True when coeffs(-xi) == conj(coeffs(xi)) within rtol (real field)."""
        return _is_hermitian(self.coeffs, rtol)


def _is_hermitian(coeffs: np.ndarray, rtol: float = 1e-12) -> bool:
    # Pairing on the asymmetric layout: reverse the first N-1 entries
    # (k = -N/2+1 .. N/2-1); the extreme mode must be real.
    scale = float(np.max(np.abs(coeffs))) if coeffs.size else 0.0
    if scale == 0.0:
        return True
    paired = coeffs[:-1]
    err = float(np.max(np.abs(paired - np.conj(paired[::-1]))))
    err = max(err, abs(float(np.imag(coeffs[-1]))))
    return err <= rtol * scale


# Index layout conversions between numpy fft order [0..N/2-1, -N/2..-1]
# and the ascending order [-N/2+1 .. N/2] used here (the -N/2 slot of the
# fft layout is relabelled +N/2; on the grid both label the same mode).


def _np_to_grid_order(a: np.ndarray, axis: int = -1) -> np.ndarray:
    return np.roll(np.fft.fftshift(a, axes=axis), -1, axis=axis)


def _grid_to_np_order(a: np.ndarray, axis: int = -1) -> np.ndarray:
    return np.fft.ifftshift(np.roll(a, 1, axis=axis), axes=axis)


def _alt_signs(n: int) -> np.ndarray:
    # (-1)^k in numpy fft layout: the phase exp(i*xi_k*L/2) for the
    # half-box origin offset.
    k = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    return np.where(k % 2 == 0, 1.0, -1.0)


def _forward_raw(samples: np.ndarray, box_length: float, axis: int = -1) -> np.ndarray:
    n = samples.shape[axis]
    raw = np.fft.fft(samples, axis=axis)
    shape = [1] * samples.ndim
    shape[axis] = n
    raw = raw * _alt_signs(n).reshape(shape)
    raw *= box_length / (n * math.sqrt(TWO_PI))
    return _np_to_grid_order(raw, axis=axis)


def _inverse_raw(coeffs: np.ndarray, box_length: float, axis: int = -1) -> np.ndarray:
    n = coeffs.shape[axis]
    raw = _grid_to_np_order(coeffs, axis=axis)
    shape = [1] * coeffs.ndim
    shape[axis] = n
    raw = raw * _alt_signs(n).reshape(shape)
    out = np.fft.ifft(raw, axis=axis)
    out *= n * math.sqrt(TWO_PI) / box_length
    return out


def forward_transform(samples: np.ndarray, grid: FrequencyGrid) -> SpectralField:
    """Physical samples on grid.nodes() -> spectral coefficients."""
    samples = np.asarray(samples)
    if samples.shape != (grid.n_modes,):
        raise ValueError(
            f"sample count {samples.shape} does not match grid with "
            f"{grid.n_modes} modes"
        )
    return SpectralField(grid, _forward_raw(samples.astype(complex), grid.box_length))


def inverse_transform(u: SpectralField) -> np.ndarray:
    """Spectral coefficients -> complex physical samples on grid.nodes()."""
    return _inverse_raw(u.coeffs, u.grid.box_length)


def l2_norm(u: SpectralField) -> float:
    """Parseval-normalized L2 norm: sqrt(sum |c_k|^2 * dxi)."""
    return _l2_raw(u.coeffs, u.grid.spacing)


def _l2_raw(coeffs: np.ndarray, dxi: float) -> float:
    return math.sqrt(float(np.sum(np.abs(coeffs) ** 2)) * dxi)


def japanese_bracket(xi: np.ndarray) -> np.ndarray:
    """<xi> = (1 + xi^2)^(1/2)."""
    return np.sqrt(1.0 + np.asarray(xi, dtype=float) ** 2)


def apply_multiplier(u: SpectralField, kind: str, s: float) -> SpectralField:
    """Apply |D|^s (kind='homogeneous') or J^s = <D>^s (kind='bessel').

    A homogeneous multiplier with s < 0 is singular at xi = 0 and requires
    mean-zero input; s = 0 is the identity for both kinds.
    """
    xi = u.grid.frequencies
    if kind == "bessel":
        weights = japanese_bracket(xi) ** s
    elif kind == "homogeneous":
        if s == 0.0:
            return u
        if s < 0.0:
            _require_zero_mean(u.coeffs, u.grid.zero_index, "homogeneous multiplier with negative power")
            weights = np.zeros_like(xi)
            nz = xi != 0.0
            weights[nz] = np.abs(xi[nz]) ** s
        else:
            weights = np.abs(xi) ** s
    else:
        raise ValueError(f"unknown multiplier kind {kind!r}; use 'homogeneous' or 'bessel'")
    return SpectralField(u.grid, u.coeffs * weights)


def _require_zero_mean(coeffs: np.ndarray, zero_index: int, what: str) -> None:
    scale = float(np.max(np.abs(coeffs)))
    if scale > 0.0 and abs(coeffs[zero_index]) > 1e-13 * scale:
        raise ValueError(
            f"{what} requires a mean-zero field (singular weight at xi=0); "
            f"zero-mode amplitude is {abs(coeffs[zero_index]):.3e}"
        )


def dispersion_symbol(xi: np.ndarray, alpha: float) -> np.ndarray:
    """Phase speed symbol xi*|xi|^alpha of the free group."""
    xi = np.asarray(xi, dtype=float)
    return xi * np.abs(xi) ** alpha


def propagate(
    u: SpectralField, t: float, alpha: float, *, allow_alpha_outside: bool = False
) -> SpectralField:
    """Exact free propagator: multiply each coefficient by exp(i*t*xi*|xi|^alpha).

    Unit-modulus phases make this exactly norm preserving for every weighted
    norm that depends only on |coeffs|.
    """
    if not (np.isfinite(t) and np.isfinite(alpha)):
        raise ValueError(f"t and alpha must be finite, got t={t}, alpha={alpha}")
    if not (1.0 < alpha < 2.0) and not allow_alpha_outside:
        raise ValueError(
            f"alpha={alpha} outside the supported open interval (1, 2); "
            "pass allow_alpha_outside=True to evaluate anyway"
        )
    phase = np.exp(1j * t * dispersion_symbol(u.grid.frequencies, alpha))
    return SpectralField(u.grid, u.coeffs * phase)


def split_frequencies(u: SpectralField) -> tuple[SpectralField, SpectralField]:
    """Split into (low, high): low = psi(xi)*u, high = u - low, summing back exactly."""
    w = bump(u.grid.frequencies)
    low = u.coeffs * w
    return SpectralField(u.grid, low), SpectralField(u.grid, u.coeffs - low)


_FAMILIES = ("gaussian", "wave_packet", "random_bandlimited")


def make_test_field(
    grid: FrequencyGrid,
    family: str,
    *,
    seed: int = 0,
    amplitude: float = 1.0,
    width: float = 1.0,
    center: float = 0.0,
    carrier: float = 0.0,
    band: float | None = None,
    complex_field: bool = False,
    zero_mean: bool = False,
) -> SpectralField:
    """Deterministic stand-ins for rapidly decaying data.

    gaussian:           amplitude * exp(-((x-center)/width)^2)
    wave_packet:        gaussian envelope times cos(carrier*(x-center))
    random_bandlimited: random coefficients supported in |xi| <= band,
                        conjugate-symmetric unless complex_field is set.

    zero_mean zeroes the xi=0 coefficient (needed wherever the singular
    low-frequency weight |xi|^(-omega) appears).
    """
    if family not in _FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {_FAMILIES}")
    paired_max = grid.nyquist - grid.spacing
    if family == "random_bandlimited":
        if band is None:
            raise ValueError("random_bandlimited requires a band")
        if not (0.0 < band <= paired_max):
            raise ValueError(
                f"band {band} exceeds the largest paired grid frequency {paired_max:.6g}"
            )
        rng = np.random.default_rng(seed)
        n = grid.n_modes
        coeffs = np.zeros(n, dtype=complex)
        k = grid.mode_numbers
        inside = np.abs(grid.frequencies) <= band + 1e-12
        if complex_field:
            draws = rng.standard_normal((n, 2))
            coeffs[inside] = draws[inside, 0] + 1j * draws[inside, 1]
        else:
            # draw positive-frequency modes, mirror conjugates, real zero mode
            pos = inside & (k > 0)
            draws = rng.standard_normal((n, 2))
            coeffs[pos] = draws[pos, 0] + 1j * draws[pos, 1]
            zero = grid.zero_index
            coeffs[:zero] = np.conj(coeffs[zero + 1 : -1][::-1])
            coeffs[zero] = rng.standard_normal() if inside[zero] else 0.0
        coeffs *= amplitude
    else:
        if not (width > 0.0):
            raise ValueError(f"width must be positive, got {width}")
        x = grid.nodes()
        envelope = amplitude * np.exp(-(((x - center) / width) ** 2))
        if family == "wave_packet":
            if abs(carrier) > paired_max:
                raise ValueError(
                    f"carrier {carrier} exceeds the largest paired grid frequency "
                    f"{paired_max:.6g}"
                )
            ratio = carrier / grid.spacing
            if abs(ratio - round(ratio)) > 1e-9:
                raise ValueError(
                    f"carrier {carrier} is not on the frequency grid (spacing "
                    f"{grid.spacing:.6g})"
                )
            envelope = envelope * np.cos(carrier * (x - center))
        coeffs = _forward_raw(envelope.astype(complex), grid.box_length)
    if zero_mean:
        coeffs[grid.zero_index] = 0.0
    return SpectralField(grid, coeffs)
