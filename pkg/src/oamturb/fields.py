"""Scalar/vector optical fields on a square grid and the basic mode algebra.

All lengths are measured in units of the beam waist at the input plane, so
the fundamental Gaussian has intensity exp(-2 r^2) and unit L2 norm on the
grid.  Azimuthal indices are limited to |l| <= 8; the default 256 x 8 grid
resolves those modes to better than single precision.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.ndimage import map_coordinates

from .errors import AliasingError, DomainError, RangeError, ShapeMismatchError

MAX_AZIMUTHAL_INDEX = 8

# fraction of total power allowed in the outer 2-pixel frame before
# FFT-based propagation is considered aliased
BOUNDARY_ENERGY_LIMIT = 1e-4


@dataclass(frozen=True)
class GridSpec:
    """Square sampling grid, symmetric about the beam axis.

    Sample points sit at half-pixel offsets, (k - n/2 + 1/2) * pitch, so no
    sample falls exactly on the axis and the grid has no privileged center
    pixel.  n must be even and at least 32.
    """

    n: int = 256
    extent: float = 8.0

    def __post_init__(self) -> None:
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise RangeError(f"grid size must be an integer, got {self.n!r}")
        if self.n < 32 or self.n % 2:
            raise RangeError(f"grid size must be even and >= 32, got {self.n}")
        if not (isinstance(self.extent, (int, float, np.floating)) and self.extent > 0):
            raise RangeError(f"grid extent must be positive, got {self.extent!r}")
        object.__setattr__(self, "extent", float(self.extent))
        object.__setattr__(self, "n", int(self.n))

    @property
    def pitch(self) -> float:
        return self.extent / self.n

    @functools.cached_property
    def coords(self) -> np.ndarray:
        c = (np.arange(self.n) - self.n / 2 + 0.5) * self.pitch
        c.flags.writeable = False
        return c

    @functools.cached_property
    def xy(self) -> tuple[np.ndarray, np.ndarray]:
        x, y = np.meshgrid(self.coords, self.coords)
        x.flags.writeable = False
        y.flags.writeable = False
        return x, y

    @functools.cached_property
    def polar(self) -> tuple[np.ndarray, np.ndarray]:
        x, y = self.xy
        r = np.hypot(x, y)
        theta = np.arctan2(y, x)
        r.flags.writeable = False
        theta.flags.writeable = False
        return r, theta

    @functools.cached_property
    def freqs(self) -> np.ndarray:
        f = np.fft.fftfreq(self.n, d=self.pitch)
        f.flags.writeable = False
        return f


@dataclass(frozen=True)
class ScalarField:
    """Complex field samples on a grid.

    The constructor adopts the array (converting to complex128 if needed)
    and marks it read-only; pass a copy if you need to keep writing to it.
    """

    grid: GridSpec
    samples: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.samples, dtype=np.complex128)
        if arr.shape != (self.grid.n, self.grid.n):
            raise ShapeMismatchError(
                f"samples shape {arr.shape} does not match grid {self.grid.n}"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    def power(self) -> float:
        """Total power, sum |f|^2 * pitch^2."""
        s = self.samples
        return float(np.sum(s.real**2 + s.imag**2) * self.grid.pitch**2)


@dataclass(frozen=True)
class VectorField:
    """Paraxial two-component field in the circular polarization basis."""

    right: ScalarField
    left: ScalarField

    def __post_init__(self) -> None:
        if self.right.grid != self.left.grid:
            raise ShapeMismatchError("right/left components live on different grids")

    @property
    def grid(self) -> GridSpec:
        return self.right.grid

    def power(self) -> float:
        return self.right.power() + self.left.power()


@dataclass(frozen=True)
class OamModeSpec:
    """Laguerre-Gauss mode label: azimuthal index l, radial index 0."""

    l: int
    p: int = 0
    waist: float = 1.0

    def __post_init__(self) -> None:
        if not isinstance(self.l, (int, np.integer)) or isinstance(self.l, bool):
            raise RangeError(f"azimuthal index must be an integer, got {self.l!r}")
        if abs(self.l) > MAX_AZIMUTHAL_INDEX:
            raise RangeError(
                f"|l| <= {MAX_AZIMUTHAL_INDEX} is required, got l={self.l}"
            )
        if self.p != 0:
            raise RangeError("only the p = 0 radial mode is supported")
        if not self.waist > 0:
            raise DomainError(f"waist must be positive, got {self.waist}")
        object.__setattr__(self, "l", int(self.l))


_LG_CACHE: dict[tuple[int, float, GridSpec], ScalarField] = {}


def make_lg_mode(mode: OamModeSpec | int, grid: GridSpec) -> ScalarField:
    """Sample the Laguerre-Gauss mode LG_{0,l} at its waist.

    The profile is (sqrt(2) r / w)^|l| exp(-r^2/w^2) exp(i l theta),
    renormalized numerically so the grid sum of |f|^2 * pitch^2 is exactly 1.
    Modes are cached per (l, waist, grid); the returned field is immutable
    and may be shared between callers.
    """
    if isinstance(mode, (int, np.integer)) and not isinstance(mode, bool):
        mode = OamModeSpec(l=int(mode))
    key = (mode.l, mode.waist, grid)
    cached = _LG_CACHE.get(key)
    if cached is not None:
        return cached
    r, theta = grid.polar
    u = r / mode.waist
    rho = (np.sqrt(2.0) * u) ** abs(mode.l) * np.exp(-(u**2))
    f = rho * np.exp(1j * mode.l * theta)
    f /= np.sqrt(np.sum(f.real**2 + f.imag**2) * grid.pitch**2)
    out = ScalarField(grid, f)
    _LG_CACHE[key] = out
    return out


def overlap(a: ScalarField, b: ScalarField) -> complex:
    """Inner product <a|b> = sum conj(a) * b * pitch^2."""
    if a.grid != b.grid:
        raise ShapeMismatchError("overlap requires both fields on the same grid")
    return complex(np.vdot(a.samples, b.samples) * a.grid.pitch**2)


def oam_power_spectrum(
    f: ScalarField, l_min: int, l_max: int
) -> dict[int, float]:
    """Power per azimuthal index over a centered disk.

    The field is resampled onto a polar raster (cubic spline interpolation),
    Fourier-analyzed in the angle, and the radial integral is taken with
    Simpson's rule out to extent/2 - 2*pitch.  Power outside that disk is
    not counted, so the values sum to slightly less than the total power
    for beams that reach the grid corners.
    """
    if l_min > l_max:
        raise RangeError(f"l_min={l_min} exceeds l_max={l_max}")
    grid = f.grid
    n = grid.n
    if max(abs(l_min), abs(l_max)) > n:
        raise RangeError(f"|l| <= {n} is required on an n={n} grid")
    n_theta = 4 * n
    n_r = 2 * n + 1
    r_disk = grid.extent / 2 - 2 * grid.pitch
    r = np.linspace(0.0, r_disk, n_r)
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    xs = np.outer(r, np.cos(theta))
    ys = np.outer(r, np.sin(theta))
    # half-pixel grid: pixel index = coordinate/pitch + n/2 - 1/2
    ix = xs / grid.pitch + n / 2 - 0.5
    iy = ys / grid.pitch + n / 2 - 0.5
    vals = map_coordinates(f.samples.real, [iy, ix], order=3) + 1j * map_coordinates(
        f.samples.imag, [iy, ix], order=3
    )
    c = np.fft.fft(vals, axis=1) / n_theta
    out: dict[int, float] = {}
    for l in range(l_min, l_max + 1):
        radial = np.abs(c[:, l % n_theta]) ** 2 * r
        out[l] = float(2 * np.pi * simpson(radial, x=r))
    return out


def _shear_x(f: np.ndarray, a: float, cy: np.ndarray, pitch: float) -> np.ndarray:
    fx = np.fft.fftfreq(f.shape[1], d=pitch)
    ph = np.exp(-2j * np.pi * np.outer(cy * a, fx))
    return np.fft.ifft(np.fft.fft(f, axis=1) * ph, axis=1)


def _shear_y(f: np.ndarray, b: float, cx: np.ndarray, pitch: float) -> np.ndarray:
    fy = np.fft.fftfreq(f.shape[0], d=pitch)
    ph = np.exp(-2j * np.pi * np.outer(fy, cx * b))
    return np.fft.ifft(np.fft.fft(f, axis=0) * ph, axis=0)


def rotate_modal(f: ScalarField, theta: float) -> ScalarField:
    """Rotate the transverse profile by theta about the beam axis.

    A pure mode c_l(r) e^{i l theta_az} maps to e^{-i l theta} times itself.
    Quadrant parts of the angle are exact array rotations; the residual in
    (-pi/4, pi/4] is applied as three FFT shears on a 2x zero-padded copy,
    which is exact for fields that are band-limited and negligible at the
    grid edge.  theta = 0 (mod 2 pi) returns the input unchanged.
    """
    n = f.grid.n
    pitch = f.grid.pitch
    th = float(theta) % (2 * np.pi)
    if th == 0.0:
        return f
    k = int(np.round(th / (np.pi / 2)))
    resid = th - k * (np.pi / 2)
    k %= 4
    g = np.rot90(f.samples, -k) if k else f.samples
    if resid != 0.0:
        m = 2 * n
        s = (m - n) // 2
        big = np.zeros((m, m), dtype=np.complex128)
        big[s : s + n, s : s + n] = g
        cb = (np.arange(m) - m / 2 + 0.5) * pitch
        a = -np.tan(resid / 2)
        b = np.sin(resid)
        big = _shear_x(_shear_y(_shear_x(big, a, cb, pitch), b, cb, pitch), a, cb, pitch)
        g = big[s : s + n, s : s + n]
    else:
        g = g.copy()
    return ScalarField(f.grid, g)


def boundary_energy_fraction(f: ScalarField, width: int = 2) -> float:
    """Fraction of total power in the outermost `width`-pixel frame."""
    inten = f.samples.real**2 + f.samples.imag**2
    total = float(inten.sum())
    if total == 0.0:
        return 0.0
    inner = float(inten[width:-width, width:-width].sum())
    return (total - inner) / total


def propagate(f: ScalarField, distance: float, wavelength: float) -> ScalarField:
    """Fresnel-propagate by `distance` using the FFT transfer function.

    distance and wavelength are in waist units, like the grid.  The
    transfer function exp(-i pi lambda z f^2) is unitary, so grid power is
    conserved.  Raises AliasingError when more than BOUNDARY_ENERGY_LIMIT
    of the power sits in the outer 2-pixel frame before or after the step,
    since wrap-around then contaminates the result.
    """
    if not wavelength > 0:
        raise DomainError(f"wavelength must be positive, got {wavelength}")
    if boundary_energy_fraction(f) >= BOUNDARY_ENERGY_LIMIT:
        raise AliasingError("input field reaches the grid boundary")
    if distance == 0.0:
        return f
    fr = f.grid.freqs
    fx, fy = np.meshgrid(fr, fr)
    tf = np.exp(-1j * np.pi * wavelength * distance * (fx**2 + fy**2))
    out = ScalarField(f.grid, np.fft.ifft2(np.fft.fft2(f.samples) * tf))
    if boundary_energy_fraction(out) >= BOUNDARY_ENERGY_LIMIT:
        raise AliasingError("propagated field reaches the grid boundary")
    return out
