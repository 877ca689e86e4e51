"""Synthetic phase-object cubes: thickness maps, Cauchy dispersion, noise.

A transparent object of thickness h(x, y) micrometers delays light of
wavelength lambda by

    phi = 2*pi * h * (n(lambda) - 1) / lambda        (h, lambda in um)

so the clean field is A(x, y) * exp(j*phi).  Three object families are
provided: a smooth two-peak surface whose phase stays inside [-pi, pi) for
every band, a compound object whose thickness map changes between three
band sections, and a single tall peak whose phase wraps many times.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .cube import ComplexCube
from .errors import DimensionMismatch, NonPositiveWavelength, OutOfBounds

TWO_PI = 2.0 * np.pi

# Two-term Cauchy coefficients for BK7 glass (dimensionless, um^2).
BK7_A0 = 1.5046
BK7_B0 = 0.00420


@dataclass(frozen=True)
class DispersionModel:
    """Cauchy dispersion n(lambda) = a0 + b0/lambda^2 + c0/lambda^4, lambda in um."""

    a0: float = BK7_A0
    b0_um2: float = BK7_B0
    c0_um4: float = 0.0

    def __post_init__(self):
        lam = np.linspace(0.400, 0.798, 256)
        n = self.a0 + self.b0_um2 / lam**2 + self.c0_um4 / lam**4
        if not np.all(n > 1.0):
            raise ValueError("refractive index must stay above 1 over 400-798 nm")


def bk7() -> DispersionModel:
    return DispersionModel()


def refractive_index(model: DispersionModel, lambda_nm: float):
    """Evaluate the Cauchy formula at a wavelength given in nanometers."""
    lam = np.asarray(lambda_nm, dtype=np.float64)
    if np.any(lam <= 0):
        raise NonPositiveWavelength(f"wavelength must be positive, got {lambda_nm}")
    lam_um = lam / 1000.0
    return model.a0 + model.b0_um2 / lam_um**2 + model.c0_um4 / lam_um**4


def wrap_phase(phi):
    """Reduce a phase (radians) to the half-open interval [-pi, pi)."""
    return np.mod(np.asarray(phi, dtype=np.float64) + np.pi, TWO_PI) - np.pi


class ObjectKind(enum.Enum):
    TWO_PEAK = "two-peak"
    COMPOUND = "compound"
    WRAPPED_PEAK = "wrapped"


@dataclass(frozen=True, eq=False)
class PhaseObjectSpec:
    """Concrete thickness map(s) in micrometers plus an amplitude field.

    Single-map objects carry one map; the compound object carries three,
    switched at band-index fractions ``section_boundaries``.
    """

    kind: ObjectKind
    thickness_maps: tuple[np.ndarray, ...]
    section_boundaries: tuple[float, float] = (1.0 / 3.0, 2.0 / 3.0)
    amplitude: np.ndarray | None = None

    def __post_init__(self):
        maps = tuple(np.asarray(m, dtype=np.float64) for m in self.thickness_maps)
        for m in maps:
            if m.ndim != 2 or m.shape != maps[0].shape:
                raise DimensionMismatch("all thickness maps must share one 2D shape")
            if not np.all(np.isfinite(m)) or np.any(m < 0):
                raise ValueError("thickness must be finite and nonnegative")
        if self.kind is ObjectKind.COMPOUND:
            if len(maps) != 3:
                raise DimensionMismatch("compound object needs exactly 3 thickness maps")
            b1, b2 = self.section_boundaries
            if not 0.0 < b1 < b2 < 1.0:
                raise ValueError("section boundaries must satisfy 0 < b1 < b2 < 1")
        elif len(maps) != 1:
            raise DimensionMismatch(f"{self.kind.value} object needs exactly 1 thickness map")
        if self.amplitude is not None:
            amp = np.asarray(self.amplitude, dtype=np.float64)
            if amp.shape != maps[0].shape:
                raise DimensionMismatch("amplitude field must match the thickness map shape")
            if not np.all(np.isfinite(amp)) or np.any(amp < 0):
                raise ValueError("amplitude must be finite and nonnegative")
            object.__setattr__(self, "amplitude", amp)
        object.__setattr__(self, "thickness_maps", maps)

    @property
    def n_rows(self) -> int:
        return self.thickness_maps[0].shape[0]

    @property
    def n_cols(self) -> int:
        return self.thickness_maps[0].shape[1]

    def thickness_at(self, band_fraction: float) -> np.ndarray:
        """Thickness map active at a relative band position in [0, 1)."""
        if self.kind is not ObjectKind.COMPOUND:
            return self.thickness_maps[0]
        b1, b2 = self.section_boundaries
        if band_fraction < b1:
            return self.thickness_maps[0]
        if band_fraction < b2:
            return self.thickness_maps[1]
        return self.thickness_maps[2]


def default_wavelengths(n_bands: int = 200, lo_nm: float = 400.0, hi_nm: float = 798.0):
    """Uniform wavelength grid, by default 200 bands over 400-798 nm."""
    return np.linspace(lo_nm, hi_nm, n_bands)


def _thickness_for_phase(model: DispersionModel, lambda_nm: float, phase_rad: float) -> float:
    """Thickness in um that produces a given absolute phase at one wavelength."""
    n = refractive_index(model, lambda_nm)
    return phase_rad * (lambda_nm / 1000.0) / (TWO_PI * (n - 1.0))


def _grid(n_rows: int, n_cols: int):
    y = np.arange(n_rows, dtype=np.float64)[:, None]
    x = np.arange(n_cols, dtype=np.float64)[None, :]
    return y, x


def _gaussian_bump(n_rows, n_cols, center_yx, width_frac):
    y, x = _grid(n_rows, n_cols)
    cy, cx = center_yx
    w = width_frac * min(n_rows, n_cols)
    return np.exp(-((y - cy) ** 2 + (x - cx) ** 2) / (2.0 * w**2))


def _rescale_to_phase(raw_map, model, lambda_nm, target_phase):
    peak = raw_map.max()
    if peak <= 0:
        raise ValueError("thickness map must have a positive peak to calibrate")
    return raw_map * (_thickness_for_phase(model, lambda_nm, target_phase) / peak)


def two_peak_spec(
    n_rows: int,
    n_cols: int,
    model: DispersionModel,
    lambda_min_nm: float = 400.0,
    target_phase: float = 2.8,
) -> PhaseObjectSpec:
    """Smooth sum of two Gaussian bumps, scaled so the largest phase (reached
    at the shortest wavelength) equals ``target_phase`` and stays below pi."""
    if not 0 < target_phase < np.pi:
        raise ValueError("two-peak object must keep its phase inside [-pi, pi)")
    b1 = _gaussian_bump(n_rows, n_cols, (0.38 * n_rows, 0.32 * n_cols), 0.11)
    b2 = 0.72 * _gaussian_bump(n_rows, n_cols, (0.62 * n_rows, 0.68 * n_cols), 0.17)
    h = _rescale_to_phase(b1 + b2, model, lambda_min_nm, target_phase)
    return PhaseObjectSpec(kind=ObjectKind.TWO_PEAK, thickness_maps=(h,))


def wrapped_peak_spec(
    n_rows: int,
    n_cols: int,
    model: DispersionModel,
    lambda_min_nm: float = 400.0,
    max_phase: float = 28.9,
) -> PhaseObjectSpec:
    """Tall truncated Gaussian peak whose phase wraps many times.

    The Gaussian tails are cut at their boundary level so the peak has
    compact support; the height is calibrated so the maximum phase at the
    shortest wavelength equals ``max_phase`` exactly on the pixel grid.
    """
    bump = _gaussian_bump(n_rows, n_cols, ((n_rows - 1) / 2.0, (n_cols - 1) / 2.0), 0.16)
    floor = np.exp(-0.5 / 0.16**2)  # level one half-image away from the center
    raw = np.maximum(bump - floor, 0.0) / (1.0 - floor)
    h = _rescale_to_phase(raw, model, lambda_min_nm, max_phase)
    return PhaseObjectSpec(kind=ObjectKind.WRAPPED_PEAK, thickness_maps=(h,))


def usaf_thickness(n_rows: int, n_cols: int) -> np.ndarray:
    """Binary resolution-target style map: triplets of bars at shrinking scales."""
    img = np.zeros((n_rows, n_cols))
    scale = max(min(n_rows, n_cols) // 4, 3)
    top = max(n_rows // 12, 1)
    left = max(n_cols // 12, 1)
    while scale >= 3 and top + scale < n_rows and left + 2 * scale + 2 < n_cols:
        bar = max(scale // 5, 1)
        for k in range(3):  # vertical triplet
            c0 = left + 2 * k * bar
            img[top : top + scale, c0 : c0 + bar] = 1.0
        h_left = left + scale + 2
        for k in range(3):  # horizontal triplet
            r0 = top + 2 * k * bar
            img[r0 : r0 + bar, h_left : h_left + scale] = 1.0
        top += scale + max(scale // 3, 2)
        scale = int(scale * 0.55)
    return img


def _inclined_step_thickness(n_rows, n_cols):
    # linear ramp with one step discontinuity along the column direction
    _, x = _grid(n_rows, n_cols)
    ramp = np.broadcast_to(x / max(n_cols - 1, 1), (n_rows, n_cols)).copy()
    ramp[:, n_cols // 2 :] += 0.6
    return ramp / ramp.max()


def compound_spec(
    n_rows: int,
    n_cols: int,
    model: DispersionModel,
    lambda_min_nm: float = 400.0,
    target_phase: float = 2.8,
    section_boundaries: tuple[float, float] = (1.0 / 3.0, 2.0 / 3.0),
) -> PhaseObjectSpec:
    """Three-section object: binary bar target, Gaussian peak, inclined
    discontinuous surface; each section calibrated to an interferometric range."""
    maps = (
        usaf_thickness(n_rows, n_cols),
        _gaussian_bump(n_rows, n_cols, (0.5 * (n_rows - 1), 0.5 * (n_cols - 1)), 0.14),
        _inclined_step_thickness(n_rows, n_cols),
    )
    scaled = tuple(_rescale_to_phase(m, model, lambda_min_nm, target_phase) for m in maps)
    return PhaseObjectSpec(
        kind=ObjectKind.COMPOUND,
        thickness_maps=scaled,
        section_boundaries=section_boundaries,
    )


def phase_at(
    spec: PhaseObjectSpec,
    model: DispersionModel,
    x: int,
    y: int,
    lambda_nm: float,
    band_fraction: float = 0.0,
) -> float:
    """Absolute (unwrapped) phase at pixel (x, y); x is the column, y the row.

    ``band_fraction`` selects the section of a compound object and is ignored
    otherwise.
    """
    if not (0 <= y < spec.n_rows and 0 <= x < spec.n_cols):
        raise OutOfBounds(f"pixel ({x}, {y}) outside {spec.n_cols}x{spec.n_rows}")
    h = spec.thickness_at(band_fraction)[y, x]
    n = refractive_index(model, lambda_nm)
    return TWO_PI * h * (n - 1.0) / (lambda_nm / 1000.0)


def generate_truth(
    spec: PhaseObjectSpec,
    model: DispersionModel,
    dims: tuple[int, int],
    wavelengths: np.ndarray,
) -> ComplexCube:
    """Build the clean cube A * exp(j*phi) over a wavelength grid."""
    n_rows, n_cols = dims
    if (n_rows, n_cols) != (spec.n_rows, spec.n_cols):
        raise DimensionMismatch(
            f"requested dims {dims} do not match the object maps "
            f"({spec.n_rows}, {spec.n_cols})"
        )
    wl = np.asarray(wavelengths, dtype=np.float64)
    n_bands = wl.size
    amp = spec.amplitude if spec.amplitude is not None else np.ones((n_rows, n_cols))
    data = np.empty((n_rows, n_cols, n_bands), dtype=np.complex128)
    n_of_lambda = refractive_index(model, wl)
    for b in range(n_bands):
        h = spec.thickness_at(b / n_bands)
        phi = TWO_PI * h * (n_of_lambda[b] - 1.0) / (wl[b] / 1000.0)
        data[:, :, b] = amp * np.exp(1j * phi)
    return ComplexCube(wavelengths=wl, data=data)


@dataclass(frozen=True)
class NoiseSpec:
    """Circular complex Gaussian noise of total standard deviation sigma.

    The variance splits evenly between the real and imaginary parts, so each
    component has standard deviation sigma/sqrt(2).  Generation is driven by
    a counter-based generator and is deterministic for a given seed.
    """

    sigma: float
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise ValueError(f"sigma must be finite and nonnegative, got {self.sigma}")


def add_noise(cube: ComplexCube, noise: NoiseSpec) -> ComplexCube:
    """Add i.i.d. circular complex Gaussian noise to every sample."""
    if noise.sigma == 0.0:
        return ComplexCube(wavelengths=cube.wavelengths, data=cube.data)
    rng = np.random.Generator(np.random.Philox(noise.seed))
    comp = rng.normal(scale=noise.sigma / np.sqrt(2.0), size=cube.shape + (2,))
    return ComplexCube(
        wavelengths=cube.wavelengths,
        data=cube.data + comp[..., 0] + 1j * comp[..., 1],
    )
