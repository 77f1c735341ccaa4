"""Far-field synthesis and pattern metrics for the fed reflectarray.

The radiated co-polar field is the phased sum over elements of
illumination amplitude times element reflection coefficient, weighted
by a cos^qe element factor towards the observation direction:

    E(u) = sum_n A_n * G_n * cos(theta_u)^qe * exp(j k r_n . u)

with A_n the spherical-wave feed illumination (cos^(q/2) field taper
over distance r) and G_n the element reflection state.  Directivity is
obtained by normalizing the peak intensity with the power integrated
over the forward hemisphere; realized gain additionally applies the
spillover and illumination efficiencies and a fixed reflection-loss
constant.
"""

from __future__ import annotations

import math
import warnings
import weakref
from dataclasses import dataclass, field

import numpy as np

from .constants import db10
from .element import reflection_coefficient
from .geometry import AntennaAssembly, Direction, incidence_angles

# Element power-pattern exponent (field factor cos^qe towards the
# observation direction).
ELEMENT_EXPONENT = 1.0

# Fixed loss efficiency applied on top of spillover and illumination
# efficiencies when converting directivity to gain.  Bundles reflection
# loss with fabrication, bias-line and measurement losses that the
# idealized pattern sum does not see; calibrated so the nominal
# assembly's one-bit broadside beam lands on the measured 22.2 dBi
# (reflection loss alone, ~0.8, leaves the idealized model several dB
# hot).
REFLECTION_EFFICIENCY = 0.23

DEFAULT_GRID_STEP_DEG = 0.25

# Directions per chunk in the lattice field evaluation; bounds memory.
_CHUNK = 65536


def direction_grid(step_deg: float = DEFAULT_GRID_STEP_DEG,
                   az_range: tuple[float, float] = (-90.0, 90.0),
                   el_range: tuple[float, float] = (-90.0, 90.0)):
    """Regular (az, el) grid arrays spanning the given ranges inclusive."""
    if step_deg <= 0:
        raise ValueError("grid step must be positive")
    n_az = int(round((az_range[1] - az_range[0]) / step_deg))
    n_el = int(round((el_range[1] - el_range[0]) / step_deg))
    az = az_range[0] + step_deg * np.arange(n_az + 1)
    el = el_range[0] + step_deg * np.arange(n_el + 1)
    return az, el


def unit_vectors(az_deg: np.ndarray, el_deg: np.ndarray):
    """Direction cosines (ux, uy, uz) on the az x el grid, shape (n_el, n_az)."""
    a = np.radians(np.asarray(az_deg))[None, :]
    e = np.radians(np.asarray(el_deg))[:, None]
    ux = np.sin(a) * np.cos(e)
    uy = np.broadcast_to(np.sin(e), (e.size, a.size))
    uz = np.cos(a) * np.cos(e)
    return ux, uy, uz


def feed_distances(assembly: AntennaAssembly) -> np.ndarray:
    positions = assembly.array.positions_mm()
    return np.linalg.norm(positions - assembly.feed.position(), axis=1)


# Assemblies are immutable value types, so the spillover integral can be
# memoized per instance; repeated pattern evaluations on one assembly
# (steering sweeps, beam training) would otherwise redo it every call.
_spillover_memo: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()


def spillover_efficiency(assembly: AntennaAssembly, n_grid: int = 256) -> float:
    """Fraction of the feed's radiated power intercepted by the aperture.

    The cos^q power pattern is normalized over the feed's forward
    hemisphere and integrated over the solid angle subtended by the
    aperture rectangle (midpoint rule on an n_grid x n_grid mesh).
    """
    cached = _spillover_memo.setdefault(assembly, {})
    if n_grid in cached:
        return cached[n_grid]
    feed = assembly.feed
    q = feed.pattern_exponent
    half_x = 0.5 * assembly.array.n_x * assembly.array.period_mm
    half_y = 0.5 * assembly.array.n_y * assembly.array.period_mm
    xs = (np.arange(n_grid) + 0.5) / n_grid * 2 * half_x - half_x
    ys = (np.arange(n_grid) + 0.5) / n_grid * 2 * half_y - half_y
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel(), np.zeros(gx.size)])
    v = pts - feed.position()
    r = np.linalg.norm(v, axis=1)
    cos_feed = (v / r[:, None]) @ feed.boresight()
    cos_feed = np.clip(cos_feed, 0.0, 1.0)
    cos_plane = feed.position()[2] / r  # obliquity of the aperture plane
    # Normalized radiation intensity of the cos^q pattern over a hemisphere.
    u = (q + 1.0) / (2.0 * math.pi) * cos_feed**q
    cell = (2 * half_x / n_grid) * (2 * half_y / n_grid)
    power = float(np.sum(u * cos_plane / r**2) * cell)
    cached[n_grid] = min(power, 1.0)
    return cached[n_grid]


def taper_efficiency(amplitudes: np.ndarray) -> float:
    """Aperture illumination (taper) efficiency of an amplitude set."""
    a = np.abs(np.asarray(amplitudes, dtype=float))
    if a.size == 0 or np.all(a == 0):
        raise ValueError("amplitude set must contain energy")
    return float(np.sum(a) ** 2 / (a.size * np.sum(a**2)))


def illumination(assembly: AntennaAssembly, normalize: bool = True) -> np.ndarray:
    """Complex feed illumination per element.

    Amplitude follows the cos^(q/2) field taper over spherical spreading
    1/r; phase is the feed-path delay -k*r.  When ``normalize`` is set
    the amplitudes are scaled so the total intercepted power equals the
    spillover efficiency (and therefore never exceeds one).
    """
    feed = assembly.feed
    positions = assembly.array.positions_mm()
    v = positions - feed.position()
    r = np.linalg.norm(v, axis=1)
    cos_feed = np.clip((v / r[:, None]) @ feed.boresight(), 0.0, 1.0)
    amp = cos_feed ** (0.5 * feed.pattern_exponent) / r
    phase = -assembly.k_per_mm * r
    a = amp * np.exp(1j * phase)
    if normalize:
        a *= math.sqrt(spillover_efficiency(assembly) / np.sum(amp**2))
    return a


@dataclass(frozen=True)
class PhaseMask:
    """Binary state per bias group, resolved through the element circuit."""

    states: np.ndarray  # uint8, one entry per group

    def __post_init__(self):
        states = np.asarray(self.states)
        if states.ndim != 1 or not np.all((states == 0) | (states == 1)):
            raise ValueError("mask states must be a flat array of 0/1")


def state_reflections(assembly: AntennaAssembly):
    """(Gamma_off, Gamma_on) of the element circuit at the assembly frequency."""
    off = reflection_coefficient(assembly.element_circuit, "off", assembly.frequency_ghz)
    on = reflection_coefficient(assembly.element_circuit, "on", assembly.frequency_ghz)
    return off.value, on.value


def resolve_reflections(assembly: AntennaAssembly, mask) -> np.ndarray:
    """Per-element complex reflection coefficients for a mask.

    ``mask`` may be a :class:`PhaseMask` (or anything with group
    ``states``), or an explicit per-element complex array which is
    passed through.  The assembly's incidence model, when present,
    applies its quadratic phase shift and cosine amplitude roll-off
    using each element's angle seen from the feed.
    """
    if isinstance(mask, np.ndarray) and np.iscomplexobj(mask):
        gamma = np.asarray(mask, dtype=complex)
        if gamma.shape != (assembly.array.n_elements,):
            raise ValueError("reflection array must have one entry per element")
    else:
        states = np.asarray(getattr(mask, "states", mask))
        if states.shape != (assembly.array.n_groups,):
            raise ValueError(
                f"mask has {states.shape} states, array has {assembly.array.n_groups} groups"
            )
        g_off, g_on = state_reflections(assembly)
        per_element = states[assembly.array.grouping]
        gamma = np.where(per_element == 1, g_on, g_off)
    model = assembly.incidence_model
    if model is not None:
        theta = incidence_angles(assembly.feed, assembly.array.positions_mm())
        gamma = gamma * (
            np.cos(np.radians(theta)) ** model.amplitude_exponent
            * np.exp(1j * np.radians(model.beta_deg_per_deg2 * theta**2))
        )
    return gamma


@dataclass(frozen=True, eq=False)
class FarFieldPattern:
    """Sampled co- and cross-polar fields on a regular (az, el) grid."""

    az_deg: np.ndarray
    el_deg: np.ndarray
    co_pol: np.ndarray        # complex, shape (n_el, n_az)
    cross_pol: np.ndarray     # complex, same shape
    power_total: float        # hemisphere-integrated radiated power
    gain_offset_db: float     # 10*log10(eta_s * eta_i * reflection efficiency)
    frequency_ghz: float

    def __post_init__(self):
        az = np.asarray(self.az_deg)
        el = np.asarray(self.el_deg)
        if az.ndim != 1 or el.ndim != 1:
            raise ValueError("grid axes must be one-dimensional")
        if np.any(np.diff(az) <= 0) or (el.size > 1 and np.any(np.diff(el) <= 0)):
            raise ValueError("grid axes must be strictly increasing")
        if self.co_pol.shape != (el.size, az.size):
            raise ValueError("field shape must be (n_el, n_az)")
        if not (np.all(np.isfinite(self.co_pol)) and np.all(np.isfinite(self.cross_pol))):
            raise ValueError("pattern fields must be finite")
        if self.power_total <= 0:
            raise ValueError("integrated power must be positive")

    def gain_dbi(self) -> np.ndarray:
        """Realized co-polar gain on the grid, dBi (zero field maps to -inf)."""
        intensity = np.abs(self.co_pol) ** 2
        with np.errstate(divide="ignore"):
            return (10.0 * np.log10(4.0 * math.pi * intensity / self.power_total)
                    + self.gain_offset_db)


def _lattice_field(x_mm, y_mm, coeffs_grid, k, ux, uy):
    """Phased sum over a separable lattice, chunked over directions.

    Exact reformulation of the per-element sum: with elements on an
    x-by-y lattice, exp(j k r.u) factorizes into exp(j k x ux) and
    exp(j k y uy), so each direction costs two small matrix products
    instead of a full pass over all elements.
    """
    shape = ux.shape
    uxf = ux.ravel()
    uyf = uy.ravel()
    out = np.empty(uxf.size, dtype=complex)
    for lo in range(0, uxf.size, _CHUNK):
        hi = min(lo + _CHUNK, uxf.size)
        ex = np.exp(1j * k * np.outer(uxf[lo:hi], x_mm))          # (d, n_x)
        ey = np.exp(1j * k * np.outer(uyf[lo:hi], y_mm))          # (d, n_y)
        out[lo:hi] = np.einsum("dy,dy->d", ex @ coeffs_grid.T, ey)
    return out.reshape(shape)


def array_field(positions_mm, coeffs, k_per_mm, az_deg, el_deg,
                element_exponent: float = ELEMENT_EXPONENT) -> np.ndarray:
    """Raw phased summation over arbitrary element positions.

    Returns the complex field on the (el, az) grid including the
    cos^qe element factor.  This is the generic (non-factorized) path;
    :func:`far_field` uses the lattice fast path for array assemblies.
    """
    positions = np.asarray(positions_mm, dtype=float)
    coeffs = np.asarray(coeffs, dtype=complex)
    ux, uy, uz = unit_vectors(az_deg, el_deg)
    shape = ux.shape
    d = np.column_stack([ux.ravel(), uy.ravel(), uz.ravel()])
    out = np.empty(d.shape[0], dtype=complex)
    for lo in range(0, d.shape[0], _CHUNK // 8):
        hi = min(lo + _CHUNK // 8, d.shape[0])
        phase = (d[lo:hi] @ positions.T) * k_per_mm
        out[lo:hi] = np.exp(1j * phase) @ coeffs
    factor = np.clip(uz.ravel(), 0.0, None) ** element_exponent
    return (out * factor).reshape(shape)


def _integrate_power(az_deg, el_deg, *fields) -> float:
    """Hemisphere power integral with the az-el Jacobian cos(el)."""
    az = np.radians(np.asarray(az_deg))
    el = np.radians(np.asarray(el_deg))
    d_az = az[1] - az[0] if az.size > 1 else math.radians(1.0)
    d_el = el[1] - el[0] if el.size > 1 else math.radians(1.0)
    total = 0.0
    for f in fields:
        total += float(np.sum(np.abs(f) ** 2 * np.cos(el)[:, None]) * d_az * d_el)
    return total


def far_field(assembly: AntennaAssembly, mask, az_deg=None, el_deg=None,
              element_exponent: float | None = None,
              reflection_efficiency: float | None = None) -> FarFieldPattern:
    """Far-field pattern of the fed array for one reflection state.

    ``mask`` is a :class:`PhaseMask` or an explicit per-element complex
    reflection array.  Warns when the grid is too coarse to resolve the
    main lobe of the full-size array.
    """
    if az_deg is None or el_deg is None:
        g_az, g_el = direction_grid()
        az_deg = g_az if az_deg is None else az_deg
        el_deg = g_el if el_deg is None else el_deg
    az_deg = np.asarray(az_deg, dtype=float)
    el_deg = np.asarray(el_deg, dtype=float)
    step = max(
        float(np.max(np.diff(az_deg))) if az_deg.size > 1 else 0.0,
        float(np.max(np.diff(el_deg))) if el_deg.size > 1 else 0.0,
    )
    if step > 2.0:
        warnings.warn(
            f"grid step {step:.2f} deg may undersample the main lobe of a "
            f"{assembly.array.n_x}x{assembly.array.n_y} array",
            stacklevel=2,
        )
    qe = ELEMENT_EXPONENT if element_exponent is None else element_exponent
    eta_r = REFLECTION_EFFICIENCY if reflection_efficiency is None else reflection_efficiency

    illum = illumination(assembly)
    gamma = resolve_reflections(assembly, mask)
    coeffs = illum * gamma

    n_x, n_y = assembly.array.n_x, assembly.array.n_y
    period = assembly.array.period_mm
    x_mm = (np.arange(n_x) - 0.5 * (n_x - 1)) * period
    y_mm = (np.arange(n_y) - 0.5 * (n_y - 1)) * period
    ux, uy, uz = unit_vectors(az_deg, el_deg)
    co = _lattice_field(x_mm, y_mm, coeffs.reshape(n_y, n_x), assembly.k_per_mm, ux, uy)
    co = co * np.clip(uz, 0.0, None) ** qe
    cross = co * 10.0 ** (assembly.cross_pol_db / 20.0)

    power = _integrate_power(az_deg, el_deg, co, cross)
    eta_s = spillover_efficiency(assembly)
    eta_i = taper_efficiency(np.abs(illum))
    offset = db10(eta_s * eta_i * eta_r)
    return FarFieldPattern(
        az_deg=az_deg, el_deg=el_deg, co_pol=co, cross_pol=cross,
        power_total=power, gain_offset_db=float(offset),
        frequency_ghz=assembly.frequency_ghz,
    )


@dataclass(frozen=True)
class PatternMetrics:
    peak_gain_dbi: float
    peak_direction: Direction
    sll_db: float | None
    hpbw_az_deg: float
    hpbw_el_deg: float
    cross_pol_db: float


def _first_null(values: np.ndarray, start: int, step: int) -> int:
    """Index of the first local minimum walking from ``start`` by ``step``."""
    i = start
    while 0 <= i + step < values.size:
        if values[i + step] >= values[i]:
            return i
        i += step
    raise ValueError(
        "no first null found around the main lobe; evaluate the pattern on a finer grid"
    )


def _hpbw(axis_deg: np.ndarray, cut: np.ndarray, peak_idx: int) -> float:
    """Half-power width of a cut through the peak, linear interpolation."""
    half = cut[peak_idx] / 2.0
    lo_deg = hi_deg = math.nan
    for step in (-1, 1):
        i = peak_idx
        while 0 <= i + step < cut.size and cut[i + step] > half:
            i += step
        j = i + step
        if not (0 <= j < cut.size):
            return math.nan
        frac = (cut[i] - half) / (cut[i] - cut[j])
        crossing = axis_deg[i] + frac * (axis_deg[j] - axis_deg[i])
        if step < 0:
            lo_deg = crossing
        else:
            hi_deg = crossing
    return hi_deg - lo_deg


def pattern_metrics(pattern: FarFieldPattern) -> PatternMetrics:
    """Peak gain, sidelobe level, beamwidths and cross-pol ratio.

    The main lobe is bounded by the first nulls along the azimuth and
    elevation cuts through the peak; the sidelobe level is the highest
    sample outside that region.  A flat (structureless) pattern reports
    no sidelobes.
    """
    intensity = np.abs(pattern.co_pol) ** 2
    i_el, i_az = np.unravel_index(int(np.argmax(intensity)), intensity.shape)
    peak = intensity[i_el, i_az]
    if peak <= 0:
        raise ValueError("pattern has no radiated energy")
    directivity = 4.0 * math.pi * peak / pattern.power_total
    gain = db10(directivity) + pattern.gain_offset_db

    flat = (peak - intensity.min()) <= 1e-9 * peak
    sll = None
    hpbw_az = hpbw_el = math.nan
    if not flat:
        az_cut = intensity[i_el, :]
        el_cut = intensity[:, i_az]
        az_lo = _first_null(az_cut, i_az, -1) if i_az > 0 else i_az
        az_hi = _first_null(az_cut, i_az, +1) if i_az < az_cut.size - 1 else i_az
        if pattern.el_deg.size > 1:
            el_lo = _first_null(el_cut, i_el, -1) if i_el > 0 else i_el
            el_hi = _first_null(el_cut, i_el, +1) if i_el < el_cut.size - 1 else i_el
        else:
            el_lo = el_hi = i_el
        outside = np.ones_like(intensity, dtype=bool)
        outside[el_lo:el_hi + 1, az_lo:az_hi + 1] = False
        if np.any(outside):
            sll = float(db10(intensity[outside].max() / peak))
        hpbw_az = _hpbw(pattern.az_deg, az_cut, i_az)
        if pattern.el_deg.size > 1:
            hpbw_el = _hpbw(pattern.el_deg, el_cut, i_el)

    xp_peak = float(np.max(np.abs(pattern.cross_pol) ** 2))
    xp_db = db10(xp_peak / peak) if xp_peak > 0 else -math.inf
    return PatternMetrics(
        peak_gain_dbi=float(gain),
        peak_direction=Direction(float(pattern.az_deg[i_az]), float(pattern.el_deg[i_el])),
        sll_db=sll,
        hpbw_az_deg=float(hpbw_az),
        hpbw_el_deg=float(hpbw_el),
        cross_pol_db=float(xp_db),
    )


def directivity_upper_bound(area_m2: float, frequency_ghz: float) -> float:
    """Aperture directivity limit 10*log10(4*pi*A/lambda^2), dBi."""
    if area_m2 <= 0:
        raise ValueError("aperture area must be positive")
    lam = 299792458.0 / (frequency_ghz * 1e9)
    return float(db10(4.0 * math.pi * area_m2 / lam**2))


def field_toward(assembly: AntennaAssembly, mask, direction: Direction) -> complex:
    """Complex co-polar field of one reflection state toward one direction."""
    illum = illumination(assembly)
    gamma = resolve_reflections(assembly, mask)
    u = direction.unit_vector()
    positions = assembly.array.positions_mm()
    phase = assembly.k_per_mm * (positions @ u)
    qe_factor = max(u[2], 0.0) ** ELEMENT_EXPONENT
    return complex(np.sum(illum * gamma * np.exp(1j * phase)) * qe_factor)


@dataclass(frozen=True)
class SteeredGain:
    gain_dbi: float
    peak: Direction
    pointing_error_deg: float


def steered_gain(assembly: AntennaAssembly, mask, target: Direction,
                 coarse_step: float = 1.0, window_deg: float = 3.0,
                 fine_step: float = 0.1) -> SteeredGain:
    """Realized gain and pointing of one mask, cheap two-pass evaluation.

    A coarse hemisphere grid locates the global peak and supplies the
    power normalization; a fine window around the coarse peak refines
    the gain and the pointing error against ``target``.
    """
    coarse = far_field(assembly, mask, *direction_grid(coarse_step))
    intensity = np.abs(coarse.co_pol) ** 2
    i_el, i_az = np.unravel_index(int(np.argmax(intensity)), intensity.shape)
    az0 = float(coarse.az_deg[i_az])
    el0 = float(coarse.el_deg[i_el])
    az = np.arange(max(az0 - window_deg, -90.0), min(az0 + window_deg, 90.0) + fine_step / 2, fine_step)
    el = np.arange(max(el0 - window_deg, -90.0), min(el0 + window_deg, 90.0) + fine_step / 2, fine_step)
    fine = far_field(assembly, mask, az, el)
    fi = np.abs(fine.co_pol) ** 2
    j_el, j_az = np.unravel_index(int(np.argmax(fi)), fi.shape)
    peak = Direction(float(fine.az_deg[j_az]), float(fine.el_deg[j_el]))
    directivity = 4.0 * math.pi * fi[j_el, j_az] / coarse.power_total
    return SteeredGain(
        gain_dbi=float(db10(directivity) + coarse.gain_offset_db),
        peak=peak,
        pointing_error_deg=peak.separation_deg(target),
    )
