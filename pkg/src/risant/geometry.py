"""Array lattice, feed description and the assembled antenna.

Coordinates are millimetres.  The reflective aperture lies in the z = 0
plane with its normal along +z; the feed sits at positive z and looks at
the aperture centre.  Directions are given as azimuth / elevation pairs
where (0, 0) is boresight (+z), azimuth rotates towards +x and elevation
towards +y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import wavelength_mm, wavenumber_per_mm
from .element import DESIGN_CIRCUIT, ElementCircuit


def element_positions(n_x: int, n_y: int, period_mm: float) -> np.ndarray:
    """Centred lattice positions, shape (n_x*n_y, 3), row-major in y.

    Element (ix, iy) sits at ((ix - (n_x-1)/2) * period,
    (iy - (n_y-1)/2) * period, 0) and occupies row iy, i.e. linear index
    iy * n_x + ix.
    """
    if n_x < 1 or n_y < 1:
        raise ValueError("array dimensions must be at least 1x1")
    if period_mm <= 0:
        raise ValueError("element period must be positive")
    ix = np.arange(n_x) - 0.5 * (n_x - 1)
    iy = np.arange(n_y) - 0.5 * (n_y - 1)
    gx, gy = np.meshgrid(ix * period_mm, iy * period_mm)  # row-major: y outer
    return np.column_stack([gx.ravel(), gy.ravel(), np.zeros(n_x * n_y)])


def group_map(n_x: int, n_y: int, group_size: int, axis: str = "y") -> np.ndarray:
    """Group index per element for contiguous runs along one axis.

    Elements that share a bias line are adjacent along ``axis``; group
    indices are dense, 0 .. n_groups-1, in the same row-major order as
    :func:`element_positions`.
    """
    if group_size < 1:
        raise ValueError("group size must be at least 1")
    if axis not in ("x", "y"):
        raise ValueError(f"grouping axis must be 'x' or 'y', got {axis!r}")
    count = n_x if axis == "x" else n_y
    if count % group_size != 0:
        raise ValueError(
            f"cannot group along axis '{axis}': {count} elements are not divisible "
            f"by group size {group_size}"
        )
    iy, ix = np.divmod(np.arange(n_x * n_y), n_x)
    if axis == "y":
        return ((iy // group_size) * n_x + ix).astype(np.int64)
    return (iy * (n_x // group_size) + ix // group_size).astype(np.int64)


@dataclass(frozen=True, eq=False)
class RisArray:
    """Planar lattice of one-bit elements with shared-bias grouping."""

    n_x: int = 32
    n_y: int = 32
    period_mm: float = 5.0
    polarization: str = "H"
    group_size: int = 2
    group_axis: str = "y"
    grouping: np.ndarray = field(default=None, repr=False)  # element -> group

    def __post_init__(self):
        if self.polarization not in ("H", "V"):
            raise ValueError(f"polarization must be 'H' or 'V', got {self.polarization!r}")
        if self.grouping is None:
            object.__setattr__(
                self, "grouping", group_map(self.n_x, self.n_y, self.group_size, self.group_axis)
            )
        grouping = np.asarray(self.grouping)
        if grouping.shape != (self.n_x * self.n_y,):
            raise ValueError("grouping must assign one group per element")

    @property
    def n_elements(self) -> int:
        return self.n_x * self.n_y

    @property
    def n_groups(self) -> int:
        return int(self.grouping.max()) + 1

    @property
    def aperture_m2(self) -> float:
        return (self.n_x * self.period_mm * 1e-3) * (self.n_y * self.period_mm * 1e-3)

    def positions_mm(self) -> np.ndarray:
        return element_positions(self.n_x, self.n_y, self.period_mm)


@dataclass(frozen=True)
class FeedModel:
    """Point feed with a cos^q power pattern aimed at the array centre.

    ``pattern_exponent`` is the exponent of the *power* pattern; the
    field amplitude follows cos^(q/2).  The default matches a nominal
    10 dB-gain horn class (directivity of a cos^q pattern is 2(q+1),
    11.8 dBi for q = 6.5).
    """

    position_mm: tuple[float, float, float] = (-82.0, 0.0, 150.0)
    pattern_exponent: float = 6.5
    gain_dbi: float | None = None
    polarization: str = "H"

    def __post_init__(self):
        if self.position_mm[2] <= 0:
            raise ValueError("feed must sit above the aperture (z > 0)")
        if self.pattern_exponent < 0:
            raise ValueError("pattern exponent must be non-negative")
        if self.polarization not in ("H", "V"):
            raise ValueError(f"polarization must be 'H' or 'V', got {self.polarization!r}")
        if self.gain_dbi is None:
            object.__setattr__(
                self, "gain_dbi", 10.0 * math.log10(2.0 * (self.pattern_exponent + 1.0))
            )

    def position(self) -> np.ndarray:
        return np.asarray(self.position_mm, dtype=float)

    def boresight(self) -> np.ndarray:
        """Unit vector from the feed towards the aperture centre."""
        v = -self.position()
        return v / np.linalg.norm(v)


def incidence_angle(feed: FeedModel, element_pos_mm) -> float:
    """Angle between the feed-to-element ray and the aperture normal, deg.

    Equals the local angle of incidence on the element; 0 for an element
    directly below the feed, approaching 90 for grazing rays.
    """
    p = np.asarray(element_pos_mm, dtype=float)
    v = p - feed.position()
    r = np.linalg.norm(v)
    if r == 0:
        raise ValueError("element coincides with the feed")
    cos_theta = -v[2] / r  # ray travels towards -z
    cos_theta = min(1.0, max(-1.0, cos_theta))
    angle = math.degrees(math.acos(cos_theta))
    if not (0.0 <= angle < 90.0):
        raise ValueError(f"incidence angle {angle:.2f} deg outside [0, 90)")
    return angle


def incidence_angles(feed: FeedModel, positions_mm: np.ndarray) -> np.ndarray:
    """Vectorized :func:`incidence_angle` over an (N, 3) position array."""
    v = positions_mm - feed.position()
    r = np.linalg.norm(v, axis=1)
    cos_theta = np.clip(-v[:, 2] / r, -1.0, 1.0)
    return np.degrees(np.arccos(cos_theta))


@dataclass(frozen=True)
class Direction:
    """Azimuth / elevation direction; (0, 0) is the +z boresight."""

    az_deg: float
    el_deg: float = 0.0

    def __post_init__(self):
        if not (-90.0 <= self.az_deg <= 90.0 and -90.0 <= self.el_deg <= 90.0):
            raise ValueError(
                f"direction (az={self.az_deg}, el={self.el_deg}) outside +/-90 deg"
            )

    def unit_vector(self) -> np.ndarray:
        a = math.radians(self.az_deg)
        e = math.radians(self.el_deg)
        return np.array([math.sin(a) * math.cos(e), math.sin(e), math.cos(a) * math.cos(e)])

    def separation_deg(self, other: "Direction") -> float:
        c = float(np.dot(self.unit_vector(), other.unit_vector()))
        return math.degrees(math.acos(min(1.0, max(-1.0, c))))


@dataclass(frozen=True)
class IncidenceModel:
    """Phenomenological dependence of the element response on incidence.

    The reflection phase shifts quadratically with the local incidence
    angle and the amplitude rolls off as cos^a.
    """

    beta_deg_per_deg2: float = 0.004
    amplitude_exponent: float = 0.5


@dataclass(frozen=True, eq=False)
class AntennaAssembly:
    """Array, feed and operating frequency bundled together."""

    array: RisArray = field(default_factory=RisArray)
    feed: FeedModel = field(default_factory=FeedModel)
    frequency_ghz: float = 26.0
    cross_pol_db: float = -15.19
    element_circuit: ElementCircuit = DESIGN_CIRCUIT
    incidence_model: IncidenceModel | None = None

    def __post_init__(self):
        if self.frequency_ghz <= 0:
            raise ValueError("frequency must be positive")
        if self.cross_pol_db >= 0:
            raise ValueError("cross-pol level must be negative dB")
        if self.array.polarization != self.feed.polarization:
            raise ValueError(
                f"array ({self.array.polarization}) and feed ({self.feed.polarization}) "
                "polarizations must match"
            )

    @property
    def wavelength_mm(self) -> float:
        return wavelength_mm(self.frequency_ghz)

    @property
    def k_per_mm(self) -> float:
        return wavenumber_per_mm(self.frequency_ghz)
