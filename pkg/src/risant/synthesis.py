"""Codeword synthesis for one-bit, group-constrained beam control.

The phase each element must add for a coherent beam toward a target
direction compensates the spherical feed path and applies the steering
gradient:

    phi_n = k * (|r_feed - r_n| - r_n . u_target)   (mod 360)

Elements sharing a bias line are fused by the circular mean of their
required phases, then quantized to the two available states (0 or 180
degrees added phase).  Wide sector beams tile the aperture into
contiguous sub-apertures steered to interleaved directions, and a
hierarchical codebook of such beams supports noisy beam training with
an optional search-space widening retry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .constants import db10
from .geometry import AntennaAssembly, Direction, incidence_angles
from .pattern import (
    PhaseMask,
    direction_grid,
    far_field,
    field_toward,
    illumination,
    resolve_reflections,
    state_reflections,
    steered_gain,
)

# Synthesis is allowed anywhere inside this azimuth/elevation sector.
DEFAULT_SCAN_SECTOR = ((-60.0, 60.0), (-30.0, 30.0))

DEFAULT_ACCEPT_THRESHOLD_DB = -6.0


def required_phases(assembly: AntennaAssembly, target: Direction,
                    compensate_incidence: bool = False) -> np.ndarray:
    """Required added phase per element, degrees in [0, 360).

    With ``compensate_incidence`` the quadratic incidence-angle phase
    shift of the assembly's incidence model is subtracted so the
    realized reflection lands on the ideal phase.
    """
    positions = assembly.array.positions_mm()
    r_feed = np.linalg.norm(positions - assembly.feed.position(), axis=1)
    u = target.unit_vector()
    phase = np.degrees(assembly.k_per_mm * (r_feed - positions @ u))
    if compensate_incidence and assembly.incidence_model is not None:
        theta = incidence_angles(assembly.feed, positions)
        phase = phase - assembly.incidence_model.beta_deg_per_deg2 * theta**2
    # double mod: a tiny negative input rounds to exactly 360.0 otherwise
    return np.mod(np.mod(phase, 360.0), 360.0)


def required_phase(assembly: AntennaAssembly, element_index: int, target: Direction) -> float:
    return float(required_phases(assembly, target)[element_index])


def quantize_one_bit(phase_deg) -> np.ndarray:
    """Nearest of the two states 0/180 deg; ties (90, 270) go to state 1."""
    phase = np.mod(np.asarray(phase_deg, dtype=float), 360.0)
    return ((phase >= 90.0) & (phase <= 270.0)).astype(np.uint8)


def group_circular_mean(assembly: AntennaAssembly, phases_deg: np.ndarray) -> np.ndarray:
    """Circular mean of the member phases per bias group, degrees [0, 360)."""
    grouping = assembly.array.grouping
    vectors = np.exp(1j * np.radians(phases_deg))
    sums = np.zeros(assembly.array.n_groups, dtype=complex)
    np.add.at(sums, grouping, vectors)
    # double mod: a tiny negative mean rounds to exactly 360.0 otherwise
    return np.mod(np.mod(np.degrees(np.angle(sums)), 360.0), 360.0)


def _check_sector(target: Direction, scan_sector) -> None:
    (az_lo, az_hi), (el_lo, el_hi) = scan_sector
    if not (az_lo <= target.az_deg <= az_hi and el_lo <= target.el_deg <= el_hi):
        raise ValueError(
            f"target (az={target.az_deg}, el={target.el_deg}) outside the scan sector "
            f"az [{az_lo}, {az_hi}], el [{el_lo}, {el_hi}]"
        )


@dataclass(frozen=True, eq=False)
class Codeword:
    """One-bit states per bias group plus the intent that produced them."""

    states: np.ndarray
    target: Direction | None = None
    sector: tuple[float, float] | None = None   # azimuth sector covered, deg

    def __post_init__(self):
        states = np.asarray(self.states)
        if states.ndim != 1 or not np.all((states == 0) | (states == 1)):
            raise ValueError("codeword states must be a flat 0/1 array")

    @property
    def mask(self) -> PhaseMask:
        return PhaseMask(states=np.asarray(self.states, dtype=np.uint8))

    def bitstring(self) -> str:
        return "".join("1" if s else "0" for s in np.asarray(self.states))


def synthesize_codeword(assembly: AntennaAssembly, target: Direction,
                        compensate_incidence: bool = False,
                        scan_sector=DEFAULT_SCAN_SECTOR) -> Codeword:
    """Grouped one-bit codeword steering the beam toward ``target``."""
    _check_sector(target, scan_sector)
    phases = required_phases(assembly, target, compensate_incidence)
    fused = group_circular_mean(assembly, phases)
    return Codeword(states=quantize_one_bit(fused), target=target)


def continuous_reflections(assembly: AntennaAssembly, phases_deg: np.ndarray,
                           amplitude: float | str = 1.0) -> np.ndarray:
    """Idealized per-element reflections with continuous phase control.

    ``amplitude`` may be a number or ``"state-average"`` to use the mean
    of the two one-bit state magnitudes, which isolates phase
    quantization when comparing against the one-bit pipeline.
    """
    if amplitude == "state-average":
        g_off, g_on = state_reflections(assembly)
        amplitude = 0.5 * (abs(g_off) + abs(g_on))
    return float(amplitude) * np.exp(1j * np.radians(np.asarray(phases_deg, dtype=float)))


@dataclass(frozen=True)
class ScanPoint:
    target: Direction
    pointing_error_deg: float
    gain_dbi: float
    loss_vs_broadside_db: float


def scan_evaluation(assembly: AntennaAssembly, targets,
                    compensate_incidence: bool = False,
                    scan_sector=DEFAULT_SCAN_SECTOR) -> list[ScanPoint]:
    """Synthesize and evaluate one-bit beams for a list of directions."""
    broadside = synthesize_codeword(assembly, Direction(0.0, 0.0), compensate_incidence,
                                    scan_sector)
    g0 = steered_gain(assembly, broadside.mask, Direction(0.0, 0.0)).gain_dbi
    points = []
    for target in targets:
        cw = synthesize_codeword(assembly, target, compensate_incidence, scan_sector)
        sg = steered_gain(assembly, cw.mask, target)
        points.append(ScanPoint(
            target=target,
            pointing_error_deg=sg.pointing_error_deg,
            gain_dbi=sg.gain_dbi,
            loss_vs_broadside_db=g0 - sg.gain_dbi,
        ))
    return points


@dataclass(frozen=True, eq=False)
class WideBeamResult:
    codeword: Codeword | None       # one-bit variant
    phases_deg: np.ndarray | None   # continuous variant
    n_subapertures: int
    ripple_db: float
    note: str = ""


def _subaperture_direction_map(assembly: AntennaAssembly, sector_az, el_deg, n_sub):
    """Per-element steering direction for column-strip sub-apertures."""
    lo, hi = sector_az
    n_x = assembly.array.n_x
    edges = np.linspace(0, n_x, n_sub + 1).astype(int)
    centers = lo + (np.arange(n_sub) + 0.5) * (hi - lo) / n_sub
    ix = np.arange(assembly.array.n_elements) % n_x
    strip = np.searchsorted(edges, ix, side="right") - 1
    return centers, np.clip(strip, 0, n_sub - 1)


def estimate_hpbw_deg(assembly: AntennaAssembly) -> float:
    """Rough broadside beamwidth of the full aperture, degrees."""
    width_mm = assembly.array.n_x * assembly.array.period_mm
    return math.degrees(0.886 * assembly.wavelength_mm / width_mm)


def synthesize_wide_beam(assembly: AntennaAssembly, sector_az: tuple[float, float],
                         el_deg: float = 0.0, n_subapertures: int | None = None,
                         quantize: bool = True,
                         evaluate_ripple: bool = True,
                         scan_sector=DEFAULT_SCAN_SECTOR) -> WideBeamResult:
    """Sector beam from contiguous column strips steered across the sector.

    Each strip of columns reuses the narrow-beam synthesis restricted to
    its elements, aimed at the centre of its share of the sector.  The
    ripple metric is the max-minus-min gain over the sector interior
    (innermost 80 %).  A sector narrower than one beamwidth falls back
    to the narrow codeword at the sector centre.
    """
    lo, hi = sector_az
    if not (lo < hi):
        raise ValueError(f"sector bounds must satisfy lo < hi, got [{lo}, {hi}]")
    _check_sector(Direction(lo, el_deg), scan_sector)
    _check_sector(Direction(hi, el_deg), scan_sector)
    width = hi - lo
    hpbw = estimate_hpbw_deg(assembly)
    note = ""
    if n_subapertures is None:
        # Scalloping-optimal strip count: sub-beams (width ~ M*hpbw) cross
        # over near their -3 dB points when M ~ sqrt(width / hpbw).  More
        # strips overlap heavily and interfere coherently, carving deep
        # in-sector nulls that break the monotone-ordering property the
        # hierarchical search relies on.
        n_subapertures = max(1, min(assembly.array.n_x,
                                    round(math.sqrt(width / hpbw))))
    if width <= hpbw:
        n_subapertures = 1
        note = "sector within one beamwidth; narrow codeword at sector centre"

    centers, strip = _subaperture_direction_map(assembly, sector_az, el_deg, n_subapertures)
    phases = np.empty(assembly.array.n_elements)
    for s, az_c in enumerate(centers):
        member = strip == s
        phases[member] = required_phases(assembly, Direction(float(az_c), el_deg))[member]

    codeword = None
    phases_out = None
    if quantize:
        fused = group_circular_mean(assembly, phases)
        codeword = Codeword(states=quantize_one_bit(fused), sector=(lo, hi))
        mask = codeword.mask
    else:
        if n_subapertures > 1:
            phases = _align_strip_phases(assembly, phases, strip, sector_az, el_deg)
        phases_out = phases
        mask = continuous_reflections(assembly, phases)

    ripple = math.nan
    if evaluate_ripple:
        inset = 0.1 * width
        az = np.arange(lo + inset, hi - inset + 1e-9, min(0.25, width / 40))
        sector_pattern = far_field(assembly, mask, az, np.array([el_deg]))
        norm = far_field(assembly, mask, *direction_grid(1.0))
        gains = (db10(np.abs(sector_pattern.co_pol[0]) ** 2 * 4 * math.pi / norm.power_total)
                 + norm.gain_offset_db)
        ripple = float(np.max(gains) - np.min(gains))
    return WideBeamResult(codeword=codeword, phases_deg=phases_out,
                          n_subapertures=n_subapertures, ripple_db=ripple, note=note)


def _align_strip_phases(assembly: AntennaAssembly, phases: np.ndarray,
                        strip: np.ndarray, sector_az: tuple[float, float],
                        el_deg: float) -> np.ndarray:
    """Per-strip constants making adjacent sub-beams add in phase at their
    crossover directions.

    The strips are synthesized independently, so their relative phase in
    any particular direction is an accident of geometry; a destructive
    accident at a handover direction carves a null inside the sector.
    Only the continuous-phase path uses this: one-bit states keep the
    plain concatenated construction (the quantizer would erase most of
    the correction anyway).
    """
    lo, hi = sector_az
    n = int(strip.max()) + 1
    width = hi - lo
    illum = illumination(assembly)
    refl = continuous_reflections(assembly, phases)
    shift = np.zeros(n)
    for s in range(n - 1):
        cross = Direction(lo + (s + 1) * width / n, el_deg)
        row = _steering_row(assembly, illum, cross)
        f_here = row[strip == s] @ refl[strip == s]
        f_next = row[strip == s + 1] @ refl[strip == s + 1]
        shift[s + 1] = shift[s] + math.degrees(np.angle(f_here) - np.angle(f_next))
    out = np.array(phases, dtype=float)
    for s in range(1, n):
        out[strip == s] = np.mod(out[strip == s] + shift[s], 360.0)
    return out


@dataclass(frozen=True, eq=False)
class CodebookEntry:
    reflections: np.ndarray          # resolved per-element coefficients
    sector_az: tuple[float, float]
    center: Direction
    codeword: Codeword | None = None  # None in continuous-phase codebooks


@dataclass(frozen=True, eq=False)
class Codebook:
    """Hierarchical beam codebook over an azimuth sector.

    Level l holds branching**(l+1) entries whose sectors partition the
    parent sector; the last level's entries are narrow beams at the leaf
    sector centres.
    """

    levels: list
    sector_az: tuple[float, float]
    branching: int
    @property
    def n_levels(self) -> int:
        return len(self.levels)

    @property
    def leaves(self) -> list:
        return self.levels[-1]

    def children(self, level: int, parent_index: int) -> range:
        return range(parent_index * self.branching, (parent_index + 1) * self.branching)


def build_codebook(assembly: AntennaAssembly, sector_az=(-60.0, 60.0),
                   n_levels: int = 3, branching: int = 4,
                   quantize: bool = True, el_deg: float = 0.0) -> Codebook:
    """Wide-to-narrow beam hierarchy; leaves are narrow beams."""
    if n_levels < 1 or branching < 2:
        raise ValueError("codebook needs at least one level and branching >= 2")
    lo, hi = sector_az
    levels = []
    for level in range(n_levels):
        n = branching ** (level + 1)
        width = (hi - lo) / n
        entries = []
        for i in range(n):
            s_lo = lo + i * width
            s_hi = s_lo + width
            center = Direction(0.5 * (s_lo + s_hi), el_deg)
            cw = None
            if level == n_levels - 1:
                if quantize:
                    cw = synthesize_codeword(assembly, center)
                else:
                    refl = continuous_reflections(assembly, required_phases(assembly, center))
            else:
                wb = synthesize_wide_beam(assembly, (s_lo, s_hi), el_deg=el_deg,
                                          quantize=quantize, evaluate_ripple=False)
                if quantize:
                    cw = wb.codeword
                else:
                    refl = continuous_reflections(assembly, wb.phases_deg)
            if cw is not None:
                refl = resolve_reflections(assembly, cw.mask)
            entries.append(CodebookEntry(reflections=refl, sector_az=(s_lo, s_hi),
                                         center=center, codeword=cw))
        levels.append(entries)
    return Codebook(levels=levels, sector_az=(lo, hi), branching=branching)


@dataclass(frozen=True)
class TrainingResult:
    selected_leaf: int
    selected_sector: tuple[float, float]
    pilots_used: int
    widenings: int
    success: bool


def _steering_row(assembly: AntennaAssembly, illum: np.ndarray,
                  direction: Direction) -> np.ndarray:
    """Per-element weights so that field toward ``direction`` = row @ gamma."""
    u = direction.unit_vector()
    phase = assembly.k_per_mm * (assembly.array.positions_mm() @ u)
    return illum * np.exp(1j * phase) * max(u[2], 0.0)


def _measure(row: np.ndarray, entry: CodebookEntry, rel_noise: float, rng) -> float:
    """One pilot: received power of a codeword with per-pilot AWGN.

    ``rel_noise`` is the noise amplitude relative to the pilot's own field
    magnitude, so every measurement sees the configured signal-to-noise
    ratio regardless of how wide (and hence weak) the beam is.
    """
    g = row @ entry.reflections
    if rel_noise > 0:
        n = (rng.standard_normal() + 1j * rng.standard_normal()) / math.sqrt(2)
        g = g + abs(g) * rel_noise * n
    return abs(g) ** 2


def beam_training(assembly: AntennaAssembly, codebook: Codebook, truth: Direction,
                  pilot_snr_db: float | None = None, widening: bool = True,
                  accept_threshold_db: float = DEFAULT_ACCEPT_THRESHOLD_DB,
                  rng=None) -> TrainingResult:
    """Hierarchical descent with one optional widening retry per level.

    Every pilot measurement is the received power of one codeword toward
    the (unknown) true direction, corrupted by complex Gaussian noise
    holding each pilot at ``pilot_snr_db`` (``None`` means noiseless).
    Descent keeps the best child; when the best child falls more than
    ``accept_threshold_db`` below its parent's measurement the search
    widens once to all same-level descendants of the grandparent.
    Success means the chosen leaf's sector contains the true azimuth.
    """
    rng = np.random.default_rng(rng)
    noise_scale = 0.0
    if pilot_snr_db is not None:
        noise_scale = 10.0 ** (-pilot_snr_db / 20.0)
    row = _steering_row(assembly, illumination(assembly), truth)

    pilots = 0
    widenings = 0
    threshold = 10.0 ** (accept_threshold_db / 10.0)

    # Level 0: all children of the root.
    candidates = list(range(len(codebook.levels[0])))
    meas = [_measure(row, codebook.levels[0][i], noise_scale, rng)
            for i in candidates]
    pilots += len(candidates)
    best = candidates[int(np.argmax(meas))]
    parent_power = max(meas)

    for level in range(1, codebook.n_levels):
        children = list(codebook.children(level, best))
        meas = [_measure(row, codebook.levels[level][i], noise_scale, rng)
                for i in children]
        pilots += len(children)
        top = int(np.argmax(meas))
        if widening and meas[top] < parent_power * threshold and level >= 1:
            # Suspicious drop: re-expand to every level entry under the
            # grandparent (one retry per level).
            grandparent = best // codebook.branching if level >= 2 else None
            if grandparent is None:
                wide = list(range(len(codebook.levels[level])))
            else:
                lo = grandparent * codebook.branching ** 2
                wide = list(range(lo, lo + codebook.branching ** 2))
            meas = [_measure(row, codebook.levels[level][i], noise_scale, rng)
                    for i in wide]
            pilots += len(wide)
            children = wide
            top = int(np.argmax(meas))
            widenings += 1
        best = children[top]
        parent_power = meas[top]

    leaf = codebook.leaves[best]
    lo, hi = leaf.sector_az
    return TrainingResult(
        selected_leaf=best,
        selected_sector=(lo, hi),
        pilots_used=pilots,
        widenings=widenings,
        success=bool(lo <= truth.az_deg <= hi),
    )


def exhaustive_search(assembly: AntennaAssembly, codebook: Codebook,
                      truth: Direction) -> int:
    """Index of the leaf with the highest noiseless power toward ``truth``."""
    row = _steering_row(assembly, illumination(assembly), truth)
    powers = [abs(row @ e.reflections) ** 2 for e in codebook.leaves]
    return int(np.argmax(powers))
