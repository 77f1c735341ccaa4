"""Link-level simulation: budget, EVM, OFDM/PA spectral leakage, dual-stream SINR, throughput.

Everything here is narrowband line-of-sight plumbing around the antenna
model: a scalar budget chain, symbol-level error statistics, one CP-OFDM
waveform generator with edge windowing feeding a memoryless amplifier
model for adjacent-channel measurements, and the TDD rate arithmetic.
No fading, no synchronization, no HARQ.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal as sp_signal

from .constants import C_MPS, THERMAL_NOISE_DBM_PER_HZ, db10, from_db10
from .geometry import Direction

EVM_LIMIT = 0.08                  # transmit quality bound for 64QAM downlink
ACLR_LIMIT_DBC = -28.0            # adjacent-channel leakage compliance bound

MODULATION_ORDERS = {"QPSK": 4, "16QAM": 16, "64QAM": 64, "256QAM": 256}

# NR FR2 max transmission bandwidth at 120 kHz subcarrier spacing,
# channel MHz -> resource blocks.
PRB_TABLE_120KHZ = {50: 32, 100: 66, 200: 132, 400: 264}

_MU_BY_SCS_KHZ = {15: 0, 30: 1, 60: 2, 120: 3, 240: 4}


# ---------------------------------------------------------------------------
# scenario containers


@dataclass(frozen=True)
class LinkScenario:
    """Single point-to-point link between the array and a receiver."""

    d_m: float = 4.0
    aod: Direction = field(default_factory=lambda: Direction(0.0, 0.0))
    center_freq_ghz: float = 26.0
    bandwidth_mhz: float = 400.0
    tx_power_dbm: float = 1.0
    tx_antenna_gain_dbi: float = 22.2
    rx_antenna_gain_dbi: float = 22.0
    lna_gain_db: float = 30.0
    rx_noise_figure_db: float = 5.0
    tx_evm_floor: float = 0.03
    modulation: str = "64QAM"

    def __post_init__(self):
        if self.d_m <= 0:
            raise ValueError("distance must be positive")
        if self.bandwidth_mhz <= 0:
            raise ValueError("bandwidth must be positive")
        if not 0.0 <= self.tx_evm_floor < 0.5:
            raise ValueError("tx EVM floor must lie in [0, 0.5)")
        if self.modulation not in MODULATION_ORDERS:
            raise ValueError(f"unknown modulation {self.modulation!r}; "
                             f"expected one of {sorted(MODULATION_ORDERS)}")


@dataclass(frozen=True)
class FrameConfig:
    """TDD frame and carrier-aggregation bookkeeping for the rate formula."""

    slot_pattern: str = "DDDSU"
    s_slot_split: tuple[int, int, int] = (10, 2, 2)   # (DL, guard, UL) symbols
    scs_khz: int = 120
    cc_count: int = 4
    cc_bandwidth_mhz: float = 200.0
    layers: int = 2
    modulation_order: int = 6
    max_code_rate: float = 948 / 1024
    scaling: float = 1.0
    overhead: float = 0.18
    prb_per_cc: int = 132

    def __post_init__(self):
        if not self.slot_pattern or set(self.slot_pattern) - set("DSU"):
            raise ValueError("slot pattern must be a non-empty string over {D, S, U}")
        if sum(self.s_slot_split) != 14:
            raise ValueError("S-slot split must sum to 14 symbols")
        if any(v < 0 for v in self.s_slot_split):
            raise ValueError("S-slot split entries must be non-negative")
        if self.scs_khz not in _MU_BY_SCS_KHZ:
            raise ValueError(f"unsupported subcarrier spacing {self.scs_khz} kHz")
        if self.layers < 0:
            raise ValueError("layer count must be non-negative")
        if not 0.0 <= self.overhead < 1.0:
            raise ValueError("overhead must lie in [0, 1)")
        for name in ("cc_count", "prb_per_cc", "modulation_order"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def numerology(self) -> int:
        return _MU_BY_SCS_KHZ[self.scs_khz]


@dataclass(frozen=True)
class PaModel:
    """Memoryless amplifier: ideal passthrough or Rapp AM/AM compression.

    saturation_level is an absolute output amplitude; waveforms from
    ofdm_waveform are unit average power, so saturation_level = 4.0
    means 12 dB between RMS and saturation.  Large smoothness turns the
    Rapp curve into a hard limiter.
    """

    kind: str = "rapp"
    saturation_level: float = 4.0
    smoothness: float = 2.0

    def __post_init__(self):
        if self.kind not in ("ideal", "rapp"):
            raise ValueError(f"unknown PA kind {self.kind!r}")
        if self.kind == "rapp":
            if self.saturation_level <= 0:
                raise ValueError("saturation level must be positive")
            if self.smoothness <= 0:
                raise ValueError("smoothness must be positive")


@dataclass(frozen=True)
class XpdModel:
    """Per-antenna cross-polarization leakage, dB (negative = isolation)."""

    h_antenna_db: float = -15.19
    v_antenna_db: float = -10.16

    def __post_init__(self):
        if self.h_antenna_db >= 0 or self.v_antenna_db >= 0:
            raise ValueError("cross-pol leakage must be below 0 dB")


@dataclass(frozen=True)
class LinkMetrics:
    """Summary container assembled by the CLI from the pieces below."""

    snr_db: float | None = None
    sinr_h_db: float | None = None
    sinr_v_db: float | None = None
    evm_percent: float | None = None
    aclr_dbc: tuple[float, ...] | None = None
    throughput_bps: float | None = None


# ---------------------------------------------------------------------------
# budget chain


def path_loss_fspl(d_m: float, frequency_ghz: float) -> float:
    """Free-space path loss 20 log10(4 pi d / lambda), dB."""
    if d_m <= 0 or frequency_ghz <= 0:
        raise ValueError("distance and frequency must be positive")
    lam = C_MPS / (frequency_ghz * 1e9)
    return 20.0 * math.log10(4.0 * math.pi * d_m / lam)


def noise_power_dbm(bandwidth_mhz: float, noise_figure_db: float) -> float:
    return THERMAL_NOISE_DBM_PER_HZ + db10(bandwidth_mhz * 1e6) + noise_figure_db


def link_budget(scenario: LinkScenario) -> float:
    """Receiver SNR in dB for the scalar line-of-sight chain.

    The LNA raises signal and noise by the same factor once the chain
    noise figure is referenced to the receiver input, so its gain
    cancels in the ratio; the single-stage model keeps only
    rx_noise_figure_db (assumed dominated by that first stage).
    """
    fspl = path_loss_fspl(scenario.d_m, scenario.center_freq_ghz)
    noise = noise_power_dbm(scenario.bandwidth_mhz, scenario.rx_noise_figure_db)
    signal = (scenario.tx_power_dbm + scenario.tx_antenna_gain_dbi
              - fspl + scenario.rx_antenna_gain_dbi)
    return signal - noise


# ---------------------------------------------------------------------------
# EVM


def evm_closed_form(snr_db: float, tx_evm_floor: float = 0.0) -> float:
    """RMS error fraction sqrt(floor^2 + 1/snr) for AWGN plus a Tx floor."""
    if math.isnan(snr_db):
        raise ValueError("snr must not be NaN")
    inv_snr = 0.0 if math.isinf(snr_db) and snr_db > 0 else from_db10(-snr_db)
    return math.sqrt(tx_evm_floor * tx_evm_floor + inv_snr)


def constellation(modulation: str) -> np.ndarray:
    """Gray-square QAM points scaled to unit average power."""
    try:
        order = MODULATION_ORDERS[modulation]
    except KeyError:
        raise ValueError(f"unknown modulation {modulation!r}") from None
    m = int(round(math.sqrt(order)))
    levels = np.arange(-(m - 1), m, 2, dtype=float)
    re, im = np.meshgrid(levels, levels)
    points = (re + 1j * im).ravel()
    # E{|s|^2} = 2 (M - 1) / 3 for a square grid with +-1, +-3, ... levels
    return points / math.sqrt(2.0 * (order - 1) / 3.0)


def simulate_evm_at(snr_db: float, tx_evm_floor: float, modulation: str,
                    n_symbols: int = 100_000, rng_seed: int = 0) -> float:
    """Monte Carlo EVM at an explicit SNR.

    The symbol draw and the error draw use independent child streams of
    the seed, so two runs with the same seed see identical noise even
    when the modulation (and hence the symbol stream consumption)
    differs.  The reference power is the ensemble unit power of the
    constellation, not the per-run sample power.
    """
    if n_symbols < 1:
        raise ValueError("need at least one symbol")
    sym_rng, err_rng = [np.random.default_rng(s)
                        for s in np.random.SeedSequence(rng_seed).spawn(2)]
    points = constellation(modulation)
    ref = points[sym_rng.integers(0, points.size, n_symbols)]
    scale = math.sqrt(0.5) * math.sqrt(from_db10(-snr_db)) if not math.isinf(snr_db) else 0.0
    floor_scale = math.sqrt(0.5) * tx_evm_floor
    err = (err_rng.standard_normal(n_symbols) + 1j * err_rng.standard_normal(n_symbols)) * scale
    err = err + (err_rng.standard_normal(n_symbols)
                 + 1j * err_rng.standard_normal(n_symbols)) * floor_scale
    received = ref + err
    return float(np.sqrt(np.mean(np.abs(received - ref) ** 2)))


def simulate_evm(scenario: LinkScenario, n_symbols: int = 100_000,
                 rng_seed: int = 0) -> float:
    return simulate_evm_at(link_budget(scenario), scenario.tx_evm_floor,
                           scenario.modulation, n_symbols, rng_seed)


def evm_vs_distance(scenario: LinkScenario, d_list) -> list[tuple[float, float, bool]]:
    """Closed-form EVM table over distance: rows (d_m, evm_percent, pass_8pct)."""
    d_arr = [float(d) for d in d_list]
    if any(b <= a for a, b in zip(d_arr, d_arr[1:])):
        raise ValueError("distance list must be strictly ascending")
    rows = []
    for d in d_arr:
        snr = link_budget(replace(scenario, d_m=d))
        evm = evm_closed_form(snr, scenario.tx_evm_floor)
        rows.append((d, 100.0 * evm, evm <= EVM_LIMIT))
    return rows


# ---------------------------------------------------------------------------
# OFDM waveform, amplifier, spectral leakage


@dataclass(frozen=True)
class WaveformConfig:
    """CP-OFDM numerology for the spectral measurements.

    Defaults model one 400 MHz channel at 120 kHz spacing (264 resource
    blocks = 3168 subcarriers) on a 16384-point grid.  window_samples
    raised-cosine samples crossfade adjacent symbols inside the cyclic
    prefix, which keeps the occupied block orthogonal while pulling the
    out-of-band skirt far below the amplifier distortion under test.
    """

    fft_size: int = 16384
    cp_samples: int = 1152
    window_samples: int = 512
    occupied_subcarriers: int = 3168
    scs_khz: float = 120.0
    modulation: str = "64QAM"

    def __post_init__(self):
        if self.fft_size < 2:
            raise ValueError("FFT size must be at least 2")
        if not 0 < self.occupied_subcarriers < self.fft_size:
            raise ValueError("occupied subcarriers must fit inside the FFT grid")
        if self.cp_samples < 0 or self.cp_samples >= self.fft_size:
            raise ValueError("cyclic prefix must be shorter than the FFT")
        if not 0 <= self.window_samples <= self.cp_samples:
            raise ValueError("window must fit inside the cyclic prefix")
        if self.scs_khz <= 0:
            raise ValueError("subcarrier spacing must be positive")

    @property
    def sample_rate_hz(self) -> float:
        return self.fft_size * self.scs_khz * 1e3

    @property
    def occupied_bandwidth_hz(self) -> float:
        return self.occupied_subcarriers * self.scs_khz * 1e3


def _subcarrier_indices(config: WaveformConfig) -> np.ndarray:
    # symmetric around the carrier with the DC bin left empty
    k = np.arange(config.occupied_subcarriers) - config.occupied_subcarriers // 2
    k[k >= 0] += 1
    return k


def ofdm_waveform(config: WaveformConfig = WaveformConfig(), n_symbols: int = 64,
                  rng_seed: int = 0) -> np.ndarray:
    """Windowed CP-OFDM block, unit average power.

    Each symbol is extended by window_samples of cyclic suffix and
    crossfaded (raised cosine) with its neighbors; the crossfade lives
    entirely inside the cyclic prefix of the following symbol, so the
    fft_size core samples of every symbol are untouched.  The two block
    edges (half-faded ramps) are trimmed.
    """
    if n_symbols < 1:
        raise ValueError("need at least one OFDM symbol")
    rng = np.random.default_rng(rng_seed)
    points = constellation(config.modulation)
    n_fft, cp, ov = config.fft_size, config.cp_samples, config.window_samples
    stride = n_fft + cp
    k = _subcarrier_indices(config)

    spectrum = np.zeros((n_symbols, n_fft), dtype=complex)
    spectrum[:, k % n_fft] = points[rng.integers(0, points.size, (n_symbols, k.size))]
    body = np.fft.ifft(spectrum, axis=1) * math.sqrt(n_fft / k.size)

    if ov:
        ramp = 0.5 * (1.0 - np.cos(np.pi * (np.arange(ov) + 0.5) / ov))
    out = np.zeros(n_symbols * stride + ov, dtype=complex)
    for i, x in enumerate(body):
        ext = np.concatenate([x[-cp:], x, x[:ov]])
        if ov:
            ext[:ov] *= ramp
            ext[-ov:] *= ramp[::-1]
        out[i * stride: i * stride + stride + ov] += ext
    out = out[ov: n_symbols * stride]
    return out / np.sqrt(np.mean(np.abs(out) ** 2))


def apply_pa(samples: np.ndarray, pa: PaModel) -> np.ndarray:
    """Memoryless AM/AM: Rapp y = x / (1 + (|x|/sat)^(2p))^(1/(2p))."""
    x = np.asarray(samples, dtype=complex)
    if pa.kind == "ideal":
        return x.copy()
    ratio = np.abs(x) / pa.saturation_level
    return x / (1.0 + ratio ** (2.0 * pa.smoothness)) ** (1.0 / (2.0 * pa.smoothness))


def _band_power(freqs: np.ndarray, psd: np.ndarray, center_hz: float,
                bandwidth_hz: float) -> float:
    mask = np.abs(freqs - center_hz) <= bandwidth_hz / 2.0
    return float(np.sum(psd[mask]))


def aclr(samples: np.ndarray, sample_rate_hz: float,
         designated: tuple[float, float],
         adjacent: list[tuple[float, float]],
         nperseg: int = 4096) -> list[float]:
    """Adjacent-channel leakage, dBc per adjacent channel.

    Channels are (center_hz, bandwidth_hz) relative to the carrier.
    Power ratios come from a Welch averaged periodogram integrated over
    each channel; results are 10 log10(P_adjacent / P_designated), so
    compliant amplifiers give values well below 0.
    """
    nyquist = sample_rate_hz / 2.0
    for name, (center, bw) in [("designated", designated)] + [
            (f"adjacent[{i}]", ch) for i, ch in enumerate(adjacent)]:
        if bw <= 0:
            raise ValueError(f"{name} channel bandwidth must be positive")
        if abs(center) + bw / 2.0 > nyquist:
            raise ValueError(
                f"{name} channel [{(center - bw / 2) / 1e6:.1f}, "
                f"{(center + bw / 2) / 1e6:.1f}] MHz extends past the Nyquist "
                f"band of +-{nyquist / 1e6:.1f} MHz")
    freqs, psd = sp_signal.welch(samples, fs=sample_rate_hz, window="hann",
                                 nperseg=min(nperseg, len(samples)),
                                 return_onesided=False, detrend=False)
    p_designated = _band_power(freqs, psd, *designated)
    if p_designated <= 0:
        raise ValueError("designated channel carries no power")
    return [db10(_band_power(freqs, psd, *ch) / p_designated) for ch in adjacent]


def measure_aclr(pa: PaModel, config: WaveformConfig = WaveformConfig(),
                 n_symbols: int = 64, rng_seed: int = 0,
                 channel_bandwidth_hz: float = 400e6) -> list[float]:
    """ACLR of the amplified default waveform at +-1 channel offsets."""
    samples = apply_pa(ofdm_waveform(config, n_symbols, rng_seed), pa)
    designated = (0.0, channel_bandwidth_hz)
    adjacent = [(-channel_bandwidth_hz, channel_bandwidth_hz),
                (channel_bandwidth_hz, channel_bandwidth_hz)]
    return aclr(samples, config.sample_rate_hz, designated, adjacent)


# ---------------------------------------------------------------------------
# dual stream


@dataclass(frozen=True)
class StreamSinr:
    h_db: float
    v_db: float


def dual_stream_sinr(stream_gains_dbi, xpd: XpdModel,
                     scenario: LinkScenario) -> StreamSinr:
    """Per-stream SINR for co-located H/V streams separated by polarization.

    Each stream's interference is the other stream's received power
    attenuated by the receiving antenna's own cross-pol leakage; both
    streams share the scenario's transmit power, distance, and noise
    chain.
    """
    if isinstance(stream_gains_dbi, dict):
        gain_h, gain_v = stream_gains_dbi["h"], stream_gains_dbi["v"]
    else:
        gain_h, gain_v = stream_gains_dbi
    fspl = path_loss_fspl(scenario.d_m, scenario.center_freq_ghz)
    noise_mw = from_db10(noise_power_dbm(scenario.bandwidth_mhz,
                                         scenario.rx_noise_figure_db))
    base = scenario.tx_power_dbm - fspl + scenario.rx_antenna_gain_dbi
    rx_h_mw, rx_v_mw = from_db10(base + gain_h), from_db10(base + gain_v)
    sinr_h = rx_h_mw / (rx_v_mw * from_db10(xpd.h_antenna_db) + noise_mw)
    sinr_v = rx_v_mw / (rx_h_mw * from_db10(xpd.v_antenna_db) + noise_mw)
    return StreamSinr(h_db=db10(sinr_h), v_db=db10(sinr_v))


# ---------------------------------------------------------------------------
# throughput and power


def dl_duty(frame: FrameConfig) -> float:
    """Downlink symbol fraction of the TDD pattern (S-slot DL symbols count)."""
    dl_symbols = 14 * frame.slot_pattern.count("D")
    dl_symbols += frame.slot_pattern.count("S") * frame.s_slot_split[0]
    return dl_symbols / (14 * len(frame.slot_pattern))


def peak_rate_3gpp(frame: FrameConfig) -> float:
    """Peak DL data rate in bit/s from the TS 38.306 style formula.

    rate = sum over CCs of
        layers * Q_m * f * R_max * (12 * N_prb / T_symbol) * (1 - OH)
    scaled by the TDD downlink duty; T_symbol is the mu-averaged OFDM
    symbol duration 1e-3 / (14 * 2^mu) seconds.
    """
    t_symbol_s = 1e-3 / (14 * 2 ** frame.numerology)
    per_cc = (frame.layers * frame.modulation_order * frame.scaling
              * frame.max_code_rate * (12 * frame.prb_per_cc / t_symbol_s)
              * (1.0 - frame.overhead))
    return frame.cc_count * per_cc * dl_duty(frame)


def power_saving(p_candidate_w: float, p_baseline_w: float) -> float:
    """Fractional power reduction of the candidate against the baseline."""
    if p_baseline_w <= 0:
        raise ValueError("baseline power must be positive")
    return (p_baseline_w - p_candidate_w) / p_baseline_w
