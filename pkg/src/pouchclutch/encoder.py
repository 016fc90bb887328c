"""Logical model of the strip-position sensor.

A conductive track on the strip is read by two contact electrodes, A and B,
a distance ``electrode_offset_d`` apart (B further along the tape). The
periodic part of the track is a 50%-duty square wave of period 4 * delta, so
the pair (A, B) walks the Gray cycle 11 -> 10 -> 00 -> 01 -> 11, one state
per ``delta`` of forward travel (forward = strip pulled out of the clutch).

Ahead of x = 0 sits an index preamble of four cells alternating 1, 0, 1, 0.
Read through the two electrodes it produces transitions in which both
channels flip at once. Such transitions cannot occur during fault-free motion
over the periodic track (whatever the direction changes), so the signature
can never be faked by jitter; crossing it forward zeroes the counter.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import ValidationError

Levels = Tuple[int, int]

FORWARD_CYCLE: Tuple[Levels, ...] = ((1, 1), (1, 0), (0, 0), (0, 1))
_CYCLE_INDEX = {s: i for i, s in enumerate(FORWARD_CYCLE)}
PREAMBLE_CELLS = (1, 0, 1, 0)
_EPS = 1e-9


@dataclass(frozen=True)
class EncoderPattern:
    resolution_delta: float = 1.0  # mm
    tape_length: float = 40.0  # mm of periodic track past the index
    electrode_offset_d: Optional[float] = None  # mm; defaults to delta
    stretch_per_kpa: float = 1e-4  # tape elongation per kPa, used only when a pressure is given

    def __post_init__(self):
        delta = self.resolution_delta
        if not delta > 0:
            raise ValidationError(f"resolution must be > 0, got {delta}")
        if self.electrode_offset_d is None:
            object.__setattr__(self, "electrode_offset_d", delta)
        if not self.tape_length >= 3 * self.period_P:
            raise ValidationError(
                f"tape_length {self.tape_length} mm is shorter than three periods ({3 * self.period_P} mm)"
            )
        d = self.electrode_offset_d
        cycles = (d - delta) / self.period_P
        if d <= 0 or abs(cycles - round(cycles)) > 1e-9:
            raise ValidationError("electrode_offset_d must equal delta plus a whole number of periods")
        if not self.stretch_per_kpa >= 0:
            raise ValidationError("stretch_per_kpa must be >= 0")
        if not any(_is_double(a, b) for a, b in zip(self.index_signature, self.index_signature[1:])):
            raise ValidationError("electrode offset leaves the index preamble without a double-bit transition")

    @property
    def period_P(self) -> float:
        return 4.0 * self.resolution_delta

    @property
    def preamble_length(self) -> float:
        return len(PREAMBLE_CELLS) * self.resolution_delta

    @property
    def x_min(self) -> float:
        """Smallest displacement at which electrode A is on the tape."""
        return -self.preamble_length

    def track(self, s: float) -> int:
        """Conductivity (1/0) of the tape at tape coordinate ``s`` (mm, 0 = index)."""
        k = math.floor(s / self.resolution_delta + _EPS)
        n_pre = len(PREAMBLE_CELLS)
        if k < -n_pre or s > self.tape_length + self.electrode_offset_d:
            return 0
        if k < 0:
            return PREAMBLE_CELLS[k + n_pre]
        return 1 if k % 4 in (0, 1) else 0

    def levels_at_tape(self, s: float) -> Levels:
        return (self.track(s), self.track(s + self.electrode_offset_d))

    @property
    def index_signature(self) -> Tuple[Levels, ...]:
        """Collapsed state string from the first preamble cell up to the zero cell."""
        delta = self.resolution_delta
        states: List[Levels] = []
        for k in range(-len(PREAMBLE_CELLS), 1):
            st = self.levels_at_tape((k + 0.5) * delta)
            if not states or states[-1] != st:
                states.append(st)
        return tuple(states)


def generate_pattern(resolution: float = 1.0, tape_length: float = 40.0, **kwargs) -> EncoderPattern:
    return EncoderPattern(resolution_delta=resolution, tape_length=tape_length, **kwargs)


def sample_channels(pattern: EncoderPattern, x: float, pressure_kpa: float = 0.0) -> Levels:
    """Electrode levels with the strip at displacement ``x`` (mm).

    A non-zero ``pressure_kpa`` stretches the tape by (1 + c_p * p), so a tape
    feature at coordinate s is met at displacement s * (1 + c_p * p).
    """
    if not pattern.x_min - _EPS <= x <= pattern.tape_length + _EPS:
        raise ValidationError(f"displacement {x} mm is off the tape [{pattern.x_min}, {pattern.tape_length}]")
    scale = 1.0 + pattern.stretch_per_kpa * pressure_kpa
    return (pattern.track(x / scale), pattern.track((x + pattern.electrode_offset_d) / scale))


def _is_double(a: Levels, b: Levels) -> bool:
    return a[0] != b[0] and a[1] != b[1]


def decode_step(prev: Levels, nxt: Levels) -> Optional[int]:
    """Signed count increment for one observed transition.

    Returns +1 along the forward cycle, -1 against it, 0 for no change and
    ``None`` (a fault) when both channels changed, i.e. a state was missed.
    """
    try:
        i, j = _CYCLE_INDEX[tuple(prev)], _CYCLE_INDEX[tuple(nxt)]
    except KeyError:
        raise ValidationError(f"invalid level pair {prev} or {nxt}") from None
    return {0: 0, 1: 1, 3: -1, 2: None}[(j - i) % 4]


def detect_index(history: Sequence[Levels], signature: Sequence[Levels]) -> bool:
    """True when the most recent states spell the index signature exactly."""
    n = len(signature)
    return len(history) >= n and tuple(history[-n:]) == tuple(signature)


@dataclass(frozen=True)
class DecoderState:
    channels: Levels
    position_count: int
    calibrated: bool
    fault: Optional[str] = None


class IncrementalDecoder:
    """Debounced two-channel decoder with index zeroing.

    Each channel's level is accepted only after it has been read for
    ``debounce`` consecutive samples. Faults raised inside a window that then
    completes the index signature belong to the preamble and are withdrawn.
    """

    def __init__(self, signature: Sequence[Levels], debounce: int = 2):
        if debounce < 1:
            raise ValidationError(f"debounce must be >= 1 sample, got {debounce}")
        self.signature = tuple(signature)
        self.debounce = debounce
        self.count = 0
        self.calibrated = False
        self.stable: Optional[List[int]] = None
        self._cand = [0, 0]
        self._run = [0, 0]
        self.history: List[Levels] = []
        self._tentative: List[Tuple[int, float]] = []  # (history length, time)
        self.faults: List[float] = []
        self.zeroings: List[float] = []

    @property
    def state(self) -> DecoderState:
        ch = tuple(self.stable) if self.stable is not None else (0, 0)
        fault = "missed-state" if (self.faults or self._tentative) else None
        return DecoderState(channels=ch, position_count=self.count, calibrated=self.calibrated, fault=fault)

    def feed(self, levels: Levels, t: float = 0.0) -> None:
        if self.stable is None:
            self.stable = list(levels)
            self.history.append(tuple(levels))
            return
        for ch in (0, 1):
            raw = levels[ch]
            if raw == self.stable[ch]:
                self._run[ch] = 0
            elif self._run[ch] and raw == self._cand[ch]:
                self._run[ch] += 1
            else:
                self._cand[ch], self._run[ch] = raw, 1
            if self._run[ch] >= self.debounce:
                self.stable[ch] = raw
                self._run[ch] = 0
        new = tuple(self.stable)
        prev = self.history[-1]
        if new == prev:
            return
        inc = decode_step(prev, new)
        self.history.append(new)
        if inc is None:
            self._tentative.append((len(self.history), t))
        else:
            self.count += inc
        # transitions into history entries >= horizon lie inside the trailing signature window
        horizon = len(self.history) - len(self.signature) + 2
        if detect_index(self.history, self.signature):
            self._tentative = [f for f in self._tentative if f[0] < horizon]
            self.count = 0
            self.calibrated = True
            self.zeroings.append(t)
        pending = []
        for f in self._tentative:
            if f[0] < horizon:
                self.faults.append(f[1])
            else:
                pending.append(f)
        self._tentative = pending

    def finish(self) -> None:
        self.faults.extend(t for _, t in self._tentative)
        self._tentative = []
        self.faults.sort()

    def estimate(self, delta: float) -> float:
        """Centre of the decoded cell, in mm."""
        return (self.count + 0.5) * delta


@dataclass(frozen=True)
class MotionProfile:
    times: np.ndarray  # s
    displacements: np.ndarray  # mm

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.displacements, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "displacements", x)
        if t.ndim != 1 or t.shape != x.shape:
            raise ValidationError("times and displacements must be 1-D arrays of equal length")
        if len(t) < 2:
            raise ValidationError("a motion profile needs at least two samples")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x))):
            raise ValidationError("motion profile contains non-finite values")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("motion profile times must be strictly increasing")

    @classmethod
    def from_waypoints(cls, waypoints: Sequence[float], speed, t0: float = 0.0) -> "MotionProfile":
        """Constant-speed legs between successive displacements.

        ``speed`` (mm/s) is one value for every leg or one value per leg.
        Repeated waypoints are merged, along with their zero-length legs.
        """
        legs = len(waypoints) - 1
        speeds = np.broadcast_to(np.asarray(speed, dtype=float), (legs,)) if np.ndim(speed) == 0 else np.asarray(speed, dtype=float)
        if speeds.shape != (legs,) or np.any(~(speeds > 0)):
            raise ValidationError("need one positive speed, or one per leg")
        t, x = [t0], [float(waypoints[0])]
        for b, v in zip(waypoints[1:], speeds):
            tb = t[-1] + abs(b - x[-1]) / v
            if tb > t[-1]:
                t.append(tb)
                x.append(float(b))
        return cls(np.array(t), np.array(x))

    @property
    def max_speed(self) -> float:
        return float(np.max(np.abs(np.diff(self.displacements)) / np.diff(self.times)))

    def resample(self, rate_hz: float) -> Tuple[np.ndarray, np.ndarray]:
        n = int(math.floor((self.times[-1] - self.times[0]) * rate_hz + _EPS)) + 1
        ts = self.times[0] + np.arange(n) / rate_hz
        return ts, np.interp(ts, self.times, self.displacements)


def read_profile_csv(path) -> MotionProfile:
    """Load a (time_s, displacement_mm) CSV; a header row is optional."""
    times, disps = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ValidationError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                t, x = float(row[0]), float(row[1])
            except ValueError:
                if lineno == 1 and not times:
                    continue  # header
                raise ValidationError(f"{path}:{lineno}: non-numeric value in {row}") from None
            if times and t <= times[-1]:
                raise ValidationError(f"{path}:{lineno}: time {t} does not increase")
            times.append(t)
            disps.append(x)
    if not times:
        raise ValidationError(f"{path}: motion profile is empty")
    return MotionProfile(np.array(times), np.array(disps))


@dataclass
class TrackResult:
    times: np.ndarray
    true_mm: np.ndarray
    est_mm: np.ndarray
    fault_flag: np.ndarray  # bool, sample index at which a fault was committed
    calibrated: np.ndarray  # bool per sample
    final_state: DecoderState
    fault_times: List[float]
    zeroing_times: List[float]
    reference_origin: float  # mm, origin of relative estimates before calibration

    @property
    def valid(self) -> bool:
        return not self.fault_times

    @property
    def first_fault_time(self) -> Optional[float]:
        return self.fault_times[0] if self.fault_times else None

    @property
    def errors(self) -> np.ndarray:
        ref = np.where(self.calibrated, self.true_mm, self.true_mm - self.reference_origin)
        return self.est_mm - ref

    @property
    def max_abs_error(self) -> float:
        return float(np.max(np.abs(self.errors)))


def track_profile(
    pattern: EncoderPattern,
    profile: MotionProfile,
    sample_rate: float = 100.0,
    debounce: int = 2,
    pressure_kpa: float = 0.0,
    glitch_rate: float = 0.0,
    seed: int = 0,
) -> TrackResult:
    """Replay a motion through the sensor and decoder.

    Before the index is seen, estimates are relative to the cell the strip
    started in; ``reference_origin`` records that cell's true origin so the
    error can still be judged. ``glitch_rate`` is the per-sample probability
    of one channel reading inverted for that sample only (contact bounce).
    """
    if not sample_rate > 0:
        raise ValidationError("sample_rate must be > 0")
    if not 0.0 <= glitch_rate < 1.0:
        raise ValidationError("glitch_rate must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    delta = pattern.resolution_delta
    ts, xs = profile.resample(sample_rate)
    dec = IncrementalDecoder(pattern.index_signature, debounce)
    est = np.empty_like(xs)
    cal = np.zeros(len(xs), dtype=bool)
    # the debounce can mask aliased states, so travel per sample is checked directly
    undersampled = [float(ts[i + 1]) for i in np.flatnonzero(np.abs(np.diff(xs)) >= delta)]
    glitch = rng.random(len(xs)) < glitch_rate
    glitch_ch = rng.integers(0, 2, len(xs))
    for i, (t, x) in enumerate(zip(ts, xs)):
        levels = sample_channels(pattern, x, pressure_kpa)
        if glitch[i]:
            levels = tuple(1 - v if ch == glitch_ch[i] else v for ch, v in enumerate(levels))
        dec.feed(levels, float(t))
        est[i] = dec.estimate(delta)
        cal[i] = dec.calibrated
    dec.finish()
    fault_times = sorted(set(dec.faults) | set(undersampled))
    flags = np.zeros(len(xs), dtype=bool)
    for ft in fault_times:
        flags[int(np.searchsorted(ts, ft))] = True
    origin = math.floor(xs[0] / delta + _EPS) * delta
    return TrackResult(
        times=ts,
        true_mm=xs,
        est_mm=est,
        fault_flag=flags,
        calibrated=cal,
        final_state=replace(dec.state, fault="missed-state") if fault_times else dec.state,
        fault_times=fault_times,
        zeroing_times=list(dec.zeroings),
        reference_origin=origin,
    )
