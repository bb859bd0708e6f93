"""Monte Carlo generation of timestamped detection events and time-tag analysis.

Each run produces one detection-event stream per (setting pair, side); a
stream holds the o-port click times in integer nanoseconds.  Coincidences are
recovered from the streams alone by greedy window matching, so the analysis
side never sees anything the laboratory would not have.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .counting import ReducedCounts
from .errors import InvalidStreamError, ParameterError
from .model import AnalyzerAngle, ArmParams, SettingsQuad, SourceParams, joint_outcome_distribution

SETTING_LABELS = ("a1b1", "a1b2", "a2b1", "a2b2")
SIDES = ("A", "B")

_SAMPLE_CHUNK = 2_000_000  # pairs sampled per batch; bounds peak memory


@dataclass(frozen=True)
class EventStream:
    """Sorted detection timestamps for one side of one setting-pair run."""

    side: str
    setting: str
    timestamps_ns: np.ndarray
    duration_ns: int

    def __post_init__(self) -> None:
        if self.side not in SIDES:
            raise ParameterError(f"side must be one of {SIDES}, got {self.side!r}")
        if self.duration_ns < 0:
            raise ParameterError(f"duration_ns must be >= 0, got {self.duration_ns}")
        t = np.asarray(self.timestamps_ns)
        if t.ndim != 1 or (t.size and not np.issubdtype(t.dtype, np.integer)):
            raise InvalidStreamError("timestamps must be a 1-d integer array")
        t = t.astype(np.int64, copy=True)
        if t.size:
            if np.any(np.diff(t) < 0):
                raise InvalidStreamError("timestamps must be non-decreasing")
            if t[0] < 0 or t[-1] >= self.duration_ns:
                raise InvalidStreamError(
                    f"timestamps must lie in [0, {self.duration_ns}), "
                    f"got range [{t[0]}, {t[-1]}]"
                )
        t.setflags(write=False)
        object.__setattr__(self, "timestamps_ns", t)

    def __len__(self) -> int:
        return int(self.timestamps_ns.size)


@dataclass(frozen=True)
class RunConfig:
    """Everything one simulated run needs besides the per-setting angles."""

    source: SourceParams
    arm_a: ArmParams
    arm_b: ArmParams
    settings: SettingsQuad
    duration_s: float = 300.0
    seed: int = 42
    timing_jitter_ns: int = 0
    window_ns: int = 1000
    arm_delay_ns: int = 0  # constant Bob-minus-Alice offset

    def __post_init__(self) -> None:
        if self.duration_s < 0:
            raise ParameterError(f"duration_s must be >= 0, got {self.duration_s}")
        if self.timing_jitter_ns < 0:
            raise ParameterError(f"timing_jitter_ns must be >= 0, got {self.timing_jitter_ns}")
        if self.window_ns <= 0:
            raise ParameterError(f"window_ns must be > 0, got {self.window_ns}")


@dataclass(frozen=True)
class CoincidenceResult:
    """Matched event-index pairs found by the window matcher."""

    count: int
    pairs: tuple[tuple[int, int], ...]


def _uniform_times(rng: np.random.Generator, n: int, duration_ns: int) -> np.ndarray:
    return rng.integers(0, duration_ns, size=n, dtype=np.int64)


def _finalize(times: list[np.ndarray], rng_jitter, duration_ns: int) -> np.ndarray:
    t = np.concatenate(times) if times else np.empty(0, dtype=np.int64)
    if rng_jitter is not None and t.size:
        t = t + rng_jitter(t.size)
    np.clip(t, 0, duration_ns - 1, out=t)
    t.sort(kind="stable")
    return t


def simulate_setting(
    config: RunConfig,
    alpha: AnalyzerAngle | float,
    beta: AnalyzerAngle | float,
    setting: str = "a1b1",
) -> tuple[EventStream, EventStream]:
    """Simulate one setting-pair run; returns the (Alice, Bob) o-port streams.

    Pair emissions form a Poisson process at the source rate; each pair's
    {o, e, u} x {o, e, u} outcome is drawn from the joint model distribution,
    and only o outcomes produce timestamps.  Per-arm background clicks are
    added as independent Poisson processes.  Deterministic in
    (config.seed, setting).
    """
    if setting not in SETTING_LABELS:
        raise ParameterError(f"setting must be one of {SETTING_LABELS}, got {setting!r}")
    seed_seq = np.random.SeedSequence(
        entropy=config.seed, spawn_key=(SETTING_LABELS.index(setting),)
    )
    rng = np.random.default_rng(seed_seq)
    duration_ns = int(round(config.duration_s * 1e9))
    if duration_ns == 0:
        empty = np.empty(0, dtype=np.int64)
        return (
            EventStream("A", setting, empty, 0),
            EventStream("B", setting, empty.copy(), 0),
        )

    dist = joint_outcome_distribution(config.source, config.arm_a, config.arm_b, alpha, beta)
    weights = dist.p.ravel()
    n_pairs = int(rng.poisson(config.source.pair_rate_hz * config.duration_s))

    times_a: list[np.ndarray] = []
    times_b: list[np.ndarray] = []
    done = 0
    while done < n_pairs:
        m = min(_SAMPLE_CHUNK, n_pairs - done)
        t = _uniform_times(rng, m, duration_ns)
        outcome = rng.choice(9, size=m, p=weights)
        times_a.append(t[outcome // 3 == 0])
        times_b.append(t[outcome % 3 == 0])
        done += m

    jitter = None
    if config.timing_jitter_ns > 0:
        sigma = float(config.timing_jitter_ns)
        jitter = lambda n: np.rint(rng.normal(0.0, sigma, size=n)).astype(np.int64)

    t_a = _finalize(times_a, jitter, duration_ns)
    t_b_raw = _finalize(times_b, jitter, duration_ns)
    if config.arm_delay_ns:
        t_b_raw = np.clip(t_b_raw + config.arm_delay_ns, 0, duration_ns - 1)

    n_bg_a = int(rng.poisson(config.arm_a.background_rate_hz * config.duration_s))
    n_bg_b = int(rng.poisson(config.arm_b.background_rate_hz * config.duration_s))
    t_a = _finalize([t_a, _uniform_times(rng, n_bg_a, duration_ns)], None, duration_ns)
    t_b = _finalize([t_b_raw, _uniform_times(rng, n_bg_b, duration_ns)], None, duration_ns)

    return (
        EventStream("A", setting, t_a, duration_ns),
        EventStream("B", setting, t_b, duration_ns),
    )


def setting_angles(settings: SettingsQuad) -> dict[str, tuple[AnalyzerAngle, AnalyzerAngle]]:
    """Map each setting label to its (alpha, beta) analyzer pair."""
    return {
        "a1b1": (settings.alpha1, settings.beta1),
        "a1b2": (settings.alpha1, settings.beta2),
        "a2b1": (settings.alpha2, settings.beta1),
        "a2b2": (settings.alpha2, settings.beta2),
    }


def simulate_run(config: RunConfig) -> dict[str, tuple[EventStream, EventStream]]:
    """Simulate all four setting-pair runs of one measurement."""
    return {
        label: simulate_setting(config, alpha, beta, label)
        for label, (alpha, beta) in setting_angles(config.settings).items()
    }


def find_coincidences(a: EventStream, b: EventStream, window_ns: int) -> CoincidenceResult:
    """Greedy earliest-first window matching over a single forward pass.

    Two cursors walk the sorted streams: heads within the window are matched
    and both advance, otherwise the earlier head is discarded.  Every event is
    matched at most once; runs in linear time.
    """
    if window_ns < 0:
        raise ParameterError(f"window_ns must be >= 0, got {window_ns}")
    ta = a.timestamps_ns.tolist()
    tb = b.timestamps_ns.tolist()
    pairs: list[tuple[int, int]] = []
    i = j = 0
    while i < len(ta) and j < len(tb):
        dt = tb[j] - ta[i]
        if -window_ns <= dt <= window_ns:
            pairs.append((i, j))
            i += 1
            j += 1
        elif ta[i] < tb[j]:
            i += 1
        else:
            j += 1
    return CoincidenceResult(len(pairs), tuple(pairs))


def accumulate_counts(
    streams: Mapping[str, tuple[EventStream, EventStream]], window_ns: int
) -> ReducedCounts:
    """Assemble the reduced count table from the four stream pairs.

    Coincidences come from the matcher; the two singles totals are plain
    stream lengths from the runs their undetected terms refer to.
    """
    missing = [label for label in SETTING_LABELS if label not in streams]
    if missing:
        raise ParameterError(f"streams missing setting pairs: {missing}")
    durations = set()
    for label in SETTING_LABELS:
        stream_a, stream_b = streams[label]
        if stream_a.side != "A" or stream_b.side != "B":
            raise ParameterError(f"streams for {label} must be ordered (A, B)")
        durations.update((stream_a.duration_ns, stream_b.duration_ns))
    if len(durations) != 1:
        raise ParameterError(f"streams disagree on duration: {sorted(durations)}")
    duration_ns = durations.pop()

    def c_oo(label: str) -> int:
        return find_coincidences(*streams[label], window_ns).count

    return ReducedCounts(
        c_oo_11=c_oo("a1b1"),
        s_a_1=len(streams["a1b2"][0]),
        c_oo_12=c_oo("a1b2"),
        s_b_1=len(streams["a2b1"][1]),
        c_oo_21=c_oo("a2b1"),
        c_oo_22=c_oo("a2b2"),
        duration_s=duration_ns / 1e9,
    )


def split_into_blocks(stream: EventStream, k: int) -> list[EventStream]:
    """Split a stream into k consecutive equal time windows, timestamps rebased.

    Blocks cover [i*d, (i+1)*d) for d = duration // k, with the final block
    absorbing the remainder; concatenation reproduces the original stream.
    Coincidences whose partners fall on opposite sides of a boundary (possible
    only through timing accidentals) are invisible to per-block matching.
    """
    if k < 1:
        raise ParameterError(f"block count must be >= 1, got {k}")
    base = stream.duration_ns // k
    blocks = []
    t = stream.timestamps_ns
    for i in range(k):
        start = i * base
        end = (i + 1) * base if i < k - 1 else stream.duration_ns
        lo = int(np.searchsorted(t, start, side="left"))
        hi = int(np.searchsorted(t, end, side="left"))
        blocks.append(
            EventStream(stream.side, stream.setting, t[lo:hi] - start, end - start)
        )
    return blocks


def blocked_counts(
    streams: Mapping[str, tuple[EventStream, EventStream]], window_ns: int, k: int
) -> list[ReducedCounts]:
    """Per-block reduced count tables for a whole run."""
    split = {
        label: (split_into_blocks(pair[0], k), split_into_blocks(pair[1], k))
        for label, pair in streams.items()
    }
    return [
        accumulate_counts(
            {label: (split[label][0][i], split[label][1][i]) for label in streams},
            window_ns,
        )
        for i in range(k)
    ]


# --- event file format ---------------------------------------------------------

def event_filename(setting: str, side: str) -> str:
    return f"events_{setting}_{side}.csv"


def write_event_csv(stream: EventStream, path: str | Path) -> None:
    # plain join instead of csv.writer: headline runs have millions of rows
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("timestamp_ns\n")
        if len(stream):
            fh.write("\n".join(map(str, stream.timestamps_ns.tolist())))
            fh.write("\n")


def read_event_csv(path: str | Path, side: str, setting: str, duration_ns: int) -> EventStream:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["timestamp_ns"]:
            raise InvalidStreamError(f"{path}: expected header 'timestamp_ns', got {header}")
        times = np.array([int(row[0]) for row in reader if row], dtype=np.int64)
    return EventStream(side, setting, times, duration_ns)


def write_events_dir(
    streams: Mapping[str, tuple[EventStream, EventStream]], out_dir: str | Path
) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for label, (stream_a, stream_b) in streams.items():
        for stream in (stream_a, stream_b):
            path = out_dir / event_filename(label, stream.side)
            write_event_csv(stream, path)
            written.append(path)
    return written


def read_events_dir(
    events_dir: str | Path, duration_ns: int | None = None
) -> dict[str, tuple[EventStream, EventStream]]:
    """Load the eight event files of a run.

    If no duration is given it is inferred as (latest timestamp + 1), which is
    only adequate for quick inspection; block splitting wants the real value.
    """
    events_dir = Path(events_dir)
    raw: dict[str, dict[str, list[int]]] = {}
    for label in SETTING_LABELS:
        raw[label] = {}
        for side in SIDES:
            path = events_dir / event_filename(label, side)
            if not path.exists():
                raise ParameterError(f"missing event file: {path}")
            with open(path, newline="", encoding="utf-8") as fh:
                reader = csv.reader(fh)
                header = next(reader, None)
                if header != ["timestamp_ns"]:
                    raise InvalidStreamError(
                        f"{path}: expected header 'timestamp_ns', got {header}"
                    )
                raw[label][side] = [int(row[0]) for row in reader if row]
    if duration_ns is None:
        latest = max(
            (max(times) for sides in raw.values() for times in sides.values() if times),
            default=-1,
        )
        duration_ns = latest + 1
    return {
        label: (
            EventStream("A", label, np.array(raw[label]["A"], dtype=np.int64), duration_ns),
            EventStream("B", label, np.array(raw[label]["B"], dtype=np.int64), duration_ns),
        )
        for label in SETTING_LABELS
    }
