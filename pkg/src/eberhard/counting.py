"""Exact integer bookkeeping for the Eberhard J statistic.

J is assembled either from full per-setting outcome tables n_kl(i, j) or from
the six measured quantities (two singles totals, four o-o coincidence totals)
that remain after the undetected terms are rewritten via singles counts.
All J arithmetic runs on Python integers; nothing is ever clamped or rounded.
"""
from __future__ import annotations

import json
import numbers
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, NamedTuple

from .errors import InconsistentCountsError, ParameterError

SETTING_PAIRS = ((1, 1), (1, 2), (2, 1), (2, 2))
OUTCOMES = ("o", "e", "u")

Number = int | float


def _check_count(value: Number, name: str) -> None:
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise ParameterError(f"{name} must be a number, got {value!r}")
    if value < 0:
        raise ParameterError(f"{name} must be >= 0, got {value}")


def _as_exact_int(value: Number, name: str) -> int:
    if isinstance(value, numbers.Integral) and not isinstance(value, bool):
        return int(value)
    raise ParameterError(f"{name} must be an integer count for exact J arithmetic, got {value!r}")


@dataclass(frozen=True)
class FullCounts:
    """Outcome tables n[k][l] for each of the four setting pairs.

    `tables` maps (i, j) in {1, 2}^2 to a mapping from (alice, bob) outcome
    labels in {o, e, u} to counts.  Integer entries give exact J values;
    float entries are allowed so the same container can carry expectations.
    """

    tables: Mapping[tuple[int, int], Mapping[tuple[str, str], Number]]
    pairs_per_setting: Number | None = None

    def __post_init__(self) -> None:
        if set(self.tables) != set(SETTING_PAIRS):
            raise ParameterError(f"tables must have exactly the keys {SETTING_PAIRS}")
        owned: dict[tuple[int, int], dict[tuple[str, str], Number]] = {}
        for pair in SETTING_PAIRS:
            table = self.tables[pair]
            cells = {(k, l) for k in OUTCOMES for l in OUTCOMES}
            if set(table) != cells:
                raise ParameterError(f"table {pair} must have all 9 outcome cells")
            for cell, value in table.items():
                _check_count(value, f"n{cell}{pair}")
            owned[pair] = dict(table)
            if self.pairs_per_setting is not None:
                total = sum(table.values())
                n = self.pairs_per_setting
                if isinstance(total, int) and isinstance(n, int):
                    ok = total == n
                else:
                    ok = abs(total - n) <= 1e-9 * max(1.0, abs(n))
                if not ok:
                    raise InconsistentCountsError(
                        f"table {pair} sums to {total}, expected pairs_per_setting = {n}"
                    )
        object.__setattr__(self, "tables", owned)

    def n(self, i: int, j: int, alice: str, bob: str) -> Number:
        return self.tables[(i, j)][(alice, bob)]


@dataclass(frozen=True)
class ReducedCounts:
    """The six measured totals that the reduced J formula consumes.

    `s_a_1` is Alice's o-singles at alpha1 recorded during the (alpha1, beta2)
    run and `s_b_1` Bob's o-singles at beta1 during the (alpha2, beta1) run,
    matching the runs whose undetected terms they stand in for.  Construction
    enforces the same-run dominances (a matched coincidence is a subset of
    that run's singles); stationary data also satisfies s_a_1 >= c_oo_11 and
    s_b_1 >= c_oo_11, but cross-run counts fluctuate so that is not enforced.
    """

    c_oo_11: Number
    s_a_1: Number
    c_oo_12: Number
    s_b_1: Number
    c_oo_21: Number
    c_oo_22: Number
    duration_s: float | None = None

    def __post_init__(self) -> None:
        for name in ("c_oo_11", "s_a_1", "c_oo_12", "s_b_1", "c_oo_21", "c_oo_22"):
            _check_count(getattr(self, name), name)
        if self.s_a_1 < self.c_oo_12:
            raise InconsistentCountsError(
                f"s_a_1 = {self.s_a_1} < c_oo_12 = {self.c_oo_12} from the same run"
            )
        if self.s_b_1 < self.c_oo_21:
            raise InconsistentCountsError(
                f"s_b_1 = {self.s_b_1} < c_oo_21 = {self.c_oo_21} from the same run"
            )

    def __add__(self, other: "ReducedCounts") -> "ReducedCounts":
        if not isinstance(other, ReducedCounts):
            return NotImplemented
        if self.duration_s is None or other.duration_s is None:
            duration = None
        else:
            duration = self.duration_s + other.duration_s
        return ReducedCounts(
            self.c_oo_11 + other.c_oo_11,
            self.s_a_1 + other.s_a_1,
            self.c_oo_12 + other.c_oo_12,
            self.s_b_1 + other.s_b_1,
            self.c_oo_21 + other.c_oo_21,
            self.c_oo_22 + other.c_oo_22,
            duration_s=duration,
        )


def undetected_from_singles(singles: int, c1: int, c2: int) -> int:
    """Undetected-partner count implied by one side's singles total.

    n_ou = S_o - C_oo - C_oe (and the mirrored n_uo relation).  A negative
    result means the counts cannot have come from one consistent run.
    """
    s = _as_exact_int(singles, "singles")
    a = _as_exact_int(c1, "c1")
    b = _as_exact_int(c2, "c2")
    if a < 0 or b < 0 or s < 0:
        raise ParameterError("counts must be >= 0")
    if s < a + b:
        raise InconsistentCountsError(f"singles {s} < coincidences {a} + {b}")
    return s - a - b


def eberhard_j_full(counts: FullCounts) -> int:
    """J from full outcome tables; negative J is incompatible with local realism."""
    terms = [
        (-1, (1, 1, "o", "o")),
        (+1, (1, 2, "o", "e")),
        (+1, (1, 2, "o", "u")),
        (+1, (2, 1, "e", "o")),
        (+1, (2, 1, "u", "o")),
        (+1, (2, 2, "o", "o")),
    ]
    j = 0
    for sign, (i, jj, k, l) in terms:
        j += sign * _as_exact_int(counts.n(i, jj, k, l), f"n_{k}{l}({i},{jj})")
    return j


def eberhard_j_reduced(counts: ReducedCounts) -> int:
    """J from the six measured totals; identical to the full form by the singles identities."""
    return (
        -_as_exact_int(counts.c_oo_11, "c_oo_11")
        + _as_exact_int(counts.s_a_1, "s_a_1")
        - _as_exact_int(counts.c_oo_12, "c_oo_12")
        + _as_exact_int(counts.s_b_1, "s_b_1")
        - _as_exact_int(counts.c_oo_21, "c_oo_21")
        + _as_exact_int(counts.c_oo_22, "c_oo_22")
    )


def reduced_from_full(counts: FullCounts, duration_s: float | None = None) -> ReducedCounts:
    """Project full tables down to the measured quantities of the reduced form.

    Singles are taken from the runs whose undetected terms they replace:
    Alice's alpha1 singles from the (1, 2) run, Bob's beta1 singles from (2, 1).
    """
    s_a_1 = sum(counts.n(1, 2, "o", l) for l in OUTCOMES)
    s_b_1 = sum(counts.n(2, 1, k, "o") for k in OUTCOMES)
    return ReducedCounts(
        c_oo_11=counts.n(1, 1, "o", "o"),
        s_a_1=s_a_1,
        c_oo_12=counts.n(1, 2, "o", "o"),
        s_b_1=s_b_1,
        c_oo_21=counts.n(2, 1, "o", "o"),
        c_oo_22=counts.n(2, 2, "o", "o"),
        duration_s=duration_s,
    )


def normalized_j(j: Number, pairs_per_setting: float) -> float:
    """J per produced pair per setting combination."""
    if pairs_per_setting <= 0:
        raise ParameterError(f"pairs_per_setting must be > 0, got {pairs_per_setting}")
    return j / pairs_per_setting


def measure_arm_efficiency(coincidences: int, partner_singles: int) -> float:
    """Arm efficiency as raw coincidences over the partner arm's singles.

    No corrections of any kind: Alice's efficiency divides by Bob's singles
    and vice versa.
    """
    _check_count(coincidences, "coincidences")
    if partner_singles <= 0:
        raise ParameterError(f"partner_singles must be > 0, got {partner_singles}")
    if coincidences > partner_singles:
        raise InconsistentCountsError(
            f"coincidences {coincidences} exceed partner singles {partner_singles}"
        )
    return coincidences / partner_singles


def estimate_produced_pairs(s_a: int, s_b: int, c: int) -> float:
    """Loss-independent pair-number estimate S_A * S_B / C.

    Consistent with the efficiency definition above: eta_A = C / S_B and
    eta_B = C / S_A give N = S_A / eta_A.
    """
    _check_count(s_a, "s_a")
    _check_count(s_b, "s_b")
    if c <= 0:
        raise ParameterError(f"coincidence count must be > 0, got {c}")
    if c > min(s_a, s_b):
        raise InconsistentCountsError(f"coincidences {c} exceed a singles count")
    return s_a * s_b / c


# --- counts file format (consumed by the CLI) ---------------------------------

_JSON_KEYS = {
    "c_oo_a1b1": "c_oo_11",
    "s_o_a_a1": "s_a_1",
    "c_oo_a1b2": "c_oo_12",
    "s_o_b_b1": "s_b_1",
    "c_oo_a2b1": "c_oo_21",
    "c_oo_a2b2": "c_oo_22",
}


class CountsFile(NamedTuple):
    reduced: ReducedCounts
    n_per_setting: float | None


def counts_to_json_dict(counts: ReducedCounts, n_per_setting: float | None = None) -> dict:
    out = {key: getattr(counts, field) for key, field in _JSON_KEYS.items()}
    if n_per_setting is not None:
        out["n_per_setting"] = n_per_setting
    if counts.duration_s is not None:
        out["duration_s"] = counts.duration_s
    return out


def counts_from_json_dict(data: Mapping) -> CountsFile:
    missing = [key for key in _JSON_KEYS if key not in data]
    if missing:
        raise ParameterError(f"counts file missing keys: {missing}")
    known = set(_JSON_KEYS) | {"n_per_setting", "duration_s"}
    unknown = [key for key in data if key not in known]
    if unknown:
        raise ParameterError(f"counts file has unknown keys: {unknown}")
    reduced = ReducedCounts(
        **{field: data[key] for key, field in _JSON_KEYS.items()},
        duration_s=data.get("duration_s"),
    )
    return CountsFile(reduced, data.get("n_per_setting"))


def read_counts_json(path: str | Path) -> CountsFile:
    with open(path, encoding="utf-8") as fh:
        return counts_from_json_dict(json.load(fh))


def write_counts_json(
    path: str | Path, counts: ReducedCounts, n_per_setting: float | None = None
) -> None:
    Path(path).write_text(
        json.dumps(counts_to_json_dict(counts, n_per_setting), indent=2) + "\n",
        encoding="utf-8",
    )
