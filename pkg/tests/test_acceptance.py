"""Acceptance suite: one test per release criterion, tolerances pinned.

Run with `pytest tests/test_acceptance.py -v -s` to see one line per
criterion.
"""
import json
import math
from contextlib import contextmanager

import numpy as np
import pytest

from eberhard.cli import main
from eberhard.counting import (
    OUTCOMES,
    SETTING_PAIRS,
    FullCounts,
    eberhard_j_full,
    eberhard_j_reduced,
    reduced_from_full,
)
from eberhard.events import (
    EventStream,
    RunConfig,
    accumulate_counts,
    blocked_counts,
    find_coincidences,
    simulate_run,
)
from eberhard.model import ArmParams, NoiseModel, SettingsQuad, SourceParams, joint_outcome_distribution
from eberhard.optimize import OptimizationProblem, critical_efficiency, optimize
from eberhard.qkd import basis_visibility, feasibility
from eberhard.significance import SignificanceReport, blocked_significance, blocks_from_counts

REFERENCE_ANGLES = (85.6, 118.0, -5.4, 25.9)


@contextmanager
def criterion(number, label):
    try:
        yield
    except Exception:
        print(f"criterion {number}: FAIL [{label}]")
        raise
    print(f"criterion {number}: PASS [{label}]")


def test_criterion_1_table_1_arithmetic(tmp_path, capsys):
    with criterion(1, "Table 1 arithmetic through jstat"):
        counts_path = tmp_path / "counts.json"
        counts_path.write_text(
            json.dumps(
                {
                    "c_oo_a1b1": 1069306,
                    "s_o_a_a1": 1522865,
                    "c_oo_a1b2": 1152595,
                    "s_o_b_b1": 1693718,
                    "c_oo_a2b1": 1191146,
                    "c_oo_a2b2": 69749,
                    "n_per_setting": 24.2e6,
                }
            )
        )
        assert main(["jstat", "--counts", str(counts_path)]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "J = -126715"
        j_per_n = float(lines[1].split("=")[1])
        assert abs(j_per_n - (-0.005236)) < 1e-6


def test_criterion_2_significance_arithmetic():
    with criterion(2, "blocked significance arithmetic"):
        report = SignificanceReport.from_totals(-126715, 1837.0)
        assert 68.9 <= report.n_sigma <= 69.1


def test_criterion_3_maximal_violation():
    with criterion(3, "maximal violation at unit efficiency"):
        result = optimize(OptimizationProblem(1.0, 1.0, seed=1))
        assert result.jn_star <= -0.2068
        assert result.r_star >= 0.98


def test_criterion_4_efficiency_thresholds():
    with criterion(4, "critical-efficiency thresholds"):
        free = critical_efficiency(0.0, 1.0, None, 0.002, seed=0)
        assert abs(free - 2 / 3) <= 0.005
        fixed = critical_efficiency(0.0, 1.0, 1.0, 0.002, seed=0)
        assert abs(fixed - (2 * math.sqrt(2) - 2)) <= 0.005
        with_bg = critical_efficiency(1e-3, 1.0, None, 0.002, seed=0)
        assert with_bg > 0.6717


def test_criterion_5_e_to_u_invariance():
    with criterion(5, "e->u invariance and reduction identity"):
        rng = np.random.default_rng(55)
        cells = [(k, l) for k in OUTCOMES for l in OUTCOMES]
        for _ in range(1000):
            weights = rng.dirichlet(np.ones(9) * float(rng.uniform(0.4, 3.0)))
            n = int(rng.integers(20, 3000))
            tables = {
                pair: dict(zip(cells, (int(v) for v in rng.multinomial(n, weights))))
                for pair in SETTING_PAIRS
            }
            full = FullCounts(tables, pairs_per_setting=n)
            j = eberhard_j_full(full)
            assert j == eberhard_j_reduced(reduced_from_full(full))

            migrated = {pair: dict(tables[pair]) for pair in SETTING_PAIRS}
            move = int(rng.integers(0, migrated[(1, 2)][("o", "e")] + 1))
            migrated[(1, 2)][("o", "e")] -= move
            migrated[(1, 2)][("o", "u")] += move
            move = int(rng.integers(0, migrated[(2, 1)][("e", "o")] + 1))
            migrated[(2, 1)][("e", "o")] -= move
            migrated[(2, 1)][("u", "o")] += move
            for pair in ((1, 1), (2, 2)):  # e/u churn here must be irrelevant
                migrated[pair][("e", "u")], migrated[pair][("u", "e")] = (
                    migrated[pair][("u", "e")],
                    migrated[pair][("e", "u")],
                )
            shuffled = FullCounts(migrated, pairs_per_setting=n)
            assert eberhard_j_full(shuffled) == j
            assert eberhard_j_reduced(reduced_from_full(shuffled)) == j


def test_criterion_6_monte_carlo_consistency():
    with criterion(6, "Monte Carlo run at published parameters"):
        pairs_per_setting = 1_000_000
        duration_s = 300.0
        config = RunConfig(
            source=SourceParams(0.297, 0.975, pair_rate_hz=pairs_per_setting / duration_s),
            arm_a=ArmParams(0.7377),
            arm_b=ArmParams(0.7859),
            settings=SettingsQuad(*REFERENCE_ANGLES),
            duration_s=duration_s,
            seed=42,
            window_ns=1000,
        )
        streams = simulate_run(config)
        counts = accumulate_counts(streams, config.window_ns)
        j = eberhard_j_reduced(counts)
        jn = j / pairs_per_setting
        assert jn < 0
        assert -0.00524 * 1.3 < jn < -0.00524 * 0.7

        blocks = blocked_counts(streams, config.window_ns, 30)
        report = blocked_significance(blocks_from_counts(blocks))
        assert report.j_total == j  # exact additivity cross-check
        assert report.n_sigma > 5


def test_criterion_7_coincidence_oracle():
    with criterion(7, "streaming matcher vs brute-force oracle"):

        def brute_force(ta, tb, window):
            queue_a = [(int(t), i) for i, t in enumerate(ta)]
            queue_b = [(int(t), j) for j, t in enumerate(tb)]
            pairs = []
            while queue_a and queue_b:
                (t_a, i), (t_b, j) = queue_a[0], queue_b[0]
                if abs(t_b - t_a) <= window:
                    pairs.append((i, j))
                    queue_a.pop(0)
                    queue_b.pop(0)
                elif t_a < t_b:
                    queue_a.pop(0)
                else:
                    queue_b.pop(0)
            return pairs

        rng = np.random.default_rng(77)
        for _ in range(1000):
            na, nb = (int(v) for v in rng.integers(0, 201, size=2))
            ta = np.sort(rng.integers(0, 10_000, size=na))
            tb = np.sort(rng.integers(0, 10_000, size=nb))
            window = int(rng.integers(0, 300))
            a = EventStream("A", "a1b1", ta, 10_000)
            b = EventStream("B", "a1b1", tb, 10_000)
            result = find_coincidences(a, b, window)
            assert list(result.pairs) == brute_force(ta, tb, window)
            wider = find_coincidences(a, b, window + int(rng.integers(1, 200)))
            assert wider.count >= result.count


def test_criterion_8_no_signaling_and_normalization():
    with criterion(8, "normalization and no-signaling property sweep"):
        rng = np.random.default_rng(88)
        for _ in range(10_000):
            source = SourceParams(
                r=float(rng.uniform(1e-3, 1.0)),
                visibility=float(rng.uniform(0.0, 1.0)),
                noise_model=list(NoiseModel)[int(rng.integers(0, 2))],
            )
            arm_a = ArmParams(float(rng.uniform(0, 1)), float(rng.uniform(0, 1)))
            arm_b = ArmParams(float(rng.uniform(0, 1)), float(rng.uniform(0, 1)))
            a1, a2, b1, b2 = (float(v) for v in rng.uniform(-360, 360, size=4))
            d11 = joint_outcome_distribution(source, arm_a, arm_b, a1, b1)
            d12 = joint_outcome_distribution(source, arm_a, arm_b, a1, b2)
            d21 = joint_outcome_distribution(source, arm_a, arm_b, a2, b1)
            for d in (d11, d12, d21):
                assert abs(d.p.sum() - 1.0) < 1e-12
            assert np.max(np.abs(d11.alice_marginal() - d12.alice_marginal())) < 1e-12
            assert np.max(np.abs(d11.bob_marginal() - d21.bob_marginal())) < 1e-12


def test_criterion_9_qkd_feasibility():
    with criterion(9, "DI-QKD feasibility and basis visibilities"):
        report = feasibility(0.7246, 0.7812)
        assert report.feasible_1sdi_alice_side and report.feasible_1sdi_bob_side
        assert not report.feasible_di

        source = SourceParams(1.0, 0.9678, NoiseModel.COHERENCE_DAMPING)
        assert basis_visibility(source, "z") == 1.0
        assert basis_visibility(source, "x") == pytest.approx(0.9678, abs=1e-12)
