"""One test per acceptance criterion, at the stated tolerance.

Each test records a PASS/FAIL line (shown in the "acceptance criteria"
section of the pytest summary) and then asserts the band directly on the
measured values.
"""

import math

import pytest

from percolab import checks


def record(log, res):
    log.append(res.line() + f" ({res.elapsed_s:.1f} s)")
    return res


def test_criterion_01_oracle_equivalence(acceptance_log):
    res = record(acceptance_log, checks.criterion_1())
    assert res.values["compared"] == 75
    assert res.values["worst_z"] <= 4.0
    assert res.elapsed_s < 60


def test_criterion_02_erdos_renyi(acceptance_log):
    res = record(acceptance_log, checks.criterion_2())
    assert 0.9 <= res.values["ratio"] <= 1.1
    assert res.elapsed_s < 120


def test_criterion_03_giant_component(acceptance_log):
    res = record(acceptance_log, checks.criterion_3())
    assert 0.8 <= res.values["C1_ratio"] <= 1.2
    assert res.values["C2_over_C1"] <= 0.15


def test_criterion_04_susceptibility(acceptance_log):
    res = record(acceptance_log, checks.criterion_4())
    assert 0.75 <= res.values["ratio"] <= 1.25


def test_criterion_05_cluster_tail(acceptance_log):
    res = record(acceptance_log, checks.criterion_5())
    assert res.values["k0"] == math.ceil(0.1**-2 * (0.1**3 * 2**20) ** 0.25)
    assert 0.15 <= res.values["tail"] <= 0.25


def test_criterion_06_pc_expansion(acceptance_log):
    res = record(acceptance_log, checks.criterion_6())
    shifts = list(res.values["shifts"].values())
    assert list(res.values["shifts"]) == [14, 16, 18, 20, 22]
    assert all(2 <= s <= 5 for s in shifts)
    dev = [abs(s - 3.5) for s in shifts]
    assert not all(b > a for a, b in zip(dev, dev[1:]))
    assert res.elapsed_s < 30 * 60


def test_criterion_07_nbw_exactness(acceptance_log):
    res = record(acceptance_log, checks.criterion_7())
    v = res.values
    assert v["err_small"] <= 1e-10
    assert v["err_enum"] <= 1e-12 and v["rational"]
    assert v["sim_z"] <= 4


def test_criterion_08_mixing_time(acceptance_log):
    res = record(acceptance_log, checks.criterion_8())
    assert sorted(res.values["ratios"]) == list(range(8, 21))
    assert max(res.values["ratios"].values()) <= 3
    assert res.elapsed_s < 60


def test_criterion_09_triangle_sum(acceptance_log):
    res = record(acceptance_log, checks.criterion_9())
    assert sorted(res.values["scaled"]) == [12, 16, 20]
    assert max(res.values["scaled"].values()) <= 10


def test_criterion_10_magnetization(acceptance_log):
    res = record(acceptance_log, checks.criterion_10())
    assert set(res.values["ratios"]) == {1e-4, 1e-3}
    assert all(r <= 1.3 for r in res.values["ratios"].values())
    assert res.values["M0"] == 0.0 and res.values["M1"] == 1.0


def test_criterion_11_differential_inequalities(acceptance_log):
    res = record(acceptance_log, checks.criterion_11())
    assert res.values["min_slack"] >= -1e-8


def test_criterion_12_sprinkling(acceptance_log):
    res = record(acceptance_log, checks.criterion_12())
    assert res.values["hit_rate"] >= 0.9
    assert abs(res.values["density_z"]) <= 4


def test_criterion_13_property_suites(acceptance_log):
    res = record(acceptance_log, checks.criterion_13())
    failed = [k for k, ok in res.values["parts"].items() if not ok]
    assert not failed
    assert len(res.values["parts"]) == 8


@pytest.mark.parametrize("cid", range(1, 14))
def test_every_criterion_has_a_check(cid):
    assert cid in checks.CRITERIA
