import json
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtsim import recommender
from mtsim.devices import GB, TB, DeviceCatalog, device_cost
from mtsim.engine import EAGER, METRIC_KEYS, EngineConfig, Hierarchy, MigrationPolicy, SimMetrics, run_trace
from mtsim.errors import ConfigError, ModelError
from mtsim.recommender import (REPORT_COLUMNS, Candidate, CandidateSets, Fixed, HitRatioCurve, Recommendation,
                               Tuned, effective_access_time, enumerate_hierarchies, estimate_access_time,
                               format_report_csv, format_report_json, hit_ratio_curve, lru_hit_ratio, rank,
                               recommend)
from mtsim.tuner import BINARY_GRID, AnnealingConfig, PolicyGrid
from mtsim.workload import Trace, WorkloadSpec, Zipf, generate

PRICES = {"dram": 10.0, "nvm": 1.0, "ssd": 0.2}


def brute_force_enumerate(dram, nvm, ssd, budget, footprint):
    out = []
    for d in dram:
        for n in nvm:
            for s in ssd:
                cost = (d * PRICES["dram"] + n * PRICES["nvm"] + s * PRICES["ssd"]) / GB
                if (d or n) and s >= footprint and cost <= budget:
                    out.append(((d, n, s), cost))
    return sorted(out)


def test_budget_example():
    sets = CandidateSets((0, 16 * GB), (0, TB), (2 * TB,))
    got = {h.capacities: h.total_cost for h in enumerate_hierarchies(sets, None, 1600, 0)}
    assert got == pytest.approx({(16 * GB, 0, 2 * TB): 569.6, (0, TB, 2 * TB): 1433.6,
                                 (16 * GB, TB, 2 * TB): 1593.6})
    tighter = {h.capacities for h in enumerate_hierarchies(sets, None, 1500, 0)}
    assert tighter == {(16 * GB, 0, 2 * TB), (0, TB, 2 * TB)}
    assert enumerate_hierarchies(sets, None, 500, 0) == []


def test_budget_must_be_positive():
    with pytest.raises(ConfigError):
        enumerate_hierarchies(CandidateSets((0,), (0,), (0,)), None, 0, 0)


def test_candidate_sets_validation():
    with pytest.raises(ConfigError):
        CandidateSets((0, 3 * GB), (0,), (TB,))
    with pytest.raises(ConfigError):
        CandidateSets((), (0,), (TB,))
    assert CandidateSets((16 * GB, 0, 16 * GB), (0,), (TB,)).dram == (0, 16 * GB)


pow2_caps = st.lists(st.sampled_from([0] + [2 ** k * GB for k in range(0, 12)]), min_size=1, max_size=4)


@settings(max_examples=100, deadline=None)
@given(pow2_caps, pow2_caps, pow2_caps, st.floats(1, 5000), st.sampled_from([0, GB, 512 * GB, 4 * TB]))
def test_enumerate_equals_brute_force(dram, nvm, ssd, budget, footprint):
    sets = CandidateSets(dram, nvm, ssd)
    got = sorted((h.capacities, h.total_cost) for h in enumerate_hierarchies(sets, None, budget, footprint))
    want = brute_force_enumerate(set(dram), set(nvm), set(ssd), budget, footprint)
    assert [g[0] for g in got] == [w[0] for w in want]
    np.testing.assert_allclose([g[1] for g in got], [w[1] for w in want])
    assert all(c <= budget for _, c in got)


def test_ssd_must_hold_footprint():
    sets = CandidateSets((GB,), (0,), (GB, 2 * GB))
    hs = enumerate_hierarchies(sets, None, 1e6, GB + 1)
    assert [h.capacities for h in hs] == [(GB, 0, 2 * GB)]


# -- ranking -------------------------------------------------------------------------

def cand(caps, cost, tput):
    h = Hierarchy.from_blocks(*caps)
    return Candidate(h, cost, tput, tput / cost, SimMetrics(), EAGER)


def test_rank_orders_by_perf_per_price_then_cost_then_capacity():
    a = cand((1, 0, 4), 10.0, 100.0)   # 10
    b = cand((1, 0, 8), 20.0, 200.0)   # 10, costlier
    c = cand((2, 0, 4), 10.0, 100.0)   # 10, same cost, larger capacities
    d = cand((1, 1, 4), 5.0, 100.0)    # 20
    ranked = rank([b, c, a, d]).entries
    assert ranked == [d, a, c, b]


def test_equal_throughput_smaller_cost_wins():
    small = cand((1, 0, 4), 10.0, 50.0)
    big = cand((1, 0, 8), 12.0, 50.0)
    assert rank([big, small]).best is small


@pytest.fixture(scope="module")
def desk_trace():
    return generate(WorkloadSpec(Zipf(1.0), 256, 6000, 0.8, seed=4))


SMALL_SETS = CandidateSets((0, 64 * 4096, 128 * 4096), (0, 256 * 4096), (256 * 4096, 512 * 4096))


def test_single_candidate_is_rank_one(desk_trace):
    sets = CandidateSets((0,), (256 * 4096,), (256 * 4096,))
    rec = recommend(sets, None, 1e6, desk_trace)
    assert len(rec) == 1 and rec.best.hierarchy.capacities == (0, 256 * 4096, 256 * 4096)


def test_rank_one_matches_reevaluation(desk_trace):
    budget = 1.0
    rec = recommend(SMALL_SETS, None, budget, desk_trace, Fixed(MigrationPolicy(1, 1, 0.5, 0.5)), seed=9)
    assert len(rec) > 1
    scores = {}
    for d, n, s in product(SMALL_SETS.dram, SMALL_SETS.nvm, SMALL_SETS.ssd):
        cost = (d * 10 + n * 1 + s * 0.2) / GB
        if not (d or n) or cost > budget:
            continue
        h = Hierarchy.build(d, n, s)
        m = run_trace(EngineConfig(MigrationPolicy(1, 1, 0.5, 0.5), 4096, 0.5, 9), h, desk_trace)
        scores[(d, n, s)] = m.throughput / cost
    assert {c.hierarchy.capacities for c in rec.entries} == set(scores)
    top = max(scores.values())
    assert rec.best.perf_per_price == pytest.approx(top, rel=1e-12)
    assert scores[rec.best.hierarchy.capacities] == top
    ppp = [c.perf_per_price for c in rec.entries]
    assert ppp == sorted(ppp, reverse=True)
    assert all(c.total_cost <= budget for c in rec.entries)


def test_parallel_matches_sequential(desk_trace):
    seq = recommend(SMALL_SETS, None, 1.0, desk_trace)
    par = recommend(SMALL_SETS, None, 1.0, desk_trace, parallel=3)
    assert format_report_csv(seq) == format_report_csv(par)


def test_tuned_policy_source(desk_trace):
    sets = CandidateSets((64 * 4096,), (0, 256 * 4096), (256 * 4096,))
    cfg = AnnealingConfig(alpha=0.5, gamma=2, t0=100, t_min=10, epoch_ops=2000)
    rec = recommend(sets, None, 1.0, desk_trace, Tuned(cfg, PolicyGrid(BINARY_GRID)))
    assert len(rec) == 2
    for c in rec.entries:
        assert set(c.policy.as_tuple()) <= {0.0, 1.0}
        assert c.error is None


def test_infeasible_budget_warns(desk_trace, caplog):
    rec = recommend(SMALL_SETS, None, 1e-9, desk_trace)
    assert len(rec) == 0 and rec.best is None
    assert "no candidate" in caplog.text


def test_failed_candidate_ranks_with_zero(desk_trace, monkeypatch):
    real = recommender.run_trace

    def flaky(config, hierarchy, trace, snapshot=None):
        if hierarchy.nvm.present:
            raise RuntimeError("boom")
        return real(config, hierarchy, trace, snapshot)

    monkeypatch.setattr(recommender, "run_trace", flaky)
    rec = recommend(SMALL_SETS, None, 1.0, desk_trace)
    failed = [c for c in rec.entries if c.error]
    assert failed and all(c.throughput == 0 and c.perf_per_price == 0 for c in failed)
    assert rec.entries[-len(failed):] == failed


def test_report_formats(desk_trace):
    rec = recommend(SMALL_SETS, None, 1.0, desk_trace)
    lines = format_report_csv(rec).splitlines()
    assert lines[0].split(",") == list(REPORT_COLUMNS)
    assert lines[0].startswith("rank,dram_gb,nvm_gb,ssd_gb,cost_usd,throughput_ops_s,perf_per_price")
    assert len(lines) == len(rec) + 1
    assert [int(l.split(",")[0]) for l in lines[1:]] == list(range(1, len(rec) + 1))
    rows = json.loads(format_report_json(rec))
    assert [r["rank"] for r in rows] == list(range(1, len(rec) + 1))
    assert set(METRIC_KEYS) <= set(rows[0])
    assert rows[0]["perf_per_price"] == rec.best.perf_per_price


# -- analytical model -----------------------------------------------------------------

def test_effective_access_time_examples():
    curve = HitRatioCurve([10, 100], [0.9, 1.0])
    assert effective_access_time(curve, [(10, 100), (100, 1000)]) == 200
    assert effective_access_time(curve, [(100, 7.5)]) == 7.5
    full = HitRatioCurve([10], [1.0])
    assert effective_access_time(full, [(10, 3.0), (50, 1000.0)]) == 3.0


def test_effective_access_time_errors():
    curve = HitRatioCurve([10, 100], [0.5, 0.9])
    with pytest.raises(ModelError):
        effective_access_time(curve, [(10, 1), (100, 10)])
    with pytest.raises(ModelError):
        effective_access_time(HitRatioCurve([10], [1.0]), [(100, 1), (10, 10)])
    with pytest.raises(ModelError):
        effective_access_time(curve, [])


def test_hit_ratio_curve_validation():
    with pytest.raises(ModelError):
        HitRatioCurve([1, 2], [0.5, 0.4])
    with pytest.raises(ModelError):
        HitRatioCurve([0, 1], [0.1, 0.5])
    with pytest.raises(ModelError):
        HitRatioCurve([1], [1.5])
    c = HitRatioCurve([4, 2], [0.8, 0.3])
    assert [c(x) for x in (0, 1, 2, 3, 4, 99)] == [0, 0, 0.3, 0.3, 0.8, 0.8]


def random_instance(draw_caps, draw_hits, times):
    caps = sorted(draw_caps)
    hits = sorted(draw_hits)[:len(caps) - 1] + [1.0]
    return HitRatioCurve(caps, hits), list(zip(caps, times))


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 5).flatmap(lambda n: st.tuples(
    st.lists(st.integers(1, 10**6), min_size=n, max_size=n, unique=True),
    st.lists(st.floats(0, 1), min_size=n, max_size=n),
    st.lists(st.floats(0.1, 1e7), min_size=n, max_size=n))))
def test_dual_form_identity(args):
    curve, tiers = random_instance(*args)
    H = [0.0] + [curve(c) for c, _ in tiers]
    alt = sum((1 - H[i - 1]) * tiers[i - 1][1] for i in range(1, len(H)))
    assert effective_access_time(curve, tiers) == pytest.approx(alt, rel=1e-9)


def brute_lru_hits(blocks, cap):
    lru, hits = [], 0
    for b in blocks:
        if b in lru:
            hits += 1
            lru.remove(b)
        elif len(lru) == cap:
            lru.pop(0)
        lru.append(b)
    return hits / len(blocks)


def test_lru_hit_ratio_matches_list_oracle():
    t = generate(WorkloadSpec(Zipf(0.9), 200, 3000, 1.0, seed=6))
    blocks = t.blocks.tolist()
    assert lru_hit_ratio(t, 0) == 0
    for cap in (1, 7, 50, 200):
        assert lru_hit_ratio(t, cap) == brute_lru_hits(blocks, cap)
    curve = hit_ratio_curve(t, [10, 50, 100])
    assert curve(50) == brute_lru_hits(blocks, 50)


def test_estimate_access_time_orders_hierarchies(desk_trace):
    small = Hierarchy.from_blocks(8, 0, 256)
    large = Hierarchy.from_blocks(128, 0, 256)
    assert estimate_access_time(large, desk_trace) < estimate_access_time(small, desk_trace)
    with_nvm = Hierarchy.from_blocks(8, 128, 256)
    assert estimate_access_time(with_nvm, desk_trace) < estimate_access_time(small, desk_trace)
