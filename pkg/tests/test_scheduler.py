import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scfsim.channel import channel_statistics, generate_scenario
from scfsim.config import SimConfig
from scfsim.quantization import QuantizerConfig
from scfsim.scheduler import (algorithm1_complexity, cc_detector_ce, cc_l2_lsfd,
                              cc_lsfd, cc_plsfd, cluster_plan_from_indicators,
                              equal_power_plan, estimates_required,
                              full_cluster_plan, run_algorithm1)
from scfsim.pilots import make_pilot_plan


def _scheduled(L=8, K=12, N=2, tau=4, seed=0, nu=0.8, b_da=4, b_ad=4,
               iterations=2):
    cfg = SimConfig(L=L, K=K, N=N, tau=tau, b_da=b_da, b_ad=b_ad)
    scn = generate_scenario(cfg, seed)
    stats = channel_statistics(scn, seed, cfg.asd_rad)
    q = QuantizerConfig(b_da=b_da, b_ad=b_ad)
    cluster, plan, powers = run_algorithm1(stats, q, tau, cfg.p_max_mw,
                                           nu=nu, iterations=iterations)
    return stats, q, cluster, plan, powers


def _assert_plan_invariants(stats, q, cluster, plan, powers, p_max):
    k_count, l_count = stats.K, stats.L
    for k in range(k_count):
        assert cluster.primary[k] in cluster.serving[k]
    for l in range(l_count):
        prim, sec = set(cluster.served_primary[l]), set(cluster.served_secondary[l])
        assert prim | sec == set(cluster.served[l])
        assert prim & sec == set()
        pilots = [plan.pilot_of[k] for k in sec]
        assert len(pilots) == len(set(pilots))
    for k in range(k_count):
        assert k in cluster.overlap[k]
        for i in range(k_count):
            shares = bool(set(cluster.serving[i]) & set(cluster.serving[k]))
            assert (i in cluster.overlap[k]) == shares
            assert (i in cluster.overlap[k]) == (k in cluster.overlap[i])
    budget = p_max * (1 - q.rho_da)
    assert np.max(powers.p_ddot) == budget
    assert np.all(powers.p_ddot > 0) and np.all(powers.p_ddot <= budget)
    # a UE that is the weakest of its own neighbourhood transmits the budget
    gains = np.array([stats.beta[k, list(cluster.serving[k])].sum()
                      for k in range(k_count)])
    for k in range(k_count):
        if gains[k] == min(gains[i] for i in cluster.overlap[k]):
            assert powers.p_ddot[k] == budget
    # hence every connected overlap component holds a full-power UE
    seen = set()
    for k in range(k_count):
        if k in seen:
            continue
        component, frontier = set(), {k}
        while frontier:
            node = frontier.pop()
            component.add(node)
            frontier |= set(cluster.overlap[node]) - component
        seen |= component
        assert any(powers.p_ddot[i] == budget for i in component)


@settings(max_examples=12, deadline=None)
@given(st.integers(min_value=1, max_value=10),
       st.integers(min_value=1, max_value=16),
       st.integers(min_value=1, max_value=6),
       st.integers(min_value=0, max_value=3))
def test_algorithm1_invariants_random_sizes(L, K, tau, seed):
    stats, q, cluster, plan, powers = _scheduled(L=L, K=K, tau=tau, seed=seed)
    _assert_plan_invariants(stats, q, cluster, plan, powers, 100.0)


def test_single_ue_reduction():
    stats, q, cluster, plan, powers = _scheduled(L=5, K=1, tau=1, seed=3)
    assert cluster.primary[0] == int(np.argmax(stats.beta[0]))
    assert plan.pilot_of[0] == 0
    assert powers.p_ddot[0] == 100.0 * (1 - q.rho_da)


def test_first_tau_ues_get_orthogonal_pilots():
    _, _, _, plan, _ = _scheduled(L=6, K=10, tau=4, seed=5)
    assert list(plan.pilot_of[:4]) == [0, 1, 2, 3]


def test_nu_zero_gives_equal_power():
    _, q, _, _, powers = _scheduled(L=6, K=9, tau=3, seed=6, nu=0.0)
    assert np.allclose(powers.p_ddot, 100.0 * (1 - q.rho_da))
    assert np.max(powers.p_ddot) == 100.0 * (1 - q.rho_da)


def test_determinism():
    a = _scheduled(seed=11)
    b = _scheduled(seed=11)
    assert np.array_equal(a[2].D, b[2].D)
    assert np.array_equal(a[3].pilot_of, b[3].pilot_of)
    assert np.array_equal(a[4].p_ddot, b[4].p_ddot)


def test_pilot_override_is_respected():
    cfg = SimConfig(L=6, K=8, N=2, tau=4)
    scn = generate_scenario(cfg, 2)
    stats = channel_statistics(scn, 2, cfg.asd_rad)
    q = QuantizerConfig(b_da=4, b_ad=4)
    forced = np.array([3, 3, 2, 1, 0, 0, 1, 2])
    _, plan, _ = run_algorithm1(stats, q, 4, 100.0, pilot_override=forced)
    assert np.array_equal(plan.pilot_of, forced)


def test_empty_candidate_set_raises():
    cfg = SimConfig(L=4, K=4, N=2, tau=2)
    scn = generate_scenario(cfg, 1)
    stats = channel_statistics(scn, 1, cfg.asd_rad)
    q = QuantizerConfig.ideal()
    with pytest.raises(ValueError):
        run_algorithm1(stats, q, 2, 100.0, d_bar=1e-6)


def test_plan_json_round_trip():
    _, _, cluster, _, powers = _scheduled(seed=9)
    blob = json.loads(cluster.to_json())
    assert blob["primary"] == list(map(int, cluster.primary))
    assert blob["serving"] == [list(m) for m in cluster.serving]
    pblob = json.loads(powers.to_json())
    assert pblob["p_ddot"] == list(powers.p_ddot)


# --- complexity accounting --------------------------------------------------

def test_cc_plsfd_worked_examples():
    # |M|=2, |Q|=5, |P∩Q|=1 -> 15 + 11 + 6 = 32 CMs, 2 CDs
    d = np.zeros((5, 4), dtype=bool)
    d[0, :2] = True
    for k in range(1, 5):
        d[k, 0] = True
    plan = cluster_plan_from_indicators(d, np.zeros(5, dtype=int))
    pilots = make_pilot_plan([0, 1, 2, 3, 1], tau=4)   # P_0 ∩ Q_0 = {0}
    assert len(plan.serving[0]) == 2 and len(plan.overlap[0]) == 5
    assert cc_plsfd(plan, pilots, 0) == (32, 2)

    # |M|=1, |Q|=1, |P∩Q|=1 -> 1 + 3 + 1 = 5 CMs, 1 CD
    d = np.zeros((2, 4), dtype=bool)
    d[0, 0] = True
    d[1, 1] = True
    plan = cluster_plan_from_indicators(d, np.array([0, 1]))
    pilots = make_pilot_plan([0, 0], tau=2)
    assert cc_plsfd(plan, pilots, 0) == (5, 1)


def test_cc_lsfd_vs_plsfd():
    d = np.ones((5, 3), dtype=bool)       # everyone overlaps everyone
    plan = cluster_plan_from_indicators(d, np.zeros(5, dtype=int))
    pilots = make_pilot_plan([0, 1, 0, 1, 0], tau=2)
    for k in range(5):
        assert cc_lsfd(plan, pilots, k, 5) == cc_plsfd(plan, pilots, k)
    assert cc_l2_lsfd() == (0, 0)
    # counts grow linearly in K with all else fixed
    cm10, _ = cc_lsfd(plan, pilots, 0, 10)
    cm20, _ = cc_lsfd(plan, pilots, 0, 20)
    cm30, _ = cc_lsfd(plan, pilots, 0, 30)
    assert cm30 - cm20 == cm20 - cm10


def test_cc_lsfd_dominates_plsfd():
    stats, _, cluster, pilots, _ = _scheduled(L=8, K=14, tau=4, seed=21)
    for k in range(stats.K):
        assert cc_lsfd(cluster, pilots, k, stats.K)[0] >= cc_plsfd(cluster, pilots, k)[0]


def test_cc_detector_ce_formulas():
    stats, _, cluster, pilots, _ = _scheduled(L=6, K=10, tau=4, seed=22)
    n_ant, tau = 2, 10
    for l in range(stats.L):
        got = cc_detector_ce(cluster, "lpmmse", l, n_ant, tau)
        assert got == n_ant * (n_ant + tau) * len(cluster.served_primary[l])
        full = cc_detector_ce(cluster, "lpmmse-full", l, n_ant, tau)
        assert full - got == n_ant * (n_ant + tau) * len(cluster.served_secondary[l])
    for k in range(stats.K):
        got = cc_detector_ce(cluster, "pmmse", k, n_ant, tau)
        primary_served = set(cluster.served[cluster.primary[k]])
        expected = n_ant * (n_ant + tau) * len(
            set(cluster.overlap[k]) & primary_served) * len(cluster.serving[k])
        assert got == expected
        full = cc_detector_ce(cluster, "pmmse-full", k, n_ant, tau)
        assert full == n_ant * (n_ant + tau) * len(cluster.overlap[k]) * len(cluster.serving[k])
    with pytest.raises(ValueError):
        cc_detector_ce(cluster, "zf", 0, n_ant, tau)


def test_cc_detector_ce_point_value():
    # N=2, tau=10, |N_l^P|=3 -> 72
    d = np.zeros((3, 2), dtype=bool)
    d[:, 0] = True
    plan = cluster_plan_from_indicators(d, np.zeros(3, dtype=int))
    assert cc_detector_ce(plan, "lpmmse", 0, 2, 10) == 72


def test_algorithm1_complexity_formula():
    # K=tau=1, L=1, |L(d_bar)|=1, |Q_0|=1 -> 2K + 2tau = 4
    plan1 = cluster_plan_from_indicators(np.ones((1, 1), dtype=bool),
                                         np.zeros(1, dtype=int))
    assert algorithm1_complexity(plan1, 1, 1, 1) == 4

    # independence of N is structural (no N argument); linearity in overlap
    K = 4
    d = np.zeros((K, K), dtype=bool)
    d[np.arange(K), np.arange(K)] = True
    plan = cluster_plan_from_indicators(d, np.arange(K))
    base = algorithm1_complexity(plan, 10, 3, 5)
    doubled_d = d.copy()
    doubled_d[:, 0] = True
    plan2 = cluster_plan_from_indicators(doubled_d, np.arange(K))
    extra = sum(len(plan2.overlap[k]) for k in range(K)) - K
    assert algorithm1_complexity(plan2, 10, 3, 5) == base + extra


def test_estimates_required_matches_proposition_sets():
    stats, _, cluster, _, _ = _scheduled(L=6, K=9, tau=3, seed=23)
    for l in range(stats.L):
        assert estimates_required("lpmmse", cluster, l) == set(cluster.served_primary[l])
        assert estimates_required("lpmmse-full", cluster, l) == set(cluster.served[l])
    for k in range(stats.K):
        assert estimates_required("pmmse-full", cluster, k) == set(cluster.overlap[k])


def test_complexity_report_and_plan_export():
    from scfsim.scheduler import complexity_report, export_plan
    stats, q, cluster, plan, powers = _scheduled(L=5, K=8, tau=3, seed=25)
    report = complexity_report(cluster, plan, n_antennas=2, tau=3,
                               n_candidates=stats.L)
    assert len(report.weighting_cm_cd["plsfd"]) == stats.K
    assert report.weighting_cm_cd["l2"] == [(0, 0)] * stats.K
    for k in range(stats.K):
        assert report.weighting_cm_cd["plsfd"][k] == cc_plsfd(cluster, plan, k)
    assert report.scheduling_ops == algorithm1_complexity(cluster, stats.K, 3,
                                                          stats.L)
    blob = json.loads(report.to_json())
    assert blob["scheduling_ops"] == report.scheduling_ops

    doc = json.loads(export_plan(cluster, plan, powers))
    assert doc["pilot_of"] == list(map(int, plan.pilot_of))
    assert doc["serving"] == [list(m) for m in cluster.serving]
    assert doc["p_ddot"] == list(powers.p_ddot)


def test_full_cluster_plan_and_equal_power():
    stats, q, *_ = _scheduled(L=3, K=4, tau=2, seed=24)
    full = full_cluster_plan(stats)
    assert all(len(m) == stats.L for m in full.serving)
    assert all(len(o) == stats.K for o in full.overlap)
    powers = equal_power_plan(stats.K, 100.0, q.rho_da)
    assert np.all(powers.p_ddot == 100.0 * (1 - q.rho_da))
