import numpy as np
import pytest

from scfsim.pilots import build_estimation_context
from scfsim.se_mc import (batch_plan, centralized_mc_report,
                          distributed_mc_report, se_centralized_mc_exact,
                          se_distributed_mc)

from conftest import small_system


def test_batch_plan_covers_trials():
    for trials in (1, 63, 64, 1000, 12345):
        plan = batch_plan(trials, 4, 2, 2)
        assert plan[0][0] == 0 and plan[-1][1] == trials
        for (a, b), (c, _) in zip(plan, plan[1:]):
            assert b == c


def test_zero_power_ue_gets_zero_se():
    cfg, stats, q, powers, plan, _, cluster = small_system(seed=50)
    p = powers.p_ddot.copy()
    p[2] = 0.0
    ctx = build_estimation_context(stats, plan, p, q, cfg.sigma2_mw)
    report = distributed_mc_report(ctx, cluster, "mrc", "lsfd", 2000, 0, 0.95)
    assert report.se[2] == 0.0
    assert np.all(report.se[[0, 1, 3]] > 0)


def test_lmmse_dominates_mrc():
    _, _, _, _, _, ctx, cluster = small_system(seed=51)
    mrc = distributed_mc_report(ctx, cluster, "mrc", "lsfd", 20000, 1, 0.95)
    lmmse = distributed_mc_report(ctx, cluster, "lmmse", "lsfd", 20000, 1, 0.95)
    assert np.all(lmmse.se >= mrc.se * (1 - 5e-3))


def test_mc_determinism_and_metadata():
    _, _, _, _, _, ctx, cluster = small_system(seed=52)
    a = distributed_mc_report(ctx, cluster, "mrc", "plsfd", 4000, 9, 0.9)
    b = distributed_mc_report(ctx, cluster, "mrc", "plsfd", 4000, 9, 0.9)
    assert np.array_equal(a.se, b.se)
    assert np.array_equal(a.stderr, b.stderr, equal_nan=True)
    assert np.all(np.isfinite(a.stderr))
    assert a.trials == 4000 and a.evaluation == "monte-carlo"
    c = centralized_mc_report(ctx, cluster, "pmmse", 2000, 9, 0.9)
    d = centralized_mc_report(ctx, cluster, "pmmse", 2000, 9, 0.9)
    assert np.array_equal(c.se, d.se)
    assert c.scheme == "centralized" and c.weighting is None


def test_centralized_mmse_dominates_mrc_per_instance():
    _, _, _, _, _, ctx, cluster = small_system(seed=53)
    mrc = centralized_mc_report(ctx, cluster, "mrc", 3000, 2, 0.95)
    mmse = centralized_mc_report(ctx, cluster, "mmse", 3000, 2, 0.95)
    assert np.all(mmse.se >= mrc.se * (1 - 1e-9))


def test_weighting_ordering_under_mc():
    _, _, _, _, _, ctx, cluster = small_system(seed=54)
    opt = distributed_mc_report(ctx, cluster, "mrc", "lsfd", 20000, 3, 0.95)
    l2 = distributed_mc_report(ctx, cluster, "mrc", "l2", 20000, 3, 0.95)
    assert np.all(l2.se <= opt.se * (1 + 1e-9))


def test_per_ue_wrappers():
    _, _, _, _, _, ctx, cluster = small_system(seed=55)
    se, err = se_distributed_mc(1, ctx, cluster, "mrc", "lsfd", 4000, 4, 0.95)
    report = distributed_mc_report(ctx, cluster, "mrc", "lsfd", 4000, 4, 0.95)
    assert se == report.se[1] and err == report.stderr[1]
    se_c, _ = se_centralized_mc_exact(0, ctx, cluster, "mrc", 2000, 4, 0.95)
    assert se_c == centralized_mc_report(ctx, cluster, "mrc", 2000, 4, 0.95).se[0]


def test_mc_plsfd_matches_corollary_closed_form():
    # the generic moment-restricted weighting must land on the closed form
    # when the detector is MRC, also under genuinely partial clusters
    from scfsim.config import SimConfig
    from scfsim.harness import build_system
    from scfsim.lsfd import build_ingredients, p_lsfd
    from scfsim.se_closed import se_distributed_closed
    cfg = SimConfig(L=8, K=10, N=2, tau=4, b_da=1, b_ad=2)
    ctx, cluster, _ = build_system(cfg, seed=21)
    assert any(len(o) < cfg.K for o in cluster.overlap)
    closed = np.array([se_distributed_closed(
        build_ingredients(k, ctx, cluster),
        p_lsfd(build_ingredients(k, ctx, cluster)), cfg.prelog)
        for k in range(cfg.K)])
    mc = distributed_mc_report(ctx, cluster, "mrc", "plsfd", 30000, 3,
                               cfg.prelog)
    gaps = np.abs(closed - mc.se) / closed
    assert np.max(gaps) < 0.02


def test_lpmmse_close_to_lmmse_at_desk_scale():
    from scfsim.config import SimConfig
    from scfsim.harness import build_system
    cfg = SimConfig(L=16, K=20, N=3, tau=5, b_da=4, b_ad=4)
    ctx, cluster, _ = build_system(cfg, seed=42)
    lp = distributed_mc_report(ctx, cluster, "lpmmse", "plsfd", 2000, 5,
                               cfg.prelog).se
    lm = distributed_mc_report(ctx, cluster, "lmmse", "lsfd", 2000, 5,
                               cfg.prelog).se
    gap = abs(np.median(lp) - np.median(lm)) / np.median(lm)
    assert gap < 0.10


def test_centralized_exact_mc_scalar_oracle():
    # L=1, K=1, ideal hardware: oracle draws estimates straight from their
    # distribution CN(h_bar, C_hhat) and averages the bound directly
    from scfsim.numerics import crandn, hermitian_sqrt
    from scfsim.rng import substream
    _, stats, _, powers, plan, _, cluster = small_system(
        L=1, K=1, N=2, tau=1, b_da=None, b_ad=None, seed=57)
    from scfsim.quantization import QuantizerConfig
    q0 = QuantizerConfig.ideal()
    sigma2 = small_system(L=1, K=1, N=2, tau=1, seed=57)[0].sigma2_mw
    ctx = build_estimation_context(stats, plan, powers.p_ddot, q0, sigma2)

    trials = 60000
    got = centralized_mc_report(ctx, cluster, "mrc", trials, 7, 0.95).se[0]

    rng = substream(99, "oracle")
    factor = hermitian_sqrt(ctx.c_hhat[0, 0])
    draws = stats.h_bar[0, 0] + (factor @ crandn(rng, (trials, 2)).T).T
    w = powers.p_ddot[0] * (stats.R[0, 0] - ctx.c_hhat[0, 0]) \
        + sigma2 * np.eye(2)
    num = powers.p_ddot[0] * np.abs(np.einsum("bn,bn->b", np.conj(draws), draws)) ** 2
    den = np.real(np.einsum("bn,nm,bm->b", np.conj(draws), w, draws))
    oracle = 0.95 * np.mean(np.log2(1 + num / den))
    assert abs(got - oracle) / oracle < 0.02


def test_unknown_detector_or_weighting_raises():
    _, _, _, _, _, ctx, cluster = small_system(seed=56)
    with pytest.raises(ValueError):
        distributed_mc_report(ctx, cluster, "zf", "lsfd", 256, 0, 0.95)
    with pytest.raises(ValueError):
        distributed_mc_report(ctx, cluster, "mrc", "magic", 256, 0, 0.95)
