"""Closed-form-versus-Monte-Carlo validation suite.

Cross-checks every closed form against a brute-force estimate on the
configured scenario and verifies the structural invariants (PSD orderings,
plan consistency). Used by the `validate` CLI subcommand and the
validate-closed-forms experiment.
"""

import math
from dataclasses import dataclass

import numpy as np

from .channel import channel_statistics, generate_scenario
from .numerics import hermitize
from .pilots import build_estimation_context
from .quantization import QuantizerConfig
from .rng import substream
from .sampling import sample_joint
from .scheduler import equal_power_plan, full_cluster_plan, run_algorithm1
from .se_closed import se_distributed_closed_max, se_centralized_closed, theorem1_kernel
from .se_mc import batch_plan, centralized_mc_report, distributed_mc_report
from .lsfd import build_ingredients
from .pilots import round_robin_pilots


@dataclass(frozen=True)
class Check:
    name: str
    case: str
    closed: float
    monte_carlo: float
    rel_gap: float
    tolerance: float

    @property
    def passed(self):
        return math.isfinite(self.rel_gap) and self.rel_gap <= self.tolerance


def desk_validation_config(cfg):
    """The small reference scale all closed forms are validated at.

    The 2% SE tolerance needs ~1e5 trials to sit well above the Monte Carlo
    noise floor of the weakest UEs.
    """
    return cfg.replace(L=4, K=6, N=2, tau=3, b_da=1, b_ad=2,
                       trials=max(cfg.trials, 100000))


def _kernel_mc(ctx, pairs, trials, seed):
    """Monte Carlo estimates of E[hhat_k^H h_i h_i^H hhat_k] for given
    (k, i, l1, l2) tuples, accumulated batch-by-batch."""
    sums = np.zeros(len(pairs), dtype=complex)
    total = 0
    for b_idx, (lo, hi) in enumerate(batch_plan(trials, ctx.K, ctx.L, ctx.N)):
        rng = substream(seed, "kernel-oracle", b_idx)
        h, hhat = sample_joint(ctx, rng, hi - lo)
        total += hi - lo
        for j, (k, i, l1, l2) in enumerate(pairs):
            left = np.einsum("bn,bn->b", np.conj(hhat[:, k, l1]), h[:, i, l1])
            right = np.einsum("bn,bn->b", np.conj(h[:, i, l2]), hhat[:, k, l2])
            sums[j] += np.sum(left * right)
    return sums / total


def theorem1_cases(plan, cluster):
    """One (k, i, l1, l2) tuple per Theorem-1 case, from the given plan."""
    k = 0
    copilot = [i for i in plan.copilot_sets[k] if i != k]
    others = [i for i in range(plan.K) if i not in plan.copilot_sets[k]]
    if not copilot or not others or cluster.L < 2:
        raise ValueError("need a co-pilot UE, a non-co-pilot UE, and two APs")
    return {
        "copilot-same-ap": (k, copilot[0], 0, 0),
        "copilot-cross-ap": (k, copilot[0], 0, 1),
        "orthogonal-same-ap": (k, others[0], 0, 0),
        "orthogonal-cross-ap": (k, others[0], 0, 1),
    }


def run_validation(cfg, seed):
    """All closed-form/MC agreement checks at the configured scale."""
    scenario = generate_scenario(cfg, seed)
    stats = channel_statistics(scenario, seed, cfg.asd_rad,
                               rayleigh=(cfg.fading == "rayleigh"))
    q = QuantizerConfig(b_da=cfg.b_da, b_ad=cfg.b_ad)
    powers = equal_power_plan(cfg.K, cfg.p_max_mw, q.rho_da)
    plan = round_robin_pilots(cfg.K, cfg.tau)
    cluster = full_cluster_plan(stats)
    ctx = build_estimation_context(stats, plan, powers.p_ddot, q, cfg.sigma2_mw)
    checks = []

    cases = theorem1_cases(plan, cluster)
    mc_vals = _kernel_mc(ctx, list(cases.values()), cfg.trials, seed)
    for (case, indices), mc in zip(cases.items(), mc_vals):
        closed = theorem1_kernel(*indices, ctx)
        scale = max(abs(closed), abs(mc), 1e-300)
        checks.append(Check("theorem1-kernel", case, float(abs(closed)),
                            float(abs(mc)), abs(closed - mc) / scale, 0.05))

    prelog = cfg.prelog
    closed_se = np.array([se_distributed_closed_max(
        build_ingredients(k, ctx, cluster), prelog) for k in range(cfg.K)])
    mc_report = distributed_mc_report(ctx, cluster, "mrc", "lsfd",
                                      cfg.trials, seed, prelog)
    for k in range(cfg.K):
        gap = abs(closed_se[k] - mc_report.se[k]) / max(closed_se[k], 1e-12)
        checks.append(Check("distributed-se", f"ue{k}", float(closed_se[k]),
                            float(mc_report.se[k]), gap, 0.02))

    closed_c = np.array([se_centralized_closed(k, ctx, cluster, prelog)
                         for k in range(cfg.K)])
    mc_c = centralized_mc_report(ctx, cluster, "mrc", cfg.trials, seed, prelog)
    gap = abs(closed_c.sum() - mc_c.sum_se) / max(closed_c.sum(), 1e-12)
    checks.append(Check("centralized-se", "sum", float(closed_c.sum()),
                        float(mc_c.sum_se), gap, 0.05))
    return checks


def run_invariant_checks(cfg, seed):
    """Structural invariants on a scheduled scenario; returns (name, ok, detail)."""
    scenario = generate_scenario(cfg, seed)
    stats = channel_statistics(scenario, seed, cfg.asd_rad,
                               rayleigh=(cfg.fading == "rayleigh"))
    q = QuantizerConfig(b_da=cfg.b_da, b_ad=cfg.b_ad)
    cluster, plan, powers = run_algorithm1(stats, q, cfg.tau, cfg.p_max_mw,
                                           eta_db=cfg.eta_db, nu=cfg.nu,
                                           d_bar=cfg.d_bar,
                                           iterations=cfg.iterations)
    ctx = build_estimation_context(stats, plan, powers.p_ddot, q, cfg.sigma2_mw)
    results = []

    def check(name, ok, detail=""):
        results.append((name, bool(ok), detail))

    herm = max(np.max(np.abs(stats.R[k, l] - np.conj(stats.R[k, l].T)))
               for k in range(cfg.K) for l in range(cfg.L))
    check("correlation-hermitian", herm < 1e-12, f"max asymmetry {herm:.2e}")
    min_eig = min(np.min(np.linalg.eigvalsh(hermitize(stats.R[k, l])))
                  for k in range(cfg.K) for l in range(cfg.L))
    check("correlation-psd", min_eig > -1e-10 * np.max(stats.beta_nlos),
          f"min eigenvalue {min_eig:.2e}")

    trace_gap = max(abs(np.trace(stats.R[k, l]).real
                        - cfg.N * stats.beta_nlos[k, l])
                    / (cfg.N * stats.beta_nlos[k, l])
                    for k in range(cfg.K) for l in range(cfg.L))
    check("correlation-trace", trace_gap < 1e-8, f"max rel gap {trace_gap:.2e}")

    psd_floor = 0.0
    for k in range(cfg.K):
        for l in range(cfg.L):
            err = hermitize(stats.R[k, l] - ctx.c_hhat[k, l])
            psd_floor = min(psd_floor, np.min(np.linalg.eigvalsh(err)))
    check("estimate-covariance-ordering",
          psd_floor > -1e-10 * np.max(stats.beta_nlos),
          f"min eigenvalue {psd_floor:.2e}")

    check("one-primary-per-ue",
          all(cluster.primary[k] in cluster.serving[k] for k in range(cfg.K)))
    ok = True
    for l in range(cfg.L):
        pilots_sec = [plan.pilot_of[k] for k in cluster.served_secondary[l]]
        ok &= len(pilots_sec) == len(set(pilots_sec))
    check("secondary-pilot-uniqueness", ok)
    ok = all((i in cluster.overlap[k]) == (k in cluster.overlap[i])
             for k in range(cfg.K) for i in range(cfg.K))
    check("overlap-symmetry", ok)
    full = cfg.p_max_mw * (1.0 - q.rho_da)
    check("full-power-ue-exists", np.max(powers.p_ddot) == full,
          f"max p̈ {np.max(powers.p_ddot):.6g} vs budget {full:.6g}")
    return results
