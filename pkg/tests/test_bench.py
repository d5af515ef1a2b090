from __future__ import annotations

import pytest

from hexevade.bench import (
    EpisodeSummary,
    compare_realtime,
    derive_seed,
    mid_episode_state,
    paired_binomial_pvalue,
    run_episode_batch,
    summarize,
    sweep_survival,
    sweep_timing,
    wilson_ci,
)
from hexevade.sim import EpisodeConfig, run_episode
from hexevade.world import builtin_world_path

PAPER = str(builtin_world_path("arena_paper"))
TINY = str(builtin_world_path("arena_tiny"))


def base_cfg(**kw) -> EpisodeConfig:
    base = dict(world=TINY, planner="tlppo", budget_branches=20, max_ticks=120,
                percentile=80.0, particles=200)
    base.update(kw)
    return EpisodeConfig(**base)


class TestStats:
    def test_wilson_interval_brackets_proportion(self):
        lo, hi = wilson_ci(172, 200)
        assert lo <= 172 / 200 <= hi
        assert 0.0 <= lo < hi <= 1.0

    def test_wilson_tightens_with_n(self):
        lo1, hi1 = wilson_ci(86, 100)
        lo2, hi2 = wilson_ci(860, 1000)
        assert (hi2 - lo2) < (hi1 - lo1)

    def test_wilson_needs_data(self):
        with pytest.raises(ValueError):
            wilson_ci(0, 0)

    def test_paired_binomial_extremes(self):
        assert paired_binomial_pvalue(0, 0) == 1.0
        assert paired_binomial_pvalue(5, 5) == 1.0
        # 30 discordant pairs all one way
        assert paired_binomial_pvalue(30, 0) < 1e-6

    def test_paired_binomial_matches_hand_computation(self):
        # b=8, c=2: p = 2 * sum_{i<=2} C(10,i) / 2^10
        want = 2 * (1 + 10 + 45) / 1024
        assert paired_binomial_pvalue(8, 2) == pytest.approx(want)

    def test_derive_seed_stable_and_distinct(self):
        assert derive_seed(5, 0) == derive_seed(5, 0)
        assert derive_seed(5, 0) != derive_seed(5, 1)
        assert derive_seed(5, 0) != derive_seed(6, 0)


def _fingerprint(s: EpisodeSummary) -> tuple:
    # wall-clock plan time varies run to run; everything else must not
    return (s.outcome, s.ticks, s.plan_calls, s.total_branches, s.depletions,
            s.overruns, s.seed, s.trace_hash)


class TestBatch:
    def test_summaries_match_direct_runs(self):
        cfg = base_cfg()
        seeds = [derive_seed(1, i) for i in range(4)]
        got = run_episode_batch(cfg, seeds, workers=1)
        for seed, summary in zip(seeds, got):
            import dataclasses

            direct = summarize(run_episode(dataclasses.replace(cfg, seed=seed)))
            assert _fingerprint(summary) == _fingerprint(direct)

    def test_parallel_equals_serial(self):
        cfg = base_cfg()
        seeds = [derive_seed(2, i) for i in range(6)]
        serial = run_episode_batch(cfg, seeds, workers=1)
        parallel = run_episode_batch(cfg, seeds, workers=2)
        assert [_fingerprint(s) for s in serial] == [_fingerprint(s) for s in parallel]


class TestSweeps:
    def test_sweep_survival_shape_and_reproducibility(self, tmp_path):
        cfg = base_cfg()
        recs1 = sweep_survival("tlppo", [5, 10], 6, cfg, master_seed=3)
        recs2 = sweep_survival("tlppo", [5, 10], 6, cfg, master_seed=3)
        det = lambda r: (r.planner, r.budget_branches, r.episodes, r.survival,
                         r.survival_ci95, r.censored)
        assert [det(r) for r in recs1] == [det(r) for r in recs2]
        for r in recs1:
            assert r.episodes == 6
            assert 0.0 <= r.survival <= 1.0
            assert r.survival_ci95[0] <= r.survival <= r.survival_ci95[1]
            assert r.time_per_branch_s == pytest.approx(
                r.mean_plan_time_s / r.budget_branches
            )

    def test_sweep_point_caching_resumes(self, tmp_path):
        cfg = base_cfg()
        recs1 = sweep_survival("tlppo", [5, 10], 4, cfg, 7, out_dir=tmp_path)
        cache_files = list((tmp_path / "points").glob("*.json"))
        assert len(cache_files) == 2
        # cached rerun returns identical records (including timing) since it
        # reads the frozen point files instead of recomputing
        recs2 = sweep_survival("tlppo", [5, 10], 4, cfg, 7, out_dir=tmp_path)
        assert [r.__dict__ for r in recs1] == [r.__dict__ for r in recs2]

    def test_no_aggregation_drift(self):
        # survival recomputed from the raw per-episode summaries equals the
        # sweep record's field
        cfg = base_cfg()
        seeds = [derive_seed(3, i) for i in range(6)]
        summaries = run_episode_batch(
            __import__("dataclasses").replace(cfg, budget_branches=5), seeds
        )
        recs = sweep_survival("tlppo", [5], 6, cfg, master_seed=3)
        raw = sum(1 for s in summaries if s.outcome == "survived") / len(summaries)
        assert recs[0].survival == raw

    def test_budgets_must_be_sorted(self):
        with pytest.raises(ValueError):
            sweep_survival("tlppo", [10, 5], 2, base_cfg(), 0)

    def test_unloseable_arena_scores_one(self):
        # every spawn cell sits inside a sealed pocket: no path to the prey
        # exists, so even a budget of one branch survives every episode
        from hexevade.world import HexCoord, WorldSpec

        wall = [(-1, -9), (-1, -8), (0, -8), (1, -8), (2, -10), (2, -9)]
        spec = WorldSpec(
            cell_spacing_m=0.11,
            start_gate=HexCoord(0, 9),
            goal=HexCoord(0, 10),
            hex_radius=10,
            occlusions=tuple(HexCoord(q, r) for q, r in wall),
        )
        cfg = base_cfg(world=spec, max_ticks=400)
        recs = sweep_survival("tlppo", [1], 5, cfg, 11)
        assert recs[0].survival == 1.0

    def test_timing_sweep_monotone_and_single_process(self):
        cfg = base_cfg(world=PAPER)
        recs = sweep_timing("tlppo", [10, 40], reps=3, base_cfg=cfg)
        assert recs[0].mean_plan_time_s <= recs[1].mean_plan_time_s
        assert all(r.episodes == 3 for r in recs)

    def test_mid_episode_state_is_fixed(self):
        cfg = base_cfg(world=PAPER)
        _, prey1, b1 = mid_episode_state(cfg)
        _, prey2, b2 = mid_episode_state(cfg)
        assert prey1 == prey2
        assert b1.positions.tolist() == b2.positions.tolist()


class TestCompareRealtime:
    def test_zero_episodes_rejected(self):
        with pytest.raises(ValueError):
            compare_realtime(base_cfg(), episodes=0)

    def test_rows_include_reference(self):
        cfg = base_cfg(world=PAPER, percentile=80.0)
        rows = compare_realtime(
            cfg, episodes=3, master_seed=1, budget_s=0.01, branch_cap=30
        )
        agents = [r["agent"] for r in rows]
        assert agents == ["tlppo", "pomcp", "reference_mice"]
        ref = rows[-1]
        assert ref["survival"] == pytest.approx(0.86)
        assert ref["episodes"] == 230
        for row in rows[:2]:
            assert row["episodes"] == 3
            assert 0.0 <= row["survival"] <= 1.0
