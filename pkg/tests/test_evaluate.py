import numpy as np
import pytest

from armpoint import evaluate, mocap, synth
from armpoint.env import EnvConfig, PDArmEnv, ScriptedPointingPolicy
from armpoint.errors import EmptyInput, IncompatibleCheckpoint, SeriesTooShort
from armpoint.evaluate import (
    compare_models,
    export_profiles,
    polyline_svg,
    report_clips_csv,
    reward_stats,
    smoothness,
)
from armpoint.geom import Hand
from armpoint.synth import SynthParams, default_skeleton, generate_pointing_clip

FRONT_TARGET = np.array([-0.15, 1.45, 0.42])


class TestRewardStats:
    def test_constant_clip(self):
        rows, agg = reward_stats([np.full(10, 0.5)])
        assert rows == [(0.5, 0.5, 0.5)]
        assert agg["r_mean"] == (0.5, 0.0)

    def test_two_clip_aggregate_sample_sd(self):
        rows, agg = reward_stats([np.full(5, 0.4), np.full(5, 0.6)])
        mean, sd = agg["r_mean"]
        assert mean == pytest.approx(0.5)
        assert sd == pytest.approx(0.1414, abs=1e-3)  # sample (n-1) convention

    def test_empty_rejected(self):
        with pytest.raises(EmptyInput):
            reward_stats([])
        with pytest.raises(EmptyInput):
            reward_stats([np.array([])])

    def test_row_ordering_invariant(self):
        rng = np.random.default_rng(0)
        rows, _ = reward_stats([rng.uniform(0, 1, 50) for _ in range(8)])
        for r_max, r_min, r_mean in rows:
            assert r_min <= r_mean <= r_max


class TestSmoothness:
    def test_constant_series(self):
        assert smoothness(np.full(10, 0.3), dt=1 / 30) == (0.0, 0.0, 0.0)

    def test_linear_ramp(self):
        dt = 1 / 30
        t = np.arange(12) * dt
        vel, acc, jerk = smoothness(2.5 * t, dt=dt)
        assert vel == pytest.approx(2.5, abs=1e-9)
        assert acc == pytest.approx(0.0, abs=1e-7)
        assert jerk == pytest.approx(0.0, abs=1e-5)

    def test_too_short(self):
        with pytest.raises(SeriesTooShort):
            smoothness(np.array([1.0, 2.0, 3.0]), dt=0.1)

    def test_shift_invariance_and_homogeneity(self):
        rng = np.random.default_rng(1)
        series = rng.uniform(0, 1, 40)
        base = smoothness(series, dt=1 / 30)
        shifted = smoothness(series + 5.0, dt=1 / 30)
        scaled = smoothness(series * 3.0, dt=1 / 30)
        assert shifted == pytest.approx(base, abs=1e-9)
        assert scaled == pytest.approx(tuple(3.0 * b for b in base), rel=1e-9)

    def test_noisy_vs_clean_jerk(self):
        # paired synthetic episodes: clean vs 0.02 m filtered hand noise
        skel = default_skeleton()
        thetas = {}
        for label, amp in (("clean", 0.0), ("noisy", 0.02)):
            clip = generate_pointing_clip(
                skel, SynthParams(target=FRONT_TARGET, seed=6, noise_amplitude=amp)
            )
            seg = (
                mocap.segment_pointing(clip)[0]
                if amp == 0.0
                else mocap.Segment(
                    clip=clip,
                    hand=Hand.RIGHT,
                    onset=clip.annotations[0].onset,
                    peak_velocity=clip.annotations[0].peak_velocity,
                    hold_start=clip.annotations[0].hold_start,
                    offset=clip.annotations[0].offset,
                    target_index=0,
                )
            )
            profile = mocap.precision_profile(seg)
            thetas[label] = profile[~np.isnan(profile)]
        clean = smoothness(thetas["clean"], dt=1 / 120)
        noisy = smoothness(thetas["noisy"], dt=1 / 120)
        assert noisy[2] >= 5.0 * clean[2]


class TestExportProfiles:
    def test_single_input_zero_sd(self):
        mean, sd = export_profiles([np.linspace(0, 1, 33)], bins=50)
        assert mean.shape == (50,)
        assert np.allclose(sd, 0.0)

    def test_identical_inputs(self):
        series = np.sin(np.linspace(0, 3, 40))
        mean, sd = export_profiles([series, series], bins=40)
        assert np.allclose(mean, series)
        assert np.allclose(sd, 0.0)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            export_profiles([])


@pytest.fixture(scope="module")
def eval_env_config():
    clip = generate_pointing_clip(
        default_skeleton(), SynthParams(target=FRONT_TARGET, seed=4, alignment_error=0.0)
    )
    return EnvConfig(reference_clips=(clip,))


class RandomPolicy:
    obs_dim, act_dim = 18, 4

    def __init__(self, seed=0):
        self.rng = np.random.default_rng(seed)

    def act_deterministic(self, obs):
        return self.rng.uniform(-1.5, 1.5, 4)


class TestCompareModels:
    def targets(self, env_config, n=4):
        env = PDArmEnv(env_config)
        rng = np.random.default_rng(77)
        return [env.sample_target(rng) for _ in range(n)]

    def test_deterministic_reports(self, eval_env_config):
        models = {"expert": ScriptedPointingPolicy(eval_env_config)}
        targets = self.targets(eval_env_config)
        a = compare_models(models, eval_env_config, targets, seed=5)
        b = compare_models(models, eval_env_config, targets, seed=5)
        assert report_clips_csv(a) == report_clips_csv(b)

    def test_expert_dominates_random(self, eval_env_config):
        targets = self.targets(eval_env_config)
        reports = compare_models(
            {"expert": ScriptedPointingPolicy(eval_env_config), "random": RandomPolicy()},
            eval_env_config,
            targets,
            seed=5,
        )
        expert_rows = reports["expert"].rows
        random_rows = reports["random"].rows
        for e_row, r_row in zip(expert_rows, random_rows):
            assert e_row.r_max > r_row.r_max

    def test_model_order_invariance(self, eval_env_config):
        targets = self.targets(eval_env_config)
        expert = ScriptedPointingPolicy(eval_env_config)
        a = compare_models(
            {"expert": expert, "random": RandomPolicy(0)}, eval_env_config, targets, seed=5
        )
        b = compare_models(
            {"random": RandomPolicy(0), "expert": expert}, eval_env_config, targets, seed=5
        )
        assert report_clips_csv(a) == report_clips_csv(b)

    def test_incompatible_model_rejected(self, eval_env_config):
        class WrongDims:
            obs_dim, act_dim = 9, 4

            def act_deterministic(self, obs):
                return np.zeros(4)

        with pytest.raises(IncompatibleCheckpoint):
            compare_models(
                {"bad": WrongDims()}, eval_env_config, self.targets(eval_env_config), seed=0
            )

    def test_empty_targets(self, eval_env_config):
        with pytest.raises(EmptyInput):
            compare_models({}, eval_env_config, [], seed=0)


class TestSvg:
    def test_polyline_structure(self):
        svg = polyline_svg({"a": np.linspace(0, 0.6, 30), "b": np.zeros(30)}, "demo")
        assert svg.startswith("<svg")
        assert svg.count("<polyline") == 2
        assert "demo" in svg
