import numpy as np
import pytest

from discret2di.tank import (
    NORMAL_CYCLE,
    ScenarioError,
    TankScenario,
    anomaly_sequence,
    anomaly_window,
    ellipse_distance,
    generate_property1,
    generate_property2,
    mass_balance_error,
    normal_sequence,
    simulate,
    PROPERTY2_A,
    PROPERTY2_B,
)


class TestSchedules:
    def test_normal_cycle(self):
        assert normal_sequence(1) == ("Q1", "V12", "V23", "Q1", "V12", "V23", "V3")

    def test_fifteen_cycles(self):
        assert len(normal_sequence(15)) == 105

    def test_two_cycles(self):
        assert normal_sequence(2) == NORMAL_CYCLE * 2

    def test_zero_cycles_rejected(self):
        with pytest.raises(ScenarioError):
            normal_sequence(0)

    def test_anomaly_replaces_both_occurrences(self):
        sched = anomaly_sequence("v12", 1)
        assert len(sched) == 9 * 7
        middle = sched[4 * 7:5 * 7]
        assert middle == ("Q1", "V12_faulty", "V23", "Q1", "V12_faulty", "V23", "V3")
        # surrounding cycles untouched
        assert sched[:28] == normal_sequence(4)
        assert sched[35:] == normal_sequence(4)

    def test_three_anomalous_cycles(self):
        assert len(anomaly_sequence("q1", 3)) == 11 * 7

    def test_invalid_cycle_count(self):
        with pytest.raises(ScenarioError):
            anomaly_sequence("q1", 2)

    def test_invalid_fault_name(self):
        with pytest.raises(ScenarioError, match="unknown fault"):
            anomaly_sequence("kv9", 1)

    def test_window_spans_anomalous_cycles(self):
        start, stop = anomaly_window(3, samples_per_state=50)
        assert (start, stop) == (4 * 350, 7 * 350)


class TestSimulate:
    def test_q1_only_fills_tank1(self):
        ts = simulate(TankScenario(schedule=("Q1",)))
        h = ts.values[:, :3]
        assert np.all(np.diff(h[:, 0]) > 0)
        assert np.all(h[:, 1] == 0.0)
        assert np.all(h[:, 2] == 0.0)

    def test_all_zero_actuation_stays_at_zero(self):
        ts = simulate(TankScenario(schedule=("V23_faulty",)))
        assert np.all(ts.values[:, :3] == 0.0)

    def test_deterministic_per_seed(self):
        sc = TankScenario(schedule=normal_sequence(2), noise_sigma=0.1, seed=7)
        assert np.array_equal(simulate(sc).values, simulate(sc).values)

    def test_unknown_state_rejected(self):
        with pytest.raises(ScenarioError, match="unknown state"):
            TankScenario(schedule=("NOPE",))

    def test_levels_never_negative(self):
        sc = TankScenario(schedule=normal_sequence(3), noise_sigma=0.0)
        assert np.all(simulate(sc).values[:, :3] >= 0.0)

    def test_mass_balance(self):
        sc = TankScenario(schedule=normal_sequence(3))
        assert mass_balance_error(sc) < 1e-6

    def test_noise_only_on_level_channels(self):
        quiet = simulate(TankScenario(schedule=normal_sequence(1), noise_sigma=0.0))
        noisy = simulate(TankScenario(schedule=normal_sequence(1), noise_sigma=0.5, seed=3))
        assert np.array_equal(quiet.values[:, 3:], noisy.values[:, 3:])
        assert not np.array_equal(quiet.values[:, :3], noisy.values[:, :3])

    def test_output_shape_and_channels(self):
        sc = TankScenario(schedule=normal_sequence(2), samples_per_state=10)
        ts = simulate(sc)
        assert len(ts) == 14 * 10
        assert ts.channels == ("h1", "h2", "h3", "q1", "q3", "kv1", "kv2", "kv3")

    def test_phase_labels_align(self):
        sc = TankScenario(schedule=("Q1", "V3"), samples_per_state=3)
        assert sc.phase_labels() == ["Q1"] * 3 + ["V3"] * 3

    def test_state_carries_over_between_phases(self):
        ts = simulate(TankScenario(schedule=("Q1", "V23_faulty")))
        h1 = ts.values[:, 0]
        # idle second phase holds the level reached by the first
        assert h1[50] == pytest.approx(h1[49], abs=1e-12)

    def test_scenario_json_roundtrip(self, tmp_path):
        sc = TankScenario(schedule=normal_sequence(1), noise_sigma=0.2, seed=5)
        p = tmp_path / "sc.json"
        import json

        p.write_text(json.dumps(sc.to_dict()))
        back = TankScenario.from_json(p)
        assert back == sc


class TestProperty1:
    def test_component_counts_near_equal(self):
        # multinomial with p=1/3: sigma = sqrt(n p (1-p)) ~ 25.8; allow 4 sigma
        ds = generate_property1(3000, seed=0)
        labels = ds.channel("label").astype(int)
        counts = np.bincount(labels, minlength=3)
        sigma = np.sqrt(3000 * (1 / 3) * (2 / 3))
        assert np.all(np.abs(counts - 1000) <= 4 * sigma)

    def test_zero_sigma_collapses_to_means(self):
        ds = generate_property1(30, seed=1, sigma=0.0)
        pts = ds.values[:, :2]
        labels = ds.channel("label").astype(int)
        from discret2di.tank import PROPERTY1_MEANS

        assert np.allclose(pts, PROPERTY1_MEANS[labels])

    def test_deterministic(self):
        a = generate_property1(100, seed=9)
        b = generate_property1(100, seed=9)
        assert np.array_equal(a.values, b.values)

    def test_too_few_samples(self):
        with pytest.raises(ScenarioError):
            generate_property1(2)


class TestProperty2:
    def test_zero_noise_lies_on_ellipse(self):
        ds = generate_property2(500, seed=2, noise=0.0)
        x, y = ds.values[:, 0], ds.values[:, 1]
        assert np.allclose((x / PROPERTY2_A) ** 2 + (y / PROPERTY2_B) ** 2, 1.0, atol=1e-9)

    def test_two_angular_modes(self):
        # theta recovered from the noise-free geometry clusters around 0 and pi
        ds = generate_property2(4000, seed=3, noise=0.0)
        labels = ds.channel("label").astype(int)
        theta = np.arctan2(ds.values[:, 1] / PROPERTY2_B, ds.values[:, 0] / PROPERTY2_A)
        centered = np.where(labels == 0, theta, np.angle(np.exp(1j * (theta - np.pi))))
        # 3 sigma_theta = 1.5 captures 99.7% per mode
        assert (np.abs(centered) <= 1.5).mean() > 0.99

    def test_deterministic(self):
        a = generate_property2(64, seed=4)
        b = generate_property2(64, seed=4)
        assert np.array_equal(a.values, b.values)

    def test_too_few_samples(self):
        with pytest.raises(ScenarioError):
            generate_property2(1)

    def test_ellipse_distance_anchors(self):
        assert ellipse_distance((PROPERTY2_A, 0.0)) == pytest.approx(0.0, abs=1e-9)
        assert ellipse_distance((PROPERTY2_A + 1.0, 0.0)) == pytest.approx(1.0, abs=1e-6)
        assert ellipse_distance((0.0, 0.0)) == pytest.approx(PROPERTY2_B, abs=1e-6)
