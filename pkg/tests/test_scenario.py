import numpy as np
import pytest

from cfisac.config import NetworkConfig
from cfisac.scenario import build_scenario, draw_ap_layout, generate_scenario, pathloss, setup_seed, stream


def test_pathloss_values():
    assert np.isclose(pathloss(1.0), 10**-3.05, rtol=1e-12)
    assert np.isclose(pathloss(10.0), 10**-6.72, rtol=1e-12)
    assert pathloss(100.0) < pathloss(10.0) < pathloss(1.0)
    d = np.linspace(1, 1000, 500)
    g = pathloss(d)
    assert np.all(np.diff(g) < 0) and np.all((g > 0) & (g < 1))


def test_nearest_ap_is_sensing():
    cfg = NetworkConfig(K=1, R=1, U=1)
    scn = build_scenario(cfg, [(250, 240), (0, 0)], [(100, 100)], target_position=(250, 250))
    assert list(scn.sensing_set) == [0]
    assert list(scn.comm_set) == [1]


def test_determinism_and_bounds():
    cfg = NetworkConfig()
    a = generate_scenario(cfg, 7)
    b = generate_scenario(cfg, 7)
    for f in ("ap_positions", "ue_positions", "beta", "tx_angles", "ap_pair_angles"):
        assert np.array_equal(getattr(a, f), getattr(b, f))
    for seed in range(100):
        s = generate_scenario(cfg, seed)
        assert s.ap_positions.shape == (34, 2) and s.ue_positions.shape == (8, 2)
        assert np.all((s.ap_positions >= 0) & (s.ap_positions <= 500))
        assert np.all((s.ue_positions >= 0) & (s.ue_positions <= 500))
        assert np.all(s.beta > 0)
        d = np.linalg.norm(s.ap_positions - s.target_position, axis=1)
        assert len(s.sensing_set) == cfg.R
        assert d[s.comm_set].min() >= d[s.sensing_set].max()
        assert sorted(np.concatenate([s.sensing_set, s.comm_set])) == list(range(34))


def test_fixed_layout_only_moves_ues():
    cfg = NetworkConfig()
    aps = draw_ap_layout(cfg, 3)
    a = generate_scenario(cfg, setup_seed(0, 1), aps)
    b = generate_scenario(cfg, setup_seed(0, 2), aps)
    assert np.array_equal(a.ap_positions, b.ap_positions)
    assert not np.array_equal(a.ue_positions, b.ue_positions)


def test_streams_are_independent():
    x = stream(5, "channels").standard_normal(4)
    y = stream(5, "symbols").standard_normal(4)
    assert not np.allclose(x, y)
    assert setup_seed(0, 1) != setup_seed(0, 2) and setup_seed(0, 1) == setup_seed(0, 1)


def test_shadowing_flag():
    cfg = NetworkConfig(shadowing=True)
    a = generate_scenario(cfg, 1)
    b = generate_scenario(cfg.replace(shadowing=False), 1)
    assert np.array_equal(a.ue_positions, b.ue_positions)
    assert not np.allclose(a.beta, b.beta)
    with pytest.raises(ValueError):
        build_scenario(cfg, a.ap_positions, a.ue_positions)


def test_wrong_counts():
    cfg = NetworkConfig(K=2, R=1, U=1)
    with pytest.raises(ValueError):
        build_scenario(cfg, [(0, 0)] * 2, [(1, 1)])
