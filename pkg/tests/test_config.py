import json

import numpy as np
import pytest

from schrodinger_lab.config import ConfigError, config_hash, load_config, parse_config

BASE = {"space": {"type": "circle", "n": 16, "length": 1.0},
        "marginals": {"rho0": {"profile": "uniform"}, "rho1": {"profile": "sine", "amplitude": 0.3}},
        "eps": 0.5}


def with_changes(**kw):
    raw = json.loads(json.dumps(BASE))
    raw.update(kw)
    return raw


def test_defaults():
    spec = parse_config(BASE)
    assert (spec.tol, spec.max_iter, spec.K, spec.seed, spec.floor) == (1e-12, 50000, 64, 0, 0.0)
    assert spec.refinable


def test_missing_eps_named():
    raw = with_changes()
    del raw["eps"]
    with pytest.raises(ConfigError, match="missing field 'eps'"):
        parse_config(raw)


@pytest.mark.parametrize("patch, msg", [
    ({"eps": -1.0}, "'eps' must be > 0"),
    ({"eps": "big"}, "'eps' must be"),
    ({"K": 1}, "'K' must be >= 2"),
    ({"colour": 1}, "unknown field 'colour'"),
    ({"space": {"type": "torus", "n": 4}}, "space.type"),
    ({"space": {"type": "circle", "n": 2}}, "'space.n' must be >= 3"),
    ({"marginals": {"rho0": {"profile": "sine", "amplitude": 2}, "rho1": {"profile": "uniform"}}},
     "amplitude"),
    ({"verify": {"levels": [128, 64]}}, "verify.levels"),
])
def test_rejections(patch, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(with_changes(**patch))


def test_json_syntax_error_has_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "eps": 0.2,\n  oops\n}')
    with pytest.raises(ConfigError, match=r"bad\.json:3:3"):
        load_config(p)


def test_inline_values_length_checked():
    raw = {"space": {"type": "graph", "edges": [[0, 1, 1.0]], "weights": [1.0, 1.0]},
           "marginals": {"rho0": {"values": [1, 2, 3]}, "rho1": {"values": [1, 1]}}, "eps": 1.0}
    spec = parse_config(raw)
    assert not spec.refinable
    with pytest.raises(ConfigError, match="expected 2 entries"):
        spec.marginals(spec.build_space())


def test_profiles_evaluate():
    spec = parse_config(with_changes(marginals={
        "rho0": {"profile": "gaussian", "center": 0.0, "spread": 0.05},
        "rho1": {"profile": "cosine", "amplitude": 0.5, "frequency": 2}}))
    space = spec.build_space()
    r0, r1 = spec.marginals(space)
    # periodic distance: the bump wraps around the origin
    assert r0.values[1] == pytest.approx(r0.values[-1])
    np.testing.assert_allclose(r1.values, (1 + 0.5 * np.cos(4 * np.pi * space.coords)) / 1.0,
                               rtol=1e-12)


def test_hash_tracks_content():
    a, b = parse_config(BASE), parse_config(with_changes(seed=3))
    assert config_hash(a) == config_hash(parse_config(BASE))
    assert config_hash(a) != config_hash(b)
