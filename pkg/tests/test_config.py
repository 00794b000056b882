import math
from pathlib import Path

import pytest

from allencahn.config import DtRule, SchemeKind, evaluate, load_config, parse_config
from allencahn.errors import ConfigError

TRAVELING = """
# traveling wave
problem = TravelingWave
eps = tanh(0.9) / (16 * sqrt(2))   # interface width
dx = 1/64
dt = 5 / 64**2
t_end = 1 / s_eps
"""


def test_evaluate():
    assert evaluate("2**3 + 1") == 9
    assert evaluate("pi / 2") == math.pi / 2
    assert evaluate("-sqrt(4) * a", {"a": 1.5}) == -3.0
    for bad in ("__import__('os')", "a.b", "[1]", "1 if 1 else 2", "x", "sqrt(-1)", "1/0", "1 +"):
        with pytest.raises(ConfigError):
            evaluate(bad)


def test_parse_traveling_wave():
    cfg = parse_config(TRAVELING)
    eps = math.tanh(0.9) / (16 * math.sqrt(2))
    assert cfg.eps == pytest.approx(eps, rel=1e-15)
    assert cfg.t_end == pytest.approx(math.sqrt(2) / (3 * eps), rel=1e-15)
    assert cfg.grid.n == 192 and cfg.grid.nbar == 194
    assert cfg.scheme is SchemeKind.RLB_MIE_FD
    assert cfg.n_steps == round(cfg.t_end / cfg.dt)
    assert cfg.validate().valid


def test_eps_ratio_mode():
    cfg = parse_config(
        "problem = TravelingWave\nomega1 = 1/2\neps_ratio = 0.45\ndx = 1/32\ndt = 1/5\n"
        "t_end = 1/s_eps\nallow_unsafe = true\nscheme = fex-fd\n"
    )
    assert cfg.scheme is SchemeKind.FEX_FD
    assert cfg.eps == pytest.approx(math.sqrt(0.45 / 32**2 * 5), rel=1e-15)
    assert cfg.problem.eps_interface == pytest.approx(cfg.eps, rel=1e-15)
    assert cfg.params().eps_ratio == pytest.approx(0.45, rel=1e-15)
    assert cfg.params().unsafe


def test_unsafe_params_rejected_without_flag():
    cfg = parse_config("problem = TravelingWave\neps_ratio = 0.45\ndx = 1/32\ndt = 1/5\nt_end = 1\n")
    with pytest.raises(ConfigError):
        cfg.validate()


@pytest.mark.parametrize(
    "text",
    [
        "problem = TravelingWave\neps = 0.1\ndx = 0.1\nt_end = 1\n",  # missing dt
        "problem = TravelingWave\neps = 0.1\ndx = 0.1\ndt = 0.1\nt_end = 1\nfoo = 1\n",
        "problem = TravelingWave\neps = 0.1\ndx = 0.1\ndt = 0.1\ndt = 0.2\nt_end = 1\n",
        "problem = TravelingWave\neps = 0.1\ndx = 0.1\ndt = 0.1\nt_end = -1\n",
        "problem = TravelingWave\ndx = 0.1\ndt = 0.1\nt_end = 1\n",  # no eps
        "problem = TravelingWave\neps = 0.1\ndx = 0.1\ndt = 0.1\nt_end = 1\nsnapshot_times = 2\n",
        "problem = TravelingWave\neps = 0.1\ndx = 0.1\ndt = 0.1\nt_end = 1\nsnapshot_times = 0.15\n",
        "problem = TravelingWave\neps = 0.1\ndx = 0.7\ndt = 0.1\nt_end = 1\n",  # dx does not divide
        "problem = Blob\neps = 0.1\ndx = 0.1\ndt = 0.1\nt_end = 1\n",
        "problem = TravelingWave\neps = 0.1\ndx = 0.1\ndt = 0.1\nt_end = 1\nscheme = RK4\n",
        "problem TravelingWave\n",
        "problem = TravelingWave\neps = 0.1\ndx = 0.1\ndt = 0.1\nt_end = 1\nallow_unsafe = maybe\n",
        "problem = TravelingWave\neps = 0.1\ndx = 0.1\ndt = 0.1\nt_end = 1\nseed = 1.5\n",
        "problem = TravelingWave\neps = 0.1\ndx = 0.1\ndt = 0.1\nt_end = 1\nsnapshot_format = binary\n",
    ],
)
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_full_key_set(tmp_path):
    text = """
problem = Circle2D
eps = 5 * (1/64) * tanh(0.9) / sqrt(2)
radius = 0.5
n = 128
dt = 1/100
t_end = 1
snapshot_times = 0, 0.5, 1
energy_every = 10
output_dir = out
dt_rule = fixed
newton_tol = 1e-10
normalize_l2 = yes
"""
    path = tmp_path / "c.cfg"
    path.write_text(text, encoding="utf-8")
    cfg = load_config(path, seed=7, output_dir=str(tmp_path / "o"))
    assert cfg.grid.dx == 1 / 64
    assert cfg.snapshot_times == (0.0, 0.5, 1.0)
    assert cfg.energy_every == 10
    assert cfg.problem.seed == 7 and cfg.seed == 7
    assert cfg.output_dir == tmp_path / "o"
    assert cfg.dt_rule is DtRule.FIXED
    assert cfg.normalize_l2 is True
    assert cfg.problem.radius == 0.5


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.cfg")


def test_example_configs_parse():
    root = Path(__file__).resolve().parents[1] / "configs"
    paths = sorted(root.glob("*.cfg"))
    assert paths
    for path in paths:
        load_config(path)
