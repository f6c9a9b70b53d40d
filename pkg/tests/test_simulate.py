import numpy as np
import pytest

from rtsurv.core import GenerationInterval
from rtsurv.estimator import infectivity_profile
from rtsurv.simulate import parse_profile, parse_seeds, simulate


def test_zero_profile_dies_out(default_gi):
    sim = simulate(np.zeros(50), default_gi, [100] * 5, 50, np.random.default_rng(0))
    assert np.array_equal(sim.counts[:5], [100] * 5)
    assert np.all(sim.counts[5:] == 0)


def test_seeds_verbatim(default_gi):
    sim = simulate(np.ones(10), default_gi, [3, 0, 9], 10, np.random.default_rng(0))
    assert list(sim.counts[:3]) == [3, 0, 9]


def test_critical_level_held(default_gi):
    n = default_gi.n
    days = n + 60
    rng = np.random.default_rng(11)
    means = []
    for _ in range(200):
        sim = simulate(np.ones(days), default_gi, [10**4] * n, days, rng)
        means.append(sim.counts[n:].mean())
    assert abs(np.mean(means) / 1e4 - 1.0) < 0.05


def test_golden_run(default_gi):
    sim = simulate(np.full(40, 1.5), default_gi, [20] * 5, 40, np.random.default_rng(7))
    # frozen from the first verified run
    assert sim.counts.tolist() == GOLDEN_SEED7


GOLDEN_SEED7 = [20, 20, 20, 20, 20, 16, 13, 22, 17, 18, 23, 19, 27, 26, 30, 29, 35, 31, 43, 34, 42, 47, 36,
                50, 49, 40, 54, 68, 65, 71, 70, 74, 108, 92, 108, 90, 133, 121, 130, 154]


def test_conditional_mean():
    gi = GenerationInterval([0.2, 0.5, 0.3])
    history = [40, 55, 70, 62]
    r = np.array([0, 0, 0, 0, 1.7])
    lam = infectivity_profile(np.array(history + [0]), gi)[4]
    rng = np.random.default_rng(5)
    draws = [simulate(r, gi, history, 5, rng).counts[4] for _ in range(10**4)]
    assert abs(np.mean(draws) / lam / 1.7 - 1.0) < 0.02


def test_deterministic_and_decorrelated(default_gi):
    r = np.full(120, 1.0)
    a = simulate(r, default_gi, [1000] * 40, 120, np.random.default_rng(1))
    b = simulate(r, default_gi, [1000] * 40, 120, np.random.default_rng(1))
    c = simulate(r, default_gi, [1000] * 40, 120, np.random.default_rng(2))
    assert np.array_equal(a.counts, b.counts)
    fa = np.diff(a.counts[40:].astype(float))
    fc = np.diff(c.counts[40:].astype(float))
    assert abs(np.corrcoef(fa, fc)[0, 1]) < 0.1


def test_extinction_allowed():
    gi = GenerationInterval([1.0])
    sim = simulate(np.full(30, 0.1), gi, [1], 30, np.random.default_rng(3))
    assert sim.counts[-1] == 0


@pytest.mark.parametrize("kwargs", [
    dict(r_profile=[-0.5] * 10),
    dict(seed_cases=[-1]),
    dict(seed_cases=[]),
    dict(r_profile=[1.0] * 5),
    dict(days=0),
])
def test_domain_errors(default_gi, kwargs):
    args = dict(r_profile=[1.0] * 10, seed_cases=[5], days=10)
    args.update(kwargs)
    with pytest.raises(ValueError):
        simulate(args["r_profile"], default_gi, args["seed_cases"], args["days"], np.random.default_rng(0))


class TestParsers:
    def test_profile(self):
        p = parse_profile("2.0x60,0.7x120")
        assert p.size == 180 and p[59] == 2.0 and p[60] == 0.7

    @pytest.mark.parametrize("bad", ["", "2.0", "x5", "1.0x0", "a x 3", "-1x4"])
    def test_profile_errors(self, bad):
        with pytest.raises(ValueError):
            parse_profile(bad)

    def test_seeds(self):
        assert parse_seeds("100x5").tolist() == [100] * 5
        assert parse_seeds("10, 20,30").tolist() == [10, 20, 30]

    @pytest.mark.parametrize("bad", ["", "ax3", "1,-2", "3xq"])
    def test_seed_errors(self, bad):
        with pytest.raises(ValueError):
            parse_seeds(bad)
