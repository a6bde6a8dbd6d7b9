import itertools
import math

import numpy as np
import pytest

from gfkmc import propagator as P
from gfkmc import rng
from gfkmc.errors import GuardExhaustedError, ParameterError
from gfkmc.library import preset
from gfkmc.system import AtomSpec, HELIUM, HYDROGEN, LatticeToy
from gfkmc.trial import SlaterProduct


def enumerate_expectation(potential, start, scale, steps, checkpoints):
    """Exact E[exp(-(1/n) sum V(W(l)))] over all 2^(steps*d) equiprobable paths."""
    start = np.asarray(start, dtype=float)
    d = start.size
    n = scale * scale
    moves = np.array(list(itertools.product((-1.0, 1.0), repeat=steps * d))).reshape(-1, steps, d)
    pos = start + np.cumsum(moves, axis=1) / scale
    v = np.stack([potential(pos[:, l, :]) for l in range(steps)], axis=1)
    cum = np.cumsum(v, axis=1)
    return [float(np.mean(np.exp(-cum[:, c - 1] / n))) for c in checkpoints]


POTENTIALS = {
    "harmonic": lambda x: 0.5 * np.sum(x * x, axis=-1),
    "cosine": lambda x: 1.0 + np.cos(2.0 * np.sum(x, axis=-1)),
    "well": lambda x: -1.5 / (1.0 + np.sum(x * x, axis=-1)),
}


def toy_run(name, dim, scale, times, count, seed=3):
    system = LatticeToy(dim, POTENTIALS[name])
    cfg = P.PathConfig(scale, times, mode=P.FK)
    start = np.full((count, dim), 0.3)
    states = rng.substreams(seed, 0, count)
    z, _, _ = P.run_batch(system, cfg, states, start)
    return cfg, z


@pytest.mark.parametrize("name", sorted(POTENTIALS))
@pytest.mark.parametrize("dim, scale, times", [(1, 2, (1.0, 2.0, 3.0)), (2, 2, (0.5, 1.0, 1.5))])
def test_monte_carlo_matches_path_enumeration(name, dim, scale, times):
    cfg, z = toy_run(name, dim, scale, times, 20000)
    exact = enumerate_expectation(POTENTIALS[name], [0.3] * dim, scale, cfg.checkpoint_steps[-1], cfg.checkpoint_steps)
    mean = z.mean(axis=0)
    se = z.std(axis=0, ddof=1) / math.sqrt(z.shape[0])
    assert np.all(np.abs(mean - exact) <= 3 * se + 1e-15)


def test_enumeration_sixteen_paths_example():
    # n = 4, t = 1: all 16 paths of a 1-D walk, harmonic potential
    exact = enumerate_expectation(POTENTIALS["harmonic"], [0.0], 2, 4, [4])[0]
    by_hand = 0.0
    for signs in itertools.product((-1, 1), repeat=4):
        x = np.cumsum(signs) / 2.0
        by_hand += math.exp(-np.sum(0.5 * x * x) / 4) / 16
    assert exact == pytest.approx(by_hand, rel=1e-14)


def test_fk_step_moves_every_coordinate_by_one_lattice_step():
    cfg = P.PathConfig(30, (1.0,), mode=P.FK)
    start = np.array([[[0.5, 0.2, -0.7], [1.1, -0.4, 0.3]]] * 4)
    acc = P.start_accumulator(start)
    states = rng.substreams(9, 0, 4)
    acc2, _ = P.fk_step(P.start_accumulator(start), states.copy(), cfg, HELIUM)
    assert np.allclose(np.abs(acc2.walker - start) * 30, 1.0, atol=1e-12)
    assert acc2.step_index == 1 and acc.step_index == 0


def test_fk_coordinates_telescope_to_counted_steps():
    cfg = P.PathConfig(10, (2.0,), mode=P.FK)
    start = np.array([[[0.55, 0.2, -0.7], [1.1, -0.45, 0.3]]])
    state = rng.substream(5, 0)
    acc = P.start_accumulator(start)
    states = np.array([state], dtype=np.uint32)
    for _ in range(200):
        acc, states = P.fk_step(acc, states, cfg, HELIUM)
    # replay the stream independently; no guard can trigger this far out
    eps = rng.SuperDuper(state).signs(200 * 6).reshape(200, 2, 3).astype(float)
    counted = start[0] + eps.sum(axis=0) / 10
    assert np.allclose(acc.walker[0], counted, atol=1e-12)
    lattice = (acc.walker[0] - start[0]) * 10
    assert np.allclose(lattice, np.round(lattice), atol=1e-9)


def test_zero_potential_gives_unit_weights():
    system = LatticeToy(3, lambda x: np.zeros(x.shape[0]))
    cfg = P.PathConfig(5, (1.0, 2.0), mode=P.FK)
    z, _, _ = P.run_batch(system, cfg, rng.substreams(1, 0, 10), np.zeros((10, 3)))
    assert np.all(z == 1.0)


def hydrogen_start(count, seed=2):
    states = rng.substreams(seed, 0, count)
    return P.initial_walkers(states, 1)


def test_exact_eigenfunction_gives_unit_weights():
    cfg = P.PathConfig(10, (1.0, 2.0))
    start, states = hydrogen_start(50)
    _, log_z, _ = P.run_batch(HYDROGEN, cfg, states, start, SlaterProduct((1.0,)), -0.5)
    assert np.max(np.abs(log_z)) <= 1e-9


def test_constant_perturbation_gives_exponential_decay():
    cfg = P.PathConfig(10, (1.0, 2.0, 3.0))
    start, states = hydrogen_start(20)
    c = 0.25
    _, log_z, _ = P.run_batch(HYDROGEN, cfg, states, start, SlaterProduct((1.0,)), -0.5 - c)
    assert np.allclose(log_z, -c * np.array(cfg.checkpoint_times), atol=1e-9)


def test_constant_trial_reduces_gfk_to_fk_bitwise():
    start, states = P.initial_walkers(rng.substreams(4, 0, 64), 2)
    flat = SlaterProduct((0.0, 0.0))
    cfg_g = P.PathConfig(10, (1.0,))
    cfg_f = P.PathConfig(10, (1.0,), mode=P.FK)
    a = P.start_accumulator(start, flat)
    b = P.start_accumulator(start)
    sa, sb = states.copy(), states.copy()
    for _ in range(100):
        a, sa = P.gfk_step(a, sa, cfg_g, HELIUM, flat, 0.0)
        b, sb = P.fk_step(b, sb, cfg_f, HELIUM)
        assert np.array_equal(a.walker, b.walker)
    assert np.array_equal(sa, sb)
    assert np.array_equal(a.potential_sum, b.potential_sum)


def test_lambda_shift_multiplies_weights_by_exp_ct():
    fn5 = preset("fn5")
    cfg = P.PathConfig(8, (1.0, 2.0, 3.0))
    start, states = P.initial_walkers(rng.substreams(11, 0, 32), 2)
    _, l1, _ = P.run_batch(HELIUM, cfg, states, start, fn5, -2.17)
    _, l2, _ = P.run_batch(HELIUM, cfg, states, start, fn5, -2.17 + 0.1)
    assert np.allclose(l2 - l1, 0.1 * np.array(cfg.checkpoint_times), rtol=0, atol=1e-11)


def test_grouping_does_not_change_results():
    fn5 = preset("fn5")
    cfg = P.PathConfig(6, (1.0, 2.0))
    states = rng.substreams(21, 0, 12)
    start, states = P.initial_walkers(states, 2)
    whole, _, _ = P.run_batch(HELIUM, cfg, states, start, fn5, -2.17)
    parts = [P.run_batch(HELIUM, cfg, states[i:j], start[i:j], fn5, -2.17)[0] for i, j in ((0, 5), (5, 6), (6, 12))]
    assert np.array_equal(whole, np.vstack(parts))
    single = P.run_replication(fn5, -2.17, HELIUM, cfg, start[7], int(states[7]))
    assert [t for t, _ in single] == [1.0, 2.0]
    assert [z for _, z in single] == whole[7].tolist()


def test_singularity_guard():
    cfg = P.PathConfig(30, (1.0,))
    assert cfg.delta == pytest.approx(1 / 300)
    at_nucleus = np.array([[[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]])
    far = np.array([[[2.0, 0.0, 0.0], [-2.0, 0.0, 0.0]]])
    coincident = np.array([[[1.0, 0.0, 0.0], [1.0, 0.001, 0.0]]])
    assert P.singularity_guard(at_nucleus, HELIUM, cfg)[0]
    assert not P.singularity_guard(far, HELIUM, cfg)[0]
    assert P.singularity_guard(coincident, HELIUM, cfg)[0]


def test_node_guard():
    fn3 = preset("fn3")
    gs = preset("goldman-gs")
    inside = np.array([[[0.5, 0.0, 0.0], [0.0, 1.0, 0.0]]])
    across = np.array([[[1.5, 0.0, 0.0], [0.0, 1.0, 0.0]]])
    assert P.node_guard(fn3, fn3.value(inside), fn3.value(across))[0]
    assert not P.node_guard(fn3, fn3.value(inside), fn3.value(inside))[0]
    assert not P.node_guard(gs, gs.value(inside), gs.value(across))[0]


def test_gfk_walk_never_leaves_nodal_cell():
    fn3 = preset("fn3")
    cfg = P.PathConfig(5, (1.0,))
    start, states = P.initial_walkers(rng.substreams(8, 0, 200), 2)
    acc = P.start_accumulator(start, fn3)
    sign0 = np.sign(acc.value)
    for _ in range(cfg.checkpoint_steps[-1]):
        acc, states = P.gfk_step(acc, states, cfg, HELIUM, fn3, -2.12)
        assert np.array_equal(np.sign(fn3.value(acc.walker)), sign0)
        r, rij = np.linalg.norm(acc.walker, axis=2), np.linalg.norm(acc.walker[:, 0] - acc.walker[:, 1], axis=1)
        assert r.min() >= cfg.delta and rij.min() >= cfg.delta


def test_guard_exhaustion_raises():
    class Trapped(LatticeToy):
        def too_close(self, coords, delta):
            return np.ones(coords.shape[0], dtype=bool)

    cfg = P.PathConfig(2, (1.0,), mode=P.FK)
    with pytest.raises(GuardExhaustedError):
        P.run_batch(Trapped(1, POTENTIALS["harmonic"]), cfg, rng.substreams(0, 0, 3), np.zeros((3, 1)))


def test_initial_walkers_off_node_and_reproducible():
    states = rng.substreams(77, 0, 500)
    w1, s1 = P.initial_walkers(states, 2)
    w2, s2 = P.initial_walkers(states, 2)
    assert np.array_equal(w1, w2) and np.array_equal(s1, s2)
    r = np.linalg.norm(w1, axis=2)
    assert np.allclose(r[:, 0], 1.0) and np.allclose(r[:, 1], 1.5)
    assert np.all(preset("fn3").value(w1) != 0)


def test_checkpoint_structure():
    cfg = P.PathConfig(4, (0.5, 1.0, 1.5))
    assert cfg.n == 16 and cfg.checkpoint_steps == (8, 16, 24)
    start, states = hydrogen_start(3)
    z, _, _ = P.run_batch(HYDROGEN, cfg, states, start, SlaterProduct((0.9,)), -0.495)
    assert z.shape == (3, 3)


@pytest.mark.parametrize("kwargs", [
    {"scale": 0}, {"scale": 3, "checkpoint_times": ()}, {"scale": 3, "checkpoint_times": (2.0, 1.0)},
    {"scale": 3, "checkpoint_times": (0.05,)}, {"scale": 3, "mode": "DMC"},
])
def test_invalid_path_config(kwargs):
    with pytest.raises(ParameterError):
        P.PathConfig(**kwargs)


def test_gfk_requires_trial_and_off_node_start():
    cfg = P.PathConfig(4, (1.0,))
    with pytest.raises(ParameterError):
        P.run_batch(HYDROGEN, cfg, rng.substreams(0, 0, 1), np.ones((1, 1, 3)))
    on_node = np.array([[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]])
    with pytest.raises(ParameterError):
        P.run_batch(HELIUM, cfg, rng.substreams(0, 0, 1), on_node, preset("fn3"), -2.1)
