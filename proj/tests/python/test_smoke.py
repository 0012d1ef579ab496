import itertools

import numpy as np
import pytest

import attnopt


def small_instance():
    rng = np.random.default_rng(3)
    n, d = 6, 2
    Q = rng.normal(size=(n, d))
    K = rng.normal(size=(n, d))
    V = rng.normal(size=(n, d))
    u = rng.normal(size=d)
    return attnopt.Instance(Q, K, V, u, 2, [attnopt.RewardFunction.logistic()])


def softmax_objective(inst, S):
    S = list(S)
    logits = inst.Q[S] @ inst.K[S].T
    w = np.exp(logits - logits.max(axis=1, keepdims=True))
    w /= w.sum(axis=1, keepdims=True)
    y = w @ (inst.V[S] @ inst.u)
    return float(np.sum(1.0 / (1.0 + np.exp(-y))))


def test_objective_matches_numpy():
    inst = small_instance()
    for S in ([0], [1, 4], [2, 3]):
        assert attnopt.objective(inst, S) == pytest.approx(softmax_objective(inst, S), rel=1e-12)


def test_brute_force_is_optimal():
    inst = small_instance()
    best = max(
        softmax_objective(inst, S)
        for s in (1, 2)
        for S in itertools.combinations(range(inst.n), s)
    )
    assert attnopt.brute_force(inst).objective == pytest.approx(best, rel=1e-12)


def test_solve_returns_feasible_selection():
    inst = attnopt.generate(n=12, k=3, d=3, q_clusters=2, k_clusters=2, spread=0.0, seed=5)
    sel = attnopt.solve(inst, epsilon=0.1, budget=20)
    assert 1 <= len(sel.indices) <= inst.k
    assert sel.objective == pytest.approx(attnopt.objective(inst, sel.indices), rel=1e-12)
    assert sel.objective <= attnopt.brute_force(inst).objective + 1e-12


def test_json_round_trip(tmp_path):
    inst = small_instance()
    path = str(tmp_path / "inst.json")
    attnopt.save_instance(inst, path)
    back = attnopt.load_instance(path)
    assert np.array_equal(back.Q, inst.Q)
    assert attnopt.objective(back, [0, 1]) == attnopt.objective(inst, [0, 1])


def test_invalid_input_raises():
    with pytest.raises(ValueError):
        attnopt.Instance(np.zeros((3, 2)), np.zeros((2, 2)), np.zeros((3, 1)), np.zeros(1), 1,
                         [attnopt.RewardFunction.relu()])
