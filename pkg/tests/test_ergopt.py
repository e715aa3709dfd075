import itertools
import math

import networkx as nx
import numpy as np
import pytest

from effpot.ergopt import (
    build_cost_table,
    calibrated_subaction,
    cost_table_from_array,
    karp_max_mean_cycle,
    node_weight_cycle,
    pair_graph,
    pair_graph_cycle,
    subaction_family,
    support_cycles,
    transshipment_lp,
    verify_triple_equality,
)
from effpot.errors import NotStronglyConnectedError, VerificationError, WrongCError
from effpot.potentials import XPotential, builtin_potential, make_pair_potential, make_xpotential
from effpot.zerotemp import ZeroTempResult, zero_temperature


def simple_cycle_means(n, edges, weights):
    G = nx.DiGraph()
    G.add_nodes_from(range(n))
    w = {}
    for (a, b), x in zip(edges, weights):
        w[(int(a), int(b))] = x
        G.add_edge(int(a), int(b))
    for cyc in nx.simple_cycles(G):
        yield cyc, math.fsum(w[(a, b)] for a, b in zip(cyc, cyc[1:] + cyc[:1])) / len(cyc)


def test_karp_examples(golden):
    assert karp_max_mean_cycle(3, [[0, 1], [1, 2], [2, 0]], [0, 0, 0]).value == 0
    res = karp_max_mean_cycle(2, [[0, 0], [0, 1], [1, 0], [1, 1]], [1, 2, 0, -1])
    assert res.value == 1 and res.cycle == (0,) and res.length == 1
    res = node_weight_cycle(golden.graph(1), [0.0, 1.0])
    assert res.value == 0.5 and res.cycle == (0, 1)


def test_karp_rejects_disconnected():
    with pytest.raises(NotStronglyConnectedError):
        karp_max_mean_cycle(2, [[0, 1]], [1.0])
    with pytest.raises(NotStronglyConnectedError):
        karp_max_mean_cycle(0, np.zeros((0, 2)), [])


def test_karp_witness_is_simple_optimal_cycle():
    rng = np.random.default_rng(3)
    for _ in range(60):
        n = int(rng.integers(2, 9))
        edges = {(i, (i + 1) % n) for i in range(n)}
        edges |= {tuple(rng.integers(n, size=2)) for _ in range(2 * n)}
        edges = np.array(sorted(edges))
        weights = rng.integers(-3, 4, size=len(edges)).astype(float)  # integer weights force ties
        res = karp_max_mean_cycle(n, edges, weights)
        cyc = list(res.cycle)
        assert len(set(cyc)) == len(cyc) == res.length
        emap = {tuple(e): w for e, w in zip(edges.tolist(), weights)}
        mean = math.fsum(emap[(a, b)] for a, b in zip(cyc, cyc[1:] + cyc[:1])) / len(cyc)
        assert abs(mean - res.value) <= 1e-12
        optimal = [(c, m) for c, m in simple_cycle_means(n, edges, weights) if m >= res.value - 1e-12]
        shortest = min(len(c) for c, _ in optimal)
        assert res.length == shortest
        # lexicographically smallest rotation among the shortest optimal cycles
        rotations = [tuple(c[c.index(min(c)):] + c[: c.index(min(c))]) for c, _ in optimal if len(c) == shortest]
        assert res.cycle == min(rotations)


def test_subaction_examples(full, golden):
    sa = calibrated_subaction(full, XPotential(full, 1, [0, 0]), 0.0)
    assert np.all(sa.U.values == 0)
    sa = calibrated_subaction(full, XPotential(full, 1, [0, 1]), 1.0)
    assert np.allclose(sa.U.values, 0)
    # strict on symbol 1, tight on symbol 2
    slack = dict(zip(map(tuple, full.graph(1).edges.tolist()), sa.slack))
    assert slack[(0, 0)] == 1.0 and slack[(0, 1)] == 1.0
    assert slack[(1, 0)] == 0.0 and slack[(1, 1)] == 0.0
    sa = calibrated_subaction(golden, make_xpotential(golden, 1, [0, 1]), 0.5)
    assert np.allclose(sa.U.values, [0, -0.5], atol=1e-12)
    assert sa.equality_set.tolist() == [[0, 1], [1, 0]]
    assert sa.slack[0] == pytest.approx(0.5)
    assert sa.calibrated


def test_subaction_wrong_c(golden):
    with pytest.raises(WrongCError):
        calibrated_subaction(golden, make_xpotential(golden, 1, [0, 1]), 1.0)


def test_subaction_periodic_critical_cycle():
    from effpot.sft import build_sft

    # critical cycle 1 -> 2 -> 1 of period 2; value iteration oscillates
    spec = build_sft(3, [[0, 1, 1], [1, 0, 1], [1, 1, 0]])
    psi = XPotential(spec, 1, [3.0, -1.0, -5.0])
    c = node_weight_cycle(spec.graph(1), psi.values).value
    sa = calibrated_subaction(spec, psi, c)
    assert sa.min_slack >= -1e-9
    edges = {tuple(e) for e in sa.equality_set.tolist()}
    cyc = sa.cycle.cycle
    assert all((a, b) in edges for a, b in zip(cyc, cyc[1:] + cyc[:1]))


def test_subaction_random(rng):
    from effpot.sft import build_sft

    spec = build_sft(3, [[0, 1, 1], [1, 0, 1], [1, 1, 1]])
    for _ in range(20):
        psi = XPotential(spec, 2, rng.normal(size=7))
        c = node_weight_cycle(spec.graph(2), psi.values).value
        sa = calibrated_subaction(spec, psi, c)
        assert sa.min_slack >= -1e-9 and sa.U.values[0] == 0.0


def cost_case(spec, name, **params):
    A = builtin_potential(spec, name, **params)
    zt = zero_temperature(A, grid=[1.0])
    subs = subaction_family(A, zt.V, zt.c_maxplus)
    return A, zt, build_cost_table(A, zt.V, zt.c_maxplus, subs)


def test_cost_table_examples(full):
    _, zt, costs = cost_case(full, "zero")
    assert np.all(costs.C == 0)
    A, zt, costs = cost_case(full, "sum", x_values=[0, 1], y_values=[0, 0.5])
    assert zt.c_maxplus == 1.5 and np.allclose(zt.V.values, [0, 0.5])
    idx = costs.x_table.prefix_map(A.x_table)
    assert np.allclose(costs.C, A.values[:, idx])
    A, zt, costs = cost_case(full, "diagonal", eps=1.0)
    assert np.allclose(costs.C, A.values[:, costs.x_table.prefix_map(A.x_table)])


def test_cost_table_masks_incompatible(golden):
    _, _, costs = cost_case(golden, "x_only", values=[0, 1])
    assert costs.x_depth == 2
    for i, y in enumerate(costs.y_table):
        for j, x in enumerate(costs.x_table):
            assert np.isfinite(costs.C[i, j]) == bool(golden.M[y[0] - 1, x[0] - 1])


def test_transshipment_examples(full):
    res = transshipment_lp(cost_table_from_array(full, 1, 1, np.zeros((2, 2))))
    assert res.kappa == 0 and res.marginal_gap <= 1e-12
    res = transshipment_lp(cost_table_from_array(full, 1, 1, [[1, 0], [0.5, 0]]))
    assert res.kappa == 1.0 and res.eta[0, 0] == 1.0
    assert res.support == [("1", "1", 1.0)]
    _, _, costs = cost_case(full, "diagonal", eps=1.0)
    res = transshipment_lp(costs)
    assert res.kappa == pytest.approx(1.0, abs=1e-12)
    for y, x, _ in res.support:
        assert x[0] == y[0]


def test_transshipment_invariants_and_cycles(golden, rng):
    for _ in range(10):
        A = make_pair_potential(golden, 2, 1, rng.normal(size=(3, 2)), masked=True)
        zt = zero_temperature(A, grid=[1.0])
        costs = build_cost_table(A, zt.V, zt.c_maxplus, subaction_family(A, zt.V, zt.c_maxplus))
        res = transshipment_lp(costs)
        assert np.all(res.eta >= 0) and res.eta.sum() == pytest.approx(1.0, abs=1e-12)
        assert res.marginal_gap <= 1e-9
        assert res.kappa <= zt.c_maxplus + 1e-9
        cyc = pair_graph_cycle(costs)
        assert abs(res.kappa - cyc.value) <= 1e-9
        decomposition = support_cycles(costs, res)
        assert sum(m for _, m in decomposition) == pytest.approx(1.0, abs=1e-9)
        # every simple cycle of the pair graph embeds as a feasible measure
        n, edges, weights = pair_graph(costs)
        for _, mean in simple_cycle_means(n, edges, weights):
            assert mean <= res.kappa + 1e-9


def test_transshipment_matches_scipy(golden, rng):
    from scipy.optimize import linprog

    from effpot.sft import build_sft

    spec = build_sft(3, [[0, 1, 1], [1, 0, 1], [1, 1, 1]])
    for _ in range(10):
        C = rng.normal(size=(len(spec.words(1)), len(spec.words(2))))
        costs = cost_table_from_array(spec, 1, 2, C)
        ii, jj = np.nonzero(np.isfinite(costs.C))
        prefix = costs.x_prefix()
        A_eq = np.zeros((4, len(ii)))
        A_eq[0] = 1
        for k, (i, j) in enumerate(zip(ii, jj)):
            A_eq[1 + i, k] += 1
            A_eq[1 + prefix[j], k] -= 1
        ref = linprog(-C[ii, jj], A_eq=A_eq, b_eq=[1, 0, 0, 0], bounds=(0, None), method="highs")
        assert transshipment_lp(costs).kappa == pytest.approx(-ref.fun, abs=1e-10)


@pytest.mark.parametrize(
    "spec_name,name,params,c",
    [
        ("full", "zero", {}, 0.0),
        ("full", "x_only", {"values": [0, 1]}, 1.0),
        ("golden", "x_only", {"values": [0, 1]}, 0.5),
    ],
)
def test_verify_examples(request, spec_name, name, params, c):
    spec = request.getfixturevalue(spec_name)
    A = builtin_potential(spec, name, **params)
    rep = verify_triple_equality(A, zero_temperature(A))
    assert (rep.c_maxplus, rep.kappa, rep.cycle_value) == pytest.approx((c, c, c), abs=1e-12)
    assert rep.to_dict()["verdict"] == "pass" and rep.mode == "full"


def test_verify_failure_carries_report(full):
    A = builtin_potential(full, "x_only", values=[0, 1])
    zt = zero_temperature(A, grid=[1.0])
    zt.c_extrapolated = 0.5  # deliberately inconsistent
    with pytest.raises(VerificationError) as info:
        verify_triple_equality(A, zt)
    rep = info.value.report
    assert rep.kappa == pytest.approx(1.0) and rep.c_extrapolated == 0.5 and not rep.passed
    assert not verify_triple_equality(A, zt, strict=False).passed


def test_verify_c_only_mode(full):
    A = builtin_potential(full, "diagonal", eps=1.0)
    V = XPotential(full, 1, [0.0, 0.3])
    zt = ZeroTempResult(c_maxplus=1.0, V=V, eigen_residual=0.3, converged=False, iterations=1, method="growth-rate")
    rep = verify_triple_equality(A, zt)
    assert rep.mode == "c-only" and rep.passed
