"""Acceptance criteria, one test group per criterion.

Run ``pytest tests/test_acceptance.py`` to get the PASS/FAIL summary lines.
"""

import itertools
import math

import networkx as nx
import numpy as np
import pytest

from effpot import (
    XPotential,
    apply_G_plus,
    beta_sweep,
    build_sft,
    builtin_potential,
    calibrated_subaction,
    contraction_probe,
    effective_family,
    equilibrium,
    gibbs_quotient_profile,
    karp_max_mean_cycle,
    lip_constant,
    make_pair_potential,
    make_xpotential,
    pressure,
    quotient_norm,
    solve_fixed_point,
    sup_norm,
    transshipment_lp,
    verify_triple_equality,
    zero_temperature,
)
from effpot.ergopt import build_cost_table, cost_table_from_array, subaction_family
from effpot.potentials import lip_bound
from effpot.zerotemp import accumulation_values, concentration

FULL = build_sft(2, [[1, 1], [1, 1]])
GOLDEN = build_sft(2, [[1, 1], [1, 0]])
GOLDEN_RATIO = (1 + math.sqrt(5)) / 2


def criterion(n, text):
    return pytest.mark.criterion(n, text)


def builtin_suite():
    return [
        (FULL, "zero", {}),
        (FULL, "x_only", {"values": [0.0, 1.0]}),
        (GOLDEN, "x_only", {"values": [0.0, 1.0]}),
        (FULL, "y_only", {"values": [0.0, 1.0]}),
        (FULL, "diagonal", {"eps": 1.0}),
        (FULL, "sum", {"x_values": [0.0, 1.0], "y_values": [0.0, 0.5]}),
        (GOLDEN, "diagonal", {"eps": 1.0}),
        (GOLDEN, "y_only", {"values": [0.3, -0.7]}),
    ]


def random_golden_pair(rng, masked=True):
    return make_pair_potential(GOLDEN, 2, 2, rng.uniform(-2, 2, (3, 3)), masked=masked)


def random_lip_bounded(rng, spec, depth, K):
    f = XPotential(spec, depth, rng.uniform(-1, 1, len(spec.words(depth))))
    L = lip_constant(f)
    return f * (K * rng.uniform(0.05, 1.0) / L)


# ---------------------------------------------------------------------------
# 1


@criterion(1, "closed-form pressures (log 2, log golden ratio, rank-one) within 1e-12")
def test_c01_zero_potential_pressures():
    assert abs(pressure(FULL, XPotential(FULL, 1, [0, 0])).pressure - math.log(2)) <= 1e-12
    gp = pressure(GOLDEN, XPotential(GOLDEN, 1, [0, 0])).pressure
    assert abs(gp - math.log(GOLDEN_RATIO)) <= 1e-12


@criterion(1, "closed-form pressures (log 2, log golden ratio, rank-one) within 1e-12")
def test_c01_rank_one_pressures():
    rng = np.random.default_rng(101)
    for a, b in rng.uniform(-3, 3, (20, 2)):
        P = pressure(FULL, XPotential(FULL, 1, [a, b])).pressure
        assert abs(P - np.logaddexp(a, b)) <= 1e-12


# ---------------------------------------------------------------------------
# 2


@criterion(2, "fixed-point residual <= 1e-10; y_only(t) closed forms within 1e-9")
@pytest.mark.parametrize("spec,name,params", builtin_suite())
def test_c02_fixed_point_residual(spec, name, params):
    A = builtin_potential(spec, name, **params)
    fp = solve_fixed_point(A, tol=1e-10)
    assert fp.converged
    assert fp.residual <= 1e-10
    # substitute back independently of the solver's bookkeeping
    G = apply_G_plus(A, fp.phi_plus)
    assert sup_norm(G - fp.phi_plus - fp.lambda_plus) <= 1e-10


@criterion(2, "fixed-point residual <= 1e-10; y_only(t) closed forms within 1e-9")
@pytest.mark.parametrize("t", [-1.0, 0.5, math.log(3)])
def test_c02_y_only_closed_form(t):
    A = builtin_potential(FULL, "y_only", values=[0.0, t])
    fp = solve_fixed_point(A, tol=1e-10)
    A2 = XPotential(FULL, 1, [0.0, t])
    assert quotient_norm(fp.phi_plus - A2) <= 1e-9
    assert abs(fp.lambda_plus - math.log1p(math.exp(t))) <= 1e-9


# ---------------------------------------------------------------------------
# 3


@criterion(3, "uniqueness: runs from 0 and a random Lip-bounded start agree within 1e-9")
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_c03_uniqueness(seed):
    rng = np.random.default_rng(seed)
    A = random_golden_pair(rng)
    phi0 = random_lip_bounded(rng, GOLDEN, 2, lip_bound(A))
    a = solve_fixed_point(A, tol=1e-11)
    b = solve_fixed_point(A, tol=1e-11, phi0=phi0)
    assert quotient_norm(a.phi_plus - b.phi_plus) <= 1e-9
    assert abs(a.lambda_plus - b.lambda_plus) <= 1e-9


@criterion(3, "uniqueness: runs from 0 and a random Lip-bounded start agree within 1e-9")
def test_c03_uniqueness_builtin():
    rng = np.random.default_rng(33)
    A = builtin_potential(GOLDEN, "diagonal", eps=1.0)
    phi0 = random_lip_bounded(rng, GOLDEN, 1, 2.0)
    a = solve_fixed_point(A)
    b = solve_fixed_point(A, phi0=phi0)
    assert quotient_norm(a.phi_plus - b.phi_plus) <= 1e-9
    assert abs(a.lambda_plus - b.lambda_plus) <= 1e-9


# ---------------------------------------------------------------------------
# 4 and 5 share the random suite


@pytest.fixture(scope="module")
def contraction_suite():
    rng = np.random.default_rng(20240611)
    observables = [random_golden_pair(rng) for _ in range(10)]
    rows = []
    for k in range(1000):
        A = observables[k % 10]
        phi = random_lip_bounded(rng, GOLDEN, 2, 5.0)
        psi = random_lip_bounded(rng, GOLDEN, 2, 5.0)
        gamma = rng.uniform(-5, 5)
        probe = contraction_probe(A, phi, psi)
        G_phi = apply_G_plus(A, phi)
        commute = sup_norm(apply_G_plus(A, phi + gamma) - G_phi - gamma)
        rows.append((A, probe, commute, lip_constant(G_phi)))
    return rows


@criterion(4, "contraction suite: sup nonexpansive, strict c-norm decrease, constant commutation")
def test_c04_sup_nonexpansive(contraction_suite):
    for _, (cb, ca, sb, sa), _, _ in contraction_suite:
        assert sa <= sb + 1e-12


@criterion(4, "contraction suite: sup nonexpansive, strict c-norm decrease, constant commutation")
def test_c04_strict_quotient_decrease(contraction_suite):
    checked = 0
    for _, (cb, ca, sb, sa), _, _ in contraction_suite:
        if cb > 1e-6:
            assert ca < cb
            checked += 1
    assert checked == len(contraction_suite)


@criterion(4, "contraction suite: sup nonexpansive, strict c-norm decrease, constant commutation")
def test_c04_constant_commutation(contraction_suite):
    assert max(row[2] for row in contraction_suite) <= 1e-12


@criterion(5, "Lip(G+ phi) <= ||A||_0 + Lip(A); equilipschitz bound on every sweep row")
def test_c05_lip_bound_suite(contraction_suite):
    for A, _, _, lip_G in contraction_suite:
        assert lip_G <= lip_bound(A) + 1e-9


@criterion(5, "Lip(G+ phi) <= ||A||_0 + Lip(A); equilipschitz bound on every sweep row")
@pytest.mark.parametrize("spec,name,params", builtin_suite()[:6])
def test_c05_lip_bound_builtins(spec, name, params):
    A = builtin_potential(spec, name, **params)
    phi = solve_fixed_point(A).phi_plus
    assert lip_constant(apply_G_plus(A, phi)) <= lip_bound(A) + 1e-9
    assert lip_constant(phi) <= lip_bound(A) + 1e-9


@criterion(5, "Lip(G+ phi) <= ||A||_0 + Lip(A); equilipschitz bound on every sweep row")
def test_c05_equilipschitz_sweep():
    rng = np.random.default_rng(55)
    A = random_golden_pair(rng)
    rows = beta_sweep(A, grid=[2.0**k for k in range(0, 13, 2)])
    assert all(r.converged for r in rows)
    for r in rows:
        assert r.lip_phi_over_beta <= lip_bound(A) + 1e-9


# ---------------------------------------------------------------------------
# 6


@criterion(6, "Gibbs quotient profile constant across depths 2..8 within 1e-9; masses > 0")
@pytest.mark.parametrize("values", [[0.0, 0.0], [0.0, 1.0], [-0.4, 2.3], [1.7, -3.1]])
def test_c06_gibbs_profile(values):
    psi = make_xpotential(GOLDEN, 1, values)
    mu = equilibrium(GOLDEN, psi)
    prof = gibbs_quotient_profile(GOLDEN, psi, mu, 8)
    assert [p[0] for p in prof] == list(range(2, 9))
    lo0, hi0 = prof[0][1], prof[0][2]
    for _, lo, hi, min_mass in prof:
        assert abs(lo - lo0) <= 1e-9
        assert abs(hi - hi0) <= 1e-9
        assert min_mass > 0


# ---------------------------------------------------------------------------
# 7, 8, 9


TRIPLE_CASES = [
    (FULL, "zero", {}, 0.0),
    (FULL, "x_only", {"values": [0.0, 1.0]}, 1.0),
    (GOLDEN, "x_only", {"values": [0.0, 1.0]}, 0.5),
    (FULL, "y_only", {"values": [0.0, 1.0]}, 1.0),
    (FULL, "diagonal", {"eps": 1.0}, 1.0),
    (FULL, "sum", {"x_values": [0.0, 1.0], "y_values": [0.0, 0.5]}, 1.5),
]


@pytest.fixture(scope="module")
def zero_temp_results():
    out = []
    for spec, name, params, c in TRIPLE_CASES:
        A = builtin_potential(spec, name, **params)
        zt = zero_temperature(A)
        out.append((A, zt, c))
    return out


@criterion(7, "zero-temperature triple equality on the six builtin instances")
def test_c07_triple_equality(zero_temp_results):
    for A, zt, c in zero_temp_results:
        assert zt.converged
        assert abs(zt.c_maxplus - c) <= 1e-9
        assert max(r.beta for r in zt.rows) == 2.0**12
        rep = verify_triple_equality(A, zt)
        assert rep.passed
        assert abs(rep.kappa - rep.cycle_value) <= 1e-9
        assert abs(zt.c_extrapolated - zt.c_maxplus) <= 1e-3
        assert abs(rep.kappa - c) <= 1e-9
        assert rep.kappa <= zt.c_maxplus + 1e-9


@criterion(7, "zero-temperature triple equality on the six builtin instances")
def test_c07_large_beta_rows_use_log_domain(zero_temp_results):
    # beta ||A||_0 = 4096 exceeds the log-domain threshold; rows must stay finite
    for _, zt, _ in zero_temp_results:
        top = zt.rows[-1]
        assert top.converged and np.isfinite(top.lambda_over_beta)


@criterion(8, "per-y-word maximizing values agree within 1e-9")
def test_c08_y_independence(zero_temp_results):
    for A, zt, _ in zero_temp_results:
        vals = accumulation_values(A, zt.V)
        assert np.ptp(vals) <= 1e-9
        assert abs(vals[0] - zt.c_maxplus) <= 1e-9


@criterion(8, "per-y-word maximizing values agree within 1e-9")
@pytest.mark.parametrize("seed", [7, 8])
def test_c08_y_independence_random(seed):
    rng = np.random.default_rng(seed)
    A = random_golden_pair(rng)
    zt = zero_temperature(A, grid=[1.0])
    if not zt.converged:
        pytest.skip("value iteration flagged; V excluded from V-dependent checks")
    assert np.ptp(accumulation_values(A, zt.V)) <= 1e-9


@criterion(9, "sub-action inequality, tight on optimal cycle, golden hand case U=(0,-1/2)")
def test_c09_subaction_family(zero_temp_results):
    for A, zt, _ in zero_temp_results:
        subs = subaction_family(A, zt.V, zt.c_maxplus)
        for sa in subs:
            assert sa.min_slack >= -1e-9
            edges = {tuple(e) for e in sa.equality_set}
            cyc = sa.cycle.cycle
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                assert (a, b) in edges
        costs = build_cost_table(A, zt.V, zt.c_maxplus, subs)
        assert costs.bound_violation <= 1e-9


@criterion(9, "sub-action inequality, tight on optimal cycle, golden hand case U=(0,-1/2)")
def test_c09_golden_hand_case():
    sa = calibrated_subaction(GOLDEN, make_xpotential(GOLDEN, 1, [0.0, 1.0]), 0.5)
    assert np.max(np.abs(sa.U.values - np.array([0.0, -0.5]))) <= 1e-10
    assert sa.min_slack >= -1e-9


@criterion(9, "sub-action inequality, tight on optimal cycle, golden hand case U=(0,-1/2)")
def test_c09_random_subactions():
    rng = np.random.default_rng(99)
    for _ in range(10):
        spec = GOLDEN if rng.random() < 0.5 else FULL
        psi = XPotential(spec, 2, rng.uniform(-1, 1, len(spec.words(2))))
        g = spec.graph(2)
        c = karp_max_mean_cycle(g.n_nodes, g.edges, psi.values[g.src]).value
        sa = calibrated_subaction(spec, psi, c)
        assert sa.min_slack >= -1e-9
        assert len(sa.equality_set) > 0


# ---------------------------------------------------------------------------
# 10


def brute_force_cycle_max(n, edges, weights):
    G = nx.DiGraph()
    G.add_nodes_from(range(n))
    w = {}
    for (a, b), x in zip(edges, weights):
        w[(a, b)] = max(w.get((a, b), -np.inf), x)
        G.add_edge(a, b)
    best = -np.inf
    for cyc in nx.simple_cycles(G):
        mean = math.fsum(w[(a, b)] for a, b in zip(cyc, cyc[1:] + cyc[:1])) / len(cyc)
        best = max(best, mean)
    return best


def random_strong_graph(rng, n):
    perm = rng.permutation(n)
    edges = {(int(perm[i]), int(perm[(i + 1) % n])) for i in range(n)}
    for _ in range(rng.integers(0, 2 * n + 1)):
        edges.add((int(rng.integers(n)), int(rng.integers(n))))
    return np.array(sorted(edges))


@criterion(10, "Karp = brute-force cycle maximum; LP = vertex enumeration on the 2x2 polytope")
def test_c10_karp_vs_brute_force():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        n = int(rng.integers(1, 13))
        edges = random_strong_graph(rng, n)
        weights = rng.normal(size=len(edges))
        res = karp_max_mean_cycle(n, edges, weights)
        assert res.value == brute_force_cycle_max(n, edges, weights)


def vertex_enumeration_2x2(C):
    # variables eta11, eta12, eta21, eta22; sum 1 and eta12 = eta21
    A_eq = np.array([[1, 1, 1, 1], [0, 1, -1, 0]], dtype=float)
    b = np.array([1.0, 0.0])
    c = np.asarray(C, dtype=float).ravel()
    best = -np.inf
    for basis in itertools.combinations(range(4), 2):
        B = A_eq[:, basis]
        if abs(np.linalg.det(B)) < 1e-14:
            continue
        x = np.zeros(4)
        x[list(basis)] = np.linalg.solve(B, b)
        if np.all(x >= -1e-14):
            best = max(best, c @ x)
    return best


@criterion(10, "Karp = brute-force cycle maximum; LP = vertex enumeration on the 2x2 polytope")
def test_c10_lp_vs_vertex_enumeration():
    rng = np.random.default_rng(77)
    mats = [np.array([[1.0, 0.0], [0.5, 0.0]])] + [rng.normal(size=(2, 2)) for _ in range(100)]
    for C in mats:
        kappa = transshipment_lp(cost_table_from_array(FULL, 1, 1, C)).kappa
        assert abs(kappa - vertex_enumeration_2x2(C)) <= 1e-10


# ---------------------------------------------------------------------------
# 11


@criterion(11, "diagonal(eps=1) at beta=2^12: >= 0.99 mass on the matched fixed-point cylinder")
def test_c11_concentration():
    A = builtin_potential(FULL, "diagonal", eps=1.0)
    beta = 2.0**12
    fp = solve_fixed_point(A.scaled(beta), tol=1e-10 * beta)
    fam = effective_family(A.scaled(beta), fp)
    for w, mu in zip(fam.y_words, fam.measures):
        assert mu.cylinder_mass(w[:1]) >= 0.99
    zt = zero_temperature(A, grid=[1.0])
    masses, cycles = concentration(A, beta, zt.V, fp=fp)
    assert np.all(masses >= 0.99)
    assert [c.cycle for c in cycles] == [(0,), (1,)]
