import numpy as np
import pytest

from cfisac.conic import (
    INFEASIBLE,
    OPTIMAL,
    SOC,
    UNBOUNDED,
    AllocationState,
    ConicProblem,
    assemble_subproblem,
    binary_penalty,
    dump_problem,
    solve,
)
from cfisac.jpalb import dc_objective, initialize_feasible
from cfisac.metrics import CommStatistics


def test_scalar_quadratic():
    p = ConicProblem(n=1, Q=[[1.0]], q=[0.0], lo=np.array([3.0]))
    s = solve(p)
    assert s.status == OPTIMAL
    assert np.isclose(s.x[0], 3.0, atol=1e-6) and np.isclose(s.objective_value, 9.0, atol=1e-5)
    assert s.max_primal_residual <= 1e-7


def test_fixed_vector_soc():
    soc = SOC(F=np.zeros((2, 1)), g=np.array([3.0, 4.0]), c=np.array([1.0]), d=0.0)
    s = solve(ConicProblem(n=1, Q=np.zeros((1, 1)), q=np.array([1.0]), socs=[soc]))
    assert s.status == OPTIMAL and np.isclose(s.x[0], 5.0, atol=1e-6)


def test_infeasible_and_unbounded():
    p = ConicProblem(n=1, Q=np.zeros((1, 1)), q=np.zeros(1), lo=np.array([1.0]), hi=np.array([np.inf]),
                     A_le=np.array([[1.0]]), b_le=np.array([0.0]))
    assert solve(p).status == INFEASIBLE
    assert solve(ConicProblem(n=1, Q=np.zeros((1, 1)), q=np.array([1.0]))).status == UNBOUNDED


def test_problem_validation():
    with pytest.raises(ValueError):
        ConicProblem(n=2, Q=np.eye(3), q=np.zeros(2))
    with pytest.raises(ValueError):
        ConicProblem(n=1, Q=[[-1.0]], q=[0.0])
    with pytest.raises(ValueError):
        ConicProblem(n=1, Q=[[1.0]], q=[0.0], lo=np.array([1.0]), hi=np.array([0.0]))
    with pytest.raises(ValueError):
        ConicProblem(n=2, Q=np.eye(2), q=np.zeros(2), socs=[SOC(np.zeros((1, 3)), np.zeros(1), np.zeros(2), 0.0)])


def test_equality_and_pinned():
    p = ConicProblem(n=2, Q=np.eye(2), q=np.zeros(2), A_eq=np.array([[1.0, 1.0]]), b_eq=np.array([2.0]),
                     lo=np.array([0.5, -np.inf]), hi=np.array([0.5, np.inf]))
    s = solve(p)
    assert s.status == OPTIMAL and np.allclose(s.x, [0.5, 1.5], atol=1e-6)


def test_census(small_setup):
    cfg, inp = small_setup
    K, U = cfg.K, cfg.U
    prev = initialize_feasible(inp.stats, inp.forms, cfg)
    p = assemble_subproblem(inp.stats, inp.forms, prev, cfg, binary_restriction=True)
    names = [s.name for s in p.socs]
    assert sum(n.startswith("rate") for n in names) == U
    assert names.count("sensing") == 1
    assert sum(n.startswith("power") for n in names) == K
    bound_rows = int(np.sum(np.isfinite(p.lo))) + int(np.sum(np.isfinite(p.hi)))
    binary_rows = sum(n.startswith("binary") for n in p.le_names)
    assert bound_rows + binary_rows == 3 * K + K * U
    assert sum(n.startswith("desired_sign") for n in p.le_names) == U


def test_objective_consistency(small_setup):
    cfg, inp = small_setup
    gen = np.random.default_rng(4)
    prev = initialize_feasible(inp.stats, inp.forms, cfg)
    prev.alpha = gen.uniform(0, 1, cfg.K)
    for w in (0.0, 1.0, 3.0):
        p = assemble_subproblem(inp.stats, inp.forms, prev, cfg, penalty_weight=w)
        x = np.concatenate([prev.rho, prev.alpha])
        assert np.isclose(p.objective(x), dc_objective(prev, inp.stats, cfg, w), rtol=1e-12)


def test_binary_fixed_point(small_setup):
    cfg, inp = small_setup
    init = initialize_feasible(inp.stats, inp.forms, cfg)
    for a in (np.ones(cfg.K), np.array([1.0, 0.0, 1.0, 1.0])):
        prev = AllocationState(init.rho * np.repeat(a, cfg.U), a)
        p = assemble_subproblem(inp.stats, inp.forms, prev, cfg, binary_restriction=True)
        s = solve(p)
        assert s.status == OPTIMAL
        assert np.allclose(s.x[cfg.K * cfg.U :], a, atol=1e-6)


def test_coupling_silences_off_aps(small_setup):
    cfg, inp = small_setup
    prev = initialize_feasible(inp.stats, inp.forms, cfg)
    s = solve(assemble_subproblem(inp.stats, inp.forms, prev, cfg))
    assert s.status == OPTIMAL
    KU = cfg.K * cfg.U
    rho, alpha = s.x[:KU].reshape(cfg.K, cfg.U), s.x[KU:]
    for k in range(cfg.K):
        amp = np.linalg.norm(inp.stats.G[k] * rho[k])
        assert amp <= alpha[k] * np.sqrt(cfg.P_max) + 1e-7
        if alpha[k] <= 1e-6:
            assert amp <= 1e-6 * np.sqrt(cfg.P_max) + 1e-7


def test_penalty_tangent_bound():
    gen = np.random.default_rng(0)
    a, ap = gen.uniform(size=1000), gen.uniform(size=1000)
    pen = binary_penalty(a, ap)
    assert np.all(pen >= a - a**2 - 1e-15) and np.all(a - a**2 >= 0)


def test_rejects_non_psd(small_setup):
    cfg, inp = small_setup
    st = inp.stats
    bad_C = st.C_real.copy()
    bad_C[0, 0] = -np.eye(cfg.K) * np.abs(bad_C).max()
    bad = CommStatistics(st.b, st.C, bad_C, st.sqrtC, st.G)
    prev = initialize_feasible(st, inp.forms, cfg)
    with pytest.raises(ValueError, match="not PSD-projected"):
        assemble_subproblem(bad, inp.forms, prev, cfg)


def test_dump_problem(tmp_path, small_setup):
    cfg, inp = small_setup
    prev = initialize_feasible(inp.stats, inp.forms, cfg)
    p = assemble_subproblem(inp.stats, inp.forms, prev, cfg)
    path = tmp_path / "p.txt"
    dump_problem(p, path)
    text = path.read_text()
    for sec in ("[objective_Q]", "[objective_q]", "[linear_le]", "[soc 0 rate[0]]", "[bounds]"):
        assert sec in text


def test_cross_check_with_cvxpy(small_setup):
    cp = pytest.importorskip("cvxpy")
    cfg, inp = small_setup
    prev = initialize_feasible(inp.stats, inp.forms, cfg)
    p = assemble_subproblem(inp.stats, inp.forms, prev, cfg)
    ours = solve(p)
    x = cp.Variable(p.n)
    cons = [p.A_le @ x <= p.b_le]
    cons += [cp.SOC(s.c @ x + s.d, s.F @ x + s.g) for s in p.socs]
    fin_lo, fin_hi = np.isfinite(p.lo), np.isfinite(p.hi)
    cons += [x[fin_lo] >= p.lo[fin_lo], x[fin_hi] <= p.hi[fin_hi]]
    prob = cp.Problem(cp.Minimize(cp.quad_form(x, cp.psd_wrap(p.Q)) + p.q @ x + p.const), cons)
    prob.solve(solver=cp.SCS, eps=1e-9, max_iters=200_000)
    assert ours.status == OPTIMAL
    assert abs(prob.value - ours.objective_value) <= 1e-4 * abs(ours.objective_value)
