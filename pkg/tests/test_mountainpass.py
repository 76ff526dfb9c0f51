import json
import math

import numpy as np
import pytest

from twocrit.errors import NoNegativeEnd
from twocrit.functional import discretize
from twocrit.mesh import DiscreteField, build_mesh
from twocrit.mountainpass import (ABOVE, BELOW, INCONCLUSIVE, PathState, SolverConfig, bent_path, make_endpoint,
                                  minimax_solve, mountain_pass_floor, path_peak, sign_change_t, straight_path,
                                  threshold_for, verify_solution)
from twocrit.problem import ProblemInstance


@pytest.fixture(scope="module")
def surrogate():
    mesh = build_mesh(1.0, 0.1, h_min=0.01, grading=0.1)
    inst = ProblemInstance(N=3, a=-1.0, delta=0.5)
    v, prof = make_endpoint(inst, mesh, {"epsilon": 0.1}, return_profile=True)
    return mesh, inst, v, prof


@pytest.fixture(scope="module")
def straight_run(surrogate):
    mesh, inst, v, _ = surrogate
    return minimax_solve(inst, mesh, PathState.from_nodes(straight_path(v, 12), inst, mesh))


@pytest.fixture(scope="module")
def bent_run(surrogate):
    mesh, inst, v, _ = surrogate
    w = DiscreteField.interpolate(mesh, lambda r, z: 0.3 * np.max(v.values) * np.exp(-(r * r + z * z) / 0.1))
    return minimax_solve(inst, mesh, PathState.from_nodes(bent_path(v, w, 12), inst, mesh))


def test_endpoint_is_negative(surrogate):
    mesh, inst, v, prof = surrogate
    assert discretize(mesh, inst).energy(v) < 0
    assert prof.sup > 0


def test_surrogate_converges_below_threshold(straight_run, surrogate):
    mesh, inst, _, prof = surrogate
    rep = straight_run
    assert rep.status == "converged"
    assert rep.verdict == BELOW
    assert rep.nontrivial
    assert 0 < rep.c_estimate <= prof.sup
    assert rep.c_estimate < rep.threshold == pytest.approx(threshold_for(inst))


def test_surrogate_residual(straight_run, surrogate):
    mesh, inst, _, _ = surrogate
    rep = straight_run
    scale = abs(rep.critical_value)
    chk = verify_solution(rep.critical_point, inst, mesh, scale=scale)
    assert chk.residual < 1e-4 * scale
    assert rep.residual < 1e-4 * scale
    assert rep.critical_value == pytest.approx(rep.c_estimate, rel=1e-2)


def test_peak_history_is_monotone(straight_run, bent_run):
    for rep in (straight_run, bent_run):
        h = np.asarray(rep.peak_history)
        assert np.all(np.diff(h) <= 1e-12 * np.abs(h[:-1]))
        assert len(rep.grad_dual_norm_history) == len(h)


def test_two_paths_agree(straight_run, bent_run):
    assert bent_run.status == "converged"
    assert bent_run.c_estimate == pytest.approx(straight_run.c_estimate, rel=0.05)


def test_positive_solution_found(straight_run):
    u = straight_run.critical_point.values
    assert np.max(u) > 0 and np.min(u) > -1e-6 * np.max(u)


def test_floor_does_not_exceed_level(straight_run, surrogate):
    mesh, inst, _, _ = surrogate
    # random directions alone overestimate the sphere infimum; the ray through
    # the critical point peaks at c, which caps every sampled minimum
    alpha, rho = mountain_pass_floor(inst, mesh, n_samples=8, seed=3,
                                     extra_directions=[straight_run.critical_point])
    assert alpha > 0
    assert 0 < rho <= straight_run.c_estimate


def test_floor_is_seeded(surrogate):
    mesh, inst, _, _ = surrogate
    a = mountain_pass_floor(inst, mesh, n_samples=4, seed=11)
    assert a == mountain_pass_floor(inst, mesh, n_samples=4, seed=11)


def test_report_serialization(straight_run, tmp_path):
    d = json.loads(straight_run.to_json())
    for key in ("c_estimate", "peak_history", "grad_dual_norm_history", "threshold", "margin", "verdict"):
        assert key in d
    text = straight_run.iteration_csv(tmp_path / "it.csv")
    lines = text.splitlines()
    assert lines[0] == "iter,peak_value,grad_norm"
    assert len(lines) == len(straight_run.peak_history) + 1
    assert all(len(r.split(",")) == 3 for r in lines)


def test_flat_model_gate_is_below_threshold():
    # F = 0, true exponents: the path level sits below the trace level
    mesh = build_mesh(1.0, 0.1, h_min=0.01, grading=0.1)
    inst = ProblemInstance(N=3)
    v = make_endpoint(inst, mesh, {"epsilon": 0.05})
    rep = minimax_solve(inst, mesh, PathState.from_nodes(straight_path(v, 12), inst, mesh),
                        SolverConfig(max_iter=150))
    assert rep.verdict == BELOW
    assert rep.c_estimate < rep.threshold - rep.margin


def test_sign_change_matches_closed_form():
    A, B, q = 2.0, 3.0, 4.0
    phi = lambda t: A * t * t / 2 - B * t ** q / q
    t_star = (A / B) ** (1 / (q - 2))
    t0 = sign_change_t(phi, t_star, 10.0)
    assert t0 == pytest.approx((q / 2 * A / B) ** (1 / (q - 2)), rel=1e-13)


def test_sign_change_requires_negative_end():
    with pytest.raises(NoNegativeEnd):
        sign_change_t(lambda t: 1.0 - 0 * t, 0.0, 1.0)


def test_verify_solution_trivial_point():
    mesh = build_mesh(1.0, 0.2)
    rep = verify_solution(np.zeros(mesh.n_vertices), ProblemInstance(N=3, a=-1.0), mesh)
    assert rep.residual == 0.0 and not rep.nontrivial


def test_verify_solution_flags_non_solution():
    mesh = build_mesh(1.0, 0.2)
    u = DiscreteField.interpolate(mesh, lambda r, z: np.exp(-(r * r + z * z)))
    rep = verify_solution(u, ProblemInstance(N=3, a=-1.0), mesh)
    assert rep.residual > 1e-2 and rep.nontrivial


def test_path_state_validation():
    with pytest.raises(ValueError):
        PathState([np.zeros(3), np.ones(3)], [0.0, -1.0])
    with pytest.raises(ValueError):
        PathState([np.ones(3)] * 3, [0.0, 1.0, -1.0])
    with pytest.raises(ValueError):
        PathState([np.zeros(3), np.ones(3), np.ones(3)], [0.0, 1.0, 0.5])


def test_peak_index_lowest_on_ties():
    p = PathState([np.zeros(2), np.ones(2), 2 * np.ones(2), 3 * np.ones(2)], [0.0, 1.0, 1.0, -1.0])
    assert p.peak_index == 1 and p.peak_value == 1.0


def test_path_peak_dominates_nodes(surrogate):
    mesh, inst, v, prof = surrogate
    disc = discretize(mesh, inst)
    nodes = straight_path(v, 6)
    val, _ = path_peak(disc, nodes)
    assert val >= max(disc.energy(n) for n in nodes)
    assert val == pytest.approx(prof.sup, rel=1e-5)


def test_power_law_endpoint():
    mesh = build_mesh(1.0, 0.2)
    inst = ProblemInstance(N=3, a=-1.0, delta=0.5)
    v = make_endpoint(inst, mesh, {"epsilon": 0.2, "factor": 2.0})
    assert discretize(mesh, inst).energy(v) < 0


def test_verdict_labels():
    assert len({BELOW, ABOVE, INCONCLUSIVE}) == 3
    assert math.isfinite(threshold_for(ProblemInstance(N=4, beta=1.0)))
