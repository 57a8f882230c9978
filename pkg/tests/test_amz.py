import math

import numpy as np
import pytest

from coderiv.amz import (
    BOUND_SLACK,
    RESIDUAL_TOL,
    Scenario,
    builtin_scenario,
    dist_to_G,
    lipschitz_estimate,
    load_scenario,
    parse_s_grid,
    parse_scenario,
    solve_parametric,
    sweep,
    validate_scenario,
    verify_bound,
)
from coderiv.errors import ConfigError, NoConvergence
from coderiv.mappings import eval_f

SCENARIOS = __import__("pathlib").Path(__file__).resolve().parents[1] / "scenarios"


def scenario(perturbation="zero", omega="circle", beta=0.0, alpha=0.9, pc=(), oc=(1.0,), xbar=(1.0, 0.0)):
    xbar = np.array(xbar, float)
    return Scenario(xbar, eval_f(xbar), perturbation, omega, beta, alpha, pc, oc)


def test_lipschitz_examples():
    assert lipschitz_estimate(scenario()) == 0.0
    est = lipschitz_estimate(scenario("linear", beta=0.2, pc=(0.2,)))
    assert est == pytest.approx(0.2, abs=1e-6)
    est = lipschitz_estimate(scenario("sincos", beta=0.1, pc=(0.1,)))
    assert est <= 0.1 + 1e-6
    # in the ball of radius 0.5 around (1, 0) the supremum is 0.1 cos(0.5)
    assert 0.07 < est <= 0.1 * math.cos(0.5) + 1e-9


def test_lipschitz_rejects_understated_beta():
    with pytest.raises(ConfigError):
        lipschitz_estimate(scenario("linear", beta=0.1, pc=(0.2,)))
    # within 5% is tolerated
    assert lipschitz_estimate(scenario("linear", beta=0.195, pc=(0.2,))) == pytest.approx(0.2)
    with pytest.raises(ConfigError):
        lipschitz_estimate(scenario(), samples=50)


def test_dist_to_G_examples():
    anchor = scenario("param_linear", "anchor", beta=0.2, pc=(0.2,), oc=())
    for s in (0.0, 0.3, 1.0):
        assert dist_to_G(anchor, s) == 0.0
    rot = scenario()
    for s in np.linspace(0, 0.5, 11):
        assert dist_to_G(rot, s) == pytest.approx(2 * abs(math.sin(s / 2)), abs=1e-15)
    lin = scenario("linear", "constant", beta=0.2, pc=(0.2,), oc=(0.0, 0.0))
    assert dist_to_G(lin, 0.7) == pytest.approx(0.8)


def test_solve_at_anchor():
    sc = scenario("zero", "constant", oc=(1.0, 0.0))
    rep = solve_parametric(sc, 0.4)
    np.testing.assert_array_equal(rep.sigma, [1.0, 0.0])
    assert rep.residual == 0.0 and rep.distance == 0.0 and rep.iterations == 0
    assert verify_bound(rep, sc)


def test_solve_rotation_closed_form():
    sc = builtin_scenario("rotation")
    rep = solve_parametric(sc, 0.2)
    np.testing.assert_allclose(rep.sigma, [math.cos(0.1), math.sin(0.1)], atol=1e-12)
    assert rep.distance == pytest.approx(2 * math.sin(0.05), abs=1e-12)
    assert rep.bound == pytest.approx(2 * math.sin(0.1) / 0.9, abs=1e-12)
    assert rep.residual <= RESIDUAL_TOL and rep.bound_satisfied
    assert verify_bound(rep, sc)


def test_solve_scaled_stays_at_anchor():
    sc = builtin_scenario("scaled")
    for s in np.linspace(0, 1, 6):
        rep = solve_parametric(sc, s)
        np.testing.assert_allclose(rep.sigma, sc.xbar, atol=1e-14)
        assert rep.distance <= 1e-14


def test_solve_reports_no_convergence():
    # omega(1) = theta would force sigma onto the non-differentiable origin
    sc = scenario("zero", "affine", oc=(1.0, 0.0, -1.0, 0.0))
    with pytest.raises(NoConvergence) as info:
        solve_parametric(sc, 1.0)
    assert len(info.value.trace) >= 1
    assert all(b < a for a, b in zip(info.value.trace, info.value.trace[1:]))


def test_verify_bound_adversarial():
    sc = builtin_scenario("rotation")
    rep = solve_parametric(sc, 0.2)
    rep.distance = 2 * rep.bound
    assert not verify_bound(rep, sc)
    # a tampered bound fails the cross-check
    rep = solve_parametric(sc, 0.2)
    rep.bound *= 1.5
    assert not verify_bound(rep, sc)
    with pytest.raises(ConfigError):
        verify_bound(solve_parametric(sc, 0.2), sc, alpha=0.0)


def test_bound_contract_over_alphas():
    for name in ("rotation", "scaled"):
        base = builtin_scenario(name)
        for rep in sweep(base, np.linspace(base.s_min, base.s_max, 11)):
            assert rep.converged and rep.residual <= RESIDUAL_TOL
            for alpha in (0.5, 0.9, 0.99):
                if alpha > base.beta:
                    assert verify_bound(rep, base.with_alpha(alpha), alpha=alpha)
                    assert rep.distance <= dist_to_G(base, rep.s) / (alpha - base.beta) + BOUND_SLACK


def test_residual_contract_random_affine():
    rng = np.random.default_rng(21)
    for _ in range(20):
        a = rng.uniform(-0.1, 0.1, 4)
        b = rng.uniform(-0.3, 0.3, 2)
        beta = float(np.linalg.norm(a.reshape(2, 2), 2))
        sc = scenario("affine", "anchor", beta=beta, alpha=0.9, pc=(*a, *b), oc=())
        for rep in sweep(sc, np.linspace(0, 0.3, 4)):
            if rep.converged:
                assert rep.residual <= RESIDUAL_TOL
                assert verify_bound(rep, sc)


def test_anchor_continuity():
    sc = builtin_scenario("rotation")
    grid = [10.0 ** -k for k in range(1, 8)]
    reps = sweep(sc, grid, warm_start=False)
    dists = [r.distance for r in reps]
    assert all(b < a for a, b in zip(dists, dists[1:]))
    assert dists[-1] <= 1e-7
    for r in reps:
        assert r.distance <= dist_to_G(sc, r.s) + 1e-15


def test_sweep_examples():
    anchor = scenario("param_linear", "anchor", beta=0.2, pc=(0.2,), oc=())
    (rep,) = sweep(anchor, [0.0])
    assert rep.distance == 0.0 and rep.bound == 0.0 and rep.bound_satisfied
    rot = builtin_scenario("rotation")
    reps = sweep(rot, parse_s_grid("0:0.5:0.05"))
    assert len(reps) == 11 and all(r.bound_satisfied for r in reps)
    for r in reps:
        np.testing.assert_allclose(r.sigma, [math.cos(r.s / 2), math.sin(r.s / 2)], atol=1e-9)


def test_sweep_embeds_failures():
    sc = scenario("zero", "affine", oc=(1.0, 0.0, -1.0, 0.0))
    reps = sweep(sc, [0.0, 0.5, 1.0, 0.5])
    assert [r.converged for r in reps] == [True, True, False, True]
    bad = reps[2]
    assert bad.sigma is None and math.isnan(bad.distance)
    assert bad.error.startswith("NoConvergence")
    assert not bad.bound_satisfied and not verify_bound(bad, sc)
    assert bad.as_dict()["sigma"] is None


def test_warm_start_matches_cold_start():
    sc = builtin_scenario("rotation")
    grid = parse_s_grid("0:0.5:0.1")
    for a, b in zip(sweep(sc, grid), sweep(sc, grid, warm_start=False)):
        np.testing.assert_allclose(a.sigma, b.sigma, atol=1e-12)


def test_parse_s_grid():
    np.testing.assert_allclose(parse_s_grid("0:0.5:0.05"), np.arange(11) * 0.05)
    np.testing.assert_allclose(parse_s_grid("1:1:0.1"), [1.0])
    for bad in ("0:1", "0:1:0", "1:0:0.1", "a:b:c", "0:inf:1"):
        with pytest.raises(ConfigError):
            parse_s_grid(bad)


def test_parse_scenario():
    sc = parse_scenario("xbar = 0, 2  # anchor\nperturbation = linear\nperturbation_coeffs = 0.1\n"
                        "omega = constant\nomega_coeffs = 1 2\nbeta = 0.1\nalpha = 0.5\n")
    np.testing.assert_array_equal(sc.ybar, eval_f([0, 2]))
    np.testing.assert_array_equal(sc.w(3.0), [1, 2])
    np.testing.assert_allclose(sc.h(np.array([1.0, 1.0]), 0.0), [0.1, 0.1])
    assert sc.perturbation_coeffs == (0.1,)


@pytest.mark.parametrize("text", [
    "xbar = 1, 0\nperturbation = zero\nomega = circle\nbeta = 0\nalpha = 0.9\ncolour = red\n",
    "xbar = 1, 0\nperturbation = zero\nomega = circle\nbeta = 0\n",
    "xbar = 1, 0\nperturbation = wobble\nomega = circle\nbeta = 0\nalpha = 0.9\n",
    "xbar = 1, 0\nperturbation = zero\nomega = constant\nomega_coeffs = 1\nbeta = 0\nalpha = 0.9\n",
    "xbar = 1, x\nperturbation = zero\nomega = circle\nbeta = 0\nalpha = 0.9\n",
    "xbar = 1, 0, 0\nperturbation = zero\nomega = circle\nbeta = 0\nalpha = 0.9\n",
    "just words\n",
])
def test_parse_scenario_errors(text):
    with pytest.raises(ConfigError):
        parse_scenario(text)


def test_validate_scenario():
    validate_scenario(builtin_scenario("rotation"))
    validate_scenario(builtin_scenario("scaled"))
    with pytest.raises(ConfigError):
        validate_scenario(scenario(xbar=(0.0, 0.0)))
    with pytest.raises(ConfigError):
        validate_scenario(Scenario(np.array([1.0, 0.0]), np.array([0.0, 1.0]), "zero", "circle", 0.0, 0.9))
    for beta, alpha in ((0.5, 0.5), (0.2, 1.0), (-0.1, 0.5)):
        with pytest.raises(ConfigError):
            validate_scenario(scenario(beta=beta, alpha=alpha))


def test_shipped_files_match_builtins():
    for name in ("rotation", "scaled"):
        from_file = load_scenario(SCENARIOS / f"{name}.scn")
        built = builtin_scenario(name)
        assert from_file.name == name
        for s in (0.0, 0.25, 0.5):
            np.testing.assert_allclose(from_file.w(s), built.w(s))
            np.testing.assert_allclose(from_file.h(np.array([0.3, -0.2]), s), built.h(np.array([0.3, -0.2]), s))
        assert (from_file.beta, from_file.alpha, from_file.s_max) == (built.beta, built.alpha, built.s_max)
    assert load_scenario("rotation").name == "rotation"
    with pytest.raises(OSError):
        load_scenario("/nonexistent/file.scn")
