import math

import numpy as np
import pytest

from widecorr.corrspec import get_builtin, parse_spec
from widecorr.netsim import (
    EstimateTable,
    NetworkConfig,
    ParamVector,
    UnsupportedTopology,
    contract_spec,
    default_inputs,
    directional_derivative,
    estimate,
    estimate_many,
    forward,
    get_activation,
    gradient,
    gradient_of_directional,
    hessian_vector_product,
    init_params,
    plan_contraction,
    summarize,
)

SMOOTH = ["tanh", "sigmoid", "softplus", "monomial(3)", "polynomial(0.5,1,-0.3,0.2)"]


def random_direction(params: ParamVector, rng) -> ParamVector:
    return ParamVector(
        rng.standard_normal(params.U.shape),
        tuple(rng.standard_normal(w.shape) for w in params.W),
        rng.standard_normal(params.V.shape),
    )


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


# ---------------------------------------------------------------- activations


@pytest.mark.parametrize("name", ["tanh", "sigmoid", "softplus", "monomial(3)"])
def test_activation_derivatives_match_finite_differences(name):
    act = get_activation(name)
    z = np.linspace(-2.0, 2.0, 9)
    h = 1e-5
    d = act.derivatives(z, 4)
    for k in range(4):
        up = act.derivatives(z + h, k)[k]
        down = act.derivatives(z - h, k)[k]
        np.testing.assert_allclose((up - down) / (2 * h), d[k + 1] + 0 * z, rtol=1e-6, atol=1e-8)


def test_piecewise_linear_derivatives_at_kinks_are_right_derivatives():
    relu = get_activation("relu").derivatives(np.array([-1.0, 0.0, 1.0]), 2)
    np.testing.assert_array_equal(relu[1], [0.0, 1.0, 1.0])
    assert relu[2] == 0.0
    hs = get_activation("hard_sigmoid").derivatives(np.array([-1.0, 0.0, 1.0, 2.0]), 1)
    np.testing.assert_array_equal(hs[0], [0.0, 0.5, 1.0, 1.0])
    np.testing.assert_array_equal(hs[1], [0.5, 0.5, 0.0, 0.0])


@pytest.mark.parametrize("text, name", [("x^2", "monomial(2)"), ("Linear", "linear"), ("hard-sigmoid", "hard_sigmoid")])
def test_activation_names(text, name):
    assert get_activation(text).name == name


def test_unknown_activation():
    with pytest.raises(ValueError, match="unknown activation"):
        get_activation("swish")


# ---------------------------------------------------------------- parameters and forward pass


def test_init_is_deterministic_and_shaped():
    cfg = NetworkConfig(3, 5, 4, "tanh")
    a, b = init_params(cfg, 7), init_params(cfg, 7)
    assert a.U.shape == (5, 4) and len(a.W) == 2 and a.W[0].shape == (5, 5) and a.V.shape == (5,)
    assert np.array_equal(a.flat(), b.flat())
    assert not np.array_equal(a.flat(), init_params(cfg, 8).flat())
    assert not np.array_equal(a.flat(), init_params(cfg, 7, master_seed=1).flat())


def test_smallest_network_has_three_scalars():
    p = init_params(NetworkConfig(1, 1, 1, "linear"), 0)
    assert p.size == 2 and p.W == ()


def test_width_streams_are_independent():
    a = init_params(NetworkConfig(1, 4, 2, "linear"), 0)
    b = init_params(NetworkConfig(1, 8, 2, "linear"), 0)
    assert not np.array_equal(a.U, b.U[:4])


def test_entries_look_standard_normal():
    p = init_params(NetworkConfig(1, 4096, 128, "linear"), 3)
    assert abs(p.U.mean()) < 4 / math.sqrt(p.U.size)
    assert p.U.std() == pytest.approx(1.0, abs=0.01)


def test_invalid_config():
    with pytest.raises(ValueError):
        NetworkConfig(0, 4, 1, "tanh")


def test_linear_single_layer_forward_formula():
    p = init_params(NetworkConfig(1, 6, 1, "linear"), 2)
    x = 1.7
    assert forward(p, [x], "linear") == pytest.approx(np.sum(p.V * p.U[:, 0]) * x / math.sqrt(6), rel=1e-14)


def test_square_single_layer_forward_formula():
    p = init_params(NetworkConfig(1, 6, 1, "linear"), 2)
    x = -0.8
    expected = np.sum(p.V * p.U[:, 0] ** 2) * x**2 / math.sqrt(6)
    assert forward(p, [x], "x^2") == pytest.approx(expected, rel=1e-14)


def test_forward_scalings_with_hidden_layers():
    p = init_params(NetworkConfig(3, 5, 3, "linear"), 0)
    x = np.array([0.3, -1.0, 2.0])
    h = p.U @ x / math.sqrt(3)
    for w in p.W:
        h = w @ np.tanh(h) / math.sqrt(5)
    assert forward(p, x, "tanh") == pytest.approx(p.V @ np.tanh(h) / math.sqrt(5), rel=1e-13)


@pytest.mark.parametrize("act", ["tanh", "linear"])
def test_zero_input_odd_activation(act):
    p = init_params(NetworkConfig(2, 8, 3, act), 0)
    assert forward(p, np.zeros(3), act) == 0.0


def test_wrong_input_length():
    p = init_params(NetworkConfig(1, 3, 2, "tanh"), 0)
    with pytest.raises(ValueError):
        forward(p, np.zeros(3), "tanh")


# ---------------------------------------------------------------- derivatives


def _draws(count, seed=0):
    rng = np.random.default_rng(seed)
    for k in range(count):
        depth = 1 + k % 3
        n = int(rng.integers(2, 7))
        d = int(rng.integers(1, 4))
        params = init_params(NetworkConfig(depth, n, d, "linear"), k, master_seed=seed)
        x = rng.standard_normal(d)
        yield params, x, rng


@pytest.mark.parametrize("act", SMOOTH)
def test_gradient_matches_central_differences(act):
    for params, x, rng in _draws(20):
        _, g = gradient(params, x, act)
        flat = g.flat()
        for _ in range(3):
            v = random_direction(params, rng)
            h = 1e-5
            fd = (forward(params.axpy(h, v), x, act) - forward(params.axpy(-h, v), x, act)) / (2 * h)
            analytic = float(flat @ v.flat())
            assert rel(analytic, fd) < 1e-6 or abs(analytic - fd) < 1e-9


def test_directional_first_derivative_matches_gradient():
    for params, x, rng in _draws(10):
        v = random_direction(params, rng)
        _, g = gradient(params, x, "tanh")
        assert directional_derivative(params, x, "tanh", [v]) == pytest.approx(g.dot(v), rel=1e-12)


@pytest.mark.parametrize("act", ["tanh", "monomial(3)"])
def test_hessian_and_third_derivative_symmetry(act):
    for params, x, rng in _draws(25, seed=1):
        v, w, u = (random_direction(params, rng) for _ in range(3))
        a = directional_derivative(params, x, act, [v, w])
        b = directional_derivative(params, x, act, [w, v])
        assert rel(a, b) < 1e-10
        hv = hessian_vector_product(params, x, act, v)
        assert rel(hv.dot(w), a) < 1e-10
        t = [directional_derivative(params, x, act, dirs) for dirs in ([v, w, u], [u, v, w], [w, u, v], [v, u, w])]
        assert max(rel(t[0], s) for s in t[1:]) < 1e-10
        gt = gradient_of_directional(params, x, act, [v, w])
        assert rel(gt.dot(u), t[0]) < 1e-10


def test_hessian_vector_product_matches_gradient_differences():
    for params, x, rng in _draws(8, seed=2):
        v, w = random_direction(params, rng), random_direction(params, rng)
        h = 1e-5
        up = gradient(params.axpy(h, v), x, "sigmoid")[1]
        down = gradient(params.axpy(-h, v), x, "sigmoid")[1]
        fd = (up.dot(w) - down.dot(w)) / (2 * h)
        assert rel(hessian_vector_product(params, x, "sigmoid", v).dot(w), fd) < 1e-6


def test_linear_network_repeated_same_block_derivative_vanishes():
    for params, x, rng in _draws(10, seed=3):
        v = random_direction(params, rng)
        only_u = ParamVector(v.U, tuple(np.zeros_like(w) for w in v.W), np.zeros_like(v.V))
        other_u = ParamVector(rng.standard_normal(v.U.shape), only_u.W, only_u.V)
        assert directional_derivative(params, x, "linear", [only_u, other_u]) == 0.0


# ---------------------------------------------------------------- contractions


def test_ntk_sample_hand_formula():
    p = init_params(NetworkConfig(1, 9, 1, "linear"), 4)
    x1, x2 = 0.7, -1.3
    got = contract_spec(p, get_builtin("C_21"), {"x1": [x1], "x2": [x2]}, "linear")
    expected = np.sum(p.V**2 + p.U[:, 0] ** 2) * x1 * x2 / 9
    assert got == pytest.approx(expected, rel=1e-13)


def test_c64_sample_matches_finite_differences():
    rng = np.random.default_rng(5)
    p = init_params(NetworkConfig(2, 6, 3, "linear"), 1)
    inputs = {f"x{i}": rng.standard_normal(3) for i in range(1, 7)}
    act = "tanh"
    g = {k: gradient(p, x, act)[1] for k, x in inputs.items()}

    def hess(xk, a, b, h=1e-5):
        up = gradient(p.axpy(h, g[b]), inputs[xk], act)[1]
        down = gradient(p.axpy(-h, g[b]), inputs[xk], act)[1]
        return (up.dot(g[a]) - down.dot(g[a])) / (2 * h)

    expected = hess("x1", "x2", "x3") * hess("x4", "x5", "x6")
    got = contract_spec(p, get_builtin("C_64"), inputs, act)
    assert rel(got, expected) < 1e-6


def test_c43_sample_is_third_derivative_along_gradients():
    rng = np.random.default_rng(6)
    p = init_params(NetworkConfig(2, 5, 2, "linear"), 2)
    inputs = {f"x{i}": rng.standard_normal(2) for i in range(1, 5)}
    g = [gradient(p, inputs[f"x{i}"], "tanh")[1] for i in (2, 3, 4)]
    expected = directional_derivative(p, inputs["x1"], "tanh", g)
    assert contract_spec(p, get_builtin("C_43"), inputs, "tanh") == expected


def test_nested_hubs_use_gradient_of_directional_derivative():
    rng = np.random.default_rng(7)
    p = init_params(NetworkConfig(2, 5, 2, "linear"), 3)
    inputs = {f"x{i}": rng.standard_normal(2) for i in range(1, 5)}
    spec = parse_spec("f(x1)[a,b] f(x2)[a,c] f(x3)[b] f(x4)[c]")
    g3 = gradient(p, inputs["x3"], "tanh")[1]
    g4 = gradient(p, inputs["x4"], "tanh")[1]
    hv = gradient_of_directional(p, inputs["x2"], "tanh", [g4])
    expected = directional_derivative(p, inputs["x1"], "tanh", [g3, hv])
    assert contract_spec(p, spec, inputs, "tanh") == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("f(x1)[a,b] f(x2)[a,b]", "share more than one index"),
        ("f(x1)[a,a] f(x2)", "trace within one tensor"),
        ("f(x1)[a,b] f(x2)[b,c] f(x3)[c,a]", "cycle"),
    ],
)
def test_unsupported_topologies_name_the_pairing(text, fragment):
    with pytest.raises(UnsupportedTopology, match=fragment) as info:
        plan_contraction(parse_spec(text))
    assert "slot" in str(info.value) and "f(x" in str(info.value)


def test_builtins_are_all_supported():
    from widecorr.corrspec import builtin_specs

    for spec in builtin_specs().values():
        plan_contraction(spec)


# ---------------------------------------------------------------- estimates


def test_summarize_uses_unbiased_variance():
    mean, se, var = summarize([1.0, 2.0, 3.0, 4.0])
    assert mean == 2.5 and var == pytest.approx(5 / 3) and se == pytest.approx(math.sqrt(5 / 12))


def test_one_seed_is_rejected():
    with pytest.raises(ValueError):
        summarize([1.0])
    with pytest.raises(ValueError):
        estimate(get_builtin("C_21"), NetworkConfig(1, 4, 1, "linear"), [4], 1, {"x1": [1], "x2": [1]})


def test_linear_ntk_mean():
    x = {"x1": [0.9], "x2": [1.1]}
    table = estimate(get_builtin("C_21"), NetworkConfig(1, 1, 1, "linear"), [16, 64], 400, x)
    for row in table:
        assert abs(row.mean - 2 * 0.99) < 4 * row.stderr
        assert row.stderr == pytest.approx(math.sqrt(row.sample_variance / row.seeds))


def test_default_inputs_are_unit_norm_and_fixed():
    a = default_inputs(["x1", "x2", "x3"], 16, master_seed=3)
    b = default_inputs(["x3", "x1", "x2"], 16, master_seed=3)
    for k in a:
        assert np.linalg.norm(a[k]) == pytest.approx(1.0)
        assert np.array_equal(a[k], b[k])
    assert not np.array_equal(a["x1"], default_inputs(["x1"], 16, master_seed=4)["x1"])
    assert 0.5 < a["x1"] @ a["x2"] < 1.0


def test_estimate_csv_round_trip_and_worker_independence():
    specs = {"C_{2,1}": get_builtin("C_21"), "C_{4,2}": get_builtin("C_42")}
    one = estimate_many(specs, ["tanh", "relu"], 2, 3, [4, 8], 6, master_seed=2, workers=1)
    two = estimate_many(specs, ["tanh", "relu"], 2, 3, [4, 8], 6, master_seed=2, workers=2)
    assert one.to_csv() == two.to_csv()
    back = EstimateTable.from_csv(one.to_csv())
    assert back.to_csv() == one.to_csv()
    assert len(one.select("C_{4,2}", "relu")) == 2
    assert one.to_csv().splitlines()[0] == "spec,activation,width,seeds,mean,stderr,sample_variance"


def test_missing_input_vector():
    with pytest.raises(ValueError, match="no input vector"):
        estimate(get_builtin("C_21"), NetworkConfig(1, 4, 1, "linear"), [4], 3, {"x1": [1.0]})
