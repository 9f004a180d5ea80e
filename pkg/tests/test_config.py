import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocal_ircp import catalog
from nonlocal_ircp.config import ConfigError, Scenario, parse_scenario


def test_defaults_round_trip():
    s = Scenario().validate()
    assert parse_scenario(s.serialize()) == s


@settings(max_examples=60, deadline=None)
@given(
    beta=st.floats(0.01, 0.99),
    g=st.floats(0.1, 10),
    steps=st.integers(2, 500),
    alpha=st.floats(0.5, 0.99),
    lower=st.floats(0.01, 0.49),
    p=st.floats(0.01, 5),
    model=st.sampled_from(["nde", "mttfnde"]),
    q_tag=st.sampled_from(sorted(catalog.COEFFICIENTS)),
    a=st.floats(-5, 5),
    noise=st.floats(0, 0.1),
    seed=st.integers(0, 2**31),
    pc=st.booleans(),
)
def test_round_trip_property(beta, g, steps, alpha, lower, p, model, q_tag, a, noise, seed, pc):
    s = Scenario(beta=beta, gamma_lo=g, gamma_hi=2 * g, steps=steps, alpha=alpha, orders=(lower,),
                 weights=(p,), model=model, q_tag=q_tag, q_params={"a": a}, noise=noise,
                 seed=seed, pair_correction=pc)
    back = parse_scenario(s.serialize())
    assert back == s
    assert back.serialize() == s.serialize()


def test_error_names_line_and_field():
    text = "[model]\nkind = mttfnde\n\n[fractional]\nalpha = 1.2\n"
    with pytest.raises(ConfigError) as err:
        parse_scenario(text)
    assert err.value.line == 5
    assert "fractional.alpha" in str(err.value) and "line 5" in str(err.value)


@pytest.mark.parametrize(
    "text,line,needle",
    [
        ("[domain]\nh = abc\n", 2, "domain.h"),
        ("[nowhere]\n", 1, "unknown section"),
        ("[kernel]\nbeta = 0.3\nshape = x\n", 3, "kernel.shape"),
        ("h = 1\n", 1, "outside"),
        ("[kernel]\njust words\n", 2, "key = value"),
        ("[domain]\nh = 0.03125\nhorizon = 0.1\n", 3, "domain.horizon"),
        ("[kernel]\n\nbeta = 1.5\n", 3, "kernel.beta"),
        ("[source]\ntag = cubic\n", 2, "source.tag"),
        ("[model]\nkind = mttfnde\n[fractional]\norders = 0.9\n", 4, "fractional.orders"),
    ],
)
def test_line_precise_errors(text, line, needle):
    with pytest.raises(ConfigError) as err:
        parse_scenario(text)
    assert err.value.line == line
    assert needle in str(err.value)


def test_comments_and_params():
    s = parse_scenario("# header\n[coefficient]\ntag = bump  # smooth\ncentre = 0.3\nwidth = 0.1\n")
    assert s.q_tag == "bump" and s.q_params == {"centre": 0.3, "width": 0.1}
    parts = s.build(assemble=False)
    x = parts["nodes"].coords[parts["nodes"].interior, 0]
    np.testing.assert_allclose(parts["q"], np.exp(-((x - 0.3) ** 2) / 0.01))


def test_digest_ignores_threads():
    assert Scenario(threads=1).digest() == Scenario(threads=8).digest()
    assert Scenario(seed=1).digest() != Scenario(seed=2).digest()


def test_two_dimensional_scenario():
    s = parse_scenario("[domain]\nextent = 0 1 0 1\nh = 0.125\nhorizon = 0.25\n")
    parts = s.build()
    assert parts["nodes"].dim == 2 and parts["nodes"].n_interior == 49


@pytest.mark.parametrize("tag", sorted(catalog.STRENGTHS))
def test_strengths_vanish_at_zero(tag):
    v = catalog.strength(tag, np.linspace(0, 2, 9))
    assert v[0] == 0.0 and np.all(np.isfinite(v))


def test_csv_coefficient(tmp_path):
    x = np.array([[0.25], [0.5], [0.75]])
    path = tmp_path / "q.csv"
    path.write_text("x0,q\n0.25,1.0\n0.5,2.0\n0.75,3.0\n")
    np.testing.assert_array_equal(catalog.coefficient("csv", x, path=str(path)), [1, 2, 3])
    path.write_text("x0,q\n0.25,\n0.5,\n0.75,\n")
    assert catalog.coefficient("csv", x, path=str(path)) is None
    path.write_text("x0,q\n0.25,1\n")
    with pytest.raises(ValueError, match="coordinates"):
        catalog.coefficient("csv", x, path=str(path))
    with pytest.raises(ValueError):
        catalog.coefficient("cubic", x)
