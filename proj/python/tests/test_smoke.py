import math

import pytest

import qmemsim

HEADER = "t_ms,R_overlap,dephasing_factor,loss_factor,R_total"


def small_run(**kwargs):
    settings = {"times_ms": "0, 1, 2, 3"}
    return qmemsim.simulate(preset="centered", settings=settings, atoms=3000, seed=5, **kwargs)


def test_presets():
    assert set(qmemsim.preset_names()) == {"centered", "offset60", "shortdecay", "longdecay"}


def test_simulate_and_csv():
    result = small_run()
    curve = result.curve
    assert len(curve) == 4
    assert curve.times[0] == 0.0
    assert all(0.0 <= r <= 1.0 for r in curve.overlap)
    assert result.noise_floor >= 0.0
    text = qmemsim.curve_csv(curve)
    assert text.startswith(HEADER + "\n")
    assert text.count("\n") == 5
    assert "\r" not in text


def test_deterministic_across_workers():
    a = qmemsim.curve_csv(small_run(workers=1).curve)
    b = qmemsim.curve_csv(small_run(workers=3).curve)
    assert a == b


def test_csv_round_trip(tmp_path):
    curve = small_run().curve
    path = tmp_path / "curve.csv"
    path.write_text(qmemsim.curve_csv(curve), newline="")
    back = qmemsim.read_curve_csv(str(path))
    assert back.overlap == pytest.approx(curve.overlap, rel=1e-8)
    svg = qmemsim.render_svg(back, log_y=True)
    assert svg.lstrip().startswith("<")
    assert svg.count("<polyline") == 2


def test_fit_exponential():
    t = [i * 2e-3 for i in range(51)]
    y = [math.exp(-x / 28e-3) for x in t]
    fit = qmemsim.fit_exponential(t, y)
    assert fit["converged"]
    assert fit["params"]["tau"] == pytest.approx(28e-3, rel=1e-6)


def test_fit_double_exponential():
    t = [i * 25e-3 for i in range(61)]
    y = [0.5 * math.exp(-x / 0.16) + 0.5 * math.exp(-x / 0.58) for x in t]
    fit = qmemsim.fit_double_exponential(t, y)
    assert fit["params"]["tau1"] == pytest.approx(0.16, rel=1e-4)
    assert fit["params"]["tau2"] == pytest.approx(0.58, rel=1e-4)


def test_extrema_of_damped_oscillation():
    t = [i * 0.1e-3 for i in range(200)]
    y = [1 - 0.3 * math.exp(-x / 5e-3) * math.sin(2 * math.pi * x / 4e-3) for x in t]
    found = qmemsim.find_extrema(t, y, window=1)
    assert [e["kind"] for e in found[:2]] == ["min", "max"]
    assert found[0]["time"] == pytest.approx(1e-3, abs=0.3e-3)


def test_compensation():
    p = qmemsim.compensation_power(1.9, 775.0)
    assert 2.5e-6 <= p <= 4.6e-6
    assert qmemsim.compensation_power(1.9, 775.0, d2_only=True) < p
    assert qmemsim.residual_lifetime(0.67e-3, 0.01) == pytest.approx(67e-3, rel=1e-12)


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        qmemsim.simulate(preset="nope")
    with pytest.raises(ValueError):
        qmemsim.simulate(preset="centered", settings={"warp": "9"})
    with pytest.raises(ValueError):
        qmemsim.fit_exponential([0.0, 1.0], [1.0, 0.5])
