from ._core import (
    Curve,
    ScenarioResult,
    compensation_power,
    curve_csv,
    find_extrema,
    fit_double_exponential,
    fit_exponential,
    preset_names,
    read_curve_csv,
    render_svg,
    residual_lifetime,
    simulate,
)

__all__ = [
    "Curve",
    "ScenarioResult",
    "compensation_power",
    "curve_csv",
    "find_extrema",
    "fit_double_exponential",
    "fit_exponential",
    "preset_names",
    "read_curve_csv",
    "render_svg",
    "residual_lifetime",
    "simulate",
]
