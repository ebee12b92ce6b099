"""Tagged physical quantities used by the configuration format.

Values in configuration documents are written as ``"<number> <unit>"``
strings, e.g. ``"25 mm"`` or ``"-60 deg"``. Everything is converted to SI
on load and written back in SI on serialization.
"""
import math
import re

_SCALE = {
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3},
    "angle": {"rad": 1.0, "deg": math.pi / 180.0},
    "force": {"N": 1.0, "kN": 1e3},
    "pressure": {"Pa": 1.0, "kPa": 1e3, "MPa": 1e6, "GPa": 1e9},
    "torque": {"N*m": 1.0, "Nm": 1.0},
    "angular_speed": {"rad/s": 1.0, "rpm": 2.0 * math.pi / 60.0, "deg/s": math.pi / 180.0},
    "mass": {"kg": 1.0, "g": 1e-3},
}

SI_UNIT = {
    "length": "m",
    "angle": "rad",
    "force": "N",
    "pressure": "Pa",
    "torque": "N*m",
    "angular_speed": "rad/s",
    "mass": "kg",
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z*/]+)\s*$")


def parse_quantity(text, dimension):
    """Parse ``"<number> <unit>"`` and return the value in SI units.

    Raises ``ValueError`` if the text is malformed or the unit does not
    belong to ``dimension``.
    """
    if not isinstance(text, str):
        raise ValueError(
            f"expected a unit-tagged string like '1 {SI_UNIT[dimension]}', got {text!r}"
        )
    match = _QUANTITY.match(text)
    if match is None:
        raise ValueError(f"malformed quantity {text!r}")
    number, unit = match.groups()
    scales = _SCALE[dimension]
    if unit not in scales:
        raise ValueError(
            f"unit {unit!r} is not a {dimension} unit (expected one of {sorted(scales)})"
        )
    value = float(number)
    if unit == "deg":
        return math.radians(value)
    return value * scales[unit]


def format_quantity(value, dimension):
    # repr() round-trips floats exactly
    return f"{float(value)!r} {SI_UNIT[dimension]}"
