"""JSON emission with fixed six-decimal reals so outputs diff cleanly."""

import json
import math


def format_real(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "null"
    s = f"{x:.6f}"
    return "0.000000" if s == "-0.000000" else s


def dumps(obj) -> str:
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_real(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    if hasattr(obj, "item"):  # numpy scalar
        return dumps(obj.item())
    raise TypeError(f"cannot serialize {type(obj).__name__}")
