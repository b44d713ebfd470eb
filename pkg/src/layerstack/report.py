"""Deterministic serialization: fixed key order, floats with 17 significant digits."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np


@dataclass(frozen=True)
class Check:
    """One verified inequality ``value <= bound`` (or ``<`` when strict)."""

    quantity: str
    value: float
    bound: float
    strict: bool = False

    @property
    def margin(self) -> float:
        return float(self.bound - self.value)

    @property
    def passed(self) -> bool:
        return bool(self.value < self.bound if self.strict else self.value <= self.bound)

    def to_dict(self) -> dict[str, Any]:
        return {"quantity": self.quantity, "value": self.value, "bound": self.bound,
                "margin": self.margin, "pass": self.passed}

    def line(self) -> str:
        op = "<" if self.strict else "<="
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict}  {self.quantity}: {self.value:.6g} {op} {self.bound:.6g}"


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = "," + pad if indent else ", "
    if isinstance(obj, enum.Enum):
        obj = obj.value
    if hasattr(obj, "to_dict"):
        obj = obj.to_dict()
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return "null" if obj is None else ("true" if obj else "false")
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return json.dumps(str(x))
        text = format(x, ".17g")
        if all(ch in "-0123456789" for ch in text):
            text += ".0"
        return text
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [json.dumps(str(k)) + ": " + _encode(v, indent, level + 1) for k, v in obj.items()]
        return "{" + pad + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) for v in obj):
            return "[" + ", ".join(_encode(v, 0, 0) for v in obj) + "]"
        return "[" + pad + sep.join(_encode(v, indent, level + 1) for v in obj) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    return _encode(obj, indent, 0) + "\n"
