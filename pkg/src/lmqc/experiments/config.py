"""Flat ``key = value`` scenario configuration files.

Lines starting with ``#`` and trailing ``# ...`` are comments. Qubit
parameters use dotted keys such as ``q1.t1_us``. Values are parsed as
booleans, integers, floats, comma-separated lists or bare strings.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..errors import ParameterError

_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")


def parse_value(text: str) -> Any:
    t = text.strip()
    if t.lower() in ("true", "yes", "on"):
        return True
    if t.lower() in ("false", "no", "off"):
        return False
    if "," in t:
        return [parse_value(x) for x in t.split(",") if x.strip()]
    for conv in (int, float):
        try:
            return conv(t)
        except ValueError:
            pass
    return t


def format_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple)):
        return ", ".join(format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class ScenarioConfig:
    scenario: str
    parameters: dict[str, Any] = field(default_factory=dict)
    output: str | None = None

    @classmethod
    def parse(cls, text: str, source: str = "<config>") -> ScenarioConfig:
        params: dict[str, Any] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if not _KEY.match(key):
                raise ParameterError(f"{source}:{lineno}: invalid key {key!r}")
            if key in params:
                raise ParameterError(f"{source}:{lineno}: duplicate key {key!r}")
            params[key] = parse_value(value)
        scenario = params.pop("scenario", None)
        if not isinstance(scenario, str):
            raise ParameterError(f"{source}: missing 'scenario = <name>' line")
        output = params.pop("output", None)
        return cls(scenario, params, None if output is None else str(output))

    @classmethod
    def load(cls, path) -> ScenarioConfig:
        p = Path(path)
        return cls.parse(p.read_text(), str(p))

    def dumps(self) -> str:
        lines = [f"scenario = {self.scenario}"]
        if self.output is not None:
            lines.append(f"output = {self.output}")
        lines += [f"{k} = {format_value(v)}" for k, v in self.parameters.items()]
        return "\n".join(lines) + "\n"
