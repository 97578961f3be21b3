"""Autonomous ODE systems with quadratic right-hand sides.

``dx_i/dt = c_i + sum_j A_ij x_j + sum_(j<=k) B_ijk x_j x_k``

The built-in ``hiv-cd8`` preset is the five-compartment CD4+/CD8+ T-cell
infection model (susceptible T, infected I, virions V, CD8+ cells Z and
activated CD8+ cells Za). Its initial state ``(1000, 0, 1, 500, 0)`` is not
given with the parameter table; it is recovered from the constant terms of
the published fifth-order series.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np


class ConfigError(ValueError):
    """Invalid model configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class QuadraticTerm:
    target: int
    j: int
    k: int
    coef: float


@dataclass(frozen=True)
class QuadraticOdeSystem:
    names: tuple[str, ...]
    init: tuple[float, ...]
    const_term: tuple[float, ...]
    linear: tuple[tuple[float, ...], ...]
    quadratic: tuple[QuadraticTerm, ...] = ()

    def __post_init__(self):
        n = len(self.names)
        object.__setattr__(self, "names", tuple(str(s) for s in self.names))
        object.__setattr__(self, "init", tuple(float(x) for x in self.init))
        object.__setattr__(self, "const_term", tuple(float(x) for x in self.const_term))
        object.__setattr__(self, "linear", tuple(tuple(float(x) for x in row) for row in self.linear))
        if len(set(self.names)) != n:
            raise ConfigError("names", "state names must be unique")
        if len(self.init) != n:
            raise ConfigError("init", f"expected {n} values, got {len(self.init)}")
        if len(self.const_term) != n:
            raise ConfigError("constant", f"expected {n} values, got {len(self.const_term)}")
        if len(self.linear) != n or any(len(row) != n for row in self.linear):
            raise ConfigError("linear", f"expected a {n}x{n} matrix")
        terms = []
        seen = set()
        for idx, q in enumerate(self.quadratic):
            if not isinstance(q, QuadraticTerm):
                q = QuadraticTerm(*q)
            i, j, k = int(q.target), int(q.j), int(q.k)
            for name, v in (("target", i), ("j", j), ("k", k)):
                if not 0 <= v < n:
                    raise ConfigError(f"quadratic[{idx}].{name}", f"index {v} out of range [0, {n})")
            if j > k:
                j, k = k, j
            if (i, j, k) in seen:
                raise ConfigError(f"quadratic[{idx}]", f"duplicate entry for ({i}, {j}, {k})")
            seen.add((i, j, k))
            terms.append(QuadraticTerm(i, j, k, float(q.coef)))
        object.__setattr__(self, "quadratic", tuple(terms))

    @property
    def n(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def rhs(self, x: Sequence[float]) -> np.ndarray:
        return rhs_eval(self, x)


def rhs_eval(sys: QuadraticOdeSystem, x: Sequence[float]) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (sys.n,):
        raise ValueError(f"state has shape {x.shape}, expected ({sys.n},)")
    out = np.array(sys.const_term) + np.array(sys.linear) @ x
    for q in sys.quadratic:
        out[q.target] += q.coef * x[q.j] * x[q.k]
    return out


@dataclass(frozen=True)
class HivCd8Params:
    lambda_T: float = 10.0
    mu_T: float = 0.01
    chi: float = 0.000024
    mu_I: float = 0.5
    eps_V: float = 100.0
    mu_V: float = 3.0
    alpha: float = 0.02
    lambda_Z: float = 20.0
    mu_Z: float = 0.06
    beta: float = 0.004
    mu_Za: float = 0.004
    T0: float = 1000.0
    I0: float = 0.0
    V0: float = 1.0
    Z0: float = 500.0
    Za0: float = 0.0

    RATES = ("lambda_T", "mu_T", "chi", "mu_I", "eps_V", "mu_V", "alpha",
             "lambda_Z", "mu_Z", "beta", "mu_Za")
    INITIALS = ("T0", "I0", "V0", "Z0", "Za0")

    def __post_init__(self):
        for name in self.RATES:
            if not getattr(self, name) > 0:
                raise ConfigError(name, "rate parameters must be > 0")
        for name in self.INITIALS:
            if not getattr(self, name) >= 0:
                raise ConfigError(name, "initial values must be >= 0")


HIV_STATES = ("T", "I", "V", "Z", "Za")


def hiv_cd8_system(params: HivCd8Params | None = None) -> QuadraticOdeSystem:
    p = params or HivCd8Params()
    T, I, V, Z, Za = range(5)
    linear = np.diag([-p.mu_T, -p.mu_I, -p.mu_V, -p.mu_Z, -p.mu_Za])
    linear[V, I] = p.eps_V * p.mu_I
    return QuadraticOdeSystem(
        names=HIV_STATES,
        init=(p.T0, p.I0, p.V0, p.Z0, p.Za0),
        const_term=(p.lambda_T, 0.0, 0.0, p.lambda_Z, 0.0),
        linear=tuple(map(tuple, linear)),
        quadratic=(
            QuadraticTerm(T, T, V, -p.chi),
            QuadraticTerm(I, T, V, p.chi),
            QuadraticTerm(I, I, Za, -p.alpha),
            QuadraticTerm(Z, I, Z, -p.beta),
            QuadraticTerm(Za, I, Z, p.beta),
        ),
    )


PRESETS = {"hiv-cd8": (HivCd8Params, hiv_cd8_system)}


def preset_system(name: str, overrides: dict[str, float] | None = None) -> QuadraticOdeSystem:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r} (known: {', '.join(PRESETS)})")
    params_cls, build = PRESETS[name]
    known = {f.name for f in dataclasses.fields(params_cls)}
    for key in overrides or {}:
        if key not in known:
            raise ConfigError(f"overrides.{key}", "unknown parameter")
    return build(params_cls(**(overrides or {})))


# --- config documents ------------------------------------------------------

_PRESET_KEYS = {"preset", "overrides"}
_EXPLICIT_KEYS = {"states", "constant", "linear", "quadratic"}


def _real(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {type(value).__name__}")
    return float(value)


def _list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise ConfigError(path, f"expected a list, got {type(value).__name__}")
    return value


def system_from_dict(doc: Any) -> QuadraticOdeSystem:
    if not isinstance(doc, dict):
        raise ConfigError("", "model config must be a JSON object")
    unknown = set(doc) - _PRESET_KEYS - _EXPLICIT_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown field")
    if ("preset" in doc) == ("states" in doc):
        raise ConfigError("", "exactly one of 'preset' or 'states' is required")

    if "preset" in doc:
        extra = set(doc) & _EXPLICIT_KEYS
        if extra:
            raise ConfigError(sorted(extra)[0], "not allowed together with 'preset'")
        if not isinstance(doc["preset"], str):
            raise ConfigError("preset", "expected a string")
        overrides = doc.get("overrides", {})
        if not isinstance(overrides, dict):
            raise ConfigError("overrides", "expected an object")
        return preset_system(doc["preset"], {k: _real(v, f"overrides.{k}") for k, v in overrides.items()})

    if "overrides" in doc:
        raise ConfigError("overrides", "only valid with 'preset'")
    missing = _EXPLICIT_KEYS - set(doc) - {"quadratic"}
    if missing:
        raise ConfigError(sorted(missing)[0], "required field missing")

    names, init = [], []
    for i, st in enumerate(_list(doc["states"], "states")):
        if not isinstance(st, dict):
            raise ConfigError(f"states[{i}]", "expected an object")
        bad = set(st) - {"name", "init"}
        if bad:
            raise ConfigError(f"states[{i}].{sorted(bad)[0]}", "unknown field")
        if not isinstance(st.get("name"), str):
            raise ConfigError(f"states[{i}].name", "expected a string")
        if st["name"] in names:
            raise ConfigError(f"states[{i}].name", f"duplicate state name {st['name']!r}")
        names.append(st["name"])
        init.append(_real(st.get("init"), f"states[{i}].init"))
    n = len(names)
    if n == 0:
        raise ConfigError("states", "at least one state is required")

    const = [_real(v, f"constant[{i}]") for i, v in enumerate(_list(doc["constant"], "constant"))]
    rows = _list(doc["linear"], "linear")
    linear = [[_real(v, f"linear[{r}][{c}]") for c, v in enumerate(_list(row, f"linear[{r}]"))]
              for r, row in enumerate(rows)]

    quad = []
    for i, q in enumerate(_list(doc.get("quadratic", []), "quadratic")):
        if not isinstance(q, dict):
            raise ConfigError(f"quadratic[{i}]", "expected an object")
        bad = set(q) - {"target", "j", "k", "coef"}
        if bad:
            raise ConfigError(f"quadratic[{i}].{sorted(bad)[0]}", "unknown field")
        idx = []
        for key in ("target", "j", "k"):
            ref = q.get(key)
            if isinstance(ref, str):
                if ref not in names:
                    raise ConfigError(f"quadratic[{i}].{key}", f"unknown state {ref!r}")
                idx.append(names.index(ref))
            elif isinstance(ref, int) and not isinstance(ref, bool):
                idx.append(ref)
            else:
                raise ConfigError(f"quadratic[{i}].{key}", "expected a state name")
        quad.append(QuadraticTerm(*idx, _real(q.get("coef"), f"quadratic[{i}].coef")))

    return QuadraticOdeSystem(tuple(names), tuple(init), tuple(const), tuple(map(tuple, linear)), tuple(quad))


def load_system(document: str) -> QuadraticOdeSystem:
    """Parse a JSON model-config document."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"parse error: {exc}") from None
    return system_from_dict(doc)


def system_to_dict(sys: QuadraticOdeSystem) -> dict:
    return {
        "states": [{"name": n, "init": x} for n, x in zip(sys.names, sys.init)],
        "constant": list(sys.const_term),
        "linear": [list(r) for r in sys.linear],
        "quadratic": [
            {"target": sys.names[q.target], "j": sys.names[q.j], "k": sys.names[q.k], "coef": q.coef}
            for q in sys.quadratic
        ],
    }
