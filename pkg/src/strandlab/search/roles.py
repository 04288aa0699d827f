"""Role templates, protocol specifications and their admission predicates."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from ..grammar import render
from ..strands import SignedTerm
from ..terms import AGENT, Text, Var, subterms, unify, variables

__all__ = ["RoleTemplate", "ProtocolSpec", "ForbidSubterm", "ExcludePair", "ParamFilter"]


@dataclass(frozen=True)
class ForbidSubterm:
    """Side condition: no subterm of ``param``'s value matches ``pattern``.

    ``pattern`` may use local variables (``?U``), which match anything of
    their kind; e.g. ``#sk(?U,?V)`` forbids every shared key.
    """

    param: str
    pattern: object

    def ok(self, env: Mapping[Var, object]) -> bool:
        val = next((t for v, t in env.items() if v.name == self.param), None)
        if val is None:
            return True
        return not any(unify(self.pattern, u, {}, typed=False) is not None for u in subterms(val))

    def __str__(self):
        return f"{self.param} excludes {render(self.pattern)}"


@dataclass(frozen=True)
class ExcludePair:
    """Admission ``~((X = a /\\ Y = b) \\/ (X = b /\\ Y = a))`` over agent params X, Y."""

    params: tuple[str, str]
    agents: tuple[str, str]

    def __call__(self, env: Mapping[str, object]) -> bool:
        x, y = (env.get(p) for p in self.params)
        if x is None or y is None:
            return True
        a, b = (Text(n) for n in self.agents)
        return not ((x == a and y == b) or (x == b and y == a))

    def __str__(self):
        return f"exclude-pair {self.params[0]} {self.params[1]} {self.agents[0]} {self.agents[1]}"


@dataclass(frozen=True)
class ParamFilter:
    """Admission restricting parameters to listed values (unbound params pass)."""

    allowed: tuple[tuple[str, tuple[str, ...]], ...]

    @classmethod
    def of(cls, **kw) -> "ParamFilter":
        return cls(tuple(sorted((k, tuple(v)) for k, v in kw.items())))

    def __call__(self, env: Mapping[str, object]) -> bool:
        for name, vals in self.allowed:
            t = env.get(name)
            if t is not None and not (isinstance(t, Text) and t.name in vals):
                return False
        return True

    def __str__(self):
        return "; ".join(f"{k} in {' '.join(v)}" for k, v in self.allowed)


@dataclass(frozen=True)
class RoleTemplate:
    name: str
    params: tuple[Var, ...]
    trace: tuple[SignedTerm, ...]
    fresh: frozenset = frozenset()
    side_conditions: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "trace", tuple(self.trace))
        object.__setattr__(self, "fresh", frozenset(self.fresh))
        object.__setattr__(self, "side_conditions", tuple(self.side_conditions))
        names = {v.name for v in self.params}
        if len(names) != len(self.params):
            raise ValueError(f"role {self.name}: duplicate parameter names")
        for st in self.trace:
            for v in variables(st.term):
                if not v.local and v not in self.params:
                    raise ValueError(f"role {self.name}: variable {v} is not a parameter")
        for f in self.fresh:
            if f not in names:
                raise ValueError(f"role {self.name}: fresh {f} is not a parameter")
            v = self.param(f)
            first = next((st for st in self.trace if v in variables(st.term)), None)
            if first is None or not first.positive:
                raise ValueError(f"role {self.name}: fresh {f} must first occur on a positive node")

    def param(self, name: str) -> Var:
        for v in self.params:
            if v.name == name:
                return v
        raise KeyError(f"role {self.name} has no parameter {name}")

    def side_conditions_ok(self, env: Mapping[Var, object]) -> bool:
        return all(c.ok(env) for c in self.side_conditions)

    def __len__(self):
        return len(self.trace)


@dataclass(frozen=True)
class ProtocolSpec:
    name: str
    roles: tuple[RoleTemplate, ...]
    admission: tuple = ()  # (role name, predicate) pairs

    def __post_init__(self):
        object.__setattr__(self, "roles", tuple(self.roles))
        if isinstance(self.admission, Mapping):
            object.__setattr__(self, "admission", tuple(sorted(self.admission.items(),
                                                               key=lambda kv: kv[0])))
        names = [r.name for r in self.roles]
        if len(set(names)) != len(names):
            raise ValueError(f"protocol {self.name}: duplicate role names")
        for rn, _ in self.admission:
            if rn not in names:
                raise ValueError(f"protocol {self.name}: admission for unknown role {rn}")

    def role(self, name: str) -> RoleTemplate:
        for r in self.roles:
            if r.name == name:
                return r
        raise KeyError(f"protocol {self.name} has no role {name}")

    def admission_for(self, role: str):
        for rn, pred in self.admission:
            if rn == role:
                return pred
        return None

    def with_admission(self, role: str, pred) -> "ProtocolSpec":
        adm = {rn: p for rn, p in self.admission}
        if pred is None:
            adm.pop(role, None)
        else:
            adm[role] = pred
        return ProtocolSpec(self.name, self.roles, adm)
