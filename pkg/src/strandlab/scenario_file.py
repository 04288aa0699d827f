"""Text format for protocol scenarios.

Example::

    scenario simple-auth
    agents A B
    nonce $N0
    role init A:agent B:agent Na:nonce
      fresh Na
      + $A . $B . $Na
      - {$Na . $A}sk(A,B)
    end
    role resp A:agent B:agent Na:nonce
      - $A . $B . $Na
      + {$Na . $A}sk(A,B)
    end
    penetrator dy
      keys all-except sk(A,B)
      emit sk(A,A) sk(B,B)
      texts A B
      depth 3
    end
    bounds
      sessions init=2 resp=2
    end
    property agreement noninjective-agreement claimant=init partner=resp params=A,B,Na

Role blocks also take ``side <param> <pattern>`` (forbidden subterm),
``admit X=a,b Y=c`` and ``admit exclude-pair X Y a b``.  ``penetrator
maximal sk(A,B)`` is shorthand for the operational maximal penetrator.  A
``policy`` block holds a key-management policy for ``kmp-soundness``
properties.  ``#`` starts a comment outside terms.
"""

from __future__ import annotations

import shlex
from dataclasses import dataclass, field

from .grammar import GrammarError, parse_key, parse_signed, parse_term, render, render_key, render_signed
from .penetrator import DYModel, KeySet, MaximalModel
from .search import (ExcludePair, ForbidSubterm, InjectiveAgreement, Injectivity,
                     NonInjectiveAgreement, ParamFilter, ProtocolSpec, RoleTemplate,
                     SearchConfig, Secrecy)
from .terms import AGENT, KEY, NONCE, TERM, Key, Text, Var

__all__ = ["ScenarioFile", "ScenarioError", "parse_scenario", "render_scenario",
           "load_scenario", "scenario_file_from_named"]

_KINDS = {"agent": AGENT, "nonce": NONCE, "term": TERM, "key": KEY}
_KIND_NAMES = {v: k for k, v in _KINDS.items()}


class ScenarioError(ValueError):
    def __init__(self, message: str, line: int, col: int = 0):
        self.line = line
        self.col = col
        self.reason = message
        super().__init__(f"line {line}, column {col + 1}: {message}")


@dataclass(frozen=True)
class ScenarioFile:
    name: str
    spec: ProtocolSpec
    config: SearchConfig
    properties: tuple = ()  # ((name, property), ...)
    policy: object = None   # kmp Policy, when a kmp-soundness property needs one

    def property(self, name: str):
        for n, p in self.properties:
            if n == name:
                return p
        raise KeyError(f"no property {name!r}; known: {', '.join(n for n, _ in self.properties)}")


# --- rendering --------------------------------------------------------------

def _yes(b: bool) -> str:
    return "yes" if b else "no"


def _filter(f) -> str:
    return ";".join(f"{k}:{','.join(v)}" for k, v in f)


def _render_property(name, p) -> str:
    kind = getattr(p, "kind", None)
    out = [name, kind]
    if kind in ("noninjective-agreement", "injective-agreement"):
        out += [f"claimant={p.claimant}", f"partner={p.partner}", f"params={','.join(p.params)}"]
        if p.claimant_filter:
            out.append(f"filter={_filter(p.claimant_filter)}")
        if p.claimant_height is not None:
            out.append(f"claimant-height={p.claimant_height}")
        if p.partner_height is not None:
            out.append(f"partner-height={p.partner_height}")
        if kind == "injective-agreement" and p.orig:
            out.append("orig=yes")
    elif kind == "injectivity":
        out += [f"role={p.role}", f"param={p.param}"]
        if p.claimant_filter:
            out.append(f"filter={_filter(p.claimant_filter)}")
        if p.claimant_height is not None:
            out.append(f"claimant-height={p.claimant_height}")
    elif kind == "secrecy":
        out.append(f"role={p.role}")
        if p.claimant_filter:
            out.append(f"filter={_filter(p.claimant_filter)}")
        if p.claimant_height is not None:
            out.append(f"claimant-height={p.claimant_height}")
        out.append(f"secret={shlex.quote(render(p.secret))}")
    elif kind == "kmp-soundness":
        out.append(f"closure={p.result.kind.value}")
    else:
        raise TypeError(f"cannot render property {p!r}")
    return "property " + " ".join(out)


def _render_role(role: RoleTemplate, admission) -> list[str]:
    params = " ".join(f"{v.name}:{_KIND_NAMES[v.kind]}" for v in role.params)
    lines = [f"role {role.name} {params}".rstrip()]
    if role.fresh:
        lines.append("  fresh " + " ".join(v.name for v in role.params if v.name in role.fresh))
    for c in role.side_conditions:
        lines.append(f"  side {c.param} {render(c.pattern)}")
    if isinstance(admission, ParamFilter):
        lines.append("  admit " + " ".join(f"{k}={','.join(v)}" for k, v in admission.allowed))
    elif isinstance(admission, ExcludePair):
        lines.append(f"  admit exclude-pair {' '.join(admission.params)} {' '.join(admission.agents)}")
    elif admission is not None:
        raise TypeError(f"cannot render admission predicate {admission!r} for role {role.name}")
    lines += ["  " + render_signed(st) for st in role.trace]
    lines.append("end")
    return lines


def render_scenario(sf: ScenarioFile) -> str:
    cfg = sf.config
    pen = cfg.penetrator
    lines = [f"scenario {sf.name}"]
    if sf.spec.name != sf.name:
        lines.append(f"protocol {sf.spec.name}")
    lines.append("agents " + " ".join(cfg.agents))
    for n in cfg.nonces:
        lines.append(f"nonce {render(n)}")
    if not cfg.typed:
        lines.append("typed no")
    lines.append("")
    for role in sf.spec.roles:
        lines += _render_role(role, sf.spec.admission_for(role.name))
        lines.append("")
    ks = pen.known_keys
    lines.append("penetrator dy")
    lines.append(f"  keys {ks.mode} " + " ".join(render_key(k) for k in sorted(ks.keys)))
    if ks.emit:
        lines.append("  emit " + " ".join(render_key(k) for k in ks.emit))
    if pen.text_universe:
        lines.append("  texts " + " ".join(sorted(t.name for t in pen.text_universe)))
    lines.append(f"  depth {pen.synth_depth}")
    if pen.decrypt_without_key:
        lines.append("  open-ciphers yes")
    lines.append("end")
    lines.append("")
    lines.append("bounds")
    lines.append("  sessions " + " ".join(f"{r}={n}" for r, n in cfg.sessions))
    if not cfg.unique_origination:
        lines.append("  unique-origination no")
    if cfg.relaxed:
        lines.append("  relaxed " + " ".join(sorted(cfg.relaxed)))
    for a in cfg.nonce_aliases:
        lines.append("  alias " + " ".join(a))
    if cfg.atomic:
        lines.append("  atomic yes")
    if cfg.max_states is not None:
        lines.append(f"  max-states {cfg.max_states}")
    if cfg.time_limit is not None:
        lines.append(f"  time-limit {cfg.time_limit}")
    if cfg.workers != 1:
        lines.append(f"  workers {cfg.workers}")
    lines.append("end")
    if sf.policy is not None:
        from .kmp import format_policy
        lines.append("")
        lines.append("policy")
        lines += ["  " + x for x in format_policy(sf.policy).splitlines()]
        lines.append("end")
    if sf.properties:
        lines.append("")
    for name, p in sf.properties:
        lines.append(_render_property(name, p))
    return "\n".join(lines) + "\n"


def scenario_file_from_named(sc) -> ScenarioFile:
    policy = next((p.policy for _, p in sc.properties if getattr(p, "policy", None) is not None),
                  None)
    return ScenarioFile(sc.name, sc.spec, sc.config, tuple(sc.properties), policy)


# --- parsing ------------------------------------------------------------------

class _Lines:
    def __init__(self, text: str):
        self.items = []
        for n, raw in enumerate(text.splitlines(), 1):
            stripped = raw.strip()
            if not stripped or stripped.startswith("#"):
                continue
            self.items.append((n, len(raw) - len(raw.lstrip()), stripped, raw))
        self.i = 0

    def next(self):
        if self.i >= len(self.items):
            return None
        item = self.items[self.i]
        self.i += 1
        return item

    def last_line(self) -> int:
        return self.items[-1][0] if self.items else 1


def _term_error(e: GrammarError, line: int, col: int):
    return ScenarioError(e.reason, line, col + e.col)


def _bool(word: str, line: int, col: int) -> bool:
    if word in ("yes", "true", "on"):
        return True
    if word in ("no", "false", "off"):
        return False
    raise ScenarioError(f"expected yes or no, got {word!r}", line, col)


def _split_head(text: str):
    head, _, rest = text.partition(" ")
    return head, rest.strip()


def _parse_role(lines: _Lines, n, col, rest):
    words = rest.split()
    if not words:
        raise ScenarioError("role needs a name", n, col)
    name = words[0]
    params = []
    for w in words[1:]:
        pname, _, kind = w.partition(":")
        if kind not in _KINDS:
            raise ScenarioError(f"parameter {w!r}: kind must be one of "
                                f"{', '.join(_KINDS)}", n, col + rest.index(w) + 5)
        params.append(Var(pname, _KINDS[kind]))
    env = {v.name: v for v in params}
    trace, fresh, side, admission = [], [], [], None
    while True:
        item = lines.next()
        if item is None:
            raise ScenarioError(f"role {name} is missing 'end'", lines.last_line(), 0)
        ln, c, text, raw = item
        if text == "end":
            break
        if text[0] in "+-⊕⊖":
            try:
                trace.append(parse_signed(text, env))
            except GrammarError as e:
                raise _term_error(e, ln, c) from None
            continue
        head, body = _split_head(text)
        bcol = c + len(head) + 1
        if head == "fresh":
            fresh += body.split()
        elif head == "side":
            p, _, pat = body.partition(" ")
            try:
                side.append(ForbidSubterm(p, parse_term(pat.strip(), env)))
            except GrammarError as e:
                raise _term_error(e, ln, bcol + len(p) + 1) from None
        elif head == "admit":
            ws = body.split()
            if ws and ws[0] == "exclude-pair":
                if len(ws) != 5:
                    raise ScenarioError("admit exclude-pair X Y a b", ln, bcol)
                admission = ExcludePair((ws[1], ws[2]), (ws[3], ws[4]))
            else:
                allowed = {}
                for w in ws:
                    k, eq, v = w.partition("=")
                    if not eq:
                        raise ScenarioError(f"expected PARAM=v1,v2 in {w!r}", ln, bcol)
                    allowed[k] = tuple(v.split(","))
                admission = ParamFilter.of(**allowed)
        else:
            raise ScenarioError(f"unexpected {head!r} in role {name}", ln, c)
    try:
        role = RoleTemplate(name, tuple(params), tuple(trace), frozenset(fresh), tuple(side))
    except ValueError as e:
        raise ScenarioError(str(e), n, col) from None
    return role, admission


def _parse_keys(words, ln, col):
    out = []
    for w in words:
        try:
            out.append(parse_key(w))
        except GrammarError as e:
            raise ScenarioError(f"bad key {w!r}: {e.reason}", ln, col) from None
    return out


def _parse_penetrator(lines: _Lines, n, col, rest):
    words = rest.split()
    if not words or words[0] not in ("dy", "maximal"):
        raise ScenarioError("penetrator must be 'dy' or 'maximal <key>'", n, col)
    maximal = None
    if words[0] == "maximal":
        ks = _parse_keys(words[1:], n, col)
        if len(ks) != 1 or ks[0].kind != "sk":
            raise ScenarioError("maximal penetrator protects exactly one sk(A,B) key", n, col)
        maximal = MaximalModel(*ks[0].args)
    mode, keys, emit, texts, depth, opened = "only", [], [], [], 2, False
    while True:
        item = lines.next()
        if item is None:
            raise ScenarioError("penetrator block is missing 'end'", lines.last_line(), 0)
        ln, c, text, _ = item
        if text == "end":
            break
        head, body = _split_head(text)
        ws = body.split()
        bcol = c + len(head) + 1
        if head == "keys":
            if not ws or ws[0] not in ("only", "all-except"):
                raise ScenarioError("keys only|all-except <key>...", ln, bcol)
            mode, keys = ws[0], _parse_keys(ws[1:], ln, bcol)
        elif head == "emit":
            emit = _parse_keys(ws, ln, bcol)
        elif head == "texts":
            texts = ws
        elif head == "depth":
            try:
                depth = int(body)
            except ValueError:
                raise ScenarioError(f"depth must be an integer, got {body!r}", ln, bcol) from None
        elif head == "open-ciphers":
            opened = _bool(body, ln, bcol)
        else:
            raise ScenarioError(f"unexpected {head!r} in penetrator block", ln, c)
    if maximal is not None:
        return maximal.as_dy(texts, depth, emit)
    return DYModel(KeySet(mode, frozenset(keys), tuple(emit)), frozenset(texts), depth, opened)


def _parse_bounds(lines: _Lines, n, col):
    out = {}
    aliases = []
    while True:
        item = lines.next()
        if item is None:
            raise ScenarioError("bounds block is missing 'end'", lines.last_line(), 0)
        ln, c, text, _ = item
        if text == "end":
            break
        head, body = _split_head(text)
        bcol = c + len(head) + 1
        try:
            if head == "sessions":
                sess = []
                for w in body.split():
                    r, eq, k = w.partition("=")
                    if not eq:
                        raise ValueError(f"expected ROLE=N, got {w!r}")
                    sess.append((r, int(k)))
                out["sessions"] = tuple(sess)
            elif head == "unique-origination":
                out["unique_origination"] = _bool(body, ln, bcol)
            elif head == "atomic":
                out["atomic"] = _bool(body, ln, bcol)
            elif head == "relaxed":
                out["relaxed"] = frozenset(body.split())
            elif head == "alias":
                ws = body.split()
                if len(ws) != 3:
                    raise ValueError("alias ROLE PARAM OTHER")
                aliases.append(tuple(ws))
            elif head == "max-states":
                out["max_states"] = int(body)
            elif head == "time-limit":
                out["time_limit"] = float(body)
            elif head == "workers":
                out["workers"] = int(body)
            else:
                raise ScenarioError(f"unexpected {head!r} in bounds block", ln, c)
        except ValueError as e:
            if isinstance(e, ScenarioError):
                raise
            raise ScenarioError(str(e), ln, bcol) from None
    if aliases:
        out["nonce_aliases"] = tuple(aliases)
    return out


def _parse_filter(s):
    out = []
    for part in s.split(";"):
        k, _, v = part.partition(":")
        out.append((k, tuple(v.split(","))))
    return tuple(out)


def _parse_property(text, ln, col, roles, policy):
    try:
        words = shlex.split(text)
    except ValueError as e:
        raise ScenarioError(str(e), ln, col) from None
    if len(words) < 2:
        raise ScenarioError("property NAME KIND key=value...", ln, col)
    name, kind = words[0], words[1]
    kv = {}
    for w in words[2:]:
        k, eq, v = w.partition("=")
        if not eq:
            raise ScenarioError(f"expected key=value, got {w!r}", ln, col + text.find(w))
        kv[k] = v

    def opt_int(key):
        return int(kv[key]) if key in kv else None

    def need(key):
        if key not in kv:
            raise ScenarioError(f"{kind} property needs {key}=", ln, col)
        return kv[key]

    def role_of(key, params=()):
        r = need(key)
        if r not in roles:
            raise ScenarioError(f"{key}: unknown role {r!r}", ln, col + text.find(f"{key}="))
        known = {v.name for v in roles[r].params}
        for p in params:
            if p not in known:
                raise ScenarioError(f"role {r} has no parameter {p!r}", ln, col)
        return r

    filt = _parse_filter(kv["filter"]) if "filter" in kv else ()
    try:
        if kind in ("noninjective-agreement", "injective-agreement"):
            params = tuple(need("params").split(","))
            args = (role_of("claimant", params), role_of("partner", params), params, filt,
                    opt_int("claimant-height"), opt_int("partner-height"))
            if kind == "noninjective-agreement":
                return name, NonInjectiveAgreement(*args)
            return name, InjectiveAgreement(*args, orig=_bool(kv.get("orig", "no"), ln, col))
        if kind == "injectivity":
            return name, Injectivity(role_of("role", (need("param"),)), need("param"), filt,
                                     opt_int("claimant-height"))
        if kind == "secrecy":
            role = role_of("role")
            env = {v.name: v for v in roles[role].params}
            try:
                secret = parse_term(need("secret"), env)
            except GrammarError as e:
                raise ScenarioError(f"secret: {e.reason}", ln, col) from None
            return name, Secrecy(role, secret, filt, opt_int("claimant-height"))
        if kind == "kmp-soundness":
            if policy is None:
                raise ScenarioError("kmp-soundness needs a policy block", ln, col)
            from .kmp import KmpSoundness, closure
            return name, KmpSoundness(closure(policy, need("closure")), policy)
    except ValueError as e:
        if isinstance(e, ScenarioError):
            raise
        raise ScenarioError(str(e), ln, col) from None
    raise ScenarioError(f"unknown property kind {kind!r}", ln, col + len(name) + 1)


def parse_scenario(text: str) -> ScenarioFile:
    lines = _Lines(text)
    name = spec_name = None
    agents, nonces, typed = (), [], True
    roles, admission = [], {}
    pen, bounds, policy = None, {}, None
    pending_props = []
    while True:
        item = lines.next()
        if item is None:
            break
        ln, col, text, raw = item
        head, rest = _split_head(text)
        if head == "scenario":
            name = rest
        elif head == "protocol":
            spec_name = rest
        elif head == "agents":
            agents = tuple(rest.split())
        elif head == "nonce":
            try:
                nonces.append(parse_term(rest))
            except GrammarError as e:
                raise _term_error(e, ln, col + len(head) + 1) from None
        elif head == "typed":
            typed = _bool(rest, ln, col + 6)
        elif head == "role":
            role, adm = _parse_role(lines, ln, col, rest)
            roles.append(role)
            if adm is not None:
                admission[role.name] = adm
        elif head == "penetrator":
            pen = _parse_penetrator(lines, ln, col, rest)
        elif head == "bounds":
            bounds = _parse_bounds(lines, ln, col)
        elif head == "policy":
            body = []
            while True:
                it = lines.next()
                if it is None:
                    raise ScenarioError("policy block is missing 'end'", lines.last_line(), 0)
                if it[2] == "end":
                    break
                body.append(it)
            from .kmp import PolicyError, parse_policy
            try:
                policy = parse_policy("\n".join(b[2] for b in body))
            except PolicyError as e:
                where = body[e.line - 1] if e.line else (ln, col)
                raise ScenarioError(e.reason, where[0], where[1] + e.col) from None
        elif head == "property":
            pending_props.append((rest, ln, col + len(head) + 1))
        else:
            raise ScenarioError(f"unknown declaration {head!r}", ln, col)
    if name is None:
        raise ScenarioError("missing 'scenario NAME' line", 1, 0)
    if not roles:
        raise ScenarioError("scenario declares no roles", lines.last_line(), 0)
    if pen is None:
        raise ScenarioError("missing penetrator block", lines.last_line(), 0)
    if not agents:
        raise ScenarioError("missing 'agents' line", lines.last_line(), 0)
    try:
        spec = ProtocolSpec(spec_name or name, tuple(roles), admission)
    except ValueError as e:
        raise ScenarioError(str(e), 1, 0) from None
    if "sessions" not in bounds:
        bounds["sessions"] = tuple((r.name, 1) for r in roles)
    known = {r.name for r in roles}
    for r, _ in bounds["sessions"]:
        if r not in known:
            raise ScenarioError(f"bounds mention unknown role {r!r}", lines.last_line(), 0)
    cfg = SearchConfig(agents=agents, penetrator=pen, nonces=tuple(nonces) or (Text("N0"),),
                       typed=typed, **bounds)
    by_name = {r.name: r for r in roles}
    props = tuple(_parse_property(t, ln, c, by_name, policy) for t, ln, c in pending_props)
    return ScenarioFile(name, spec, cfg, props, policy)


def load_scenario(path) -> ScenarioFile:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())
