"""Line-oriented text format for pulse programs.

Grammar (one event per line, ``#`` starts a comment)::

    spins <n>
    pulse s<i>[,s<j>...] angle=<expr> phase=<x|y|-x|-y|<expr>|<num>deg>
    delay <expr> [terms=full|couplings|J12[,J23...]]

Expressions are arithmetic over numbers, ``pi``, ``sin``/``cos``/``sqrt``/``abs``
and the constants of a :class:`~qftsim.nmr.SpinSystem` (``J12``, ``nu1``),
resolved when the text is parsed.  ``format_program`` emits the canonical
form: angles and phases as multiples of ``pi`` when that reproduces the
value bit-for-bit, otherwise ``repr`` floats, and delays with their source
expression when they had one.
"""

from __future__ import annotations

import ast
import math
import operator
import re
from fractions import Fraction

from .nmr import SpinSystem, terms_label
from .pulses import Delay, Event, Pulse, PulseProgram

__all__ = ["ProgramSyntaxError", "evaluate", "parse_program", "format_program", "format_angle", "format_phase"]

PHASE_KEYWORDS = {"x": 0.0, "y": math.pi / 2, "-x": math.pi, "-y": -math.pi / 2}

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_FUNCS = {"sin": math.sin, "cos": math.cos, "sqrt": math.sqrt, "abs": abs}


class ProgramSyntaxError(ValueError):
    def __init__(self, msg: str, line: int, col: int = 1):
        super().__init__(f"line {line}, column {col}: {msg}")
        self.line = line
        self.col = col


def evaluate(expr: str, names: dict[str, float] | None = None) -> float:
    """Evaluate an arithmetic expression without ``eval``."""
    names = {"pi": math.pi, **(names or {})}

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Name):
            if node.id not in names:
                raise ValueError(f"unknown name {node.id!r}")
            return names[node.id]
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
            if len(node.args) != 1 or node.keywords:
                raise ValueError(f"{node.func.id} takes one argument")
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ValueError(f"unsupported expression element {ast.dump(node)[:40]}")

    try:
        tree = ast.parse(expr.strip(), mode="eval")
    except SyntaxError:
        raise ValueError(f"malformed expression {expr!r}") from None
    return float(ev(tree))


def _canonical_expr(expr: str) -> str:
    return ast.unparse(ast.parse(expr.strip(), mode="eval")).replace(" ", "")


def _pi_multiple(value: float, max_den: int = 64) -> str | None:
    if value == 0:
        return "0"
    frac = Fraction(value / math.pi).limit_denominator(max_den)
    num, den = frac.numerator, frac.denominator
    if num == 0:
        return None
    sign = "-" if num < 0 else ""
    num = abs(num)
    text = sign + ("pi" if num == 1 else f"{num}*pi") + ("" if den == 1 else f"/{den}")
    return text if evaluate(text) == value else None


def format_angle(value: float) -> str:
    return _pi_multiple(value) or repr(float(value))


def format_phase(value: float) -> str:
    for key, v in PHASE_KEYWORDS.items():
        if value == v:
            return key
    return _pi_multiple(value) or repr(float(value))


def _parse_phase(text: str, names: dict) -> float:
    if text in PHASE_KEYWORDS:
        return PHASE_KEYWORDS[text]
    if text.endswith("deg"):
        return math.radians(evaluate(text[:-3], names))
    return evaluate(text, names)


def _parse_targets(tok: str, n: int | None, lineno: int, col: int) -> tuple[int, ...]:
    targets = []
    for part in tok.split(","):
        m = re.fullmatch(r"s(\d+)", part)
        if not m:
            raise ProgramSyntaxError(f"unknown spin label {part!r}", lineno, col)
        idx = int(m.group(1))
        if idx < 1 or (n is not None and idx > n):
            raise ProgramSyntaxError(f"unknown spin label {part!r}", lineno, col)
        targets.append(idx)
    return tuple(targets)


def parse_program(text: str, sys: SpinSystem | None = None, n: int | None = None) -> PulseProgram:
    """Parse program text; symbolic constants resolve against ``sys``.

    The spin count comes from a ``spins`` line, then ``n``, then ``sys``.
    """
    names = sys.constants() if sys is not None else {}
    declared = None
    events: list[Event] = []
    count = n if n is not None else (sys.n if sys is not None else None)
    lines = text.splitlines()
    # header first so spin labels can be range-checked
    for lineno, raw in enumerate(lines, 1):
        body = raw.split("#", 1)[0].strip()
        if body.startswith("spins"):
            parts = body.split()
            if len(parts) != 2 or not parts[1].isdigit() or int(parts[1]) < 1:
                raise ProgramSyntaxError("expected 'spins <n>'", lineno)
            declared = int(parts[1])
    if declared is not None:
        if count is not None and count != declared:
            raise ProgramSyntaxError(f"program declares {declared} spins, expected {count}", 1)
        count = declared

    for lineno, raw in enumerate(lines, 1):
        body = raw.split("#", 1)[0].rstrip()
        stripped = body.lstrip()
        if not stripped or stripped.startswith("spins"):
            continue
        indent = len(body) - len(stripped) + 1
        keyword, _, rest = stripped.partition(" ")
        rest_col = indent + len(keyword) + 1
        try:
            if keyword == "pulse":
                toks = rest.split()
                if not toks:
                    raise ProgramSyntaxError("pulse needs target spins", lineno, rest_col)
                targets = _parse_targets(toks[0], count, lineno, rest_col)
                fields = {}
                for tok in toks[1:]:
                    key, eq, val = tok.partition("=")
                    if not eq or key not in ("angle", "phase") or key in fields:
                        col = rest_col + rest.find(tok)
                        raise ProgramSyntaxError(f"unexpected token {tok!r}", lineno, col)
                    fields[key] = val
                if "angle" not in fields:
                    raise ProgramSyntaxError("pulse needs angle=", lineno, rest_col)
                angle = evaluate(fields["angle"], names)
                phase = _parse_phase(fields.get("phase", "x"), names)
                events.append(Pulse(targets, angle, phase))
            elif keyword == "delay":
                expr, sep, terms = rest.partition(" terms=")
                if not expr.strip():
                    raise ProgramSyntaxError("delay needs a duration", lineno, rest_col)
                duration = evaluate(expr, names)
                if duration < 0:
                    raise ProgramSyntaxError(f"negative delay {duration}", lineno, rest_col)
                symbolic = any(isinstance(nd, ast.Name) for nd in ast.walk(ast.parse(expr.strip(), mode="eval")))
                events.append(
                    Delay(duration, terms.strip() if sep else "full", _canonical_expr(expr) if symbolic else None)
                )
            else:
                raise ProgramSyntaxError(f"unknown keyword {keyword!r}", lineno, indent)
        except ProgramSyntaxError:
            raise
        except ValueError as exc:
            raise ProgramSyntaxError(str(exc), lineno, rest_col) from None

    if count is None:
        count = max((max(e.targets) for e in events if isinstance(e, Pulse)), default=1)
    try:
        return PulseProgram(tuple(events), count)
    except ValueError as exc:
        raise ProgramSyntaxError(str(exc), 1) from None


def format_program(p: PulseProgram) -> str:
    lines = [f"spins {p.n}"]
    for ev in p.events:
        if isinstance(ev, Pulse):
            tg = ",".join(f"s{t}" for t in ev.targets)
            lines.append(f"pulse {tg} angle={format_angle(ev.angle)} phase={format_phase(ev.phase)}")
        else:
            dur = ev.expr if ev.expr is not None else repr(ev.duration)
            suffix = "" if ev.terms == "full" else f" terms={terms_label(ev.terms)}"
            lines.append(f"delay {dur}{suffix}")
    return "\n".join(lines) + "\n"
