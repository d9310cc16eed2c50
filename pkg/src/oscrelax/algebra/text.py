"""Plain-text rendering and parsing of operator polynomials.

One term per line::

    (-1/1)*g^2*hbar^-1*(wc+wr)^-1 * [ct c] * exp(0)
    {(1/1)*g^1*(wc)^-1 + (1/2i)*g^1*(wr)^-1} * [c rt] * exp(i*(-wc+wr)*t)

A coefficient with more than one monomial is wrapped in braces.  The empty
polynomial renders as ``0``.  :func:`parse_poly` inverts :func:`render_poly`
exactly.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .coeff import CoeffSum, QQi
from .freq import parse_freq
from .poly import MODES, NormalTerm, OperatorPoly


def render_qqi(q: QQi) -> str:
    return f"({q})"


def render_coeff(c: CoeffSum) -> str:
    monos = []
    for key in sorted(c.terms):
        syms, facs = key
        parts = [render_qqi(c.terms[key])]
        parts += [f"{s}^{p}" for s, p in syms]
        parts += [f"({f})^{p}" for f, p in facs]
        monos.append("*".join(parts))
    if not monos:
        return "(0/1)"
    if len(monos) == 1:
        return monos[0]
    return "{" + " + ".join(monos) + "}"


def render_ops(ops) -> str:
    return "[" + " ".join(m.label + ("t" if d else "") for m, d in ops) + "]"


def render_term(t: NormalTerm) -> str:
    phase = "0" if t.phase.is_zero() else f"i*({t.phase})*t"
    return f"{render_coeff(t.coeff)} * {render_ops(t.ops)} * exp({phase})"


def render_poly(p: OperatorPoly) -> str:
    if p.is_zero():
        return "0"
    return "\n".join(render_term(t) for t in p.terms())


_FRAC = r"-?\d+/\d+"
_QQI = re.compile(rf"^(?:(?P<re>{_FRAC})(?:(?P<im2>[+-]\d+/\d+)i)?|(?P<im>{_FRAC})i)$")
_TERM = re.compile(r"^(?P<coeff>.+) \* \[(?P<ops>[^\]]*)\] \* exp\((?P<phase>[^)]*(?:\)[^)]*)?)\)$")


def parse_qqi(text: str) -> QQi:
    m = _QQI.match(text)
    if not m:
        raise ValueError(f"bad rational {text!r}")
    if m.group("im"):
        return QQi(Fraction(0), Fraction(m.group("im")))
    return QQi(Fraction(m.group("re")), Fraction(m.group("im2") or 0))


def _split_top(text: str, sep: str) -> list[str]:
    out, depth, cur, k = [], 0, [], 0
    while k < len(text):
        if depth == 0 and text.startswith(sep, k):
            out.append("".join(cur))
            cur = []
            k += len(sep)
            continue
        ch = text[k]
        depth += ch in "({"
        depth -= ch in ")}"
        cur.append(ch)
        k += 1
    out.append("".join(cur))
    return out


def parse_coeff(text: str) -> CoeffSum:
    text = text.strip()
    if text.startswith("{"):
        if not text.endswith("}"):
            raise ValueError(f"unbalanced coefficient {text!r}")
        text = text[1:-1]
    out = CoeffSum()
    for mono in _split_top(text, " + "):
        parts = _split_top(mono.strip(), "*")
        if not parts[0].startswith("("):
            raise ValueError(f"monomial must start with a rational: {mono!r}")
        q = parse_qqi(parts[0][1:-1])
        syms: dict[str, int] = {}
        facs = {}
        for part in parts[1:]:
            base, _, power = part.rpartition("^")
            if base.startswith("("):
                f = parse_freq(base[1:-1])
                facs[f] = facs.get(f, 0) + int(power)
            else:
                syms[base] = syms.get(base, 0) + int(power)
        out = out + CoeffSum.monomial(q, syms, facs)
    return out


def parse_term(line: str) -> NormalTerm:
    m = _TERM.match(line.strip())
    if not m:
        raise ValueError(f"cannot parse term {line!r}")
    ops = []
    for tok in m.group("ops").split():
        dag = tok.endswith("t") and tok[:-1] in MODES
        label = tok[:-1] if dag else tok
        if label not in MODES:
            raise ValueError(f"unknown mode {tok!r}")
        ops.append((MODES[label], dag))
    ph = m.group("phase").strip()
    if ph == "0":
        phase = parse_freq("0")
    else:
        pm = re.fullmatch(r"i\*\((.*)\)\*t", ph)
        if not pm:
            raise ValueError(f"bad phase {ph!r}")
        phase = parse_freq(pm.group(1))
    return NormalTerm(parse_coeff(m.group("coeff")), tuple(ops), phase)


def parse_poly(text: str) -> OperatorPoly:
    text = text.strip()
    if text == "0":
        return OperatorPoly()
    return OperatorPoly.from_terms(parse_term(line) for line in text.splitlines() if line.strip())
