"""Integer linear combinations of frequency symbols.

A :class:`FreqExpr` is the exponent of a phase factor ``exp(i * expr * t)``
and also serves as a linear denominator factor inside coefficients.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from math import gcd

# Canonical symbol order: system frequencies first, then the bath frequency.
FREQ_SYMBOLS = ("wc", "wr", "w")
SYSTEM_FREQS = ("wc", "wr")
BATH_FREQ = "w"

_ORDER = {s: k for k, s in enumerate(FREQ_SYMBOLS)}


@dataclass(frozen=True, order=True)
class FreqExpr:
    """Integer combination ``sum_k n_k * symbol_k``; zero entries never stored."""

    coeffs: tuple[tuple[str, int], ...] = ()

    @classmethod
    def of(cls, **kw: int) -> FreqExpr:
        return cls.from_dict(kw)

    @classmethod
    def from_dict(cls, d: dict[str, int]) -> FreqExpr:
        for s in d:
            if s not in _ORDER:
                raise ValueError(f"unknown frequency symbol {s!r}")
        items = sorted(((s, int(n)) for s, n in d.items() if n), key=lambda p: _ORDER[p[0]])
        return cls(tuple(items))

    def as_dict(self) -> dict[str, int]:
        return dict(self.coeffs)

    def __add__(self, other: FreqExpr) -> FreqExpr:
        d = self.as_dict()
        for s, n in other.coeffs:
            d[s] = d.get(s, 0) + n
        return FreqExpr.from_dict(d)

    def __neg__(self) -> FreqExpr:
        return FreqExpr(tuple((s, -n) for s, n in self.coeffs))

    def __sub__(self, other: FreqExpr) -> FreqExpr:
        return self + (-other)

    def scale(self, k: int) -> FreqExpr:
        return FreqExpr.from_dict({s: k * n for s, n in self.coeffs})

    def is_zero(self) -> bool:
        return not self.coeffs

    def get(self, symbol: str) -> int:
        return self.as_dict().get(symbol, 0)

    def symbols(self) -> set[str]:
        return {s for s, _ in self.coeffs}

    def evaluate(self, values: dict[str, float]) -> float:
        return sum(n * values[s] for s, n in self.coeffs)

    def subs(self, mapping: dict[str, FreqExpr]) -> FreqExpr:
        out = FreqExpr()
        for s, n in self.coeffs:
            out = out + (mapping[s].scale(n) if s in mapping else FreqExpr(((s, n),)))
        return out

    def canonical(self) -> tuple[int, FreqExpr]:
        """Split into ``(k, f)`` with ``self == k * f``.

        ``f`` has coprime coefficients and a positive leading coefficient.
        Used to normalize denominator factors.
        """
        if not self.coeffs:
            raise ValueError("zero frequency has no canonical factor")
        k = 0
        for _, n in self.coeffs:
            k = gcd(k, n)
        if self.coeffs[0][1] < 0:
            k = -k
        return k, FreqExpr(tuple((s, n // k) for s, n in self.coeffs))

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for s, n in self.coeffs:
            sign = "-" if n < 0 else "+"
            mag = abs(n)
            body = s if mag == 1 else f"{mag}*{s}"
            parts.append(f"{sign}{body}")
        text = "".join(parts)
        return text[1:] if text[0] == "+" else text


_TERM = re.compile(r"([+-]?)\s*(?:(\d+)\s*\*\s*)?(wc|wr|w)\s*")


def parse_freq(text: str) -> FreqExpr:
    """Inverse of ``str(FreqExpr)``; accepts ``"0"`` for the zero combination."""
    text = text.strip()
    if text == "0":
        return FreqExpr()
    pos, d = 0, {}
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot parse frequency expression {text!r}")
        n = int(m.group(2) or 1) * (-1 if m.group(1) == "-" else 1)
        d[m.group(3)] = d.get(m.group(3), 0) + n
        pos = m.end()
    return FreqExpr.from_dict(d)


WC = FreqExpr.of(wc=1)
WR = FreqExpr.of(wr=1)
W = FreqExpr.of(w=1)
ZERO = FreqExpr()
