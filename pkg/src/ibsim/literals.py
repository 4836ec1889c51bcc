"""Signed propositional literals over a finite atom alphabet."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, order=True)
class Literal:
    """One signed atom. ``negative=True`` means the atom is denied."""

    atom: str
    negative: bool = False

    def __str__(self) -> str:
        return f"¬{self.atom}" if self.negative else self.atom

    def to_json(self) -> str:
        # ASCII form used in scenario files and CSV traces
        return f"!{self.atom}" if self.negative else self.atom


def negate(lit: Literal) -> Literal:
    return Literal(lit.atom, not lit.negative)


def parse_literal(text: str) -> Literal:
    """Parse ``a``, ``!a`` or ``¬a`` into a literal."""
    text = text.strip()
    if text.startswith("!") or text.startswith("¬"):
        atom = text[1:].strip()
        negative = True
    else:
        atom = text
        negative = False
    if not atom:
        raise ValueError(f"not a literal: {text!r}")
    return Literal(atom, negative)


def parse_literal_set(items) -> frozenset[Literal]:
    return frozenset(parse_literal(x) if isinstance(x, str) else x for x in items)
