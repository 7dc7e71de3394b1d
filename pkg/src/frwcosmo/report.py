"""Structured output documents shared by the command-line front end."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import sympy as sp

from .expr import from_tree, to_latex, to_text, to_tree


@dataclass
class OutputDocument:
    command: str
    metadata: dict = field(default_factory=dict)
    expressions: list = field(default_factory=list)  # (name, Expr)
    checks: dict = field(default_factory=dict)

    def add(self, name: str, e) -> None:
        self.expressions.append((name, sp.sympify(e)))

    def render(self, fmt: str) -> str:
        if fmt == "text":
            return self.to_text()
        if fmt == "machine":
            return self.to_machine()
        if fmt == "latex":
            return self.to_latex()
        raise ValueError(f"unknown output format {fmt!r}")

    def to_text(self) -> str:
        lines = [f"# {self.command}"]
        lines += [f"# {k}: {v}" for k, v in self.metadata.items()]
        lines += [f"{name} = {to_text(e)}" for name, e in self.expressions]
        for name, value in self.checks.items():
            lines.append(f"check {name}: {value}")
        return "\n".join(lines) + "\n"

    def to_latex(self) -> str:
        lines = [f"% {self.command}"]
        lines += [f"\\mathrm{{{name}}} = {to_latex(e)}" for name, e in self.expressions]
        return "\n".join(lines) + "\n"

    def to_machine(self) -> str:
        doc = {
            "command": self.command,
            "metadata": self.metadata,
            "expressions": [
                {"name": name, "text": to_text(e), "tree": to_tree(e), "latex": to_latex(e)}
                for name, e in self.expressions
            ],
            "checks": self.checks,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def parse_machine(text: str) -> dict:
    """Expressions of a machine-readable document, rebuilt from their trees."""
    doc = json.loads(text)
    return {entry["name"]: from_tree(entry["tree"]) for entry in doc["expressions"]}
