"""Session archives: a derived model saved to disk for fast reloading.

The file is indented JSON::

    {
      "format": "frwcosmo-session",
      "version": 1,
      "settings": {"k": "k", "units": "symbolic", "fluid": true, "lambda": "0"},
      "expressions": {"Ecunr1": "<expression text>", ...},
      "tensors": {"Ein": {"valence": ["d", "d"], "components": ["...", ...]}}
    }

Expression strings use the parser grammar.  Readers accept only their own
major version.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .cosmo import CosmoModel, FriedmannSystem, einstein_equations
from .expr import ParseError, parse, to_text
from .tensor import Tensor

FORMAT = "frwcosmo-session"
VERSION = 1


class SessionFormatError(ValueError):
    pass


class SessionVersionError(SessionFormatError):
    pass


@dataclass
class SessionArchive:
    settings: dict
    expressions: dict = field(default_factory=dict)
    tensors: dict = field(default_factory=dict)
    version: int = VERSION

    def to_json(self) -> str:
        doc = {
            "format": FORMAT,
            "version": self.version,
            "settings": self.settings,
            "expressions": {name: to_text(e) for name, e in self.expressions.items()},
            "tensors": {
                name: {"valence": list(t.valence), "components": [to_text(c) for c in t.components]}
                for name, t in self.tensors.items()
            },
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SessionArchive":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SessionFormatError(f"not a session file: {exc}") from exc
        if not isinstance(doc, dict) or doc.get("format") != FORMAT:
            raise SessionFormatError("not a session file: missing format tag")
        version = doc.get("version")
        if version != VERSION:
            raise SessionVersionError(f"session version {version!r} is not supported (reader is v{VERSION})")
        try:
            expressions = {name: parse(s) for name, s in doc["expressions"].items()}
            tensors = {
                name: Tensor(name, tuple(t["valence"]), tuple(parse(c) for c in t["components"]))
                for name, t in doc.get("tensors", {}).items()
            }
            settings = dict(doc["settings"])
        except (KeyError, TypeError, AttributeError, ParseError, ValueError) as exc:
            raise SessionFormatError(f"malformed session file: {exc}") from exc
        return cls(settings, expressions, tensors, version)


def build_archive(model: CosmoModel, system: FriedmannSystem, include_raw: bool = True) -> SessionArchive:
    tensors = {"Ein": einstein_equations(model)} if include_raw else {}
    return SessionArchive(model.settings(), dict(system.items()), tensors)


def save_session(model: CosmoModel, system: FriedmannSystem, path, include_raw: bool = True) -> SessionArchive:
    archive = build_archive(model, system, include_raw)
    Path(path).write_text(archive.to_json())
    return archive


def load_session(path) -> SessionArchive:
    return SessionArchive.from_json(Path(path).read_text())
