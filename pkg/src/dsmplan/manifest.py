"""Conversation manifests.

A manifest is a JSON file describing one structured conversation: a user
statement, per-piece instruction text, and a list of elements with labels,
dependencies, and either literal token counts or raw text to be counted.
Parsing is total — malformed input raises structured errors, never crashes.

Schema::

    {
      "user_statement": "text"            | {"tokens": 200},
      "instructions":   "text"            | {"tokens": 50},
      "elements": [
        {"id": "B", "label": "Payload", "tokens": 272, "deps": ["A"]},
        {"id": "C", "label": "Orbit",   "text": "...", "deps": ["A"]}
      ]
    }

In approximate token mode each element needs exactly one of text/tokens; in
table mode the table supplies every count.  A literal token number wins over
text for the user statement and instructions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .errors import (
    DuplicateId,
    MissingTokenCount,
    ParseError,
    SelfDependency,
    UnknownDependency,
)
from .tokens import APPROXIMATE, TokenCountProvider, count_for_element, count_tokens_approx


@dataclass(frozen=True)
class ConversationElement:
    """One addressable chunk of the conversation."""

    id: str
    label: str
    dependencies: tuple[str, ...] = ()
    text: str | None = None
    token_count: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "dependencies", tuple(self.dependencies))
        if self.token_count is not None and self.token_count < 0:
            raise ValueError(f"element {self.id!r} has negative token count")


@dataclass(frozen=True)
class ConversationModel:
    """A parsed conversation: elements plus fixed per-conversation token costs."""

    elements: tuple[ConversationElement, ...]
    user_statement_tokens: int = 0
    instruction_tokens: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "elements", tuple(self.elements))
        if self.user_statement_tokens < 0 or self.instruction_tokens < 0:
            raise ValueError("token overheads must be non-negative")

    @property
    def element_ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.elements)

    def token_counts(self) -> dict[str, int]:
        return {e.id: e.token_count or 0 for e in self.elements}

    def dependencies(self) -> dict[str, tuple[str, ...]]:
        return {e.id: e.dependencies for e in self.elements}

    def total_tokens(self) -> int:
        return sum(e.token_count or 0 for e in self.elements)


def _statement_tokens(raw: Any, what: str) -> int:
    """Resolve user_statement / instructions: literal tokens win over text."""
    if raw is None:
        return 0
    if isinstance(raw, str):
        return count_tokens_approx(raw)
    if isinstance(raw, dict):
        if "tokens" in raw:
            tokens = raw["tokens"]
            if not isinstance(tokens, int) or isinstance(tokens, bool) or tokens < 0:
                raise ParseError(f"{what}.tokens must be a non-negative integer")
            return tokens
        if "text" in raw and isinstance(raw["text"], str):
            return count_tokens_approx(raw["text"])
        raise ParseError(f"{what} object needs a 'tokens' or 'text' key")
    raise ParseError(f"{what} must be a string or an object with a 'tokens' key")


def _parse_element(raw: Any, position: int) -> ConversationElement:
    if not isinstance(raw, dict):
        raise ParseError(f"elements[{position}] is not an object")
    element_id = raw.get("id")
    if not isinstance(element_id, str) or not element_id:
        raise ParseError(f"elements[{position}] needs a non-empty string id")
    label = raw.get("label", element_id)
    if not isinstance(label, str):
        raise ParseError(f"element {element_id!r}: label must be a string")
    deps = raw.get("deps", [])
    if not isinstance(deps, list) or not all(isinstance(d, str) for d in deps):
        raise ParseError(f"element {element_id!r}: deps must be a list of ids")
    text = raw.get("text")
    if text is not None and not isinstance(text, str):
        raise ParseError(f"element {element_id!r}: text must be a string")
    tokens = raw.get("tokens")
    if tokens is not None and (not isinstance(tokens, int) or isinstance(tokens, bool) or tokens < 0):
        raise ParseError(f"element {element_id!r}: tokens must be a non-negative integer")
    return ConversationElement(
        id=element_id, label=label, dependencies=tuple(deps), text=text, token_count=tokens
    )


def parse_manifest(
    path: str | Path, provider: TokenCountProvider | None = None
) -> ConversationModel:
    """Parse ``path`` into a ConversationModel with resolved token counts."""
    provider = provider or TokenCountProvider.approximate()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read manifest {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise ParseError("manifest root must be an object")
    raw_elements = doc.get("elements")
    if not isinstance(raw_elements, list):
        raise ParseError("manifest needs an 'elements' list")

    elements = [_parse_element(raw, k) for k, raw in enumerate(raw_elements)]
    seen: set[str] = set()
    for element in elements:
        if element.id in seen:
            raise DuplicateId(element.id)
        seen.add(element.id)
    for element in elements:
        for dep in element.dependencies:
            if dep == element.id:
                raise SelfDependency(element.id)
            if dep not in seen:
                raise UnknownDependency(element.id, dep)

    resolved = []
    for element in elements:
        if provider.mode == APPROXIMATE:
            if element.text is not None and element.token_count is not None:
                raise ParseError(f"element {element.id!r} has both text and a literal token count")
            if element.text is None and element.token_count is None:
                raise MissingTokenCount(element.id)
        count = count_for_element(element, provider)
        resolved.append(
            ConversationElement(
                id=element.id,
                label=element.label,
                dependencies=element.dependencies,
                text=element.text,
                token_count=count,
            )
        )
    return ConversationModel(
        elements=tuple(resolved),
        user_statement_tokens=_statement_tokens(doc.get("user_statement"), "user_statement"),
        instruction_tokens=_statement_tokens(doc.get("instructions"), "instructions"),
    )
