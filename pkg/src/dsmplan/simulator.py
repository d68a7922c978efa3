"""First-in-first-out context-window simulation.

The window is a queue of whole entries (never split): per piece, the user
statement (first piece only), the instruction block, the piece's elements in
order, then the modeled reply of exactly ``fm_tokens``.  Before a piece is
sent, the oldest entries are evicted until the piece's input plus projected
reply fits; a piece larger than the window then evicts its own earliest
entries, which is precisely the failure mode worth measuring.

A dependency miss is a (consumer, provider) pair whose provider was already
sent but is no longer in the window when the consumer's piece lands.
Providers that have not been sent yet (feedback edges inside coupled groups)
are not misses — nothing was lost from the window.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .errors import PieceExceedsWindow, SpecMismatch
from .planning import ConversationPlan, output_budget

_USER = "user"
_INSTRUCTIONS = "instructions"
_ELEMENT = "element"
_REPLY = "reply"


@dataclass(frozen=True)
class SimulationStep:
    piece_index: int
    tokens_in: int
    tokens_out: int
    evicted_element_ids: tuple[str, ...]


@dataclass(frozen=True)
class SimulationReport:
    model_name: str
    context_window: int  # effective window the run used
    max_output_tokens: int
    steps: tuple[SimulationStep, ...]
    dependency_misses: int
    lost_tokens: int
    output_overflow_tokens: int
    missed_pairs: tuple[tuple[str, str], ...]  # (consumer, provider)
    oversized_piece_indices: tuple[int, ...]


def simulate(
    plan: ConversationPlan,
    *,
    context_window: int | None = None,
    strict: bool = False,
) -> SimulationReport:
    """Run ``plan`` through a FIFO window of ``context_window`` tokens.

    ``context_window`` defaults to the plan's model; passing it explicitly
    supports sweeps below the model's output limit.  With ``strict`` a piece
    that cannot fit the window even on its own raises PieceExceedsWindow;
    otherwise the run continues and the piece index is reported.
    """
    cw = plan.model.context_window if context_window is None else context_window
    if cw <= 0:
        raise ValueError("context window must be positive")
    counts = plan.conversation.token_counts()
    deps = plan.conversation.dependencies()
    inst = plan.config.instructions_per_piece
    ust = plan.conversation.user_statement_tokens

    window: deque[tuple[str, str, int]] = deque()  # (kind, id, tokens)
    window_tokens = 0
    in_window: set[str] = set()
    sent: set[str] = set()

    steps: list[SimulationStep] = []
    missed_pairs: list[tuple[str, str]] = []
    lost_tokens = 0
    overflow = 0
    oversized: list[int] = []

    def evict_one(evicted: list[str]) -> None:
        nonlocal window_tokens
        kind, entry_id, tokens = window.popleft()
        window_tokens -= tokens
        if kind == _ELEMENT:
            in_window.discard(entry_id)
            evicted.append(entry_id)

    for k, piece in enumerate(plan.pieces):
        entries: list[tuple[str, str, int]] = []
        if piece.includes_user_statement and ust > 0:
            entries.append((_USER, "user-statement", ust))
        if inst > 0:
            entries.append((_INSTRUCTIONS, f"instructions-{k + 1}", inst))
        for element_id in piece.element_ids:
            entries.append((_ELEMENT, element_id, counts[element_id]))
        if piece.fm_tokens > 0:
            entries.append((_REPLY, f"reply-{k + 1}", piece.fm_tokens))
        incoming = sum(tokens for _, _, tokens in entries)

        if incoming > cw:
            if strict:
                raise PieceExceedsWindow(k)
            oversized.append(k)

        evicted: list[str] = []
        while window and window_tokens + incoming > cw:
            evict_one(evicted)
        for entry in entries:
            window.append(entry)
            window_tokens += entry[2]
            if entry[0] == _ELEMENT:
                in_window.add(entry[1])
                sent.add(entry[1])
        while window_tokens > cw:
            evict_one(evicted)

        for element_id in piece.element_ids:
            for provider in deps[element_id]:
                if provider in sent and provider not in in_window:
                    missed_pairs.append((element_id, provider))
                    lost_tokens += counts[provider]

        tokens_in = incoming - (piece.fm_tokens if piece.fm_tokens > 0 else 0)
        steps.append(
            SimulationStep(
                piece_index=k,
                tokens_in=tokens_in,
                tokens_out=piece.fm_tokens,
                evicted_element_ids=tuple(evicted),
            )
        )
        overflow += max(
            0, output_budget(piece, plan.config, plan.model).ob - plan.model.max_output_tokens
        )

    return SimulationReport(
        model_name=plan.model.name,
        context_window=cw,
        max_output_tokens=plan.model.max_output_tokens,
        steps=tuple(steps),
        dependency_misses=len(missed_pairs),
        lost_tokens=lost_tokens,
        output_overflow_tokens=overflow,
        missed_pairs=tuple(missed_pairs),
        oversized_piece_indices=tuple(oversized),
    )


@dataclass(frozen=True)
class MetricDelta:
    metric: str
    baseline: int
    candidate: int
    delta: int  # candidate - baseline; lower is better for every metric here
    verdict: str  # improved | worse | equal


def compare(baseline: SimulationReport, candidate: SimulationReport) -> tuple[MetricDelta, ...]:
    """Metric-by-metric delta of two runs against the same model and window."""
    same = (
        baseline.model_name == candidate.model_name
        and baseline.context_window == candidate.context_window
        and baseline.max_output_tokens == candidate.max_output_tokens
    )
    if not same:
        raise SpecMismatch(
            "cannot compare runs against different models or windows: "
            f"{baseline.model_name}@{baseline.context_window} vs "
            f"{candidate.model_name}@{candidate.context_window}"
        )
    deltas = []
    for metric in ("dependency_misses", "lost_tokens", "output_overflow_tokens"):
        b = getattr(baseline, metric)
        c = getattr(candidate, metric)
        verdict = "equal" if c == b else ("improved" if c < b else "worse")
        deltas.append(MetricDelta(metric=metric, baseline=b, candidate=c, delta=c - b, verdict=verdict))
    return tuple(deltas)
