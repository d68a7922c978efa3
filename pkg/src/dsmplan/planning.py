"""Conversation pieces and token budgets.

Glossary used throughout (all counts are tokens):

* GM — the generic text of a piece as sent (sum of its members' counts)
* FM — the information-filled text the model returns, ``round(GM * fm_ratio)``
* OB — output budget a reply must fit, ``ceil(FM * (1 + margin))``
* WB — whole-conversation window budget,
  ``ceil((USt + sum IntLLM + sum GM + sum FM) * (1 + margin))``
* USt / IntLLM — user statement / per-piece instruction overhead
* OL / CW — a model's max output tokens / context window

A plan is feasible when every piece has OB <= OL and the whole conversation
has WB <= CW.  Margins are treated as exact decimals (``Fraction(str(m))``)
so e.g. a 5% margin on 20 tokens is exactly 21, not a float whisker above.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path

from .clustering import ClusterAssignment, ClusterParams, cluster
from .dsm import build_dsm
from .errors import DuplicateModelName, ParseError, UnknownModel, UnsplittablePiece
from .manifest import ConversationElement, ConversationModel
from .sequencing import SequencingResult, sequence

_DATA_DIR = Path(__file__).resolve().parent / "data"
DEFAULT_CATALOG_PATH = _DATA_DIR / "model_catalog.csv"


@dataclass(frozen=True)
class ModelSpec:
    """Context-window and output limits of one target LLM."""

    name: str
    context_window: int
    max_output_tokens: int

    def __post_init__(self) -> None:
        if self.context_window <= 0 or self.max_output_tokens <= 0:
            raise ValueError(f"model {self.name!r}: limits must be positive")
        if self.max_output_tokens > self.context_window:
            raise ValueError(f"model {self.name!r}: max output exceeds context window")


@dataclass(frozen=True)
class BudgetConfig:
    margin: float = 0.05
    fm_ratio: float = 1.0
    instructions_per_piece: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.margin < 1:
            raise ValueError("margin must be in [0, 1)")
        if self.fm_ratio <= 0:
            raise ValueError("fm_ratio must be positive")
        if self.instructions_per_piece < 0:
            raise ValueError("instructions_per_piece must be non-negative")


@dataclass(frozen=True)
class ConversationPiece:
    element_ids: tuple[str, ...]
    gm_tokens: int
    fm_tokens: int
    includes_user_statement: bool = False

    def __post_init__(self) -> None:
        if not self.element_ids:
            raise ValueError("a piece needs at least one element")
        if self.gm_tokens < 0 or self.fm_tokens < 0:
            raise ValueError("piece token counts must be non-negative")


@dataclass(frozen=True)
class ConversationPlan:
    pieces: tuple[ConversationPiece, ...]
    model: ModelSpec
    config: BudgetConfig
    conversation: ConversationModel


@dataclass(frozen=True)
class PieceBudget:
    ob: int
    ol_headroom: int


@dataclass(frozen=True)
class TokenBudgetReport:
    piece_budgets: tuple[PieceBudget, ...]
    wb: int
    cw_headroom: int
    feasible: bool


def _exact(ratio: float) -> Fraction:
    # str() round-trips the decimal the caller wrote, e.g. 0.05 -> 1/20
    return Fraction(str(ratio))


def _inflate(tokens: int, margin: float) -> int:
    """ceil(tokens * (1 + margin)) with the margin read as an exact decimal."""
    value = tokens * (1 + _exact(margin))
    return -((-value.numerator) // value.denominator)


def _filled_tokens(gm_tokens: int, fm_ratio: float) -> int:
    value = gm_tokens * _exact(fm_ratio) + Fraction(1, 2)  # round half up
    return value.numerator // value.denominator


def max_piece_tokens(config: BudgetConfig, spec: ModelSpec) -> int:
    """Largest GM a cluster may reach before its reply budget overflows OL
    (at fm_ratio 1): floor(OL / (1 + margin))."""
    limit = Fraction(spec.max_output_tokens) / (1 + _exact(config.margin))
    return limit.numerator // limit.denominator


def output_budget(piece: ConversationPiece, config: BudgetConfig, spec: ModelSpec) -> PieceBudget:
    ob = _inflate(piece.fm_tokens, config.margin)
    return PieceBudget(ob=ob, ol_headroom=spec.max_output_tokens - ob)


def window_budget(plan: ConversationPlan) -> tuple[int, int]:
    """(WB, CW - WB) for the whole conversation; instructions charged per piece."""
    total = (
        plan.conversation.user_statement_tokens
        + len(plan.pieces) * plan.config.instructions_per_piece
        + sum(p.gm_tokens for p in plan.pieces)
        + sum(p.fm_tokens for p in plan.pieces)
    )
    wb = _inflate(total, plan.config.margin)
    return wb, plan.model.context_window - wb


def budget_report(plan: ConversationPlan) -> TokenBudgetReport:
    piece_budgets = tuple(output_budget(p, plan.config, plan.model) for p in plan.pieces)
    wb, cw_headroom = window_budget(plan)
    feasible = cw_headroom >= 0 and all(b.ol_headroom >= 0 for b in piece_budgets)
    return TokenBudgetReport(
        piece_budgets=piece_budgets, wb=wb, cw_headroom=cw_headroom, feasible=feasible
    )


def _piece(ids: list[str], counts: dict[str, int], config: BudgetConfig) -> ConversationPiece:
    gm = sum(counts[e] for e in ids)
    return ConversationPiece(
        element_ids=tuple(ids), gm_tokens=gm, fm_tokens=_filled_tokens(gm, config.fm_ratio)
    )


def _split_oversized(
    ids: list[str], counts: dict[str, int], config: BudgetConfig, spec: ModelSpec
) -> list[list[str]]:
    """Greedy split at element boundaries so every chunk's OB fits OL."""

    def fits(gm: int) -> bool:
        ob = _inflate(_filled_tokens(gm, config.fm_ratio), config.margin)
        return ob <= spec.max_output_tokens

    if fits(sum(counts[e] for e in ids)):
        return [ids]
    chunks: list[list[str]] = []
    current: list[str] = []
    current_gm = 0
    for element_id in ids:
        t = counts[element_id]
        if not fits(t):
            raise UnsplittablePiece(element_id)
        if current and not fits(current_gm + t):
            chunks.append(current)
            current = []
            current_gm = 0
        current.append(element_id)
        current_gm += t
    if current:
        chunks.append(current)
    return chunks


def make_pieces(
    conversation: ConversationModel,
    seq: SequencingResult,
    clusters: ClusterAssignment,
    config: BudgetConfig,
    spec: ModelSpec,
) -> ConversationPlan:
    """Cut the sequenced conversation into pieces.

    Walking the sequence, a maximal run of elements sharing one (multi-member)
    cluster becomes a piece, as does a maximal run of consecutive singletons.
    Pieces whose reply budget would overflow OL are split greedily at element
    boundaries.  The user statement rides along with the first piece.
    """
    ids = set(conversation.element_ids)
    if ids != set(seq.element_ids) or ids != set(clusters.cluster_of):
        raise ValueError("sequence and clusters must cover exactly the conversation elements")
    counts = conversation.token_counts()
    cluster_sizes: dict[int, int] = {}
    for index in clusters.cluster_of.values():
        cluster_sizes[index] = cluster_sizes.get(index, 0) + 1

    runs: list[list[str]] = []
    run_key: object = None
    for element_id in seq.sequenced_ids():
        index = clusters.cluster_of[element_id]
        key = index if cluster_sizes[index] > 1 else "singletons"
        if not runs or key != run_key:
            runs.append([])
            run_key = key
        runs[-1].append(element_id)

    pieces: list[ConversationPiece] = []
    for run in runs:
        for chunk in _split_oversized(run, counts, config, spec):
            pieces.append(_piece(chunk, counts, config))
    if pieces:
        first = pieces[0]
        pieces[0] = ConversationPiece(
            element_ids=first.element_ids,
            gm_tokens=first.gm_tokens,
            fm_tokens=first.fm_tokens,
            includes_user_statement=True,
        )
    return ConversationPlan(
        pieces=tuple(pieces), model=spec, config=config, conversation=conversation
    )


def make_naive_plan(
    conversation: ConversationModel, config: BudgetConfig, spec: ModelSpec
) -> ConversationPlan:
    """The do-nothing baseline: every element in manifest order as one piece.

    Deliberately skips the oversized-piece split — the point of this plan is
    to show what happens without structure-aware cutting.
    """
    counts = conversation.token_counts()
    ids = list(conversation.element_ids)
    if ids:
        piece = _piece(ids, counts, config)
        pieces: tuple[ConversationPiece, ...] = (
            ConversationPiece(
                element_ids=piece.element_ids,
                gm_tokens=piece.gm_tokens,
                fm_tokens=piece.fm_tokens,
                includes_user_statement=True,
            ),
        )
    else:
        pieces = ()
    return ConversationPlan(pieces=pieces, model=spec, config=config, conversation=conversation)


def literal_plan(
    fm_values: list[int],
    config: BudgetConfig,
    spec: ModelSpec,
    ust_tokens: int = 0,
) -> ConversationPlan:
    """A plan from literal per-piece token figures (one synthetic element each).

    Used to check budget tables whose piece sizes are inputs rather
    than derived quantities.
    """
    elements = tuple(
        ConversationElement(id=f"piece{k + 1}", label=f"piece{k + 1}", token_count=value)
        for k, value in enumerate(fm_values)
    )
    conversation = ConversationModel(elements=elements, user_statement_tokens=ust_tokens)
    counts = conversation.token_counts()
    pieces = tuple(
        ConversationPiece(
            element_ids=(e.id,),
            gm_tokens=counts[e.id],
            fm_tokens=_filled_tokens(counts[e.id], config.fm_ratio),
            includes_user_statement=(k == 0),
        )
        for k, e in enumerate(elements)
    )
    return ConversationPlan(pieces=pieces, model=spec, config=config, conversation=conversation)


def plan_conversation(
    conversation: ConversationModel,
    cluster_params: ClusterParams,
    config: BudgetConfig,
    spec: ModelSpec,
) -> tuple[SequencingResult, ClusterAssignment, ConversationPlan]:
    """Full pipeline: matrix, sequence, capped clustering, pieces."""
    counts = conversation.token_counts()
    cap = max_piece_tokens(config, spec)
    for element_id, count in counts.items():
        if count > cap:
            raise UnsplittablePiece(element_id)
    dsm = build_dsm(conversation.elements)
    seq = sequence(dsm)
    params = replace(cluster_params, max_cluster_tokens=cap)
    clusters = cluster(dsm, params, token_counts=counts)
    plan = make_pieces(conversation, seq, clusters, config, spec)
    return seq, clusters, plan


# ---------------------------------------------------------------------------
# Model catalog
# ---------------------------------------------------------------------------


def load_model_catalog(path: str | Path) -> tuple[ModelSpec, ...]:
    """Load ``name,context_window,max_output_tokens`` rows."""
    specs: list[ModelSpec] = []
    names: set[str] = set()
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        for lineno, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if lineno == 1:
                expected = ["name", "context_window", "max_output_tokens"]
                if [cell.strip().lower() for cell in row] != expected:
                    raise ParseError(f"expected header {','.join(expected)!r}", line=1)
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 cells, got {len(row)}", line=lineno)
            name = row[0].strip()
            if name in names:
                raise DuplicateModelName(name)
            names.add(name)
            try:
                cw, ol = int(row[1]), int(row[2])
            except ValueError:
                raise ParseError(f"non-integer limits in row {name!r}", line=lineno) from None
            try:
                specs.append(ModelSpec(name=name, context_window=cw, max_output_tokens=ol))
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
    return tuple(specs)


def default_model_catalog() -> tuple[ModelSpec, ...]:
    return load_model_catalog(DEFAULT_CATALOG_PATH)


def find_model(catalog: tuple[ModelSpec, ...], name: str) -> ModelSpec:
    for spec in catalog:
        if spec.name == name:
            return spec
    raise UnknownModel(name, tuple(s.name for s in catalog))
