"""Gold macro-plan construction from (tables, summary) pairs.

Inning-mention disambiguation uses a deterministic cue-lexicon heuristic in
place of a pretrained-LM scorer; the lexicon is configurable and any callable
with the same contract can be plugged in via ``derive_macro_plan``'s
``inning_classifier`` argument.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

from .data import AliasTable, Game, numeric_value, tokenize
from .verbalize import ParagraphPlanSpec, verbalize_plan

log = logging.getLogger(__name__)

__all__ = [
    "EntityMention",
    "InningMention",
    "InningLexicon",
    "match_entities",
    "classify_inning_mention",
    "resolve_half",
    "derive_macro_plan",
    "ORDINAL_WORDS",
]

ORDINAL_WORDS = {
    "first": 1, "second": 2, "third": 3, "fourth": 4, "fifth": 5,
    "sixth": 6, "seventh": 7, "eighth": 8, "ninth": 9, "tenth": 10,
    "eleventh": 11, "twelfth": 12, "thirteenth": 13, "fourteenth": 14,
    "fifteenth": 15, "sixteenth": 16, "seventeenth": 17, "eighteenth": 18,
    "nineteenth": 19, "twentieth": 20,
}


@dataclass(frozen=True)
class EntityMention:
    entity: str
    token_span: tuple[int, int]  # [start, end) indices in the paragraph


@dataclass(frozen=True)
class InningMention:
    ordinal_token_index: int
    inning: int
    half: str


@dataclass(frozen=True)
class InningLexicon:
    """Cue patterns for the inning-mention heuristic."""

    cue_verbs: frozenset = frozenset(
        {"led", "scored", "homered", "singled", "doubled", "walked"})
    non_inning_nouns: frozenset = frozenset(
        {"batter", "pitch", "base", "game", "start", "season"})
    window: int = 6

    @staticmethod
    def from_file(path) -> "InningLexicon":
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        return InningLexicon(
            cue_verbs=frozenset(obj["cue_verbs"]),
            non_inning_nouns=frozenset(obj["non_inning_nouns"]),
            window=int(obj.get("window", 6)))


DEFAULT_INNING_LEXICON = InningLexicon()

_PUNCT = {".", ",", ";", ":", "!", "?", "(", ")", "--"}


# ---------------------------------------------------------------------------
# Entity matching


def _surname(name: str) -> str:
    if "." in name:
        return name.rsplit(".", 1)[-1]
    return name.split()[-1] if " " in name else name


def _player_volume(rec) -> float:
    # disambiguation weight: plate appearances for batters, innings pitched
    # for pitchers
    attrs = rec.attr_map
    for key in ("AB", "IP"):
        if key in attrs:
            val = numeric_value(attrs[key])
            if val is not None:
                return float(val)
    return 0.0


def _build_phrase_index(game: Game, aliases: AliasTable):
    """phrase (token tuple) -> best entity name, longest-match ready."""
    candidates: dict[tuple[str, ...], list[tuple[float, str]]] = {}

    def add(phrase: tuple[str, ...], priority: float, name: str):
        candidates.setdefault(phrase, []).append((priority, name))

    names = {e.name for e in game.entities}
    for e in game.entities:
        add(tuple(tokenize(e.name)), 100.0, e.name)  # full name wins outright
        if e.kind == "player":
            s = _surname(e.name)
            if s != e.name:
                add((s,), _player_volume(e), e.name)
    for variant, canonical in aliases.items():
        if canonical in names:
            add(tuple(tokenize(variant)), 50.0, canonical)

    index = {}
    for phrase, options in candidates.items():
        options.sort(key=lambda pr: (-pr[0], pr[1]))
        index[phrase] = options[0][1]
    return index


def match_entities(paragraph: list[str], game: Game,
                   aliases: AliasTable) -> list[EntityMention]:
    """Longest-match scan over token n-grams against entity names, player
    surnames and alias variants; one mention per entity, first occurrence."""
    index = _build_phrase_index(game, aliases)
    max_len = max((len(p) for p in index), default=0)
    mentions: list[EntityMention] = []
    seen: set[str] = set()
    i = 0
    n = len(paragraph)
    while i < n:
        matched = False
        for length in range(min(max_len, n - i), 0, -1):
            phrase = tuple(paragraph[i:i + length])
            name = index.get(phrase)
            if name is not None:
                if name not in seen:
                    seen.add(name)
                    mentions.append(EntityMention(name, (i, i + length)))
                i += length
                matched = True
                break
        if not matched:
            i += 1
    return mentions


# ---------------------------------------------------------------------------
# Inning mentions


def _next_non_punct(tokens: list[str], idx: int) -> str | None:
    for tok in tokens[idx + 1:]:
        if tok not in _PUNCT:
            return tok
    return None


def classify_inning_mention(paragraph: list[str], prev_paragraph: list[str],
                            ordinal_index: int,
                            lexicon: InningLexicon = DEFAULT_INNING_LEXICON) -> bool:
    """True iff the ordinal at ``ordinal_index`` denotes an inning.

    ``prev_paragraph`` is accepted for contract compatibility with
    context-based scorers; the lexical heuristic does not consult it.
    """
    del prev_paragraph
    if not (0 <= ordinal_index < len(paragraph)):
        raise IndexError(f"ordinal index {ordinal_index} out of range")
    word = paragraph[ordinal_index].lower()
    if word not in ORDINAL_WORDS:
        raise ValueError(f"token {paragraph[ordinal_index]!r} is not an ordinal")

    nxt = _next_non_punct(paragraph, ordinal_index)
    if nxt is not None and nxt.lower() in ("inning", "innings"):
        return True
    if nxt is not None and nxt.lower() in lexicon.non_inning_nouns:
        return False

    lo = max(0, ordinal_index - lexicon.window)
    hi = min(len(paragraph), ordinal_index + lexicon.window + 1)
    window = [t.lower() for t in paragraph[lo:hi]]

    cue = False
    # "in the <ordinal>"
    if (ordinal_index >= 2
            and paragraph[ordinal_index - 1].lower() == "the"
            and paragraph[ordinal_index - 2].lower() == "in"):
        cue = True
    # score-change pattern "tied X-Y"
    if not cue and "tied" in window:
        t = lo + window.index("tied")
        nxt_score = _next_non_punct(paragraph, t)
        if nxt_score is not None and _looks_like_score(nxt_score):
            cue = True
    if not cue and any(v in window for v in lexicon.cue_verbs):
        cue = True
    return cue


def _looks_like_score(tok: str) -> bool:
    parts = tok.split("-")
    return len(parts) == 2 and all(p.isdigit() for p in parts)


def find_inning_mentions(paragraph: list[str], prev_paragraph: list[str],
                         game: Game,
                         lexicon: InningLexicon = DEFAULT_INNING_LEXICON,
                         classifier=None) -> list[int]:
    """Ordinal token indices classified as inning mentions, in textual order."""
    classify = classifier or (
        lambda p, pp, i: classify_inning_mention(p, pp, i, lexicon))
    max_inning = max((ev.inning for ev in game.events), default=0)
    out = []
    for i, tok in enumerate(paragraph):
        inning = ORDINAL_WORDS.get(tok.lower())
        if inning is None or inning > max_inning:
            continue
        if classify(paragraph, prev_paragraph, i):
            out.append(i)
    return out


# ---------------------------------------------------------------------------
# Half resolution


def resolve_half(inning: int, mentions: list[EntityMention], game: Game) -> str:
    """Pick the half of ``inning`` whose play participants overlap the
    paragraph's entities most; ties go to the half whose earliest-matching
    entity appears first, then to T."""
    halves = [h for i, h in game.halves() if i == inning]
    if not halves:
        raise ValueError(f"inning {inning} absent from play-by-play")
    if len(halves) == 1:
        return halves[0]
    participants = {}
    for h in halves:
        participants[h] = {name for ev in game.plays_in_half(inning, h)
                           for name in ev.participants()}
    ents = [m.entity for m in mentions]
    counts = {h: len(set(ents) & participants[h]) for h in halves}
    if counts["T"] != counts["B"]:
        return max(halves, key=lambda h: counts[h])
    for m in mentions:  # earliest entity present in exactly one half decides
        in_t = m.entity in participants["T"]
        in_b = m.entity in participants["B"]
        if in_t != in_b:
            return "T" if in_t else "B"
    return "T"


# ---------------------------------------------------------------------------
# Macro plan derivation


@dataclass(frozen=True)
class DerivedPlan:
    specs: tuple[ParagraphPlanSpec, ...]

    def pointer_sequence(self) -> list[int]:
        return list(range(len(self.specs)))

    def identifiers(self) -> list[str]:
        return [ident for s in self.specs for ident in s.identifiers()]


def derive_macro_plan(game: Game, aliases: AliasTable,
                      lexicon: InningLexicon = DEFAULT_INNING_LEXICON,
                      inning_classifier=None):
    """One ParagraphPlanSpec per summary paragraph; returns
    ``(MacroPlan, specs)`` with the plan pointing at the specs in paragraph
    order.  Paragraphs matching nothing are dropped with a warning."""
    from .planner import MacroPlan

    specs: list[ParagraphPlanSpec] = []
    prev_tokens: list[str] = []
    for p_idx, paragraph in enumerate(game.summary.paragraphs):
        paragraph = list(paragraph)
        mentions = match_entities(paragraph, game, aliases)

        event_refs: list[tuple[int, str]] = []
        if game.kind == "event-rich":
            for idx in find_inning_mentions(paragraph, prev_tokens, game,
                                            lexicon, inning_classifier):
                inning = ORDINAL_WORDS[paragraph[idx].lower()]
                try:
                    half = resolve_half(inning, mentions, game)
                except ValueError:
                    continue
                ref = (inning, half)
                if ref not in event_refs:
                    event_refs.append(ref)

        covered: set[str] = set()
        for inning, half in event_refs:
            for ev in game.plays_in_half(inning, half):
                covered.update(ev.participants())
        entity_refs = tuple(m.entity for m in mentions if m.entity not in covered)

        prev_tokens = paragraph
        spec = _classify_spec(entity_refs, tuple(event_refs))
        if spec is None:
            log.warning("game %s: paragraph %d matches no entity or event; dropped",
                        game.id, p_idx)
            continue
        specs.append(verbalize_plan(spec, game))

    plan = MacroPlan(pointer_sequence=tuple(range(len(specs))), terminated=True)
    return plan, specs


def _classify_spec(entity_refs, event_refs) -> ParagraphPlanSpec | None:
    if event_refs and entity_refs:
        return ParagraphPlanSpec("mixed-gold", entity_refs, event_refs)
    if event_refs:
        return ParagraphPlanSpec("event-group", (), event_refs)
    if len(entity_refs) == 1:
        return ParagraphPlanSpec("entity-singleton", entity_refs)
    if 2 <= len(entity_refs) <= 3:
        return ParagraphPlanSpec("entity-pair", entity_refs)
    if len(entity_refs) >= 4:
        return ParagraphPlanSpec("mixed-gold", entity_refs)
    return None
