"""Macro-planned data-to-text generation: plan derivation, pointer-network
content planning, attention+copy realization, and extractive evaluation."""

__version__ = "0.1.0"

from .data import (AliasTable, EntityRecord, Game, GameValidationError,
                   PlayEvent, RecordSchema, SummaryDoc, SYNTH_SCHEMA)
from .verbalize import EOM_TOKEN, PARAGRAPH_SEP, ParagraphPlanSpec

__all__ = [
    "AliasTable", "EntityRecord", "Game", "GameValidationError", "PlayEvent",
    "RecordSchema", "SummaryDoc", "SYNTH_SCHEMA",
    "EOM_TOKEN", "PARAGRAPH_SEP", "ParagraphPlanSpec",
    "__version__",
]
