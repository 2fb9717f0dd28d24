"""Quantity-type and influence-sign extraction from comparative science statements.

A small symbolic pipeline (lexicon + semtrans KB, chart parser, frame
builder) assisted by an LLM informant for rephrasing and lexicon expansion,
plus the QC/CSA/OP evaluation harness.
"""

from .evaluation import (FactScores, GoldSpec, Matching, PipelineScores, aggregate, match_quantities,
                         match_weight, score_fact)
from .expansion import construct_new_semtrans, diagnose, expand_corpus, harvest_candidates
from .frames import (FrameSet, OrdinalFrame, QuantityFrame, QuantitySign, build_frames,
                     frames_to_pairs, interpret, render_term)
from .kb import (KnowledgeBase, LexicalEntry, QualValue, SemtransEntry, filter_comparison, load_kb,
                 load_seed_kb, save_kb)
from .oracle import HttpBackend, MockBackend, Oracle, ReplayBackend, Transcript
from .parser import ParseTree, Token, best_parse, identify_comparatives, parse, tokenize
from .pipeline import PIPELINES, GroundingFact, PipelineConfig, ingest_dataset, run_corpus, run_fact

__version__ = "0.1.0"

__all__ = [
    "FactScores", "GoldSpec", "Matching", "PipelineScores", "aggregate", "match_quantities",
    "match_weight", "score_fact", "construct_new_semtrans", "diagnose", "expand_corpus",
    "harvest_candidates", "FrameSet", "OrdinalFrame", "QuantityFrame", "QuantitySign",
    "build_frames", "frames_to_pairs", "interpret", "render_term", "KnowledgeBase", "LexicalEntry",
    "QualValue", "SemtransEntry", "filter_comparison", "load_kb", "load_seed_kb", "save_kb",
    "HttpBackend", "MockBackend", "Oracle", "ReplayBackend", "Transcript", "ParseTree", "Token",
    "best_parse", "identify_comparatives", "parse", "tokenize", "PIPELINES", "GroundingFact",
    "PipelineConfig", "ingest_dataset", "run_corpus", "run_fact",
]
