"""Lexicon-constrained CTC decoding and evaluation for handwritten index cards."""

from .alphabet import Alphabet, build_alphabet, collate_compare, in_range, polish_alphabet
from .decode import (
    BeamParams,
    Decoded,
    beam_search,
    best_path,
    collapse,
    constrained_wbs,
    ctc_label_probability,
    word_beam_search,
)
from .emissions import EmissionMatrix, NoiseParams, load_emat, save_emat, synthesize_emissions, validate
from .lexicon import BoxRange, Lexicon, build_lexicon, nearest_match, restrict_range
from .metrics import EvalPair, EvalReport, evaluate, levenshtein

__version__ = "0.1.0"
