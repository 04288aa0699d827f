"""Strand-space protocol analysis workbench."""

from .grammar import GrammarError, parse_key, parse_signed, parse_term, render
from .strands import (Bundle, BundleError, NodeRef, SignedTerm, Strand, bundle_from_json,
                      bundle_to_dot, bundle_to_json, is_strand_of, originates,
                      uniquely_originates, uniquely_originates_in)
from .terms import (Cipher, Key, KeyLit, Pair, Text, Var, depth, inverse, subterm, unify)

__version__ = "0.1.0"
