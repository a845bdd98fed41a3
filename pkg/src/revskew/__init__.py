"""Reversible skew products of interval maps over shifts, and entropy certificates."""
from . import entropy_cert, fiber, ifs_cert, scattering, skewprod, symbolic
from .entropy_cert import EntropyReport, certify, entropy_estimate, grow_good_cylinders
from .fiber import IDENTITY, Affine, Compose, Inverse, Moebius, QuadraticDrift, c1_distance, compose, inverse
from .ifs_cert import IfsQuadruple, find_quadruple, verify_quadruple
from .scattering import find_small_scattering, scattering_map
from .skewprod import SkewSystem, find_drift, make_model_family, orbit, validate_reversible
from .symbolic import FiniteSupport, Periodic, Sft, block_counts, enumerate_words, sft_entropy

__version__ = "0.1.0"
