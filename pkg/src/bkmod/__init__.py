"""Finite-precision Kisin and Breuil modules.

Everything is computed modulo (p^N, u^M) over Z/p^N, with explicit precision
on every verdict. The main entry points:

- ``series.RingContext``: the rings S_frak = W[[u]] and S, truncated.
- ``kisin``: Kisin modules, morphisms, heights, Hodge-Tate weights, exactness.
- ``breuil``: the comparison functor to strongly divisible modules and its checks.
- ``scenarios``: seeded reproductions with ``Report`` output.
- ``fileformat`` and ``cli``: the ``.kmod`` format and the ``bkmod`` command.
"""

from .breuil import BreuilModule, check_exact_breuil, check_sdm_axioms, from_kisin
from .kisin import KisinModule, KisinMorphism, check_exact_sequence, check_height, hodge_tate_weights, make_kisin
from .report import TOOL_VERSION as __version__
from .report import Report, Verdict
from .series import RingContext

__all__ = [
    "__version__",
    "BreuilModule",
    "KisinModule",
    "KisinMorphism",
    "Report",
    "RingContext",
    "Verdict",
    "check_exact_breuil",
    "check_exact_sequence",
    "check_height",
    "check_sdm_axioms",
    "from_kisin",
    "hodge_tate_weights",
    "make_kisin",
]
