"""Heights of block-triangular extensions: arbitrary off-diagonal blocks can
double the height, compatible ones (C = Phi1 A + B Phi2) never raise it.

    python3 demos/extension_heights.py [trials]
"""

import sys
from collections import Counter

import numpy as np

from bkmod.kisin import ARBITRARY, COMPATIBLE, check_height, hodge_tate_weights, random_extension, random_kisin
from bkmod.scenarios import twist_context

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 20
ctx = twist_context()
for kind in (ARBITRARY, COMPATIBLE):
    rng = np.random.default_rng(1729)
    tally = Counter()
    for _ in range(trials):
        r = 1
        ext = random_extension(random_kisin(ctx, 1, r, rng), random_kisin(ctx, 1, r, rng), rng, kind)
        tally[tuple(hodge_tate_weights(ext.middle))] += 1
        tally["height <= r"] += bool(check_height(ext.middle, r))
    print(f"{kind:>10}: {dict(tally)}")
