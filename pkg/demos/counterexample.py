"""Walk through the rank-2 counterexample at p=3.

    python3 demos/counterexample.py
"""

from bkmod.breuil import from_kisin_sequence, middle_cohomology, tail_cokernel
from bkmod.kisin import check_exact_sequence, cokernel_presentation, hodge_tate_weights
from bkmod.scenarios import counterexample_data
from bkmod.series import RingContext

ctx = RingContext.counterexample(3, 6, 54)
m, alpha, beta = counterexample_data(ctx)
print("Hodge-Tate weights of M:", hodge_tate_weights(m))

seq = check_exact_sequence([alpha, beta])
for c in seq.checks:
    print(f"  kisin  {c.verdict.value:<13} {c.name}")
print("key lemma on the image ideal of beta:", seq.notes["image_ideal"])
print("|coker beta| =", cokernel_presentation(beta).cardinality)

f, g = from_kisin_sequence([alpha, beta], 1)
print("log_p |middle cohomology| =", middle_cohomology(f, g).log_cardinality)
print("log_p |tail cokernel|     =", tail_cokernel(g).log_cardinality)
