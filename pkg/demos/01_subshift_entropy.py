"""Subshifts of finite type: words, block counts and entropy.

Run: python demos/01_subshift_entropy.py
"""
import math

from revskew.symbolic import Sft, block_counts, enumerate_words, sft_entropy, transfer_matrix

# The golden mean shift forbids two consecutive 1s.
golden = Sft(2, frozenset({(1, 1)}))
print("admissible words of length 4:")
for w in enumerate_words(golden, 4):
    print("   ", "".join(map(str, w.symbols)))

# Block counts are exact integers and follow the Fibonacci numbers.
counts = block_counts(golden, 12)
print("block counts:", counts)

# ln|B_n| / n creeps toward the entropy; the transfer matrix gets it directly.
for n in (4, 8, 12):
    print(f"ln|B_{n}|/{n} = {math.log(counts[n - 1]) / n:.6f}")
print(f"entropy      = {sft_entropy(golden):.12f}")
print(f"ln(golden)   = {math.log((1 + math.sqrt(5)) / 2):.12f}")

# Forbidding 010 and 101 gives the same entropy on a larger state graph.
alt = Sft(2, frozenset({(0, 1, 0), (1, 0, 1)}))
states, A = transfer_matrix(alt)
print("states:", states)
print(A)
print(f"entropy = {sft_entropy(alt):.12f}")
