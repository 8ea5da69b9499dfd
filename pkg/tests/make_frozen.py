"""Regenerate tests/data/frozen.json from the oracles alone.

    python3 tests/make_frozen.py
"""

import json
import math
from fractions import Fraction
from pathlib import Path

import oracles as O

out = {}

# block structures
for name, r in {"1/3": Fraction(1, 3), "1/2": Fraction(1, 2), "2/3": Fraction(2, 3)}.items():
    sizes = O.block_sizes(r, 10_000)
    out[f"sizes_{name}_head"] = sizes[:40]
    out[f"sizes_{name}_sum"] = sum(sizes)
    out[f"start_{name}_10000"] = O.block_starts(sizes)[-1]

# r = 1/2 unpadded window 10: blocks [1], [2,3], [4,6], [7,10]
s = O.block_sizes(Fraction(1, 2), 4)
out["r_half_blocks_10"] = [[b, b + n - 1] for b, n in zip(O.block_starts(s), s)]

# profiles
out["profile_single_1_5"] = O.dense_profile({(1, 5): 1}, 6)
shift = {(i, i + 1): 1 for i in range(1, 10)}
out["profile_shift_10"] = O.dense_profile(shift, 10)

# S S^T on a 6-window, exact on the leading 5 x 5 corner
sst = O.dict_matmul(shift, {(j, i): v for (i, j), v in shift.items()})
out["s_st_corner_5"] = sorted([list(k) for k in O.restrict(sst, 5)])

# step 1 recurrence
out["step1_half_c1_n100"] = O.step1_values(1.0, 0.5, 2, 100.0)
out["compose_half_100"] = 10 + math.sqrt(110)

# stretch r=1/2 -> s=1/4, c=1
out["stretch_half_quarter"] = O.stretch_placements(O.block_sizes(Fraction(1, 2), 12), Fraction(1, 4), 1)

# freeness: rank of {1, S, S^T, S^2, S S^T, S^T S, (S^T)^2} on the leading 12 x 12 corner
n = 16
S = {(i, i + 1): 1 for i in range(1, n)}
St = {(i + 1, i): 1 for i in range(1, n)}
I = {(i, i): 1 for i in range(1, n + 1)}
words = [I, S, St, O.dict_matmul(S, S), O.dict_matmul(S, St), O.dict_matmul(St, S), O.dict_matmul(St, St)]
m = 12
keys = sorted(set().union(*(O.restrict(w, m) for w in words)))
rows = [[O.restrict(w, m).get(k, 0) for k in keys] for w in words]
out["rank_shift_words_L2"] = O.rank_q(rows)

Path(__file__).with_name("data").mkdir(exist_ok=True)
Path(__file__).with_name("data").joinpath("frozen.json").write_text(json.dumps(out, indent=1, sort_keys=True) + "\n")
print("wrote", len(out), "values")
