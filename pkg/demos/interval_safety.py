"""
Proving a remainder safe with intervals
========================================

Two branches pick y and z by the sign of x, then a shared tail computes
y mod (z - 1).  Guard refinement and joining over both call sites show the
divisor is always negative.
"""

from lpform.interval import analyze_intervals, check_div_safety
from lpform.lpir import parse_lp

PROGRAM = parse_lp("""
:- public p.
p(x; u) <- x < 0 & negate(x; y) & z = x & p1(y, z; u).
p(x; u) <- x >= 0 & y = x & negate(x; z) & p1(y, z; u).

p1(y, z; u) <- sub(z, 1; t) & mod(y, t; u).
""")

results = analyze_intervals(PROGRAM, "p")

# environments just before the call in each clause
for path in ("T", "F"):
    env = results.env_at("p", path, 2)
    print(path, {v: str(env[v]) for v in "xyz"})

# the callee's entry is the join of both call sites
print("p1 entry:", {v: str(i) for v, i in sorted(results.summaries["p1"].ins.items())})
print("t before mod:", results.env_at("p1", "", 1)["t"])

for loc, verdict in check_div_safety(PROGRAM, results):
    print(loc, verdict)

# with no sign information on the divisor nothing can be certified
loose = parse_lp("f(a, b; r) <- mod(a, b; r).")
print(check_div_safety(loose, analyze_intervals(loose, "f")))
