"""
From basic blocks to a two-clause procedure
============================================

Euclid's algorithm written as three-address code goes through every stage:
translation, validation, simplification and lowering.  Each stage has its
own interpreter, and all four agree.
"""

import math

from lpform.lower import execute_asm, lower, print_asm
from lpform.lpir import call_entry, interp_lp, print_lp, validate_lp
from lpform.simplify import simplify_pipeline
from lpform.tac import interp_tac, parse_tac
from lpform.translate import translate_program

SOURCE = """
func gcd(a, b) {
entry:
    goto header
header:
    if b != 0 then body else tail
body:
    t = b
    b = a mod t
    a = t
    goto header
tail:
    return a
}
"""

tac = parse_tac(SOURCE)

# one procedure per block, plus a two-clause procedure for the branch;
# every variable and the state token are passed along
lp = translate_program(tac)
print(print_lp(lp))
assert validate_lp(lp) == []

# inlining and neededness pruning shrink it to a single recursive procedure
simple = simplify_pipeline(lp)
print(print_lp(simple))

# the recursive call sits last in its clause, so it lowers to a jump
asm = lower(simple)
print(print_asm(asm))

for a, b in [(12, 8), (1071, 462), (0, 5)]:
    results = (
        interp_tac(tac, "gcd", [a, b]),
        call_entry(lp, "gcd", [a, b]),
        interp_lp(simple, "gcd", [a, b])[0],
        execute_asm(asm, "gcd", [a, b]).outputs[0],
    )
    print(f"gcd({a}, {b}) = {results}")
    assert set(results) == {math.gcd(a, b)}
