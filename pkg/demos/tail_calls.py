"""
Recursion without a growing stack
==================================

A call that ends a clause and returns exactly the procedure's outputs is
compiled to argument moves and a jump.  Tail recursion then runs in one
frame; recursion with work after the call still grows the stack.
"""

from lpform.lower import execute_asm, lower, print_asm
from lpform.lpir import parse_lp

PROGRAM = parse_lp("""
:- public count.
count(n; r) <- loop(n, 0; r).

loop(n, acc; r) <- n > 0 & add(acc, n; acc1) & sub(n, 1; n1) & loop(n1, acc1; r).
loop(n, acc; r) <- n <= 0 & r = acc.

:- public fact.
fact(n; r) <- n <= 1 & r = 1.
fact(n; r) <- n > 1 & sub(n, 1; m) & fact(m; f) & mul(f, n; r).
""")

asm = lower(PROGRAM)
print(print_asm(asm))

for n in (10, 1000, 100000):
    run = execute_asm(asm, "count", [n])
    print(f"count({n}) = {run.outputs[0]}  depth {run.max_depth}")

for n in (5, 20):
    run = execute_asm(asm, "fact", [n])
    print(f"fact({n}) = {run.outputs[0]}  depth {run.max_depth}")
