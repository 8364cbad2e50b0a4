"""
What a caller does not need
============================

Neededness formulas say which inputs each output depends on.  Seeding the
public procedure's parameters and following those formulas marks what is
live; everything else goes, including unused parameters of helpers.
"""

from lpform.lpir import parse_lp, print_lp
from lpform.neededness import format_deps, mark_and_prune, needed_deps

PROGRAM = parse_lp("""
:- public main.
main(a, b; r) <- split(a, b; q, s) & add(q, 1; r).

split(a, b; q, s) <- divmod(a, 3; q, m) & mul(m, b; s).
""")

deps = needed_deps(PROGRAM)
for line in format_deps(PROGRAM, deps):
    print(line)

# s is never used by main, so b is dead inside split as well
print(print_lp(mark_and_prune(PROGRAM, deps)))
