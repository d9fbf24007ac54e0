"""Counting integral similitudes near the identity, and the Dirichlet step behind the quadric bound."""
from sp4verify.counting.diophantine import (
    QuadPoly2,
    count_near_zero,
    dirichlet_approx,
    four_square_count,
)
from sp4verify.counting.enumerate import (
    CountingContext,
    ScanConfig,
    enumerate_S,
    prop1_scan,
)

ctx = CountingContext.identity()
for m in (1, 3, 5, 9):
    res = enumerate_S(ctx, 1e-3, m)
    print(f"m = {m}: {len(res)} matrices, 8 sigma(m) = {four_square_count(m)}")

scan = prop1_scan(ctx, ScanConfig(tuple(range(1, 41, 2)), (1e-3,)))
print(f"log-log slope over odd m <= 39: {scan.slope:.3f}")

q, ps = dirichlet_approx([0.5], 2)
print("\ndirichlet_approx([0.5], T=2) ->", q, ps)
P = QuadPoly2(1.0, 0.3, 2.0, 0.1, -0.2, -5.0)
out = count_near_zero(P, 0.05)
print(f"points with |P| < 0.05: {out.count} (pipeline bound {out.pipeline_bound})")
