"""Coset tables, products in the local Hecke algebra and their Satake images at p = 2."""
from sp4verify.hecke import amplifier, identities
from sp4verify.hecke.algebra import HeckeElement, satake
from sp4verify.hecke.cosets import left_cosets

p = 2
for r in (1, 2, 3):
    table = left_cosets(p, r)
    print(f"T({p}^{r}) has {len(table)} left cosets")

Tp = HeckeElement.T(p, 1)
print("\nT(p)^2 =", Tp * Tp)
print("Satake image of T(p):", satake(Tp))

print("\nreference rows up to r = 4:")
for row in identities.table_rows(p, 4):
    flag = "ok" if row.matches_reference else f"differs {row.mismatches()}"
    print(f"  T^({row.r})_(0,{row.b}): {flag}; recursion agrees: {row.matches_recursion}")

rep = amplifier.amplifier_scan([2, 3, 5], grid_step=0.02)
for q in (2, 3, 5):
    print(f"amplifier minimum at p={q}: {rep.minimum(q):.5f}")
