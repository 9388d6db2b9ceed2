"""
Weak versus adapted distance on a two-point example
===================================================

Two processes that look the same path by path but carry different
information. nu starts at +eps or -eps and then goes to +1 or -1 according
to the sign of its first step. mu starts at 0 and then flips a fair coin.
The plain Wasserstein distance sees only the clouds of paths and is eps.
The adapted distance also has to respect what is known at time 1, and it
cannot drop below 1.
"""
from adapted_empirical import aw_nested, figure1_pair, w_flat, dump_tree

mu, nu = figure1_pair(0.25)

# each line is count;x_1;x_2 for one path
print("mu:")
print(dump_tree(mu))
print("nu:")
print(dump_tree(nu))

for eps in (0.5, 0.1, 0.01, 0.001):
    mu, nu = figure1_pair(eps)
    w = w_flat(mu, nu)
    aw, _ = aw_nested(mu, nu)
    print(f"eps={eps:<6g} W={w:.6f}  AW={aw:.6f}  AW - W = {aw - w:.6f}")

# The gap stays at one as eps -> 0, so W -> 0 does not imply AW -> 0.
