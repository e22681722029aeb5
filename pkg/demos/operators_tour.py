"""Walk through the main operators on a small periodic grid.

Run with ``python3 demos/operators_tour.py``.
"""

import numpy as np

from bihat.grid import PeriodicGrid, lp_norm
from bihat.testbed import make_gaussian, make_modulated_packet
from bihat import fracops, paraproducts, semigroup, symbols

def main():
    grid = PeriodicGrid(1, 256)
    f = make_gaussian(grid, center=0.0, width=0.2)
    g = make_modulated_packet(grid, center=0.3, width=0.2, freq=6)

    # Riesz potential and the bilinear fractional integral at alpha = 1/2
    If = fracops.riesz_linear(f, 0.5)
    Ifg = fracops.bilinear_I(f, g, 0.5)
    print(f"|I_1/2 f|_2       = {lp_norm(If, 2):.6f}")
    print(f"|I_1/2 (f, g)|_2  = {lp_norm(Ifg, 2):.6f}")

    # heat smoothing at t = 0.01
    St = semigroup.apply_St(f, 0.01)
    print(f"|S_t f|_2 / |f|_2 = {lp_norm(St, 2) / lp_norm(f, 2):.6f}")

    # Bony decomposition reproduces the product
    rep = paraproducts.reconstruct_product(f, g)
    print(f"paraproduct residual = {rep.value:.3e}")

    # frequency decoupling with m = 1, s = 1/2
    res = symbols.freqdecoup_residual(1.0, 0.5, f, g)
    print(f"decoupling residual  = {res:.3e}")

    # L^2 Sobolev norm of order one
    print(f"|f|_H^1 = {paraproducts.sobolev_norm(f, 1.0, 2.0):.6f}")

if __name__ == "__main__":
    np.set_printoptions(precision=4)
    main()
