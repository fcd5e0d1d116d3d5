"""
The parking lot as an imaging grid
==================================

The lot is a 25 m x 27.5 m rectangle cut into 10 x 11 cells of 2.5 m.
Lane rows separate four rows of parking spaces, each space covering two
stacked cells. Two 50 x 50 RIS panels hang from the 3 m ceiling.
"""

import numpy as np

from risparking import build_grid, build_parking_layout, build_ris_array, Point3

grid = build_grid(10, 11, 2.5)
layout = build_parking_layout(grid, lane_rows={2, 5, 8})
print(f"{grid.Q} grid units, {layout.n_spaces} spaces of {layout.C} units, "
      f"{len(layout.lane_units)} lane units")

# %%
# Text map of the lot, +y at the top. Digits are space ids modulo 10,
# dots are lane cells.

owner = {u: sid for sid, units in layout.spaces for u in units}
for row in reversed(range(grid.ny)):
    cells = [str(owner[q] % 10) if (q := grid.unit_index(c, row)) in owner else "."
             for c in range(grid.nx)]
    print(f"row {row:2d}  " + " ".join(cells))

# %%
# Unit centers sit on a lattice symmetric about the origin.

centers = grid.centers
print("corner unit:", centers[0], " opposite corner:", centers[-1])
print("sum of offsets:", centers.sum(axis=0))

# %%
# RIS panels: element 0 is the (-x, -y) corner, 1.225 m from the center.

ris = build_ris_array(Point3(7.5, 0, 3), 50, 50, 0.05)
print(ris.M, "elements; first element at", ris.elements[0])
print("aperture:", np.ptp(ris.elements[:, 0]) + ris.pitch, "m")
