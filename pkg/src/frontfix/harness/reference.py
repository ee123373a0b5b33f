"""Published reference numbers used as comparison columns and gates.

Parameter sets are keyed by short labels:

* ``nodiv``  -- K=100, r=0.05, D=0,    sigma=0.2  (convergence studies)
* ``div_a``  -- K=100, r=0.05, D=0.03, sigma=0.2, T=0.5 (price table, boundary)
* ``div_b``  -- K=100, r=0.07, D=0.03, sigma=0.4, T=0.5 (delta table)

Which published table belongs to which set was checked against the
binomial oracle; see the README.
"""

from __future__ import annotations

from ..model import MarketParams

PARAMS = {
    "nodiv": MarketParams(100.0, 0.05, 0.0, 0.2, 0.25),
    "div_a": MarketParams(100.0, 0.05, 0.03, 0.2, 0.5),
    "div_b": MarketParams(100.0, 0.07, 0.03, 0.4, 0.5),
}

SPOTS = (80.0, 90.0, 100.0, 110.0, 120.0)

# Fixed-step RK4, T = 0.25: boundary by grid and observed orders.
RK4_BOUNDARY = {
    0.1: 87.744120699565300,
    0.05: 86.833647682786200,
    0.025: 86.803304297354500,
    0.0125: 86.805290298684800,
}
RK4_ORDERS = {"boundary": (4.907, 3.933), "value": (4.777, 4.001), "delta": (4.182, 3.521)}

# Crank-Nicolson, T = 0.5.
CN_BOUNDARY = {
    0.1: 84.6168895718962,
    0.05: 83.8717223863237,
    0.025: 83.9162106246566,
    0.0125: 83.9193524617783,
    0.00625: 83.9195594221456,
}
CN_ORDERS = {"boundary": (4.002, 3.824, 3.924), "value": (4.002, 3.817, 3.926), "delta": (2.311, 4.117, 4.057)}

# Price table on div_a.
PRICE_TRUE = (20.0000, 11.1551, 5.1496, 1.9491, 0.6132)
PRICE_COMPARISON = {
    "WK": (20.0000, 11.1513, 5.1435, 1.9461, 0.6113),
    "MBM": (20.0000, 11.1526, 5.1444, 1.9455, 0.6155),
    "KIM": (20.0000, 11.1544, 5.1496, 1.9509, 0.6153),
}
# (pair, h) -> prices at SPOTS.  The ST block prints 10.15xx at S=90, an
# evident slip for 11.15xx; it is kept verbatim and never gated.
PRICE_RK = {
    ("DP", 0.025): (20.0000, 11.1550, 5.1494, 1.9487, 0.6130),
    ("DP", 0.0125): (20.0000, 11.1548, 5.1494, 1.9487, 0.6130),
    ("DP", 0.01): (20.0000, 11.1548, 5.1494, 1.9488, 0.6131),
    ("CK", 0.025): (20.0000, 11.1550, 5.1489, 1.9477, 0.6121),
    ("CK", 0.0125): (20.0000, 11.1547, 5.1489, 1.9480, 0.6124),
    ("CK", 0.01): (20.0000, 11.1547, 5.1490, 1.9481, 0.6125),
    ("ST", 0.025): (20.0000, 10.1550, 5.1488, 1.9474, 0.6118),
    ("ST", 0.0125): (20.0000, 10.1547, 5.1489, 1.9479, 0.6123),
    ("ST", 0.01): (20.0000, 10.1547, 5.1490, 1.9481, 0.6125),
    ("BS", 0.025): (20.0000, 11.1550, 5.1494, 1.9487, 0.6130),
    ("BS", 0.0125): (20.0000, 11.1548, 5.1494, 1.9487, 0.6130),
    ("BS", 0.01): (20.0000, 11.1548, 5.1494, 1.9488, 0.6131),
}
UNGATED_PRICE_COLUMNS = {("ST", 0.025), ("ST", 0.0125), ("ST", 0.01)}

# Boundary at T on div_a with DP and small steps, by grid.
BOUNDARY_DP = {0.01: 80.06279138725, 0.005: 80.06250056775, 0.0025: 80.06233787425}
BOUNDARY_TARGET = 80.0628

# Pair comparison at h = 0.01, eps = 1e-5.
PAIR_BOUNDARY = {"DP": 80.0628, "CK": 80.0631, "ST": 80.0630, "BS": 80.0628}
PAIR_AVG_STEP = {"DP": 1.69e-3, "CK": 8.99e-5, "ST": 5.29e-4, "BS": 2.30e-3}
PAIR_CPU_SECONDS = {"DP": 13.38, "CK": 187.79, "ST": 38.24, "BS": 19.48}

# Delta table on div_b.
DELTA_TRUE = (-0.7501, -0.5791, -0.4229, -0.2943, -0.1968)
DELTA_COMPARISON = {
    "BS2": (-0.7501, -0.5791, -0.4229, -0.2943, -0.1968),
    "HW": (-0.7489, -0.5791, -0.4222, -0.2938, -0.1965),
    "OS": (-0.7501, -0.5791, -0.4230, -0.2943, -0.1968),
    "PENALTY": (-0.7502, -0.5791, -0.4229, -0.2943, -0.1968),
}
DELTA_DP = {
    0.075: (-0.7500, -0.5792, -0.4231, -0.2944, -0.1968),
    0.05: (-0.7501, -0.5791, -0.4230, -0.2943, -0.1968),
    0.03: (-0.7501, -0.5791, -0.4229, -0.2943, -0.1968),
}
