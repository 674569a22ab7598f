"""Fixed endpoint sets shared by the command line and the test suite.

Coordinates sit on a 0.1 lattice so that grid backends (spacing 0.05 and
its x2 coarsening) hit them exactly.
"""

CROSSCHECK_CASES = [
    ((-0.9, -0.2), (-1.5, 0.1)), ((-0.4, -1.7), (-1.6, 1.9)), ((0.8, -0.2), (0.6, -0.9)),
    ((-0.8, -1.7), (-1.8, 1.2)), ((1.3, -2.0), (-0.7, -1.6)), ((-0.1, 0.5), (0.2, -1.5)),
    ((0.8, 0.5), (-0.1, -0.8)), ((1.7, -1.7), (-1.4, -0.5)), ((-1.0, 0.5), (0.8, 0.8)),
    ((1.1, -1.3), (1.0, -1.0)), ((0.1, -1.1), (1.2, -1.6)), ((-0.3, 0.5), (0.8, -1.6)),
    ((1.9, -0.8), (-0.2, -0.8)), ((-1.8, -1.0), (-0.7, 0.3)), ((-1.7, 1.7), (-1.2, 0.1)),
    ((-0.6, -0.6), (1.6, 1.6)), ((0.4, -0.9), (-1.4, -0.1)), ((-1.3, 0.0), (-1.7, -1.9)),
    ((0.1, -0.4), (2.0, -0.5)), ((0.1, -0.4), (1.1, -0.5)),
]

ENDPOINT_PAIRS = [
    ((1.0, 0.0), (0.0, 0.0)), ((0.1, -1.5), (0.8, 1.4)), ((-0.3, 1.8), (1.3, -0.6)),
    ((0.3, 1.0), (1.3, 1.7)), ((-1.4, 1.0), (-1.4, 1.6)), ((-1.1, 1.4), (-0.8, 1.9)),
    ((0.1, -0.7), (-0.9, 0.4)), ((-0.7, 0.7), (-1.4, -1.0)), ((1.5, 0.4), (-1.0, -1.4)),
    ((-1.5, -1.0), (-0.5, 0.6)),
]
