"""Extended-precision laboratory for the LUE singular-statistic generating function.

``M_n(t) = <exp(-t sum 1/lambda_k)>`` is evaluated by Hankel, Toeplitz, Toda
and discrete-Painleve routes and checked against Painleve ODEs, exact series
and quadrature or Monte-Carlo oracles.
"""

__version__ = "0.1.0"
