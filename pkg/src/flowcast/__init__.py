"""flowcast: workload forecasting for HTTP trace traffic.

Parses classic server access logs into regular-interval series, analyzes
and forecasts them (VAR, damped Holt-Winters, recursive random projection
regression, bit-level decision trees), ranks models with Scott-Knott over
Cliff's delta, and compiles trained trees into prioritized ternary
match-action tables with a software simulator proving table/tree
equivalence.
"""

__version__ = "0.1.0"
