"""Join ordering as annealing-solvable models, with pg_hint_plan output and latency accounting."""

__version__ = "0.1.0"
