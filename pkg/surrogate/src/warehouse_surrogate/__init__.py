"""Convolutional surrogate for warehouse layout search.

Three sub-networks answer one batched query: a repair net predicts the
repaired layout for an unrepaired candidate, a usage net predicts how
traffic distributes over the repaired tiles, and a score net regresses
throughput and the two archive measures from both.  The package serves
these over a versioned JSON exchange (file, stream, or HTTP) and trains
them from recorded simulator evaluations.
"""

__version__ = "0.1.0"
