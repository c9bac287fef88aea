"""Decoding-with-partial-error-data simulation toolkit.

Subpackages cover exact Pauli algebra, interchangeable channel
representations, stabilizer-code machinery, random noise ensembles, partial
error-rate datasets and their completion, block and concatenated decoders,
logical-error-rate estimators, and the experiment harness/CLI that ties the
pipeline together.
"""

__version__ = "0.1.0"
