"""sosforge: a proof-complexity workbench around sums-of-squares proofs.

Builds the clique / block / 3-XOR / threshold / relativized formula families,
constructs and strictly checks the resolution refutations behind their upper
bounds, compiles resolution into exactly-verified SOS certificates, applies
the substitution transforms and random restrictions, and searches for
low-degree SOS refutations by semidefinite feasibility at desk scale.
"""

__version__ = "0.1.0"
