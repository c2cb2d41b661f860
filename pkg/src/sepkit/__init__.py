"""Separability probabilities of two-qubit states under induced measures.

Four routes to Q(k, alpha) = Prob(|rho^PT| > |rho|) that check each other:
exact moments with a Legendre density reconstruction, closed forms built
from Pochhammer ratios, exact first-order difference equations, and
Ginibre Monte Carlo.
"""

__version__ = "0.1.0"
