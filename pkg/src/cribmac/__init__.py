"""Rate regions for two-user multiple-access channels with partial cribbing.

Subpackages cover finite-alphabet information measures (probcore), region
evaluation and search (regioncore, regionsearch), the semi-deterministic
relay special cases (relaycap), action-controlled cribbing (actioncrib),
the Gaussian quantized-cribbing scheme (gausscrib), symbolic
Fourier-Motzkin elimination (fme), and a desk-scale block-Markov coding
simulator (codingsim).  The `cribmac` console script exposes all of it.
"""

__version__ = "0.1.0"
