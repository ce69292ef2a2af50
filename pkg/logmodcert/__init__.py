"""
logmodcert

Constructive certificates for log^alpha moduli of continuity: safe chains
around affine arrangements, local-to-global propagation constants, blowup
chart transfer, the approximation bound budget and grid-level checks.
"""

__version__ = "0.3.0"
