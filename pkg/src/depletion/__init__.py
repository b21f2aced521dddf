"""Privacy-preserving stockpile depletion toolkit.

Subpackages cover the full pipeline: deterministic vulnerability
identifiers (`vulnid`), a boolean circuit IR with oblivious building
blocks (`circuit`, `merge`, `waksman`), the intersection-circuit
compiler (`compiler`), an XOR-sharing multi-party evaluator (`mpc`),
round orchestration (`session`), brute-force reference oracles
(`oracle`), and the insecure hash-ledger prototype kept for contrast
(`ledger`).
"""

__version__ = "0.1.0"
