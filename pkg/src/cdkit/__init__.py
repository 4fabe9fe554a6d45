"""cdkit: collaborative deanonymization of modeled mixing transactions.

Library layout:

  crypto        keypairs, challenge signatures, linkable ring signatures
  ledger        modeled chain of join-type / ring-type mixing transactions
  testimony     witness testimony construction and verification
  investigation entity graph, case constraints, suspect sets, taint
  simulation    seeded world generation and scenario execution
  cli           command line front end (gen / run / verify / report)
"""

__version__ = "0.1.0"
