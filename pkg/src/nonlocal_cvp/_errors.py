"""Error type shared across the package.

Every raised error carries a short machine-readable id (the CLI surfaces it
with exit code 3) plus a human-readable message.
"""


class NonlocalError(Exception):
    """Package error with a stable id.

    Ids in use: invalid-parameter, invalid-domain, unsupported-family,
    quadrature-failure, divergence-detected, budget-exceeded,
    degenerate-robin, shift-rejected, assembly-inconsistency,
    incompatible-data.
    """

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"[{code}] {message}")
