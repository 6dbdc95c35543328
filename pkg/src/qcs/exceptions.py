"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge or diverged.

    Raised by the primal-dual solver on iterate blow-up and by the
    lp-ball projection when its root-find does not converge.  Invalid
    inputs and configurations raise ``ValueError`` instead.
    """
