"""Exception types shared across the package.

Rejected inputs raise plain ``ValueError`` everywhere; these classes cover
failures that need a dedicated CLI exit code.
"""


class NumericFailure(RuntimeError):
    """Non-finite values appeared during reverse diffusion.

    Carries the diffusion step (and frame index, when known) in the message.
    """


class QualificationError(RuntimeError):
    """A trained denoiser failed its validation-loss gate."""
