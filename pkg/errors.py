"""Exceptions raised by the NTS library and the experiment runner."""


class NtsError(Exception):
    pass


class ConfigError(NtsError):
    """Bad or missing value in an experiment config file."""

    def __init__(self, field, message):
        self.field = field
        super().__init__('{0}: {1}'.format(field, message))


class RowSumError(NtsError):
    pass


class NonErgodicError(NtsError):
    pass


class LengthError(NtsError):
    pass


class LengthMismatchError(NtsError):
    pass


class DivisibilityError(NtsError):
    pass


class Exhausted(NtsError):
    """No d-matching codeword within the search cap.

    iteration and match are filled in by the NTS runners on the way out."""

    def __init__(self, cap, iteration=None, match=None):
        self.cap = cap
        self.iteration = iteration
        self.match = match
        super().__init__(self._describe())

    def _describe(self):
        text = 'no d-match within {0} codewords'.format(self.cap)
        if self.iteration is not None:
            text += ' (iteration {0}, match {1})'.format(self.iteration, self.match)
        return text

    def at(self, iteration, match):
        return Exhausted(self.cap, iteration, match)


class DegenerateType(NtsError):
    pass


class InvalidK(NtsError):
    pass


class EmptyRowError(NtsError):
    def __init__(self, state):
        self.state = state
        super().__init__('state {0} was never left in the counted codewords'.format(state))


class RangeError(NtsError):
    pass


class NonConvergence(NtsError):
    pass


class InfeasibleDistortion(NtsError):
    pass


class EmptyDecomposition(NtsError):
    pass


class InsufficientData(NtsError):
    pass


class MissingTrace(NtsError):
    pass
