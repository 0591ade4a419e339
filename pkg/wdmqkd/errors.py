from valideer import ValidationError


class DomainError(ValueError):
    """Raised when a numeric operation is called outside its domain."""


class FitError(DomainError):
    pass


class ContractError(ValueError):
    pass


class ConfigError(ValidationError):
    """All problems found in one configuration document.

    `errors` is a list of (location, message) tuples, in document order.
    """
    def __init__(self, errors):
        self.errors = list(errors)
        lines = ["%s: %s" % (loc or '<root>', msg) for loc, msg in self.errors]
        super(ConfigError, self).__init__("\n".join(lines) or "invalid configuration")

    def __len__(self):
        return len(self.errors)
