"""Exception hierarchy shared by every stage of the pipeline."""


class RSAError(Exception):
    """Base class for all errors raised by rsaseg."""


class ConstantImage(RSAError):
    pass


class DomainError(RSAError, ValueError):
    pass


class CflViolation(RSAError):
    def __init__(self, dt, dx):
        self.dt = dt
        self.dx = dx
        super().__init__(f"time step {dt!r} exceeds the CFL bound dx**2/4 = {dx * dx / 4!r}")


class DegenerateRange(RSAError):
    pass


class ConfigError(RSAError):
    pass


class FitsError(RSAError):
    pass


class MissingSimple(FitsError):
    pass


class UnsupportedBitpix(FitsError):
    pass


class UnsupportedNaxis(FitsError):
    pass


class TruncatedData(FitsError):
    pass


class MalformedCard(FitsError):
    pass
