"""Exception types raised across the package."""


class EnumerationTooLarge(ValueError):
    """Exact enumeration requested for more units than the configured cap."""

    def __init__(self, n: int, cap: int) -> None:
        super().__init__(
            f"enumeration too large: n={n} exceeds cap={cap} "
            f"(2^{n} assignments); use Monte Carlo or raise the cap"
        )
        self.n = n
        self.cap = cap


class ZeroProbabilityEvent(ValueError):
    """A conditioning event has probability zero under the policy."""

    def __init__(self, event: str) -> None:
        super().__init__(f"conditioning event has zero probability: {event}")
        self.event = event


class InconsistentExposure(ValueError):
    """Outcomes vary within an exposure level set."""

    def __init__(self, report, n: int) -> None:
        super().__init__(f"exposure map is inconsistent with the table: {report.witness.describe(n)}")
        self.report = report


class UnattainableLevel(ValueError):
    """Some unit can never reach the requested exposure level."""

    def __init__(self, unit: int, level: int) -> None:
        super().__init__(f"unit {unit + 1} cannot attain exposure level {level}")
        self.unit = unit
        self.level = level
