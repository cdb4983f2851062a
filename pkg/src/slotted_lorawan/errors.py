"""Exception hierarchy shared across the package."""


class LoRaSimError(Exception):
    """Base class for every error raised by this package."""


class ConfigInvalid(LoRaSimError, ValueError):
    """A radio, node or scenario parameter failed validation."""

    def __init__(self, rule: str, detail: str = ""):
        self.rule = rule
        msg = rule if not detail else f"{rule}: {detail}"
        super().__init__(msg)


class DegenerateConfig(ConfigInvalid):
    """The payload-symbol denominator 4*(SF - 2*DE) is not positive."""

    def __init__(self, detail: str = ""):
        super().__init__("degenerate-config", detail)


class ZeroPayloadTime(LoRaSimError, ValueError):
    pass


class TimeReversal(LoRaSimError, ValueError):
    pass


class NegativeElapsed(LoRaSimError, ValueError):
    pass


class EmptySamples(LoRaSimError, ValueError):
    pass


class IllegalTransition(LoRaSimError):
    """An event was delivered to a MAC state that has no edge for it."""

    def __init__(self, state, event):
        self.state = state
        self.event = event
        super().__init__(f"no transition from {state} on {event}")
