"""Exception types shared across the simulator."""


class WsnIdsError(Exception):
    pass


class SpecError(WsnIdsError):
    """Bad topology description (zero counts, dangling adjacency, duplicates)."""


class UnknownNode(WsnIdsError, KeyError):
    def __init__(self, node):
        super().__init__(node)
        self.node = node

    def __str__(self):
        return f"unknown node {self.node!r}"


class PastEvent(WsnIdsError):
    pass


class IllegalRoute(WsnIdsError):
    """Message attempted over a non-tree edge."""


class ProfileMissing(WsnIdsError, KeyError):
    def __str__(self):
        return f"no profile entry for feature {self.args[0]!r}"


class StaleVersion(WsnIdsError):
    def __init__(self, version, high_water):
        super().__init__(f"policy version {version} <= high water {high_water}")
        self.version = version
        self.high_water = high_water


class InvalidObservation(WsnIdsError):
    pass


class NoSuccessor(WsnIdsError):
    def __init__(self, failed):
        super().__init__(f"no live adjacent peer for failed node {failed}")
        self.failed = failed


class ParseError(WsnIdsError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class ValidationError(WsnIdsError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
