"""Exception hierarchy.

Every error carries a stable class name, which the CLI uses as the one-line
prefix on standard error, and an ``exit_code`` used by the batch front end.
"""


class BitParetoError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


# graph


class DagError(BitParetoError):
    pass


class CycleError(DagError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("directed cycle: " + " -> ".join(str(n) for n in self.cycle))


class UnreachableError(DagError):
    def __init__(self, nodes):
        self.nodes = sorted(nodes)
        super().__init__(f"nodes unreachable from node 0: {self.nodes}")


class SourceError(DagError):
    def __init__(self, arcs):
        self.arcs = sorted(arcs)
        super().__init__(f"node 0 must have no incoming arcs, found {self.arcs}")


class NodeIndexError(DagError, IndexError):
    pass


# distortion


class InfeasibleAllocation(BitParetoError):
    pass


class OffGrid(BitParetoError):
    pass


class EmptySlice(BitParetoError):
    pass


class OutOfRange(BitParetoError):
    pass


class NotMonotone(BitParetoError):
    pass


# pareto / scalarize / conditions


class DimensionMismatch(BitParetoError, ValueError):
    pass


class EmptyInput(BitParetoError, ValueError):
    pass


class GridTooLarge(BitParetoError):
    def __init__(self, estimate, cap):
        self.estimate = estimate
        self.cap = cap
        super().__init__(f"grid would hold {estimate} points, cap is {cap}")


class NotConvexModel(BitParetoError):
    pass


class NoConvergence(BitParetoError):
    def __init__(self, residual, iterations):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"no convergence after {iterations} iterations, residual {residual:.3e}"
        )


class TooFewSamples(BitParetoError, ValueError):
    pass


class EmptyFront(BitParetoError, ValueError):
    pass


# config


class ParseError(BitParetoError):
    exit_code = 3


class SchemaError(BitParetoError):
    exit_code = 3
