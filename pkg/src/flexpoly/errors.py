"""Exception hierarchy shared by all modules."""


class FlexPolyError(Exception):
    """Base class for all errors raised by this package."""


class MeshError(FlexPolyError):
    pass


class NonManifoldEdge(MeshError):
    def __init__(self, msg, edge=None):
        super().__init__(msg)
        self.edge = edge


class InconsistentOrientation(MeshError):
    pass


class NonPlanarFace(MeshError):
    def __init__(self, msg, deviation=None):
        super().__init__(msg)
        self.deviation = deviation


class PinchedVertex(MeshError):
    pass


class BoundaryEdge(MeshError):
    pass


class DegenerateFace(MeshError):
    pass


class OpenMeshNotAllowed(MeshError):
    pass


class GeometryError(FlexPolyError):
    """Construction parameters do not describe a valid configuration."""


class InfeasibleLengths(GeometryError):
    pass


class SymmetryViolation(GeometryError):
    pass


class FacesNotAdjacent(GeometryError):
    pass


class PlanarityViolation(GeometryError):
    pass


class SolverError(FlexPolyError):
    pass


class NoConvergence(SolverError):
    pass


class WrongBranch(SolverError):
    pass


class NotOnManifold(SolverError):
    pass


class RigidConfiguration(SolverError):
    pass


class StepFailed(SolverError):
    pass


class AssemblyError(FlexPolyError):
    pass


class UnresolvedLabel(AssemblyError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class LengthMismatch(AssemblyError):
    def __init__(self, msg, edge=None):
        super().__init__(msg)
        self.edge = edge


class AlignmentFailure(AssemblyError):
    pass


class PlanarityMismatch(AssemblyError):
    pass


class NestingViolation(AssemblyError):
    pass


class TunnelCollision(AssemblyError):
    pass


class SceneError(FlexPolyError):
    def __init__(self, msg, line=None, column=None):
        if line is not None:
            msg = f"line {line}, column {column or 1}: {msg}"
        super().__init__(msg)
        self.line = line
        self.column = column


class SceneSyntaxError(SceneError):
    pass


class UnknownKey(SceneError):
    pass


class MissingParameter(SceneError):
    pass


class ValueOutOfRange(SceneError):
    pass
