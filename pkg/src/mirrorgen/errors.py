"""Exception types raised across the package."""


class MirrorGenError(Exception):
    """Base class for all errors raised by mirrorgen."""


# meshes / geometry
class EmptyMesh(MirrorGenError):
    """Mesh has no vertices."""


class DegenerateMesh(MirrorGenError):
    """Mesh bounding box has no measurable extent."""


# asset loading
class ParseError(MirrorGenError):
    """Malformed input file; carries the offending path and line number."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class UnsupportedFeature(ParseError):
    """Input uses a directive outside the supported subset."""


class UnknownAsset(MirrorGenError):
    """Asset id not present in the catalog."""


class EmptyCategory(MirrorGenError):
    """Category has no assets to sample from."""


# placement
class EmptyRegion(MirrorGenError):
    """Sampling region is empty; the mirror/camera rig cannot co-see objects."""


class PlacementFailed(MirrorGenError):
    """Collision-free placement not found within the attempt budget."""


class PairingUnavailable(MirrorGenError):
    """No paired categories configured for the primary object's category."""


# rendering
class NoMirror(MirrorGenError):
    """Scene has no mirror; reflection oracle is undefined."""


# metrics
class EmptyMask(MirrorGenError):
    """Metric mask selects no pixels."""


class ShapeMismatch(MirrorGenError):
    """Images or masks do not share a resolution."""


# dataset / cli
class ManifestCorrupt(MirrorGenError):
    """Manifest file is unreadable or internally inconsistent."""


class FatalConfig(MirrorGenError):
    """Configuration error that prevents any work from starting."""
