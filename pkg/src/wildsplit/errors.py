"""Exception hierarchy shared by all wildsplit modules."""


class WildsplitError(Exception):
    """Base class for all errors raised by this package."""


# -- metadata / file loading -------------------------------------------------

class DuplicateId(WildsplitError):
    def __init__(self, image_id):
        self.image_id = image_id
        super().__init__(f"duplicate image_id {image_id!r}")


class BadDate(WildsplitError):
    def __init__(self, row, value):
        self.row = row
        super().__init__(f"row {row}: unparseable date {value!r}")


class BadField(WildsplitError):
    def __init__(self, row, field):
        self.row = row
        self.field = field
        super().__init__(f"row {row}: empty required field {field!r}")


class BadHeader(WildsplitError):
    pass


class BadMagic(WildsplitError):
    pass


class RowMismatch(WildsplitError):
    def __init__(self, declared, expected):
        self.declared = declared
        self.expected = expected
        super().__init__(f"file declares {declared} rows, expected {expected}")


class Truncated(WildsplitError):
    pass


class ZeroVector(WildsplitError):
    def __init__(self, row):
        self.row = row
        super().__init__(f"row {row} has (near-)zero norm")


class ClassCountMismatch(WildsplitError):
    def __init__(self, dims, n_classes):
        super().__init__(f"logit dims {dims} != class list length {n_classes}")


# -- clustering --------------------------------------------------------------

class DimMismatch(WildsplitError):
    pass


class UnsortedEdges(WildsplitError):
    pass


class UnknownIdentity(WildsplitError):
    def __init__(self, key):
        super().__init__(f"unknown identity {key!r}")


class UnknownDataset(WildsplitError):
    def __init__(self, name):
        super().__init__(f"unknown dataset {name!r}")


# -- splitting / quality -----------------------------------------------------

class NotTimestamped(WildsplitError):
    pass


class ClusterMismatch(WildsplitError):
    pass


# -- evaluation --------------------------------------------------------------

class EmptyGallery(WildsplitError):
    pass


class DegenerateCentroid(WildsplitError):
    def __init__(self, key):
        super().__init__(f"identity {key!r} has a zero-sum embedding mean")


class BadLogits(WildsplitError):
    pass


class Undefined(WildsplitError):
    """A metric is undefined for the given inputs (e.g. an empty score side)."""


class Incomplete(WildsplitError):
    """Predictions do not cover every required test image."""


# -- synthetic worlds --------------------------------------------------------

class BadSpec(WildsplitError):
    pass


class NotSeparable(WildsplitError):
    """No similarity gap exists between within- and cross-encounter pairs."""
