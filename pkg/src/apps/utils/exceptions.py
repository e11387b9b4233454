class Seg2EyeError(Exception):
    """
    Base class for all errors raised by the pipeline.
    """


class UsageError(Seg2EyeError):
    """Bad command-line input. Mapped to exit code 2."""


class OutOfRangeError(Seg2EyeError, ValueError):
    """A value (mask class, parameter) lies outside its allowed range."""


class ShapeMismatchError(Seg2EyeError, ValueError):
    """Tensors, images or masks do not have the expected shapes."""


class ClassAbsentError(Seg2EyeError):
    """A segmentation class has no pixels where at least one is required."""

    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__(f"No labeled pixels for class(es): {', '.join(map(str, self.missing))}")


class EmptySplitError(Seg2EyeError):
    """A dataset split needed for training has no records."""


class EmptyPoolError(Seg2EyeError):
    """A ranking or style pool has no candidates."""


class DatasetIOError(Seg2EyeError):
    """
    Reading or writing a dataset file failed. Always carries the offending path.
    """

    def __init__(self, path, message):
        self.path = str(path)
        super().__init__(f"{message}: {self.path}")


class CheckpointError(Seg2EyeError):
    """Base class for checkpoint loading failures."""


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointTruncatedError(CheckpointError):
    pass


class CheckpointManifestError(CheckpointError):
    pass


class ModelKindError(CheckpointError):
    pass


class StepIsolationError(Seg2EyeError):
    """A generator update changed discriminator parameters, or the other way round."""


class MissingPairsError(Seg2EyeError):
    """Prediction and target directories do not hold the same file names."""

    def __init__(self, missing):
        self.missing = sorted(missing)
        super().__init__(f"Unmatched files: {', '.join(self.missing)}")
