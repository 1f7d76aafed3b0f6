"""Exception hierarchy shared across the pipeline stages."""


class AdvHateError(Exception):
    """Base class; ``stage`` names the pipeline stage that raised."""

    stage = "pipeline"


class DataError(AdvHateError):
    stage = "data"


class MissingColumn(DataError):
    def __init__(self, name):
        super().__init__(f"missing column: {name!r}")
        self.name = name


class MalformedRow(DataError):
    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class EmptyFile(DataError):
    pass


class ClassAbsent(DataError):
    def __init__(self, label):
        super().__init__(f"class {label!r} has no items; cannot stratify")
        self.label = label


class EmptySplit(DataError):
    pass


class ConfigError(AdvHateError):
    stage = "config"


class ConfigInvalid(ConfigError):
    def __init__(self, field, reason=""):
        msg = f"invalid config field {field!r}"
        super().__init__(f"{msg}: {reason}" if reason else msg)
        self.field = field


class IncompatibleConfigs(ConfigError):
    pass


class AttackError(AdvHateError):
    stage = "attack"


class LexiconRequired(AttackError):
    pass


class BenignListRequired(AttackError):
    pass


class TooShort(AttackError):
    pass


class CorrectionError(AdvHateError):
    stage = "correct"


class EmptyDictionary(CorrectionError):
    pass


class NumericError(AdvHateError):
    stage = "numeric"


class ShapeMismatch(NumericError):
    pass


class NonFiniteInput(NumericError):
    pass


class SequenceTooShort(NumericError):
    pass


class IndexOutOfVocab(NumericError):
    pass


class MetricError(AdvHateError):
    stage = "metrics"


class LengthMismatch(MetricError):
    pass


class LabelOutOfRange(MetricError):
    pass


class EmptyMatrix(MetricError):
    pass


class SingleClassOnly(MetricError):
    def __init__(self, label=None):
        msg = "only one class present"
        super().__init__(msg if label is None else f"{msg} (one-vs-rest for class {label})")
        self.label = label


class MissingCurve(AdvHateError):
    stage = "report"
