from dataclasses import dataclass, asdict, fields

TERMS = ('gan', 'df', 'l2', 'style', 'gram')


def _scalar(value):
    return value.item() if hasattr(value, 'item') else float(value)


@dataclass
class LossWeights:
    """
    Weights of the generator objective. Defaults are the values used for full training runs.
    """
    gan: float = 10.0
    df: float = 10.0
    l2: float = 15.0
    style: float = 0.5
    gram: float = 1e4

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        return cls(**{k: float(v) for k, v in (data or {}).items() if k in known})


@dataclass
class LossReport:
    """
    Unweighted terms, their weights and the weighted total. `total` stays a
    tensor so callers can backpropagate through it.
    """
    terms: dict
    weights: dict
    total: object

    def as_record(self, step=None, **extra):
        """Plain floats for the metrics log; tensor terms are read with `.item()`."""
        record = {} if step is None else {'step': step}
        for name, value in self.terms.items():
            record[name] = _scalar(value)
        record['total'] = _scalar(self.total)
        record.update(extra)
        return record
