from dataclasses import dataclass, field

from src.apps.config import NUM_CLASSES


@dataclass(frozen=True)
class ClassMeans:
    """Mean internal intensity of each class over the labeled training pixels."""
    values: tuple

    def __post_init__(self):
        if len(self.values) != NUM_CLASSES:
            raise ValueError(f"ClassMeans needs {NUM_CLASSES} values, got {len(self.values)}")

    def to_dict(self):
        return {'mean_intensity': list(self.values)}

    @classmethod
    def from_dict(cls, data):
        return cls(tuple(float(v) for v in data['mean_intensity']))


@dataclass(frozen=True)
class RankedEntry:
    img: str
    score: float
    rank: int

    def to_dict(self):
        return {'img': self.img, 'score': self.score, 'rank': self.rank}


@dataclass
class RankedList:
    """
    Candidates ordered by ascending score, ties broken by ascending image path. Ranks start at 1.
    """
    entries: list = field(default_factory=list)

    @classmethod
    def from_scores(cls, scored):
        ordered = sorted(scored, key=lambda item: (item[1], item[0]))
        return cls([RankedEntry(img, float(score), rank) for rank, (img, score) in enumerate(ordered, start=1)])

    def top(self, n):
        return self.entries[:n]

    def paths(self):
        return [entry.img for entry in self.entries]

    def to_list(self):
        return [entry.to_dict() for entry in self.entries]

    @classmethod
    def from_list(cls, data):
        return cls([RankedEntry(d['img'], float(d['score']), int(d['rank'])) for d in data])

    def __len__(self):
        return len(self.entries)
