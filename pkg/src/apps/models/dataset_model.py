from dataclasses import dataclass, field, asdict

from src.apps.config import DEFAULT_RESOLUTION

SPLITS = ('train', 'val', 'test')


@dataclass
class DatasetConfig:
    """
    Parameters of the procedural eye dataset. Mirrors the JSON accepted by `synth-data --config`.
    """
    root: str = 'data'
    persons: int = 10
    images_per_person: int = 20
    labeled_fraction: float = 0.3
    resolution: int = DEFAULT_RESOLUTION
    val_fraction: float = 0.2
    test_fraction: float = 0.0
    val_persons: int = 0
    test_persons: int = 0
    seed: int = 0
    workers: int = 4

    def to_dict(self):
        return asdict(self)


@dataclass
class ImageRecord:
    img: str
    mask: str = None
    split: str = 'train'

    @property
    def labeled(self):
        return self.mask is not None

    def to_dict(self):
        return {'img': self.img, 'mask': self.mask, 'split': self.split}


@dataclass
class PersonRecord:
    id: int
    mode: str
    records: list = field(default_factory=list)

    def to_dict(self):
        return {'id': self.id, 'mode': self.mode, 'records': [r.to_dict() for r in self.records]}


@dataclass
class DatasetIndex:
    """
    In-memory form of dataset_root/index.json.
    """
    seed: int
    persons: list = field(default_factory=list)

    def to_dict(self):
        return {'seed': self.seed, 'persons': [p.to_dict() for p in self.persons]}

    @classmethod
    def from_dict(cls, data):
        persons = [
            PersonRecord(
                id=int(p['id']),
                mode=p['mode'],
                records=[ImageRecord(r['img'], r.get('mask'), r['split']) for r in p['records']],
            )
            for p in data['persons']
        ]
        return cls(seed=int(data['seed']), persons=persons)

    def person(self, person_id):
        for person in self.persons:
            if person.id == person_id:
                return person
        raise KeyError(f"Person {person_id} not in dataset index")

    def labeled(self, split=None):
        """(person_id, record) pairs with a mask, optionally restricted to one split."""
        return [
            (p.id, r) for p in self.persons for r in p.records
            if r.labeled and (split is None or r.split == split)
        ]

    def unlabeled(self, person_id=None):
        return [
            (p.id, r) for p in self.persons for r in p.records
            if not r.labeled and (person_id is None or p.id == person_id)
        ]

    def person_of(self, img_path):
        for person in self.persons:
            for record in person.records:
                if record.img == img_path:
                    return person.id
        raise KeyError(f"Image {img_path} not in dataset index")
