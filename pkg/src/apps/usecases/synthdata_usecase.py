import logging
from concurrent.futures import ThreadPoolExecutor

from src.apps.core.eye_renderer import render_eye, sample_person, sample_pose
from src.apps.core.seeding import derive_rng, derive_seed
from src.apps.core.tensor_ops import to_disk
from src.apps.models.dataset_model import DatasetIndex, ImageRecord, PersonRecord

logger = logging.getLogger(__name__)

# Stream tags keeping the per-image random streams independent
_LABEL_STREAM = 1
_POSE_STREAM = 2
_NOISE_STREAM = 3


class SynthDataUseCase:
    """
    Builds the procedural multi-person eye dataset and its index.
    """
    def __init__(self, dataset_repo):
        self.dataset_repo = dataset_repo

    @staticmethod
    def pose_for(config, person_id, n):
        return sample_pose(derive_rng(config.seed, person_id, n, _POSE_STREAM))

    @staticmethod
    def noise_seed_for(config, person_id, n):
        return derive_seed(config.seed, person_id, n, _NOISE_STREAM)

    def _person_splits(self, config):
        """person_id -> forced split for identity-disjoint val/test persons."""
        forced = {}
        first_test = config.persons - config.test_persons
        first_val = first_test - config.val_persons
        for person_id in range(first_val, config.persons):
            forced[person_id] = 'val' if person_id < first_test else 'test'
        return forced

    def _plan_person(self, config, person_id, forced_split):
        """
        Decides which images of a person are labeled and which split each belongs to.
        Returns a list of (n, labeled, split) in image order.
        """
        count = config.images_per_person
        n_labeled = int(round(config.labeled_fraction * count))
        order = derive_rng(config.seed, person_id, _LABEL_STREAM).permutation(count)
        labeled = [int(n) for n in order[:n_labeled]]

        splits = {}
        if forced_split is None:
            n_val = int(round(config.val_fraction * n_labeled))
            n_test = int(round(config.test_fraction * n_labeled))
            for position, n in enumerate(labeled):
                if position < n_val:
                    splits[n] = 'val'
                elif position < n_val + n_test:
                    splits[n] = 'test'
                else:
                    splits[n] = 'train'

        labeled_set = set(labeled)
        plan = []
        for n in range(count):
            split = forced_split or splits.get(n, 'train')
            plan.append((n, n in labeled_set, split))
        return plan

    def _render_and_write(self, config, style, person_id, n, labeled):
        repo = self.dataset_repo
        pose = self.pose_for(config, person_id, n)
        image, mask = render_eye(style, pose, config.resolution, config.resolution,
                                 noise_seed=self.noise_seed_for(config, person_id, n))
        repo.write_sample(repo.image_relpath(person_id, n), to_disk(image))
        if labeled:
            repo.write_sample(repo.mask_relpath(person_id, n), mask)
        else:
            repo.write_sample(repo.groundtruth_relpath(person_id, n), mask)

    def build_dataset(self, config):
        """
        Renders every image, writes PNGs and index.json. Rendering may run on
        `config.workers` threads; the index is assembled on the calling thread.
        """
        logger.info(
            f"Building dataset at {self.dataset_repo.root}: {config.persons} persons x "
            f"{config.images_per_person} images, labeled fraction {config.labeled_fraction}."
        )
        forced = self._person_splits(config)
        index = DatasetIndex(seed=config.seed)
        jobs = []
        for person_id in range(config.persons):
            style = sample_person(person_id, config.seed)
            person = PersonRecord(id=person_id, mode=style.mode)
            for n, labeled, split in self._plan_person(config, person_id, forced.get(person_id)):
                person.records.append(ImageRecord(
                    img=self.dataset_repo.image_relpath(person_id, n),
                    mask=self.dataset_repo.mask_relpath(person_id, n) if labeled else None,
                    split=split,
                ))
                jobs.append((style, person_id, n, labeled))
            index.persons.append(person)

        with ThreadPoolExecutor(max_workers=max(1, config.workers)) as pool:
            futures = [pool.submit(self._render_and_write, config, *job) for job in jobs]
            for future in futures:
                future.result()  # re-raises the first I/O failure

        self.dataset_repo.save_index(index)
        labeled_count = len(index.labeled())
        logger.info(f"Dataset ready: {len(jobs)} images, {labeled_count} labeled.")
        return index
