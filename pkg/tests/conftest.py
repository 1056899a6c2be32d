import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from _corpus import build_corpus  # noqa: E402

from transplant_bench.dataset import load_dataset  # noqa: E402


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    annotations, images_dir = build_corpus(root, seed=7, n_images=4)
    return {"root": root, "annotations": annotations, "images": images_dir}


@pytest.fixture(scope="session")
def index(corpus):
    return load_dataset(corpus["annotations"], corpus["images"])
