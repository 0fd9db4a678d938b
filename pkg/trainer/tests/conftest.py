import pytest

from nucleikit.cli import main as toolkit


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """Labeled 4-train/2-validation/2-test fixture dataset on disk."""
    root = tmp_path_factory.mktemp("small")
    data = root / "data"
    labels = root / "labels"
    assert toolkit([
        "fixtures", "--out", str(data), "--seed", "7", "--n-images", "8",
        "--n-validation", "2", "--n-test", "2", "--n-nuclei", "6",
        "--min-separation", "12", "--noise", "0.05",
    ]) == 0
    assert toolkit(["label", "--manifest", str(data / "manifest.json"), "--out", str(labels)]) == 0
    return {"manifest": data / "manifest.json", "data": data, "labels": labels}
