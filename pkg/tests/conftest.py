"""Session fixtures shared by the CLI and acceptance tests.

The desk-scale artifacts (a 20k-line dataset and the model trained on it
with the --desk-scale preset) are expensive, so they are built once per
session through the real command-line entry point and reused everywhere.
"""

import time

import pytest

from pnpmri.cli import main


@pytest.fixture(scope="session")
def desk_dataset(tmp_path_factory):
    """Desk-preset dataset: 20000 lines, seed 0, default SNR range."""
    path = tmp_path_factory.mktemp("desk_data") / "desk.dset"
    start = time.perf_counter()
    rc = main(["gen-data", "--total", "20000", "--seed", "0", "--out", str(path)])
    elapsed = time.perf_counter() - start
    assert rc == 0
    return {"path": str(path), "seconds": elapsed}


@pytest.fixture(scope="session")
def desk_model(desk_dataset, tmp_path_factory):
    """Model trained on the desk dataset with the --desk-scale preset."""
    path = tmp_path_factory.mktemp("desk_model") / "desk.dnzr"
    start = time.perf_counter()
    rc = main(
        [
            "train",
            "--data",
            desk_dataset["path"],
            "--desk-scale",
            "--seed",
            "0",
            "--out",
            str(path),
        ]
    )
    elapsed = time.perf_counter() - start
    assert rc == 0
    return {"path": str(path), "seconds": elapsed}
