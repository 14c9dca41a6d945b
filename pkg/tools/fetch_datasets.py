"""Download the KDDCup99 10% subset and the Covertype data, then print checksums.

Usage: python tools/fetch_datasets.py [DEST_DIR]

Writes kddcup99_10pct.csv and covtype.csv (decompressed), then prints the
sha256, row count and anomaly fraction of each under the package's label
rules, plus the environment variables the acceptance suite reads.
"""

import gzip
import hashlib
import shutil
import sys
import urllib.request
from pathlib import Path

from ghkernel.data import FORESTCOVER, KDDCUP99, load_csv

SOURCES = {
    "kddcup99_10pct.csv": ("http://kdd.ics.uci.edu/databases/kddcup99/kddcup.data_10_percent.gz", KDDCUP99, "GHKERNEL_KDDCUP99"),
    "covtype.csv": ("https://archive.ics.uci.edu/ml/machine-learning-databases/covtype/covtype.data.gz", FORESTCOVER, "GHKERNEL_FORESTCOVER"),
}


def sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def main() -> int:
    dest = Path(sys.argv[1] if len(sys.argv) > 1 else "data")
    dest.mkdir(parents=True, exist_ok=True)
    for name, (url, spec, env) in SOURCES.items():
        target = dest / name
        if not target.exists():
            print(f"downloading {url}")
            gz = target.with_suffix(".gz")
            urllib.request.urlretrieve(url, gz)
            with gzip.open(gz, "rb") as src, open(target, "wb") as out:
                shutil.copyfileobj(src, out)
            gz.unlink()
        data = load_csv(target, spec)
        print(f"{name}: sha256 {sha256(target)}")
        print(f"  rows kept {len(data)}, features {data.n_features}, anomaly fraction {data.contamination:.4f}")
        print(f"  export {env}={target.resolve()}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
