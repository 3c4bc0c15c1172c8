#!/usr/bin/env python3
"""Download the flags, scene, and yeast benchmark datasets.

The archives live in Mulan's GitHub repository as .rar files, so an
extraction tool is needed: one of unrar, unar, 7z, or bsdtar. Extracted
<name>.arff and <name>.xml files land in the target directory (default:
<repo>/data), where the acceptance tests look for them.

Usage: python3 scripts/fetch_datasets.py [--dest DIR] [--datasets flags,scene,yeast]
"""

from __future__ import annotations

import argparse
import shutil
import subprocess
import sys
import tempfile
import urllib.request
from pathlib import Path

BASE_URL = "https://github.com/tsoumakas/mulan/raw/master/data/multi-label"
DEFAULT_DATASETS = ("flags", "scene", "yeast")

EXTRACTORS = (
    ("unrar", lambda archive, dest: ["unrar", "x", "-o+", str(archive), str(dest)]),
    ("unar", lambda archive, dest: ["unar", "-f", "-o", str(dest), str(archive)]),
    ("7z", lambda archive, dest: ["7z", "x", "-y", f"-o{dest}", str(archive)]),
    ("bsdtar", lambda archive, dest: ["bsdtar", "-xf", str(archive), "-C", str(dest)]),
)


def download(url: str, dest: Path) -> None:
    print(f"downloading {url}")
    with urllib.request.urlopen(url) as response, open(dest, "wb") as handle:
        shutil.copyfileobj(response, handle)


def extract(archive: Path, dest: Path) -> bool:
    for name, command in EXTRACTORS:
        if shutil.which(name) is None:
            continue
        result = subprocess.run(
            command(archive, dest), capture_output=True, text=True
        )
        if result.returncode == 0:
            return True
        print(f"{name} failed on {archive.name}: {result.stderr.strip()}")
    return False


def find_file(root: Path, filename: str) -> Path | None:
    matches = [p for p in root.rglob("*") if p.name.lower() == filename.lower()]
    return matches[0] if matches else None


def fetch(name: str, dest: Path) -> bool:
    arff_target = dest / f"{name}.arff"
    xml_target = dest / f"{name}.xml"
    if arff_target.exists() and xml_target.exists():
        print(f"{name}: already present")
        return True
    with tempfile.TemporaryDirectory() as tmp:
        tmp_path = Path(tmp)
        archive = tmp_path / f"{name}.rar"
        download(f"{BASE_URL}/{name}.rar", archive)
        extracted = tmp_path / "extracted"
        extracted.mkdir()
        if not extract(archive, extracted):
            print(
                f"{name}: no working extractor found (install unrar, unar, 7z, "
                "or bsdtar), or unpack the archive manually into the data "
                "directory"
            )
            return False
        arff = find_file(extracted, f"{name}.arff")
        xml = find_file(extracted, f"{name}.xml")
        if arff is None or xml is None:
            print(f"{name}: archive did not contain {name}.arff / {name}.xml")
            return False
        shutil.copy(arff, arff_target)
        shutil.copy(xml, xml_target)
    print(f"{name}: saved to {dest}")
    return True


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--dest",
        type=Path,
        default=Path(__file__).resolve().parent.parent / "data",
    )
    parser.add_argument("--datasets", default=",".join(DEFAULT_DATASETS))
    args = parser.parse_args()
    args.dest.mkdir(parents=True, exist_ok=True)
    ok = True
    for name in (d.strip() for d in args.datasets.split(",") if d.strip()):
        try:
            ok = fetch(name, args.dest) and ok
        except OSError as exc:
            print(f"{name}: download failed: {exc}")
            ok = False
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
