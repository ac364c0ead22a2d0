"""Run manifests: full provenance plus content digests of every output.

A manifest pins (experiment, master seed, parameters, output digests);
re-running it must reproduce the CSV bodies byte for byte.  Timestamps
live in the manifest but are not part of any digest.
"""

from __future__ import annotations

import datetime
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

ARTIFACT_VERSION = "0.1.0"
MANIFEST_NAME = "manifest.json"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).replace(
        microsecond=0
    ).isoformat()


@dataclass
class RunManifest:
    experiment: str
    master_seed: int
    params: dict
    started_utc: str = field(default_factory=utc_now)
    finished_utc: str = ""
    outputs: list = field(default_factory=list)
    artifact_version: str = ARTIFACT_VERSION

    def add_output(self, path) -> None:
        path = Path(path)
        self.outputs.append({
            "name": path.name,
            "sha256": sha256_file(path),
            "bytes": path.stat().st_size,
        })

    def write(self, out_dir) -> Path:
        self.finished_utc = utc_now()
        target = Path(out_dir) / MANIFEST_NAME
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return target


def load_manifest(run_dir) -> dict:
    with open(Path(run_dir) / MANIFEST_NAME, encoding="utf-8") as fh:
        return json.load(fh)


def verify_manifest(run_dir) -> list[str]:
    """Recompute output digests; returns a list of mismatch descriptions."""
    run_dir = Path(run_dir)
    data = load_manifest(run_dir)
    problems = []
    for entry in data["outputs"]:
        target = run_dir / entry["name"]
        if not target.exists():
            problems.append(f"missing output file {entry['name']}")
            continue
        digest = sha256_file(target)
        if digest != entry["sha256"]:
            problems.append(
                f"digest mismatch for {entry['name']}: "
                f"recorded {entry['sha256'][:12]}.., found {digest[:12]}.."
            )
    return problems
