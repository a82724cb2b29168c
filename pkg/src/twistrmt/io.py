"""Run manifests: what was run, with which settings, and digests of the outputs."""
import datetime
import hashlib
import json
import os
import subprocess
from dataclasses import asdict, dataclass, field

__all__ = ["RunManifest", "sha256_file", "version_string", "MANIFEST_NAME"]

MANIFEST_NAME = "manifest.json"


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def version_string():
    """Package version, with ``git describe`` output appended when available."""
    from . import __version__

    here = os.path.dirname(os.path.abspath(__file__))
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=here, capture_output=True, text=True, timeout=5)
    except (OSError, subprocess.SubprocessError):
        return __version__
    tag = out.stdout.strip()
    return f"{__version__}+g{tag}" if out.returncode == 0 and tag else __version__


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    """Record of one CLI run.

    ``argv`` replays the run; ``outputs`` maps file names (relative to the
    output directory) to SHA-256 digests.
    """

    command: str
    argv: list
    config: dict
    curve: str = None
    engine: str = None
    T: int = None
    seed: int = None
    version: str = field(default_factory=version_string)
    started: str = field(default_factory=_now)
    finished: str = None
    outputs: dict = field(default_factory=dict)

    def add_output(self, directory, name):
        self.outputs[name] = sha256_file(os.path.join(directory, name))

    def verify(self, directory):
        """Names of outputs whose current digest differs from the recorded one."""
        bad = []
        for name, digest in sorted(self.outputs.items()):
            path = os.path.join(directory, name)
            if not os.path.exists(path) or sha256_file(path) != digest:
                bad.append(name)
        return bad

    def write(self, directory):
        self.finished = _now()
        path = os.path.join(directory, MANIFEST_NAME)
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path

    @classmethod
    def read(cls, path):
        with open(path) as fh:
            data = json.load(fh)
        return cls(**data)
