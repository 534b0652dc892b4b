"""On-disk workspace: stage directories, content-hash manifest, flat config.

Stages write only their own directory and register outputs in the manifest.
A stage whose inputs signature matches the recorded one, and whose outputs
still hash to their recorded values, is up to date and can be skipped.  The
workspace fingerprint digests every recorded output, so two runs that agree
on it produced byte-identical artifacts.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_DEPENDENCY = 3
EXIT_DATA_ERROR = 4

CONFIG_NAME = "progo.cfg"
MANIFEST_NAME = "manifest.json"

STAGE_DIRS = ("corpus", "catalog", "analysis", "features", "ratings",
              "models", "reports", "synth")


class MissingDependencyError(RuntimeError):
    def __init__(self, path):
        super().__init__(f"missing required input: {path}")
        self.path = Path(path)


class DataError(RuntimeError):
    pass


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


class Workspace:
    def __init__(self, root):
        self.root = Path(root)

    def dir(self, name: str) -> Path:
        if name not in STAGE_DIRS:
            raise ValueError(f"unknown stage directory {name!r}")
        return self.root / name

    def ensure(self, *names: str) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        for name in names:
            self.dir(name).mkdir(exist_ok=True)

    def require(self, path: Path) -> Path:
        if not Path(path).exists():
            raise MissingDependencyError(path)
        return Path(path)

    # -- config ---------------------------------------------------------------

    @property
    def config_path(self) -> Path:
        return self.root / CONFIG_NAME

    def read_config(self) -> dict[str, str]:
        """Flat key=value file; '#' starts a comment line."""
        config: dict[str, str] = {}
        if not self.config_path.exists():
            return config
        for line in self.config_path.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, _, value = line.partition("=")
            config[key.strip()] = value.strip()
        return config

    def write_config(self, config: dict[str, str]) -> None:
        lines = [f"{k}={config[k]}" for k in sorted(config)]
        self.config_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    # -- manifest ---------------------------------------------------------------

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST_NAME

    def read_manifest(self) -> dict:
        if not self.manifest_path.exists():
            return {"stages": {}}
        return json.loads(self.manifest_path.read_text(encoding="utf-8"))

    def signature(self, input_paths: list[Path], extra: str = "") -> str:
        digest = hashlib.sha256()
        for path in sorted(Path(p) for p in input_paths):
            digest.update(str(path.relative_to(self.root)
                              if path.is_relative_to(self.root) else path).encode())
            digest.update(b":")
            digest.update(file_sha256(path).encode())
            digest.update(b";")
        digest.update(extra.encode())
        return digest.hexdigest()

    def stage_fresh(self, stage: str, inputs_sig: str) -> bool:
        manifest = self.read_manifest()
        record = manifest["stages"].get(stage)
        if record is None or record["inputs"] != inputs_sig:
            return False
        for relpath, recorded in record["outputs"].items():
            path = self.root / relpath
            if not path.exists() or file_sha256(path) != recorded:
                return False
        return True

    def record_stage(self, stage: str, inputs_sig: str, outputs: list[Path],
                     info: dict | None = None) -> None:
        manifest = self.read_manifest()
        manifest.setdefault("stages", {})[stage] = {
            "inputs": inputs_sig,
            "outputs": {
                str(Path(p).relative_to(self.root)): file_sha256(p)
                for p in sorted(Path(p) for p in outputs)
            },
            "info": info or {},
        }
        manifest["fingerprint"] = self._fingerprint(manifest)
        from . import __version__
        manifest["tool_version"] = __version__
        self.manifest_path.write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @staticmethod
    def _fingerprint(manifest: dict) -> str:
        digest = hashlib.sha256()
        for stage in sorted(manifest.get("stages", {})):
            for relpath, sha in sorted(manifest["stages"][stage]["outputs"].items()):
                digest.update(f"{stage}:{relpath}:{sha};".encode())
        return digest.hexdigest()

    def fingerprint(self) -> str | None:
        return self.read_manifest().get("fingerprint")
