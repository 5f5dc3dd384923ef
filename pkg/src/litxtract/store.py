"""Local configuration store: credentials, cached settings, checkpoints.

Everything lives under one per-user directory (override with the
LITXTRACT_HOME environment variable). API keys are Base64-obfuscated before
hitting disk; this is deliberately not encryption, it only prevents casual
plain-text exposure. `clear_all_data` wipes the whole store in one call.
"""

from __future__ import annotations

import base64
import json
import os
import shutil
import sys
import tempfile
import threading
from pathlib import Path

from .errors import NoCredentialError

HOME_ENV = "LITXTRACT_HOME"
_B64_MARKER = "b64:"


def default_home() -> Path:
    override = os.environ.get(HOME_ENV)
    if override:
        return Path(override)
    if sys.platform == "win32":
        base = Path(os.environ.get("APPDATA", Path.home() / "AppData" / "Roaming"))
    elif sys.platform == "darwin":
        base = Path.home() / "Library" / "Application Support"
    else:
        base = Path(os.environ.get("XDG_CONFIG_HOME", Path.home() / ".config"))
    return base / "litxtract"


def atomic_write_text(path: Path, text: str):
    """Write via temp file + rename so a crash never leaves a torn file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class ConfigStore:
    """JSON-file-backed settings and credential store with serialized writes."""

    def __init__(self, home: Path | str | None = None):
        self.home = Path(home) if home is not None else default_home()
        self.config_path = self.home / "config.json"
        self.checkpoints_dir = self.home / "checkpoints"
        self._lock = threading.Lock()

    def _read(self) -> dict:
        try:
            return json.loads(self.config_path.read_text(encoding="utf-8"))
        except (FileNotFoundError, json.JSONDecodeError):
            return {}

    def _write(self, data: dict):
        atomic_write_text(self.config_path, json.dumps(data, ensure_ascii=False, indent=2))

    def store_credential(self, provider_id: str, key: str):
        if not key:
            raise ValueError("credential must be non-empty")
        encoded = _B64_MARKER + base64.b64encode(key.encode("utf-8")).decode("ascii")
        with self._lock:
            data = self._read()
            data.setdefault("credentials", {})[provider_id] = encoded
            self._write(data)

    def load_credential(self, provider_id: str) -> str:
        with self._lock:
            data = self._read()
        stored = data.get("credentials", {}).get(provider_id)
        if not stored or not stored.startswith(_B64_MARKER):
            raise NoCredentialError(f"no API key stored for provider {provider_id!r}")
        return base64.b64decode(stored[len(_B64_MARKER):]).decode("utf-8")

    def has_credential(self, provider_id: str) -> bool:
        try:
            self.load_credential(provider_id)
            return True
        except NoCredentialError:
            return False

    def save_settings(self, settings: dict):
        with self._lock:
            data = self._read()
            data["settings"] = settings
            self._write(data)

    def load_settings(self) -> dict:
        with self._lock:
            return self._read().get("settings", {})

    def clear_all_data(self):
        """Remove credentials, cached settings, and checkpoints. Idempotent."""
        with self._lock:
            try:
                self.config_path.unlink()
            except FileNotFoundError:
                pass
            shutil.rmtree(self.checkpoints_dir, ignore_errors=True)
