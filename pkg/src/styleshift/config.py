"""Flat key-value configuration files.

Format: one `key = value` per line, `#` starts a comment, blank lines are
ignored. Keys are flat strings (dots are allowed for grouping but carry no
nesting semantics). Values are parsed on demand by the typed getters.
"""

from __future__ import annotations

from pathlib import Path


class ConfigError(ValueError):
    pass


def parse_config_text(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value.strip()
    return values


class KeyValueConfig:
    """Typed access over a parsed flat config with unknown-key detection."""

    def __init__(self, values: dict[str, str], source: str = "<memory>"):
        self.values = dict(values)
        self.source = source
        self._read: set[str] = set()

    @staticmethod
    def from_file(path: Path) -> "KeyValueConfig":
        path = Path(path)
        return KeyValueConfig(parse_config_text(path.read_text(encoding="utf-8")), str(path))

    def _fetch(self, key: str, default):
        self._read.add(key)
        if key in self.values:
            return self.values[key]
        if default is _REQUIRED:
            raise ConfigError(f"{self.source}: missing required key {key!r}")
        return default

    def get_str(self, key: str, default=None) -> str | None:
        raw = self._fetch(key, default)
        return raw if raw is None else str(raw)

    def get_int(self, key: str, default=None) -> int | None:
        raw = self._fetch(key, default)
        if raw is None or isinstance(raw, int):
            return raw
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{self.source}: key {key!r} is not an integer: {raw!r}") from exc

    def get_float(self, key: str, default=None) -> float | None:
        raw = self._fetch(key, default)
        if raw is None or isinstance(raw, float):
            return raw
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{self.source}: key {key!r} is not a number: {raw!r}") from exc

    def get_bool(self, key: str, default=None) -> bool | None:
        raw = self._fetch(key, default)
        if raw is None or isinstance(raw, bool):
            return raw
        lowered = str(raw).lower()
        if lowered in ("true", "1", "yes", "on"):
            return True
        if lowered in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"{self.source}: key {key!r} is not a boolean: {raw!r}")

    def get_list(self, key: str, default=None) -> list[str] | None:
        raw = self._fetch(key, default)
        if raw is None or isinstance(raw, list):
            return raw
        return [part.strip() for part in str(raw).split(",") if part.strip()]

    def get_int_list(self, key: str, default=None) -> list[int] | None:
        parts = self.get_list(key, default)
        if parts is None:
            return None
        try:
            return [int(p) for p in parts]
        except ValueError as exc:
            raise ConfigError(f"{self.source}: key {key!r} is not an integer list") from exc

    def unknown_keys(self, known_prefixes: tuple[str, ...] = ()) -> list[str]:
        """Keys present in the file that nothing read and no prefix claims."""
        leftover = set(self.values) - self._read
        return sorted(
            k for k in leftover if not any(k.startswith(p) for p in known_prefixes)
        )


class _Required:
    def __repr__(self):
        return "<required>"


_REQUIRED = _Required()
REQUIRED = _REQUIRED
