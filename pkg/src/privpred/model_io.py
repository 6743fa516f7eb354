"""Model persistence: versioned JSON envelope with a payload checksum so a
truncated or tampered file is rejected instead of half-loaded."""

from __future__ import annotations

import hashlib
import json

from .errors import ModelIntegrityError, ModelVersionError
from .fileio import atomic_write_text
from .pipeline import MODEL_CLASSES

FORMAT_VERSION = 1


def _canonical(payload):
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def save_model(model, path):
    kind = getattr(model, "kind", None)
    if kind not in MODEL_CLASSES:
        raise ModelIntegrityError(f"cannot save object of type {type(model).__name__}")
    payload = model.to_json()
    envelope = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "checksum": hashlib.sha256(_canonical(payload).encode()).hexdigest(),
        "payload": payload,
    }
    atomic_write_text(path, json.dumps(envelope, indent=2) + "\n")


def load_model(path):
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    try:
        envelope = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelIntegrityError(f"{path}: not valid JSON ({exc.msg})") from exc
    if not isinstance(envelope, dict) or "format_version" not in envelope:
        raise ModelIntegrityError(f"{path}: missing format_version")
    version = envelope["format_version"]
    if version != FORMAT_VERSION:
        raise ModelVersionError(
            f"{path}: format_version {version} is not supported (expected {FORMAT_VERSION})")
    for key in ("kind", "checksum", "payload"):
        if key not in envelope:
            raise ModelIntegrityError(f"{path}: missing {key!r} field")
    kind = envelope["kind"]
    if kind not in MODEL_CLASSES:
        raise ModelIntegrityError(f"{path}: unknown model kind {kind!r}")
    digest = hashlib.sha256(_canonical(envelope["payload"]).encode()).hexdigest()
    if digest != envelope["checksum"]:
        raise ModelIntegrityError(f"{path}: payload checksum mismatch")
    return MODEL_CLASSES[kind].from_json(envelope["payload"])
