"""Versioned JSON envelopes for certificates and meshes.

Floats are written with ``repr`` precision (the ``json`` default), so a
load/save round trip reproduces every value bit for bit; keys are sorted so
identical inputs give byte-identical files.
"""
import json

from . import __version__
from .certify import BoundMesh, StabilityCertificate
from .lyapunov import LyapunovCertificate

FORMAT_VERSION = 1

_KINDS = {"stability": StabilityCertificate, "mesh": BoundMesh}


def envelope(kind, payload, operator_hash="", config=None):
    return {
        "format_version": FORMAT_VERSION,
        "tool": "stabcert",
        "tool_version": __version__,
        "kind": kind,
        "operator_hash": operator_hash,
        "config": config or {},
        "payload": payload,
    }


def dumps(doc):
    return json.dumps(doc, sort_keys=True, indent=1, allow_nan=True) + "\n"


def save(obj, path, config=None):
    """Write a certificate, mesh, or list of Lyapunov certificates."""
    if isinstance(obj, StabilityCertificate):
        doc = envelope("stability", obj.to_dict(), obj.operator_hash, config)
    elif isinstance(obj, BoundMesh):
        doc = envelope("mesh", obj.to_dict(), obj.operator_hash, config)
    elif isinstance(obj, (list, tuple)) and all(isinstance(c, LyapunovCertificate) for c in obj):
        cfg = dict(config or {})
        doc = envelope("lyapunov", [c.to_dict() for c in obj], cfg.pop("operator_hash", ""), cfg)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    with open(path, "w") as f:
        f.write(dumps(doc))
    return doc


def load_document(path):
    with open(path) as f:
        doc = json.load(f)
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported format_version {doc.get('format_version')!r}")
    return doc


def load(path, form=None):
    """Inverse of :func:`save`. Lyapunov certificates need the source ``form``."""
    doc = load_document(path)
    kind = doc["kind"]
    if kind in _KINDS:
        return _KINDS[kind].from_dict(doc["payload"])
    if kind == "lyapunov":
        if form is None:
            raise ValueError("loading Lyapunov certificates requires the operator")
        return [LyapunovCertificate.from_dict(d, form) for d in doc["payload"]]
    raise ValueError(f"unknown document kind {kind!r}")
