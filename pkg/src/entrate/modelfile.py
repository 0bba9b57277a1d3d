"""Reading and writing JSON model files.

Every document has a ``kind``: ``iid``, ``markov`` and ``hmm`` all load as
hidden Markov sources, ``qrw`` as a quantum random walk, and
``linear_combination`` as a weighted sum of shifts of an embedded base
model (the form in which stationary means are saved).
"""

import json
from importlib import resources
from pathlib import Path

from .errors import InputError
from .models.hmm import HmmSource, hmm_from_dict, iid_from_dict, markov_from_dict
from .models.qrw import QrwSource, qrw_from_dict
from .source import CombinationSource

KINDS = ("iid", "markov", "hmm", "qrw", "linear_combination")


def source_from_dict(doc, origin=None):
    if not isinstance(doc, dict):
        raise InputError("a model document must be a JSON object")
    kind = doc.get("kind")
    desc = {"kind": kind}
    if origin is not None:
        desc["path"] = str(origin)
    if kind == "hmm":
        return HmmSource(hmm_from_dict(doc), desc)
    if kind == "iid":
        return HmmSource(iid_from_dict(doc), desc)
    if kind == "markov":
        return HmmSource(markov_from_dict(doc), desc)
    if kind == "qrw":
        return QrwSource(qrw_from_dict(doc), descriptor=desc)
    if kind == "linear_combination":
        try:
            base = source_from_dict(doc["base"])
            shifts, weights = doc["shifts"], doc["weights"]
        except KeyError as exc:
            raise InputError(f"linear_combination model is missing field {exc.args[0]!r}") from None
        if len(shifts) != len(weights):
            raise InputError("linear_combination needs one weight per shift")
        desc.update(shifts=list(shifts), base=base.descriptor)
        return CombinationSource([base.shifted(int(k)) for k in shifts], weights, desc)
    raise InputError(f"unknown model kind {kind!r}; expected one of {KINDS}")


def load_model(path):
    """Parse, validate and wrap the model file at ``path`` as a source.

    A bare file name that does not exist locally but matches a bundled
    model (see :func:`shipped_models`) loads the bundled copy.
    """
    path = Path(path)
    if not path.exists() and path.name == str(path) and path.name in shipped_models():
        path = shipped_model_path(path.name)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read model file {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    return source_from_dict(doc, path)


def save_model(doc, path):
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def shipped_model_path(name):
    """Path of a model file bundled with the package, e.g. ``circular_hmm.json``."""
    return Path(str(resources.files("entrate") / "data" / name))


def shipped_models():
    return sorted(p.name for p in Path(str(resources.files("entrate") / "data")).glob("*.json"))
