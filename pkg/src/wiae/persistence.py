"""Model files: JSON with decimal weights at 17 significant digits.

Seventeen digits are enough for every binary64 value to survive a
text round trip, so ``load_model(save_model(m))`` is bit-exact.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .data import Standardizer
from .errors import IncompatibleVersionError, SchemaError
from .networks import FORMAT_VERSION, Mlp, MlpSpec, WiaeModel

MODEL_KIND = "wiae-model"


def _num(x: float) -> str:
    return format(float(x), ".17g")


def _array(a: np.ndarray) -> str:
    return "[" + ",".join(_num(v) for v in np.asarray(a).ravel()) + "]"


def _mlp_text(mlp: Mlp, indent: str) -> str:
    spec = mlp.spec
    head = json.dumps({
        "input_width": spec.input_width,
        "hidden_widths": list(spec.hidden_widths),
        "output_width": spec.output_width,
        "hidden_activation": spec.hidden_activation,
        "output_activation": spec.output_activation,
    }, sort_keys=True)
    layers = []
    for w, b in zip(mlp.weights, mlp.biases):
        layers.append(f'{indent}    {{"shape": [{w.shape[0]}, {w.shape[1]}], '
                      f'"weight": {_array(w)}, "bias": {_array(b)}}}')
    body = ",\n".join(layers)
    return f'{{"spec": {head},\n{indent}  "layers": [\n{body}\n{indent}  ]}}'


def model_text(model: WiaeModel, provenance: dict | None = None) -> str:
    """Serialize ``model``; ``provenance`` (e.g. a config hash) is stored verbatim."""
    parts = [
        f'  "kind": "{MODEL_KIND}"',
        f'  "format_version": {int(model.format_version)}',
        f'  "m": {int(model.m)}',
        f'  "standardizer": {{"mean": {_num(model.standardizer.mean)}, '
        f'"std": {_num(model.standardizer.std)}}}',
        f'  "provenance": {json.dumps(provenance or {}, sort_keys=True)}',
        f'  "encoder": {_mlp_text(model.encoder, "  ")}',
        f'  "decoder": {_mlp_text(model.decoder, "  ")}',
    ]
    return "{\n" + ",\n".join(parts) + "\n}\n"


def save_model(model: WiaeModel, path, provenance: dict | None = None) -> None:
    Path(path).write_text(model_text(model, provenance))


def _field(doc: dict, key: str, where: str, kind):
    if not isinstance(doc, dict) or key not in doc:
        raise SchemaError(f"{where}{key}", "missing")
    value = doc[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise SchemaError(f"{where}{key}", f"expected {kind.__name__}")
    return value


def _parse_mlp(doc: dict, where: str) -> Mlp:
    spec_doc = _field(doc, "spec", where, dict)
    try:
        spec = MlpSpec(_field(spec_doc, "input_width", f"{where}spec.", int),
                       tuple(_field(spec_doc, "hidden_widths", f"{where}spec.", list)),
                       _field(spec_doc, "output_width", f"{where}spec.", int),
                       _field(spec_doc, "hidden_activation", f"{where}spec.", str),
                       _field(spec_doc, "output_activation", f"{where}spec.", str))
    except (ValueError, TypeError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"{where}spec", str(exc)) from None
    layers = _field(doc, "layers", where, list)
    widths = spec.widths
    if len(layers) != len(widths) - 1:
        raise SchemaError(f"{where}layers", f"expected {len(widths) - 1} layers, got {len(layers)}")
    weights, biases = [], []
    for i, layer in enumerate(layers):
        at = f"{where}layers[{i}]."
        shape = tuple(_field(layer, "shape", at, list))
        if shape != (widths[i], widths[i + 1]):
            raise SchemaError(f"{at}shape", f"expected {[widths[i], widths[i + 1]]}, got {list(shape)}")
        try:
            w = np.array(_field(layer, "weight", at, list), dtype=np.float64)
            b = np.array(_field(layer, "bias", at, list), dtype=np.float64)
        except (TypeError, ValueError):
            raise SchemaError(f"{at}weight", "non-numeric entries") from None
        if w.size != shape[0] * shape[1]:
            raise SchemaError(f"{at}weight", f"expected {shape[0] * shape[1]} values, got {w.size}")
        if b.size != shape[1]:
            raise SchemaError(f"{at}bias", f"expected {shape[1]} values, got {b.size}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise SchemaError(f"{at}weight", "non-finite entries")
        weights.append(w.reshape(shape))
        biases.append(b)
    return Mlp(spec, tuple(weights), tuple(biases))


def parse_model(text: str) -> tuple[WiaeModel, dict]:
    """Parse model-file text; returns the model and its provenance."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("document", f"not valid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(doc, dict):
        raise SchemaError("document", "expected a JSON object")
    if _field(doc, "kind", "", str) != MODEL_KIND:
        raise SchemaError("kind", f"expected {MODEL_KIND!r}")
    version = _field(doc, "format_version", "", int)
    if version != FORMAT_VERSION:
        raise IncompatibleVersionError(
            "format_version", f"file has version {version}, this build reads {FORMAT_VERSION}")
    m = _field(doc, "m", "", int)
    std_doc = _field(doc, "standardizer", "", dict)
    mean = _field(std_doc, "mean", "standardizer.", float)
    std = _field(std_doc, "std", "standardizer.", float)
    if not std > 0:
        raise SchemaError("standardizer.std", "must be positive")
    encoder = _parse_mlp(_field(doc, "encoder", "", dict), "encoder.")
    decoder = _parse_mlp(_field(doc, "decoder", "", dict), "decoder.")
    provenance = doc.get("provenance", {})
    try:
        model = WiaeModel(encoder, decoder, m, Standardizer(mean, std), version)
    except ValueError as exc:
        raise SchemaError("m", str(exc)) from None
    return model, provenance


def load_model(path) -> WiaeModel:
    return parse_model(Path(path).read_text())[0]
