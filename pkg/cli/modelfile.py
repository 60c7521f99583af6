"""
Model files: versioned UTF-8 ``key=value`` text.

    mrtime-model v1
    app=wordcount
    params=mappers,reducers
    degree=3
    coefficients=a0,a11,a12,a13,a21,a22,a23
    trained_from=runs.csv
    trained_at=2024-05-01T10:00:00+00:00
    m=20

A synthetic truth file is a model file with two more keys, ``noise_sigma``
and ``seed``. Coefficients are written with ``repr`` so they read back
bit-identical.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from mrtime.errors import IoError, ParseError
from mrtime.regression import TimeModel
from mrtime.workloads import SyntheticTruth

FORMAT_HEADER = "mrtime-model v1"

REQUIRED_KEYS = ("app", "params", "degree", "coefficients")
PROVENANCE_KEYS = ("trained_from", "trained_at", "m")
TRUTH_KEYS = ("noise_sigma", "seed")


@dataclass(frozen=True)
class Provenance:
    trained_from: str | None = None
    trained_at: str | None = None
    m: int | None = None


@dataclass(frozen=True)
class ModelFile:
    model: TimeModel
    provenance: Provenance | None = None


def format_model(model_file: ModelFile, extra: dict | None = None) -> str:
    model = model_file.model
    lines = [
        FORMAT_HEADER,
        f"app={model.app}",
        "params={}".format(",".join(model.parameter_names)),
        f"degree={model.degree}",
        "coefficients={}".format(",".join(repr(c) for c in model.coefficients)),
    ]
    provenance = model_file.provenance
    if provenance is not None:
        if provenance.trained_from is not None:
            lines.append(f"trained_from={provenance.trained_from}")
        if provenance.trained_at is not None:
            lines.append(f"trained_at={provenance.trained_at}")
        if provenance.m is not None:
            lines.append(f"m={provenance.m}")
    for key, value in (extra or {}).items():
        lines.append(f"{key}={value}")
    return "".join(line + "\n" for line in lines)


def save_model(model_file: ModelFile, path, extra: dict | None = None) -> None:
    path = Path(path)
    try:
        path.write_text(format_model(model_file, extra), encoding="utf-8", newline="\n")
    except OSError as err:
        raise IoError(path, err.strerror or str(err)) from err


def _read_entries(path: Path, allowed: tuple[str, ...]) -> dict[str, tuple[int, str]]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise IoError(path, err.strerror or str(err)) from err
    except UnicodeDecodeError as err:
        raise ParseError(path, 1, f"not UTF-8 text ({err.reason})") from err

    lines = text.split("\n")
    if lines[0].rstrip("\r") != FORMAT_HEADER:
        raise ParseError(path, 1, f"expected '{FORMAT_HEADER}'")

    entries = dict()
    for number, line in enumerate(lines[1:], start=2):
        line = line.rstrip("\r")
        if not line.strip() or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ParseError(path, number, f"expected key=value, got {line!r}")
        if key not in allowed:
            raise ParseError(path, number, f"unknown key '{key}'")
        if key in entries:
            raise ParseError(path, number, f"duplicate key '{key}'")
        entries[key] = (number, value.strip())

    for key in REQUIRED_KEYS:
        if key not in entries:
            raise ParseError(path, len(lines), f"missing key '{key}'")
    return entries


def _convert(path, entries, key, convert, what):
    number, text = entries[key]
    try:
        return convert(text)
    except ValueError:
        raise ParseError(path, number, f"{key} is not {what}: {text!r}") from None


def _parse_model(path: Path, entries) -> ModelFile:
    names = tuple(name.strip() for name in entries["params"][1].split(",") if name.strip())
    degree = _convert(path, entries, "degree", int, "an integer")
    coefficients = _convert(
        path,
        entries,
        "coefficients",
        lambda text: tuple(float(c) for c in text.split(",")),
        "a comma list of numbers",
    )
    try:
        model = TimeModel(
            app=entries["app"][1],
            parameter_names=names,
            degree=degree,
            coefficients=coefficients,
        )
    except ValueError as err:
        raise ParseError(path, entries["coefficients"][0], str(err)) from None

    provenance = None
    if any(key in entries for key in PROVENANCE_KEYS):
        provenance = Provenance(
            trained_from=entries["trained_from"][1] if "trained_from" in entries else None,
            trained_at=entries["trained_at"][1] if "trained_at" in entries else None,
            m=_convert(path, entries, "m", int, "an integer") if "m" in entries else None,
        )
    return ModelFile(model=model, provenance=provenance)


def load_model(path) -> ModelFile:
    path = Path(path)
    entries = _read_entries(path, REQUIRED_KEYS + PROVENANCE_KEYS)
    return _parse_model(path, entries)


def load_truth(path, noise_sigma: float | None = None, seed: int | None = None) -> SyntheticTruth:
    """
    Reads a synthetic truth file. ``noise_sigma`` and ``seed`` override the
    file's values when given; both default to 0 when absent everywhere.
    """
    path = Path(path)
    entries = _read_entries(path, REQUIRED_KEYS + PROVENANCE_KEYS + TRUTH_KEYS)
    model = _parse_model(path, entries).model

    if noise_sigma is None:
        noise_sigma = (
            _convert(path, entries, "noise_sigma", float, "a number")
            if "noise_sigma" in entries
            else 0.0
        )
    if seed is None:
        seed = _convert(path, entries, "seed", int, "an integer") if "seed" in entries else 0
    return SyntheticTruth(model=model, noise_sigma=noise_sigma, seed=seed)
