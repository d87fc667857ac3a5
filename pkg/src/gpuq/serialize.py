"""File formats: dataset CSV, kernel JSON, report JSON/CSV emission.

All floats are written with 17 significant digits so emitted files are
byte-stable across runs and parse back to the exact in-memory values.
"""

import numpy as np

from .gp import Dataset
from .kernels import KernelSpec


def _fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if np.isnan(x):
        return "NaN"
    if np.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def dumps_json(obj, indent=0):
    """Serialize nested dict/list/scalars with fixed float formatting.

    Dict insertion order is preserved, so emitting the same report twice
    yields identical bytes.
    """
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  "{k}": {dumps_json(v, indent + 2)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(np.asarray(obj).tolist()) if isinstance(obj, np.ndarray) else list(obj)
        return "[" + ", ".join(dumps_json(v) for v in seq) + "]"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        escaped = obj.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    return _fmt(obj)


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_json(obj))
        fh.write("\n")


def write_csv(path, header, rows):
    """Write a CSV with '.'-decimal 17-significant-digit floats."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def save_dataset_csv(path, dataset):
    """Dataset interchange CSV: header x1,...,xd,y; row order preserved."""
    header = [f"x{i + 1}" for i in range(dataset.d)] + ["y"]
    rows = [list(dataset.inputs[i]) + [dataset.responses[i]] for i in range(dataset.m)]
    write_csv(path, header, rows)


def load_dataset_csv(path):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header[-1] != "y" or not all(h == f"x{i + 1}" for i, h in enumerate(header[:-1])):
            raise ValueError("dataset CSV must have header x1,...,xd,y")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        raise ValueError("dataset CSV has no rows")
    return Dataset(data[:, :-1], data[:, -1])


def save_kernel_json(path, spec):
    write_json(path, spec.to_dict())


def load_kernel_json(path):
    import json

    with open(path, "r", encoding="utf-8") as fh:
        return KernelSpec.from_dict(json.load(fh))
