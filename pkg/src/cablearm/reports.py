"""CSV / JSON / SVG emitters used by the command line harness.

Floats are written with ``repr`` so parsing an emitted file gives back the
exact in-memory values.
"""
import contextlib
import csv
import io
import json
import sys

import numpy as np

SCHEMA_VERSION = 1


def _plain(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    if isinstance(value, list):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    return value


@contextlib.contextmanager
def _open_text(target):
    if target is None or target == "-":
        yield sys.stdout
    elif hasattr(target, "write"):
        yield target
    else:
        with open(target, "w", encoding="utf-8", newline="") as fh:
            yield fh


def dumps_json(doc):
    doc = _plain(dict(doc))
    doc.setdefault("schema_version", SCHEMA_VERSION)
    return json.dumps(doc, indent=2, allow_nan=False)


def write_json(doc, target=None):
    with _open_text(target) as fh:
        fh.write(dumps_json(doc))
        fh.write("\n")


def read_json(source):
    if hasattr(source, "read"):
        return json.load(source)
    with open(source, encoding="utf-8") as fh:
        return json.load(fh)


def write_csv(header, rows, target=None):
    with _open_text(target) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in _plain(list(row))])


def _cell(text):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def read_csv(source):
    """Return ``(header, rows)`` with numeric cells converted."""
    if isinstance(source, str) and "\n" in source:
        source = io.StringIO(source)
    if hasattr(source, "read"):
        reader = csv.reader(source)
        data = list(reader)
    else:
        with open(source, encoding="utf-8", newline="") as fh:
            data = list(csv.reader(fh))
    header, body = data[0], data[1:]
    return header, [tuple(_cell(c) for c in row) for row in body]


# --------------------------------------------------------------------------- #
# SVG


def _figure():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save_svg(fig, target):
    plt = _figure()
    buf = io.StringIO()
    fig.savefig(buf, format="svg")
    plt.close(fig)
    with _open_text(target) as fh:
        fh.write(buf.getvalue())


def svg_projections(points, target=None, title="", unit="m", groups=None):
    """XY / XZ / YZ scatter projections of a point cloud."""
    plt = _figure()
    pts = np.asarray(points, dtype=float)
    fig, axes = plt.subplots(1, 3, figsize=(12, 4))
    labels = [("x", 0, "y", 1), ("x", 0, "z", 2), ("y", 1, "z", 2)]
    for ax, (a, i, b, j) in zip(axes, labels):
        if groups is None:
            ax.scatter(pts[:, i], pts[:, j], s=2)
        else:
            for g in np.unique(groups):
                sel = groups == g
                ax.scatter(pts[sel, i], pts[sel, j], s=4, label=str(g))
        ax.set_xlabel(f"{a} [{unit}]")
        ax.set_ylabel(f"{b} [{unit}]")
        ax.set_aspect("equal", adjustable="datalim")
    if groups is not None:
        axes[-1].legend(fontsize="small")
    fig.suptitle(title)
    fig.tight_layout()
    _save_svg(fig, target)


def svg_speed(time, speed, target=None, title="Tool speed"):
    plt = _figure()
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(time, speed)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("speed [m/s]")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save_svg(fig, target)
