"""Text formats: matrices/vectors, key = value configs, commented CSV.

Floats are written with 17 significant digits so a write/read round trip
is lossless.  All files use Unix line endings.
"""
import numpy as np

__all__ = [
    "fmt",
    "write_matrix",
    "read_matrix",
    "write_vector",
    "read_vector",
    "read_config",
    "write_csv",
    "read_csv",
]


def fmt(v):
    """17-significant-digit float; ``''`` for None; ints, bools and strings as text."""
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_matrix(path, A):
    A = np.asarray(A, dtype=np.float64)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{A.shape[0]} {A.shape[1]}\n")
        for row in A:
            fh.write(" ".join(fmt(v) for v in row) + "\n")


def read_matrix(path):
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    try:
        m, n = (int(t) for t in lines[0].split())
        A = np.array([[float(t) for t in ln.split()] for ln in lines[1:]])
    except (ValueError, IndexError) as exc:
        raise ValueError(f"{path}: malformed matrix file ({exc})") from exc
    if A.shape != (m, n):
        raise ValueError(f"{path}: header says {m}x{n}, body is {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{path}: non-finite entries")
    return A


def write_vector(path, x):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{x.size}\n")
        fh.write(" ".join(fmt(v) for v in x) + "\n")


def read_vector(path):
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    try:
        n = int(lines[0].strip())
        x = np.array([float(t) for t in " ".join(lines[1:]).split()])
    except (ValueError, IndexError) as exc:
        raise ValueError(f"{path}: malformed vector file ({exc})") from exc
    if x.size != n:
        raise ValueError(f"{path}: header says {n} entries, body has {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{path}: non-finite entries")
    return x


def read_config(path):
    """Flat ``key = value`` lines; ``#`` starts a comment.  Values stay strings."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def write_csv(fh, header, rows, comments=()):
    """Write ``# comment`` lines, a header, then one line per row dict."""
    for c in comments:
        fh.write(f"# {c}\n")
    fh.write(",".join(header) + "\n")
    for row in rows:
        fh.write(",".join(fmt(row.get(h)) for h in header) + "\n")


def read_csv(path):
    """Rows as dicts of strings, skipping ``#`` comment lines."""
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    return [dict(zip(header, ln.split(","))) for ln in lines[1:]]
