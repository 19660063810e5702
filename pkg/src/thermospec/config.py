"""System-definition files.

A system file is a list of ``key = value`` lines; ``#`` starts a comment.

    name = golden_mean
    alphabet = 2
    row = 1 1                  # one line per row of the transition matrix
    row = 1 0
    max_run = 0 12             # optional, repeatable: symbol and longest run
    coding = parabolic         # doubling | parabolic | linear 2 4 | mobius a b c d ; a b c d
    phi = indicator symbol=1
    psi = constant c=1         # default
    u = constant c=1           # default
    truncation_range = 8
    coarse_range = 1
    selfcheck = spectrum --kind birkhoff --alpha-steps 11
    selfcheck_tol = 1e-6

Potential values: ``constant c=``, ``indicator symbol=``, ``log_bernoulli
p=0.25,0.75``, ``table 0:0.5 1:-1`` (words as digit strings or comma
lists), ``pesin_zhang beta=``, ``log_derivative``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import hashlib
from pathlib import Path
import shlex

import numpy as np

from .coding import Branch, IntervalCoding, doubling_coding, linear_coding, parabolic_coding
from .errors import ConfigError, InputError, MissingCodingError
from .potentials import (
    TRUNCATION_RANGE,
    Potential,
    constant,
    geometric_potential,
    indicator,
    log_bernoulli,
    pesin_zhang_potential,
    table_potential,
)
from .shift import ShiftSpace

BUNDLED_DIR = Path(__file__).parent / "configs"
KEYS = {"name", "alphabet", "row", "max_run", "coding", "phi", "psi", "u", "truncation_range",
        "coarse_range", "selfcheck", "selfcheck_tol"}


@dataclass(frozen=True, eq=False)
class SystemConfig:
    name: str
    space: ShiftSpace
    coding: IntervalCoding | None
    phi: Potential
    psi: Potential
    u: Potential
    truncation_range: int = TRUNCATION_RANGE
    coarse_range: int = 1
    digest: str = ""
    path: str = ""
    selfcheck: tuple[str, ...] = ()
    selfcheck_tol: float = 1e-6
    raw: dict = field(default_factory=dict, repr=False)

    def require_coding(self) -> IntervalCoding:
        if self.coding is None:
            raise MissingCodingError(f"system {self.name!r} has no interval coding")
        return self.coding


def resolve_path(name: str) -> Path:
    """A file path, or the name of a bundled config (with or without ``.cfg``)."""
    p = Path(name)
    if p.exists():
        return p
    for cand in (BUNDLED_DIR / name, BUNDLED_DIR / f"{name}.cfg"):
        if cand.exists():
            return cand
    raise InputError(f"system file {name!r} not found (bundled: {', '.join(bundled_names())})")


def bundled_names() -> list[str]:
    return sorted(p.stem for p in BUNDLED_DIR.glob("*.cfg"))


def load_system(name: str) -> SystemConfig:
    path = resolve_path(name)
    data = path.read_bytes()
    cfg = parse_system(data.decode("utf-8"), source=str(path))
    return SystemConfig(**{**cfg.__dict__, "digest": hashlib.sha256(data).hexdigest(), "path": str(path)})


def _lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"unknown key (expected one of {sorted(KEYS)})", line=lineno, field=key)
        yield lineno, key, value


def _int(value, lineno, key) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"expected an integer, got {value!r}", line=lineno, field=key) from None


def _float(value, lineno, key) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"expected a number, got {value!r}", line=lineno, field=key) from None


def parse_coding(value: str) -> IntervalCoding:
    parts = value.split(None, 1)
    kind = parts[0]
    rest = parts[1] if len(parts) > 1 else ""
    if kind == "doubling":
        return doubling_coding()
    if kind == "parabolic":
        return parabolic_coding()
    if kind == "linear":
        slopes = [float(s) for s in rest.split()]
        return linear_coding(slopes)
    if kind in ("mobius", "affine", "power"):
        branches = []
        for chunk in rest.split(";"):
            params = tuple(float(s) for s in chunk.split())
            branches.append(Branch(kind, params))
        return IntervalCoding(tuple(branches), tiling=False, name=f"{kind}-coding")
    raise InputError(f"unknown coding {kind!r}")


def _kwargs(tokens):
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise InputError(f"expected name=value, got {tok!r}")
        k, v = tok.split("=", 1)
        out[k] = v
    return out


def parse_potential(value: str, space: ShiftSpace, coding: IntervalCoding | None) -> Potential:
    tokens = value.split()
    if not tokens:
        raise InputError("empty potential")
    kind, args = tokens[0], tokens[1:]
    if kind == "table":
        table = {}
        for tok in args:
            if ":" not in tok:
                raise InputError(f"table entries are word:value, got {tok!r}")
            w, v = tok.rsplit(":", 1)
            word = tuple(int(s) for s in (w.split(",") if "," in w else w))
            table[word] = float(v)
        return table_potential(space, table, name="table")
    kw = _kwargs(args)
    if kind == "constant":
        return constant(space, float(kw.get("c", 0.0)))
    if kind == "indicator":
        return indicator(space, int(kw.get("symbol", 1)))
    if kind == "log_bernoulli":
        if "p" not in kw:
            raise InputError("log_bernoulli needs p=p0,p1,...")
        return log_bernoulli(space, [float(s) for s in kw["p"].split(",")])
    if kind == "pesin_zhang":
        pot = pesin_zhang_potential(float(kw.get("beta", 0.5)), coding if coding else None)
        _check_coding_space(pot, space)
        return pot
    if kind == "log_derivative":
        if coding is None:
            raise MissingCodingError("log_derivative needs a coding")
        pot = geometric_potential(coding)
        _check_coding_space(pot, space)
        return pot
    raise InputError(f"unknown potential {kind!r}")


def _check_coding_space(pot: Potential, space: ShiftSpace):
    if pot.space.transition != space.transition:
        raise InputError("the coding's full shift does not match the declared transition matrix")


def parse_system(text: str, source: str = "<string>") -> SystemConfig:
    entries: dict[str, list[tuple[int, str]]] = {}
    for lineno, key, value in _lines(text):
        entries.setdefault(key, []).append((lineno, value))
    for key, vals in entries.items():
        if key not in ("row", "max_run") and len(vals) > 1:
            raise ConfigError("repeated key", line=vals[1][0], field=key)

    def one(key, default=None):
        return entries[key][0] if key in entries else (None, default)

    coding = None
    if "coding" in entries:
        lineno, value = entries["coding"][0]
        try:
            coding = parse_coding(value)
        except (InputError, ValueError) as exc:
            raise ConfigError(str(exc), line=lineno, field="coding") from None

    rows = entries.get("row", [])
    if rows:
        try:
            A = np.array([[int(s) for s in v.split()] for _, v in rows])
        except ValueError:
            raise ConfigError("matrix rows hold 0/1 entries", line=rows[0][0], field="row") from None
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ConfigError("transition rows must form a square matrix", line=rows[-1][0], field="row")
        if not np.isin(A, (0, 1)).all():
            raise ConfigError("matrix rows hold 0/1 entries", line=rows[0][0], field="row")
        d = A.shape[0]
    else:
        lineno, value = one("alphabet")
        if value is None:
            if coding is None:
                raise ConfigError("give 'alphabet', 'row' lines or a 'coding'", field="alphabet")
            d = coding.branch_count
        else:
            d = _int(value, lineno, "alphabet")
        A = np.ones((d, d), dtype=int)
    if "alphabet" in entries and rows:
        lineno, value = entries["alphabet"][0]
        if _int(value, lineno, "alphabet") != A.shape[0]:
            raise ConfigError("alphabet size disagrees with the matrix", line=lineno, field="alphabet")
    if coding is not None and coding.branch_count != A.shape[0]:
        raise ConfigError("coding branch count disagrees with the alphabet", line=entries["coding"][0][0],
                          field="coding")
    runs = []
    for lineno, value in entries.get("max_run", []):
        parts = value.split()
        if len(parts) != 2:
            raise ConfigError("max_run takes 'symbol n'", line=lineno, field="max_run")
        runs.append((_int(parts[0], lineno, "max_run"), _int(parts[1], lineno, "max_run")))
    _, name = one("name", Path(source).stem)
    try:
        space = ShiftSpace.from_matrix(A, max_run=runs or None, name=name)
    except InputError as exc:
        line = (rows[0][0] if rows else None)
        raise ConfigError(str(exc), line=line, field="row") from None
    base = space.base

    pots = {}
    for key, default in (("phi", None), ("psi", "constant c=1"), ("u", "constant c=1")):
        lineno, value = one(key, default)
        if value is None:
            raise ConfigError("missing potential", field=key)
        try:
            pots[key] = parse_potential(value, base, coding)
        except InputError as exc:
            raise ConfigError(str(exc), line=lineno, field=key) from None
    lineno, value = one("truncation_range", str(TRUNCATION_RANGE))
    trange = _int(value, lineno, "truncation_range")
    lineno, value = one("coarse_range", "1")
    crange = _int(value, lineno, "coarse_range")
    for key, v in (("truncation_range", trange), ("coarse_range", crange)):
        if v < 1:
            raise ConfigError("must be >= 1", line=entries.get(key, [(None, "")])[0][0], field=key)
    _, check = one("selfcheck", "")
    lineno, tol = one("selfcheck_tol", "1e-6")
    raw = {k: [v for _, v in vals] for k, vals in entries.items()}
    return SystemConfig(name, space, coding, pots["phi"], pots["psi"], pots["u"], trange, crange,
                        selfcheck=tuple(shlex.split(check)), selfcheck_tol=_float(tol, lineno, "selfcheck_tol"),
                        raw=raw, path=source)
