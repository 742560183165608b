"""INI experiment configuration.

Sections (all optional except where noted)::

    [experiment]            dataset, models, n, seeds, seed_base, washout, mu,
                            bias, washout_fit, replay, train_len, test_len,
                            grid, grid_seeds, validation_len, jobs
    [dataset]               generator parameters, e.g. t_h, tau, order
    [model]                 model parameters; keys that do not apply to a
                            model kind are skipped for that kind
    [model.KIND]            parameters for one kind (ESN or a variant label)
    [model.KIND n=400 t_h=80]
                            applied only at matching n / t_h; more qualifiers
                            win over fewer
    [pretrain]              RNG pre-training schedule
    [grid], [grid.KIND]     comma-separated candidate values per key
    [sweep]                 kind (units, horizon, lambda), values, regimes
    [overrides]             written by the CLI from command-line flags and
                            applied last

Values are parsed as int, float or bool (true/false/on/off) when possible,
otherwise kept as strings; ``models``, ``values`` and grid entries are
comma-separated lists, ``models = all`` selects ESN and every variant.
"""

from __future__ import annotations

import configparser
import io
import re

from rngrc.evaluation import (ESN, ESN_KEYS, PRETRAIN_KEYS, RNG_KEYS, DatasetSpec,
                              ExperimentSpec, ModelSpec)
from rngrc.rng import RngVariant


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


ALL_MODELS = (ESN,) + tuple(v.label for v in RngVariant)
_TOP_KEYS = ("mu", "bias")
_EXPERIMENT_INT = ("n", "seeds", "seed_base", "washout", "replay", "train_len", "test_len",
                   "grid_seeds", "validation_len", "jobs")
_OVERRIDE_KEYS = ("seeds", "seed_base", "n", "t_h", "models", "lambda_i", "lambda_f",
                  "grid", "jobs", "values")
_QUALIFIER = re.compile(r"^(?P<key>n|t_h)=(?P<value>-?\d+)$")


def parse_value(text):
    t = text.strip()
    low = t.lower()
    if low in ("true", "on", "yes"):
        return True
    if low in ("false", "off", "no"):
        return False
    for conv in (int, float):
        try:
            return conv(t)
        except ValueError:
            pass
    return t


def parse_list(text):
    return [parse_value(part) for part in str(text).split(",") if part.strip()]


def new_config():
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    cp.optionxform = str
    return cp


def load_config(path=None, text=None):
    """Read an INI file (or text); a missing file is a :class:`ConfigError`."""
    cp = new_config()
    try:
        if path is not None:
            with open(path, encoding="utf-8") as fh:
                cp.read_file(fh, source=str(path))
        if text is not None:
            cp.read_string(text)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    for name in cp.sections():
        _split_section(name)
    return cp


def apply_overrides(cp, **flags):
    """Record non-``None`` flag values in ``[overrides]``."""
    given = {k: v for k, v in flags.items() if v is not None}
    unknown = set(given) - set(_OVERRIDE_KEYS)
    if unknown:
        raise ConfigError(f"unknown override {sorted(unknown)}")
    if given and not cp.has_section("overrides"):
        cp.add_section("overrides")
    for k, v in given.items():
        if isinstance(v, (list, tuple)):
            v = ", ".join(str(x) for x in v)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        cp.set("overrides", k, str(v))
    return cp


def echo(cp):
    """Effective configuration as INI text."""
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def _section(cp, name):
    return {k: parse_value(v) for k, v in cp.items(name)} if cp.has_section(name) else {}


def _override(cp, key, default=None):
    if cp.has_option("overrides", key):
        return parse_value(cp.get("overrides", key))
    return default


def _split_section(name):
    """``"model.ESN n=10"`` -> ("model", "ESN", {"n": 10}); ``None`` for other sections."""
    head, *quals = name.split()
    base, _, kind = head.partition(".")
    if base not in ("model", "grid"):
        if quals:
            raise ConfigError(f"section [{name}] takes no qualifiers")
        return None
    cond = {}
    for q in quals:
        m = _QUALIFIER.match(q)
        if not m:
            raise ConfigError(f"bad qualifier {q!r} in section [{name}]; use n=INT or t_h=INT")
        cond[m["key"]] = int(m["value"])
    if kind:
        kind = _canonical_kind(kind)
    return base, kind or None, cond


def _canonical_kind(kind):
    if kind.upper() == ESN:
        return ESN
    try:
        return RngVariant.parse(kind).label
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def experiment_options(cp):
    opts = _section(cp, "experiment")
    for key in ("seeds", "seed_base", "n", "jobs", "grid"):
        opts[key] = _override(cp, key, opts.get(key))
    return {k: v for k, v in opts.items() if v is not None}


def models(cp):
    raw = _override(cp, "models", _section(cp, "experiment").get("models", ESN))
    names = parse_list(raw) if isinstance(raw, str) else [raw]
    if [str(n).lower() for n in names] == ["all"]:
        return list(ALL_MODELS)
    out = [_canonical_kind(str(n)) for n in names]
    if not out:
        raise ConfigError("no models selected")
    return out


def dataset_name(cp):
    name = _section(cp, "experiment").get("dataset")
    if not name:
        raise ConfigError("[experiment] dataset is required")
    return str(name)


def _applicable(kind, key):
    if key in _TOP_KEYS:
        return True
    if kind == ESN:
        return key in ESN_KEYS
    return key in RNG_KEYS or key in PRETRAIN_KEYS


def _layered(cp, base, kind, n, t_h):
    """Merge ``[base]`` then matching ``[base.KIND ...]`` sections by specificity."""
    point = {"n": n, "t_h": t_h}
    layers = []
    for name in cp.sections():
        parsed = _split_section(name)
        if parsed is None or parsed[0] != base:
            continue
        _, skind, cond = parsed
        if skind not in (None, kind):
            continue
        if any(point.get(k) != v for k, v in cond.items()):
            continue
        layers.append(((skind is not None) + len(cond), name, skind))
    merged = {}
    for _, name, skind in sorted(layers, key=lambda x: x[0]):
        for key, raw in cp.items(name):
            if skind is None and not _applicable(kind, key):
                continue
            if skind is not None and not _applicable(kind, key):
                raise ConfigError(f"key {key!r} in [{name}] does not apply to {kind}")
            merged[key] = parse_list(raw) if base == "grid" else parse_value(raw)
    return merged


def experiment_spec(cp, kind, n=None, t_h=None):
    """Fully resolved :class:`ExperimentSpec` for one model at one sweep point."""
    opts = experiment_options(cp)
    for key in _EXPERIMENT_INT:
        if key in opts and not isinstance(opts[key], int):
            raise ConfigError(f"[experiment] {key} must be an integer")
    n = int(opts.get("n", 100) if n is None else n)
    ds_params = _section(cp, "dataset")
    th_flag = _override(cp, "t_h")
    if t_h is None and th_flag is not None:
        t_h = th_flag
    if t_h is not None:
        ds_params["t_h"] = int(t_h)
    name = dataset_name(cp)
    if name == "narma":
        ds_params.pop("t_h", None)
    dataset = DatasetSpec(name, int(opts.get("train_len", 10000)),
                          int(opts.get("test_len", 2000)), ds_params)
    t_h = dataset.t_h

    layered = _layered(cp, "model", kind, n, t_h)
    params, pretrain, top = {}, {}, {}
    if kind != ESN:
        pretrain.update(_section(cp, "pretrain"))
    for key, value in layered.items():
        if key in _TOP_KEYS:
            top[key] = value
        elif key in PRETRAIN_KEYS:
            pretrain[key] = value
        else:
            params[key] = value
    if kind != ESN:
        for key in ("lambda_i", "lambda_f"):
            flag = _override(cp, key)
            if flag is not None:
                pretrain[key] = float(flag)
        unknown = set(pretrain) - set(PRETRAIN_KEYS)
        if unknown:
            raise ConfigError(f"unknown [pretrain] keys {sorted(unknown)}")

    grid = {}
    if opts.get("grid", False):
        grid = _layered(cp, "grid", kind, n, t_h)
        if not grid:
            raise ConfigError(f"grid search requested but no grid applies to {kind}")

    count = int(opts.get("seeds", 50))
    if count < 1:
        raise ConfigError("seeds must be at least 1")
    base = int(opts.get("seed_base", 0))
    extra = {k: opts[k] for k in ("washout", "replay", "grid_seeds", "validation_len")
             if k in opts}
    for k in ("washout_fit", "bias"):
        if k in opts:
            extra[k] = bool(opts[k])
    if "mu" in opts:
        extra["mu"] = float(opts["mu"])
    extra.update(top)
    try:
        return ExperimentSpec(dataset=dataset, model=ModelSpec(kind, params, pretrain), n=n,
                              seeds=tuple(range(base, base + count)), grid=grid, **extra)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def sweep_options(cp):
    """``(kind, values, regimes)`` from ``[sweep]`` and the overrides."""
    opts = _section(cp, "sweep")
    kind = opts.get("kind")
    values = _override(cp, "values", opts.get("values"))
    values = parse_list(values) if isinstance(values, str) else (
        [] if values is None else [values])
    regimes = []
    for part in str(opts.get("regimes", "50:0.01, 1:1, 0:0")).split(","):
        try:
            lam_i, lam_f = (float(x) for x in part.split(":"))
        except ValueError:
            raise ConfigError(f"bad lambda regime {part.strip()!r}; use LI:LF") from None
        regimes.append((lam_i, lam_f))
    return kind, values, regimes
