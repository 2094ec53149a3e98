"""Batch experiment runner.

    pse-tomo run config.json [--out DIR] [--format json|csv] [--seed S]

The config is one JSON document, validated against ``CONFIG_SCHEMA`` before
anything is computed.  Complex matrices are nested ``[re, im]`` pairs.  The
run writes ``report.json`` (and ``table.csv`` with ``--format csv``) into the
output directory, which is chosen by ``--out``, then ``$PSE_TOMO_OUT``, then
the config's ``output.dir``, then the working directory.

Exit codes: 0 success, 2 unreadable or invalid config, 3 precondition
violation, 4 numerical failure.  Failures print a JSON error object on
stderr and leave no output files behind.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, mzi, noise, tomography, values
from .errors import NumericalError, TomographyError
from .framework import amplitude_damping_dilation, dilation_from_kraus, kraus_from_dilation, uniform_env_state
from .qmath import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    check_normalized,
    hadamard_like,
    random_density,
    random_dilation,
    random_hermitian,
    random_ket,
    random_unitary,
)

ENV_OUT = "PSE_TOMO_OUT"
SIG_DIGITS = 12
CSV_HEADER = ["method", "d_s", "d_e", "theta", "n", "trials", "analytic_error", "empirical_error", "ratio"]
COMMANDS = [
    "characterize-kraus",
    "characterize-density",
    "characterize-unitary",
    "characterize-observable",
    "weak-value",
    "modular-value",
    "noise-sweep",
    "mzi-demo",
]

EXIT_OK, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_NUMERICAL = 0, 2, 3, 4

# ----------------------------------------------------------------------------
# schema

_COMPLEX = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_VECTOR = {"type": "array", "items": _COMPLEX, "minItems": 1}
_MATRIX = {"type": "array", "items": _VECTOR, "minItems": 1}


def _preset(names: list[str], extra: dict | None = None) -> dict:
    props = {"preset": {"enum": names}, "seed": {"type": "integer"}}
    props.update(extra or {})
    return {
        "oneOf": [
            {"enum": names},
            {"type": "object", "properties": props, "required": ["preset"], "additionalProperties": False},
            {"type": "object", "properties": {"matrix": _MATRIX}, "required": ["matrix"], "additionalProperties": False},
        ]
    }


_KET = {
    "oneOf": [
        {"enum": ["random", "zero", "uniform"]},
        {"type": "object", "properties": {"preset": {"enum": ["random"]}, "seed": {"type": "integer"}},
         "required": ["preset"], "additionalProperties": False},
        {"type": "object", "properties": {"ket": _VECTOR}, "required": ["ket"], "additionalProperties": False},
    ]
}
_GRID = {
    "oneOf": [
        {"type": "array", "items": {"type": "number"}},
        {"type": "object",
         "properties": {"start": {"type": "number"}, "stop": {"type": "number"},
                        "num": {"type": "integer", "minimum": 0}},
         "required": ["start", "stop", "num"], "additionalProperties": False},
    ]
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "command": {"enum": COMMANDS},
        "d_s": {"type": "integer", "minimum": 1},
        "d_e": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "hidden": {"type": "boolean"},
        "channel": _preset(["identity", "amplitude-damping", "random", "xx-coupling"],
                           {"gamma": {"type": "number"}, "phi": {"type": "number"}}),
        "env_state": _KET,
        "state": _preset(["maximally-mixed", "random"]),
        "unitary": _preset(["identity", "hadamard", "random"]),
        "observable": _preset(["pauli-x", "pauli-y", "pauli-z", "random"]),
        "pre_state": _KET,
        "post_state": _KET,
        "scheme": {"enum": ["hadamard", "paulix", "both"]},
        "scenario": {"enum": ["projector", "weak_value"]},
        "method": {"enum": ["first_order", "second_order", "exact_spectral"]},
        "methods": {"type": "array", "items": {"enum": list(noise.METHODS)}},
        "eigenvalues": {"type": "array", "items": {"type": "number"}},
        "theta": {"type": "number"},
        "thetas": _GRID,
        "n": {"type": "integer", "minimum": 1},
        "trials": {"type": "integer", "minimum": 0},
        "trace_e": {"type": "number", "exclusiveMinimum": 0},
        "project": {"type": "boolean"},
        "mzi": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["kraus", "density"]},
                "alpha": {"type": "number"},
                "delta": {"type": "number"},
                "u_s": _preset(["identity", "hadamard", "pauli-x"]),
                "coupling": _preset(["identity", "amplitude-damping", "random", "xx-coupling"],
                                    {"gamma": {"type": "number"}, "phi": {"type": "number"}}),
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {"dir": {"type": "string"}, "format": {"enum": ["json", "csv"]}},
            "additionalProperties": False,
        },
    },
    "required": ["command"],
    "additionalProperties": False,
}


class ConfigError(Exception):
    """Unreadable or schema-invalid configuration."""

    def __init__(self, message: str, **params):
        super().__init__(message)
        self.params = params

    def to_dict(self) -> dict:
        return {"error": "ConfigError", "message": str(self), "params": self.params}


def load_config(path: str | os.PathLike) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            cfg = json.load(f)
    except OSError as e:
        raise ConfigError("cannot read config", path=str(path), reason=e.strerror) from e
    except json.JSONDecodeError as e:
        raise ConfigError("config is not valid JSON", path=str(path), line=e.lineno, column=e.colno) from e
    validate_config(cfg)
    return cfg


def validate_config(cfg) -> None:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        raise ConfigError("config does not match the schema", path="/".join(map(str, e.absolute_path)),
                          reason=e.message) from e


# ----------------------------------------------------------------------------
# specifiers


def parse_matrix(rows) -> np.ndarray:
    try:
        a = np.asarray(rows, dtype=float)
    except ValueError as e:
        raise ConfigError("matrix rows have unequal lengths") from e
    if a.ndim != 3 or a.shape[2] != 2:
        raise ConfigError("matrix must be rows of [re, im] pairs", shape=list(a.shape))
    return a[..., 0] + 1j * a[..., 1]


def parse_vector(items) -> np.ndarray:
    a = np.asarray(items, dtype=float)  # the schema fixes the [re, im] shape
    return a[:, 0] + 1j * a[:, 1]


def encode(z) -> list:
    """Complex array -> nested [re, im] pairs (the inverse of parse_matrix)."""
    z = np.asarray(z, dtype=complex)
    return np.stack([z.real, z.imag], axis=-1).tolist()


def _spec(spec) -> tuple[str, dict]:
    if isinstance(spec, str):
        return spec, {}
    if "matrix" in spec:
        return "matrix", spec
    return spec["preset"], spec


def _sub_rng(cfg_seed: int, spec: dict, salt: int) -> np.random.Generator:
    s = spec.get("seed")
    return np.random.default_rng(s if s is not None else [cfg_seed, salt])


def build_channel(spec, d_s: int, d_e: int, seed: int, xi=None) -> np.ndarray:
    """Dilation for a channel specifier.

    The damping preset is the standard dilation driven from |0_E>; when a
    different environment state ``xi`` is given it is re-expressed so that
    <k|U_SE|xi> still gives the damping Kraus pair (with xi = |0_E> the
    k = 1 branch could not be read out).
    """
    name, opts = _spec(spec)
    if name == "matrix":
        return parse_matrix(opts["matrix"])
    if name == "identity":
        return np.eye(d_s * d_e, dtype=complex)
    if name == "random":
        return random_dilation(d_s, d_e, _sub_rng(seed, opts, 1))
    if d_s != 2 or d_e != 2:
        raise TomographyError(f"{name} preset acts on a qubit and a qubit environment", d_s=d_s, d_e=d_e)
    if name == "amplitude-damping":
        u = amplitude_damping_dilation(float(opts.get("gamma", 0.3)))
        if xi is None:
            return u
        return dilation_from_kraus(kraus_from_dilation(u, np.array([1, 0])), xi)
    return mzi.xx_coupling(float(opts.get("phi", np.pi / 8)))


def build_state(spec, d: int, seed: int) -> np.ndarray:
    name, opts = _spec(spec)
    if name == "matrix":
        return parse_matrix(opts["matrix"])
    if name == "maximally-mixed":
        return np.eye(d, dtype=complex) / d
    return random_density(d, _sub_rng(seed, opts, 2))


def build_unitary(spec, d: int, seed: int) -> np.ndarray:
    name, opts = _spec(spec)
    if name == "matrix":
        return parse_matrix(opts["matrix"])
    if name == "identity":
        return np.eye(d, dtype=complex)
    if name in ("hadamard",):
        return hadamard_like(d)
    if name == "pauli-x":
        return SIGMA_X.copy()
    return random_unitary(d, _sub_rng(seed, opts, 3))


def build_observable(spec, d: int, seed: int) -> np.ndarray:
    name, opts = _spec(spec)
    if name == "matrix":
        return parse_matrix(opts["matrix"])
    paulis = {"pauli-x": SIGMA_X, "pauli-y": SIGMA_Y, "pauli-z": SIGMA_Z}
    if name in paulis:
        if d != 2:
            raise TomographyError(f"{name} preset needs d_s = 2", d_s=d)
        return paulis[name].copy()
    return random_hermitian(d, _sub_rng(seed, opts, 4))


def build_ket(spec, d: int, seed: int, salt: int) -> np.ndarray:
    name, opts = _spec(spec) if not (isinstance(spec, dict) and "ket" in spec) else ("ket", spec)
    if name == "ket":
        return check_normalized(parse_vector(opts["ket"]), "ket")
    if name == "zero":
        return np.eye(d, dtype=complex)[0]
    if name == "uniform":
        return np.ones(d, dtype=complex) / np.sqrt(d)
    return random_ket(d, _sub_rng(seed, opts, salt))


def theta_grid(spec, default) -> np.ndarray:
    if spec is None:
        return np.asarray(default, dtype=float)
    if isinstance(spec, dict):
        return np.linspace(spec["start"], spec["stop"], spec["num"])
    return np.asarray(spec, dtype=float)


# ----------------------------------------------------------------------------
# commands


def _residual(est, truth) -> float:
    return float(np.max(np.abs(np.asarray(est) - np.asarray(truth)), initial=0.0))


def cmd_characterize_kraus(cfg, seed):
    d_s, d_e = cfg.get("d_s", 2), cfg.get("d_e", 2)
    xi = build_ket(cfg["env_state"], d_e, seed, 5) if "env_state" in cfg else uniform_env_state(d_e)
    u_se = build_channel(cfg.get("channel", "random"), d_s, d_e, seed, xi)
    scheme = cfg.get("scheme", "both")
    names = ["hadamard", "paulix"] if scheme == "both" else [scheme]
    out: dict = {"d_s": d_s, "d_e": d_e, "schemes": {}}
    truth = kraus_from_dilation(u_se, xi)
    for name in names:
        fn = tomography.reconstruct_kraus_hadamard if name == "hadamard" else tomography.reconstruct_kraus_paulix
        recs = fn(None, u_se, xi)
        mats = np.array([r.matrix for r in recs])
        entry = {"kraus": encode(mats), "povm": encode([tomography.povm_from_kraus(m) for m in mats])}
        if not cfg.get("hidden"):
            entry["residual"] = _residual(mats, truth)
            entry["completeness_residual"] = _residual(np.einsum("kji,kjl->il", mats.conj(), mats), np.eye(d_s))
        out["schemes"][name] = entry
    if not cfg.get("hidden"):
        out["truth"] = encode(truth)
        out["residual"] = max(e["residual"] for e in out["schemes"].values())
    return out, None


def cmd_characterize_density(cfg, seed):
    d = cfg.get("d_s", 2)
    rho = build_state(cfg.get("state", "random"), d, seed)
    rec = tomography.reconstruct_density(rho, project=cfg.get("project", False))
    out = {"d_s": d, "matrix": encode(rec.matrix), "gates_used": rec.gates_used}
    if rec.projected is not None:
        out["projected"] = encode(rec.projected)
    if not cfg.get("hidden"):
        out["truth"] = encode(rho)
        out["residual"] = _residual(rec.matrix, rho)
    return out, None


def cmd_characterize_unitary(cfg, seed):
    d = cfg.get("d_s", 2)
    u = build_unitary(cfg.get("unitary", "random"), d, seed)
    est = tomography.reconstruct_unitary(u)
    out = {"d_s": d, "matrix": encode(est)}
    if not cfg.get("hidden"):
        out["truth"] = encode(u)
        out["residual"] = _residual(est, u)
    return out, None


def cmd_characterize_observable(cfg, seed):
    d = cfg.get("d_s", 2)
    a = build_observable(cfg.get("observable", "random"), d, seed)
    scenario = cfg.get("scenario", "weak_value")
    eig = cfg.get("eigenvalues")
    if scenario == "projector":
        est = tomography.reconstruct_observable_projector(a, eigenvalues=eig, theta=cfg.get("theta", np.pi / 2))
    else:
        est = tomography.reconstruct_observable_weakvalue(
            a, delta_theta=cfg.get("theta", 1e-3), method=cfg.get("method", "exact_spectral"), eigenvalues=eig
        )
    out = {"d_s": d, "scenario": scenario, "matrix": encode(est)}
    if not cfg.get("hidden"):
        out["truth"] = encode(a)
        out["residual"] = _residual(est, a)
    return out, None


def _pre_post(cfg, d, seed):
    return (build_ket(cfg.get("pre_state", "random"), d, seed, 6),
            build_ket(cfg.get("post_state", "random"), d, seed, 7))


def cmd_weak_value(cfg, seed):
    d = cfg.get("d_s", 2)
    a = build_observable(cfg.get("observable", "random"), d, seed)
    psi, phi = _pre_post(cfg, d, seed)
    method = cfg.get("method", "exact_spectral")
    req = values.WeakValueRequest(a, psi, phi, theta1=cfg.get("theta", 1e-2), method=method,
                                  eigenvalues=cfg.get("eigenvalues"))
    out: dict = {"d_s": d, "method": method}
    if method == "exact_spectral":
        ms = values.weak_value_exact_spectral(req)
        out.update(weak_value=encode(ms.weak_value), moments=encode(ms.moments),
                   condition_number=ms.condition_number, thetas=ms.thetas.tolist())
        wv = ms.weak_value
    else:
        wv = values.weak_value(req)
        out["weak_value"] = encode(wv)
    if not cfg.get("hidden"):
        out["direct"] = encode(req.direct)
        out["residual"] = abs(wv - req.direct)
    return out, None


def cmd_modular_value(cfg, seed):
    d = cfg.get("d_s", 2)
    a = build_observable(cfg.get("observable", "random"), d, seed)
    psi, phi = _pre_post(cfg, d, seed)
    grid = theta_grid(cfg.get("thetas"), [cfg.get("theta", np.pi / 4)])
    est = np.array([values.modular_value(a, t, psi, phi) for t in grid])
    out = {"d_s": d, "thetas": grid.tolist(), "modular_values": encode(est)}
    if not cfg.get("hidden"):
        direct = np.array([values.modular_value(a, t, psi, phi, route="direct") for t in grid])
        out["direct"] = encode(direct)
        out["residual"] = _residual(est, direct)
    return out, None


def cmd_noise_sweep(cfg, seed):
    d_s, d_e = cfg.get("d_s", 2), cfg.get("d_e", 2)
    methods = cfg.get("methods", list(noise.METHODS))
    grid = theta_grid(cfg.get("thetas"), np.linspace(0.05, np.pi / 2 - 0.05, 10))
    trials = cfg.get("trials", 0)
    channel = state = None
    if trials and "channel" in cfg:
        xi = build_ket(cfg["env_state"], d_e, seed, 5) if "env_state" in cfg else uniform_env_state(d_e)
        channel = (build_channel(cfg["channel"], d_s, d_e, seed, xi), xi)
    if trials and "state" in cfg:
        state = build_state(cfg["state"], d_s, seed)
    rows = noise.error_sweep(methods, grid, d_s, d_e, cfg.get("n", 10**5), trials=trials, seed=seed,
                             trace_e=cfg.get("trace_e"), channel=channel, state=state)
    table = [r.row() for r in rows]
    return {"d_s": d_s, "d_e": d_e, "rows": table}, table


def cmd_mzi_demo(cfg, seed):
    m = cfg.get("mzi", {"kind": "kraus"})
    kind = m["kind"]
    u_s = build_unitary(m.get("u_s", "hadamard" if kind == "kraus" else "pauli-x"), 2, seed)
    u_se = build_channel(m.get("coupling", {"preset": "xx-coupling", "phi": 0.4}), 2, 2, seed)
    scn = mzi.MziScenario(kind, m.get("alpha", np.pi / 4), m.get("delta", 0.0), u_s, u_se)
    table = mzi.propagate(scn)
    out: dict = {"kind": kind, "labels": ["+", "-", "+i", "-i"], "probabilities": table.p.tolist()}
    if kind == "kraus":
        est = mzi.reconstruct_mzi_kraus_element(scn, table)
        out["element"] = encode(est)
        truth = kraus_from_dilation(u_se, scn.xi, 0)[0, 1]
        closed = mzi.kraus_closed_form(scn)
    else:
        est = mzi.reconstruct_mzi_density_element(scn, table)
        out["element"] = encode(est)
        truth = mzi.channel_output(scn)[0, 1]
        closed = mzi.density_closed_form(scn, 0)
    out["closed_form_h0"] = closed
    if not cfg.get("hidden"):
        out["truth"] = encode(truth)
        out["residual"] = abs(est - truth)
    return out, None


DISPATCH = {
    "characterize-kraus": cmd_characterize_kraus,
    "characterize-density": cmd_characterize_density,
    "characterize-unitary": cmd_characterize_unitary,
    "characterize-observable": cmd_characterize_observable,
    "weak-value": cmd_weak_value,
    "modular-value": cmd_modular_value,
    "noise-sweep": cmd_noise_sweep,
    "mzi-demo": cmd_mzi_demo,
}


# ----------------------------------------------------------------------------
# serialization


def _round(x):
    """Round floats to 12 significant digits; recurse through containers."""
    if isinstance(x, dict):
        return {str(k): _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    if isinstance(x, (bool, np.bool_)) or x is None or isinstance(x, str):
        return bool(x) if isinstance(x, np.bool_) else x
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        if not math.isfinite(v):
            return None
        return float(f"{v:.{SIG_DIGITS}g}")
    if isinstance(x, np.ndarray):
        return _round(x.tolist())
    if isinstance(x, complex):
        return _round([x.real, x.imag])
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps_report(report: dict) -> str:
    return json.dumps(_round(report), sort_keys=True, indent=2) + "\n"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.{SIG_DIGITS}g}"
    return str(v)


def emit_table(rows: list[dict], fmt: str = "csv") -> str:
    """Render sweep rows as CSV (fixed header) or as a JSON array."""
    if fmt == "json":
        return json.dumps(_round(rows), sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_fmt(r[k]) for k in CSV_HEADER])
    return buf.getvalue()


COMPLEX_FIELDS = {"kraus", "povm", "truth", "matrix", "projected", "weak_value", "moments", "direct",
                  "modular_values", "element"}


def _element_rows(result: dict) -> list[list]:
    """Flatten every encoded complex field of a result into (name, index, re, im) rows."""
    out = []

    def walk(prefix, v):
        if isinstance(v, dict):
            for k in sorted(v):
                walk(f"{prefix}.{k}" if prefix else k, v[k])
            return
        if prefix.rsplit(".", 1)[-1] not in COMPLEX_FIELDS:
            return
        z = np.asarray(v, dtype=float)
        for idx in np.ndindex(z.shape[:-1]):
            out.append([prefix, ";".join(map(str, idx)), _fmt(float(z[idx][0])), _fmt(float(z[idx][1]))])

    walk("", result)
    return out


def element_table(result: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["field", "index", "re", "im"])
    w.writerows(_element_rows(result))
    return buf.getvalue()


# ----------------------------------------------------------------------------
# driver


def run(config_path, out_dir=None, fmt=None, seed=None) -> tuple[int, dict]:
    """Execute one config.  Returns (exit code, report or error object)."""
    try:
        cfg = load_config(config_path)
    except ConfigError as e:
        return EXIT_CONFIG, e.to_dict()
    out_cfg = cfg.get("output", {})
    fmt = fmt or out_cfg.get("format", "json")
    seed = int(seed if seed is not None else cfg.get("seed", 0))
    target = Path(out_dir or os.environ.get(ENV_OUT) or out_cfg.get("dir") or ".")

    t0 = time.perf_counter()
    try:
        with np.errstate(all="ignore"):
            result, rows = DISPATCH[cfg["command"]](cfg, seed)
    except NumericalError as e:
        return EXIT_NUMERICAL, e.to_dict()
    except TomographyError as e:
        return EXIT_PRECONDITION, e.to_dict()
    except ConfigError as e:
        return EXIT_CONFIG, e.to_dict()
    except (ValueError, np.linalg.LinAlgError) as e:
        return EXIT_PRECONDITION, {"error": type(e).__name__, "message": str(e), "params": {}}
    wall = time.perf_counter() - t0

    report = {
        "config": cfg,
        "seed": seed,
        "version": __version__,
        "result": result,
        "wall_time": wall,
    }
    files = {"report.json": dumps_report(report)}
    if fmt == "csv":
        files["table.csv"] = emit_table(rows) if rows is not None else element_table(_round(result))
    try:
        _write_all(target, files)
    except OSError as e:
        return EXIT_PRECONDITION, {"error": "OSError", "message": str(e), "params": {"dir": str(target)}}
    return EXIT_OK, report


def _write_all(target: Path, files: dict[str, str]) -> None:
    """Write to temporaries first and rename, so a failure leaves nothing half-written."""
    target.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=target, prefix=f".{name}.")
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(text)
            staged.append((tmp, target / name))
        for tmp, final in staged:
            os.replace(tmp, final)
    except OSError:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pse-tomo", description="Run a tomography experiment from a JSON config.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="action", required=True)
    r = sub.add_parser("run", help="execute a config file")
    r.add_argument("config", help="path to the JSON config")
    r.add_argument("--out", help=f"output directory (overrides ${ENV_OUT} and the config)")
    r.add_argument("--format", choices=["json", "csv"], help="also write table.csv when csv")
    r.add_argument("--seed", type=int, help="overrides the config seed")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    code, payload = run(args.config, args.out, args.format, args.seed)
    if code != EXIT_OK:
        print(json.dumps(_round(payload), sort_keys=True), file=sys.stderr)
    else:
        res = payload["result"]
        summary = {"command": payload["config"]["command"], "seed": payload["seed"]}
        if "residual" in res:
            summary["residual"] = res["residual"]
        print(json.dumps(_round(summary), sort_keys=True))
    return code


if __name__ == "__main__":
    sys.exit(main())
