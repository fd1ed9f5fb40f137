"""``enet`` command line: fit | path | select | experiment | demo2d.

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 non-convergence
(results are still written), 5 missing balancing constant.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import __version__
from .dictionary import effective_kappa
from .errors import (ConfigError, DataError, EnetError, MissingConstantError, OracleError,
                     SelectionError)
from .experiments import ExperimentSpec, run_experiment
from .selection import BoundInputs, LambdaGrid, PathConfig, balancing_select, regularization_path
from .serialization import (atomic_write_text, coefficients_to_json, dictionary_from_config,
                            dumps, encode_id, read_dataset_csv, read_json)

log = logging.getLogger("enetfp")

COMMANDS = ("fit", "path", "select", "experiment", "demo2d")
EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NONCONVERGED, EXIT_MISSING_CONSTANT = 0, 2, 3, 4, 5


@dataclass(frozen=True)
class RunConfig:
    command: str
    dataset: str | None = None
    dictionary: dict | None = None
    eps: float | None = None
    lam: float | None = None
    lam0: float | None = None
    count: int | None = None
    eta: float = 1e-8
    max_iter: int = 200_000
    kappa: float | None = None
    kappa_minus: float | str = 0.0
    delta: float = 3.0
    sigma: float | None = None
    L: float | None = None
    C: float | None = None
    A: float | None = None
    C_heuristic: bool = False
    seed: int = 0
    out: str | None = None
    experiment: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; expected one of {COMMANDS}")
        _check_types(self)
        if self.command in ("fit", "path", "select"):
            for name in ("dataset", "dictionary", "eps"):
                if getattr(self, name) is None:
                    raise ConfigError(f"'{self.command}' needs the '{name}' field")
            if not self.eps > 0 and self.kappa_minus in (0, 0.0):
                raise ConfigError("eps must be positive unless kappa_minus > 0")
        if self.command == "fit" and self.lam is None:
            raise ConfigError("'fit' needs the 'lam' field")
        if self.command in ("path", "select") and (self.lam0 is None or self.count is None):
            raise ConfigError(f"'{self.command}' needs the grid fields 'lam0' and 'count'")
        if self.command == "experiment" and "kind" not in self.experiment:
            raise ConfigError("'experiment' needs 'experiment.kind'")
        if isinstance(self.kappa_minus, str) and self.kappa_minus != "exact":
            raise ConfigError("kappa_minus must be a number or 'exact'")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "command" not in d:
            raise ConfigError("config needs a 'command'")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


_FIELD_TYPES = {
    "dataset": str, "out": str, "dictionary": dict, "experiment": dict,
    "eps": float, "lam": float, "lam0": float, "eta": float, "kappa": float,
    "delta": float, "sigma": float, "L": float, "C": float, "A": float,
    "count": int, "max_iter": int, "seed": int, "C_heuristic": bool,
}


def _check_types(cfg: RunConfig):
    for name, typ in _FIELD_TYPES.items():
        v = getattr(cfg, name)
        if v is None:
            continue
        if typ is float:
            ok = isinstance(v, (int, float)) and not isinstance(v, bool)
        elif typ is int:
            ok = isinstance(v, int) and not isinstance(v, bool)
        else:
            ok = isinstance(v, typ)
        if not ok:
            raise ConfigError(f"field '{name}' must be of type {typ.__name__}, got {v!r}")
    if not isinstance(cfg.kappa_minus, (int, float, str)) or isinstance(cfg.kappa_minus, bool):
        raise ConfigError("kappa_minus must be a number or 'exact'")


def resolve_config(args) -> RunConfig:
    raw = {}
    base = Path.cwd()
    if args.config:
        raw = read_json(args.config)
        base = Path(args.config).resolve().parent
    if args.command:
        raw["command"] = args.command
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.out is not None:
        raw["out"] = str(Path(args.out).resolve())
    # paths in a config file are relative to that file
    for key in ("dataset", "out"):
        if isinstance(raw.get(key), str):
            raw[key] = str((base / raw[key]).resolve())
    d = raw.get("dictionary")
    if isinstance(d, dict):
        d = dict(d)
        for key in ("features", "weights"):
            if isinstance(d.get(key), str):
                d[key] = str((base / d[key]).resolve())
        raw["dictionary"] = d
    return RunConfig.from_dict(raw)


def _path_config(cfg: RunConfig) -> PathConfig:
    return PathConfig(eps=cfg.eps, kappa=cfg.kappa, kappa_minus=cfg.kappa_minus,
                      eta=cfg.eta, max_iter=cfg.max_iter)


def _point_json(pt) -> dict:
    r = pt.result
    return {"lam": pt.lam, "coefficients": coefficients_to_json(r.beta),
            "iterations": r.iterations, "kkt_residual": r.kkt_residual,
            "a_priori_bound": r.a_priori_bound, "active_set_size": r.active_set_size,
            "support_size": len(r.beta), "converged": r.converged,
            "stop_reason": r.stop_reason, "q": r.q}


def _load(cfg: RunConfig):
    dic = dictionary_from_config(cfg.dictionary)
    data = read_dataset_csv(cfg.dataset)
    return dic, data


def cmd_fit(cfg: RunConfig):
    dic, data = _load(cfg)
    pt = regularization_path(dic, data, [cfg.lam], _path_config(cfg))[0]
    return {"result": _point_json(pt)}, pt.result.converged


def cmd_path(cfg: RunConfig):
    dic, data = _load(cfg)
    path = regularization_path(dic, data, LambdaGrid(cfg.lam0, cfg.count), _path_config(cfg))
    return {"path": [_point_json(p) for p in path]}, all(not p.failed for p in path)


def _bound_inputs(cfg: RunConfig, kappa: float, n: int) -> BoundInputs:
    if cfg.C is None and (cfg.sigma is None or cfg.L is None):
        missing = [k for k in ("C", "A") if getattr(cfg, k) is None]
        raise MissingConstantError(
            f"balancing constant unavailable: supply {' or '.join(repr(m) for m in missing)}"
            " (with 'sigma' and 'L' when using 'A')")
    km = cfg.kappa_minus if not isinstance(cfg.kappa_minus, str) else 0.0
    return BoundInputs(kappa=kappa, sigma=cfg.sigma or 0.0, L=cfg.L or 0.0,
                       delta=cfg.delta, n=n, eps=cfg.eps, kappa_minus=km,
                       A=cfg.A, C=cfg.C, C_heuristic=cfg.C_heuristic)


def cmd_select(cfg: RunConfig):
    dic, data = _load(cfg)
    kappa = cfg.kappa if cfg.kappa is not None else effective_kappa(dic, data.inputs)
    inputs = _bound_inputs(cfg, kappa, data.n)
    inputs.balancing_constant()  # fail before solving when C is unavailable
    grid = LambdaGrid(cfg.lam0, cfg.count)
    path = regularization_path(dic, data, grid, _path_config(cfg))
    ok = all(not p.failed for p in path)
    payload = {"path": [_point_json(p) for p in path]}
    if ok:
        payload["selection"] = balancing_select(path, inputs, grid).to_dict(encode_id)
    return payload, ok


def _experiment_spec(cfg: RunConfig, kind: str | None = None) -> ExperimentSpec:
    d = dict(cfg.experiment)
    if kind is not None:
        d["kind"] = kind
    if "seed" in d:
        raise ConfigError("set the experiment seed with the top-level 'seed' field")
    d["seed"] = cfg.seed
    return ExperimentSpec.from_dict(d)


def cmd_experiment(cfg: RunConfig, kind: str | None = None):
    spec = _experiment_spec(cfg, kind)
    report = run_experiment(spec)
    ok = not any("did not certify" in f for f in report.flags)
    return {"report": report.to_dict()}, ok, report


HANDLERS = {"fit": cmd_fit, "path": cmd_path, "select": cmd_select}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="enet", description=__doc__.splitlines()[0])
    p.add_argument("command", nargs="?", choices=COMMANDS,
                   help="overrides the config's 'command' field")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--out", help="output JSON path (default: stdout)")
    p.add_argument("--seed", type=int, help="root seed for all random streams")
    p.add_argument("--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"enetfp {__version__}")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    t0 = time.perf_counter()
    try:
        if not args.config and not args.command:
            raise ConfigError("give a command or --config")
        cfg = resolve_config(args)
        log.info("resolved config: %s", cfg.to_dict())
        report = None
        if cfg.command in HANDLERS:
            payload, ok = HANDLERS[cfg.command](cfg)
        else:
            kind = "instability" if cfg.command == "demo2d" else None
            payload, ok, report = cmd_experiment(cfg, kind)
    except MissingConstantError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_CONSTANT
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SelectionError, OracleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except EnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    payload["config"] = cfg.to_dict()
    payload["converged"] = ok
    payload["timing"] = {"seconds": time.perf_counter() - t0}
    text = dumps(payload)
    if cfg.out:
        atomic_write_text(cfg.out, text)
        if report is not None:
            atomic_write_text(Path(cfg.out).with_suffix(".csv"), report.to_csv())
        log.info("wrote %s", cfg.out)
    else:
        sys.stdout.write(text)
    if not ok:
        print("warning: not every solve certified convergence", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
