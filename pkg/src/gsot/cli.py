"""Command-line entry point.

Subcommands: estimate, convergence, sigma-sweep, axioms, bounds,
sinkhorn-compare, plot, replay. Runs that write files also write a JSON run
manifest recording the resolved configuration, the seed, per-row timings,
and a sha256 per output; `replay` re-executes a manifest, reuses its
recorded timings (estimates are recomputed), and verifies that every output
hashes identically. Stdout-only runs record a manifest when --manifest is
given. Exit codes: 0 success, 1 runtime failure, 2 usage or validation.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
import tempfile
import time
from datetime import datetime, timezone

from .errors import ConfigError, GsotError
from .experiments import (ARTIFACT_VERSION, AxiomsConfig, ResultTable, Row,
                          SweepConfig, config_hash, run_convergence_sweep,
                          run_metric_axioms)
from .got_estimator import one_sample_trial, two_sample_trial
from .measures import FAMILIES, SourceSpec
from .noise import NOISE_FAMILIES, NoiseModel, verify_density_bound
from .ot_exact import solve_transport
from .sinkhorn import median_pairwise_cost, sinkhorn_solve
from .theory_bounds import bound_report
from . import rng as _rng
from . import measures as _measures


# ---------------------------------------------------------------- plumbing

def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


def _sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".gsot-tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_toml(path: str) -> dict:
    try:
        import tomllib as toml_mod
    except ModuleNotFoundError:
        import tomli as toml_mod
    try:
        with open(path, "rb") as fh:
            return toml_mod.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except toml_mod.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} does not parse: {exc}") from exc


def _resolve_seed(flag_seed, config_seed=None) -> int:
    if flag_seed is not None:
        return int(flag_seed)
    if config_seed is not None:
        return int(config_seed)
    env = os.environ.get("GOT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"GOT_SEED must be an integer, got {env!r}") from exc
    return 0


def _parse_vector(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _parse_matrix(text: str) -> tuple:
    return tuple(_parse_vector(row) for row in text.split(";"))


def _source_payload(source: SourceSpec) -> dict:
    return {
        "family": source.family, "d": source.d, "side": source.side,
        "std": source.std, "means": [list(m) for m in source.means],
        "mix_weights": list(source.mix_weights), "x": list(source.x),
        "y": list(source.y), "K": source.K,
    }


def _source_from_payload(payload: dict) -> SourceSpec:
    p = dict(payload)
    unknown = set(p) - {"family", "d", "side", "std", "means", "mix_weights",
                        "x", "y", "K"}
    if unknown:
        raise ConfigError(f"unknown source keys: {sorted(unknown)}")
    if "family" not in p or "d" not in p:
        raise ConfigError("source needs at least 'family' and 'd'")
    kwargs = {"family": p["family"], "d": int(p["d"])}
    for key in ("side", "std", "K"):
        if p.get(key) is not None:
            kwargs[key] = float(p[key])
    if p.get("means"):
        kwargs["means"] = tuple(tuple(float(v) for v in m) for m in p["means"])
    for key in ("mix_weights", "x", "y"):
        if p.get(key):
            kwargs[key] = tuple(float(v) for v in p[key])
    return SourceSpec(**kwargs)


def _write_manifest(path: str, command: str, seed: int, config: dict,
                    started: str, finished: str, outputs: dict,
                    timings_ms=None) -> None:
    manifest = {
        "artifact_version": ARTIFACT_VERSION,
        "command": command,
        "seed": seed,
        "config": config,
        "started": started,
        "finished": finished,
        "outputs": outputs,
        "timings_ms": timings_ms,
    }
    _atomic_write(path, json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def _manifest_path(args) -> str | None:
    if getattr(args, "manifest", None):
        return args.manifest
    out = getattr(args, "out", None)
    if out:
        return out + ".manifest.json"
    return None


def _emit(args, command: str, seed: int, config: dict, started: str,
          stdout_text: str, file_outputs: dict, timings_ms=None) -> None:
    """Print stdout_text, write file outputs atomically, then the manifest."""
    sys.stdout.write(stdout_text)
    outputs = {"stdout": _sha256_text(stdout_text)}
    for path, text in file_outputs.items():
        _atomic_write(path, text)
        outputs[path] = _sha256_text(text)
    mpath = _manifest_path(args)
    if mpath is not None:
        _write_manifest(mpath, command, seed, config, started, _utcnow(),
                        outputs, timings_ms)


# ---------------------------------------------------------------- estimate

def _source_from_flags(args) -> SourceSpec:
    kwargs = {"family": args.source, "d": args.d}
    if args.source == "uniform-cube":
        kwargs["side"] = args.side
    elif args.source in ("isotropic-gaussian", "gaussian-mixture"):
        kwargs["std"] = args.std
    if args.source == "gaussian-mixture":
        if not args.means:
            raise ConfigError("gaussian-mixture needs --means")
        kwargs["means"] = _parse_matrix(args.means)
        if args.mix_weights:
            kwargs["mix_weights"] = _parse_vector(args.mix_weights)
    if args.source == "dirac-pair":
        if args.x is None or args.y is None:
            raise ConfigError("dirac-pair needs --x and --y")
        x, y = _parse_vector(args.x), _parse_vector(args.y)
        if len(x) == 1 and args.d > 1:
            x = x * args.d
        if len(y) == 1 and args.d > 1:
            y = y * args.d
        kwargs["x"], kwargs["y"] = x, y
    if args.K is not None:
        kwargs["K"] = args.K
    return SourceSpec(**kwargs)


def _estimate_values(source: SourceSpec, noise: NoiseModel, n: int, m: int,
                     trials: int, seed: int):
    """Per-trial plug-in values; dirac-pair sources compare their two point
    masses, every other family compares the n-sample empirical measure with
    its source."""
    values, timings = [], []
    if source.family == "dirac-pair":
        a, b = source.dirac_components()
        for t in range(trials):
            t0 = time.perf_counter()
            values.append(two_sample_trial(a, b, noise, m, seed, t))
            timings.append((time.perf_counter() - t0) * 1000.0)
    else:
        for t in range(trials):
            t0 = time.perf_counter()
            values.append(one_sample_trial(source, noise, n, m, seed, t))
            timings.append((time.perf_counter() - t0) * 1000.0)
    return values, timings


def _estimate_render(source: SourceSpec, sigma: float, n: int, m: int,
                     values) -> tuple:
    trials = len(values)
    mean = math.fsum(values) / trials
    if trials > 1:
        var = math.fsum((v - mean) ** 2 for v in values) / (trials - 1)
        se = math.sqrt(var / trials)
    else:
        se = 0.0
    stdout_text = (f"mean {mean!r} std_err {se!r} trials {trials} "
                   f"m {m} sigma {sigma!r}\n")
    rows = [Row(source.d, sigma, n, m, t, v, 0.0)
            for t, v in enumerate(values)]
    return stdout_text, rows


def cmd_estimate(args) -> int:
    seed = _resolve_seed(args.seed)
    source = _source_from_flags(args)
    noise = NoiseModel(args.noise, args.sigma)
    if args.n < 1:
        raise ConfigError("--n must be >= 1")
    m = args.m if args.m is not None else max(args.n, 1000)
    started = _utcnow()
    values, timings = _estimate_values(source, noise, args.n, m,
                                       args.trials, seed)
    stdout_text, rows = _estimate_render(source, args.sigma, args.n, m, values)
    rows = [dataclasses.replace(r, elapsed_ms=t) for r, t in zip(rows, timings)]
    config = {
        "source": _source_payload(source), "noise_family": args.noise,
        "sigma": args.sigma, "n": args.n, "m": m, "trials": args.trials,
    }
    file_outputs = {}
    if args.out:
        file_outputs[args.out] = ResultTable(rows=rows).to_csv_string()
    _emit(args, "estimate", seed, config, started, stdout_text, file_outputs,
          timings_ms=timings)
    return 0


# ------------------------------------------------------------------ sweeps

def _sweep_config_from(args, command: str) -> tuple:
    data = _load_toml(args.config) if args.config else {}
    source_payload = data.get("source")
    if source_payload is None:
        raise ConfigError("config file must have a [source] section")
    source = _source_from_payload(source_payload)
    sweep = dict(data.get("sweep", {}))

    def pick(flag, key, default=None):
        return flag if flag is not None else sweep.get(key, default)

    seed = _resolve_seed(args.seed, sweep.get("seed"))
    sigma_grid = (_parse_vector(args.sigma_grid) if args.sigma_grid
                  else tuple(sweep.get("sigma_grid", (0.0, 1.0, 2.0, 4.0))))
    if command == "sigma-sweep":
        n = pick(args.n, "n")
        if n is None:
            raise ConfigError("sigma-sweep needs n (flag --n or config key)")
        n_grid = (int(n),)
    else:
        n_grid = (tuple(int(v) for v in _parse_vector(args.n_grid))
                  if args.n_grid else tuple(sweep.get("n_grid", SweepConfig.n_grid)))
    crn = sweep.get("crn", False)
    if args.crn:
        crn = True
    if args.no_crn:
        crn = False
    cfg = SweepConfig(
        source=source,
        noise_family=pick(args.noise, "noise_family", "gaussian"),
        sigma_grid=sigma_grid,
        n_grid=n_grid,
        m_rule=pick(args.m_rule, "m_rule", "equal-n"),
        m_fixed=pick(args.m_fixed, "m_fixed"),
        trials=int(pick(args.trials, "trials", 10)),
        seed=seed,
        crn=bool(crn),
    )
    return cfg, seed


def _sweep_config_payload(cfg: SweepConfig) -> dict:
    return {
        "source": _source_payload(cfg.source),
        "noise_family": cfg.noise_family,
        "sigma_grid": list(cfg.sigma_grid),
        "n_grid": list(cfg.n_grid),
        "m_rule": cfg.m_rule,
        "m_fixed": cfg.m_fixed,
        "trials": cfg.trials,
        "seed": cfg.seed,
        "crn": cfg.crn,
        "config_hash": config_hash(cfg),
    }


def _sweep_config_from_payload(payload: dict) -> SweepConfig:
    return SweepConfig(
        source=_source_from_payload(payload["source"]),
        noise_family=payload["noise_family"],
        sigma_grid=tuple(payload["sigma_grid"]),
        n_grid=tuple(payload["n_grid"]),
        m_rule=payload["m_rule"],
        m_fixed=payload["m_fixed"],
        trials=payload["trials"],
        seed=payload["seed"],
        crn=payload["crn"],
    )


def _sweep_stdout(table: ResultTable, out: str) -> str:
    sigmas = ", ".join(repr(s) for s in table.sigmas())
    return (f"rows {len(table.rows)} sigmas [{sigmas}] "
            f"failed_rows {sum(1 for r in table.rows if math.isnan(r.estimate))} "
            f"out {out}\n")


def _run_sweep_command(args, command: str) -> int:
    cfg, seed = _sweep_config_from(args, command)
    started = _utcnow()
    table = run_convergence_sweep(cfg, jobs=args.jobs)
    stdout_text = _sweep_stdout(table, args.out)
    timings = [r.elapsed_ms for r in table.rows]
    _emit(args, command, seed, _sweep_config_payload(cfg), started,
          stdout_text, {args.out: table.to_csv_string()}, timings_ms=timings)
    return 1 if table.failed else 0


def cmd_convergence(args) -> int:
    return _run_sweep_command(args, "convergence")


def cmd_sigma_sweep(args) -> int:
    return _run_sweep_command(args, "sigma-sweep")


# ------------------------------------------------------------------ axioms

def _axioms_config_from(args) -> AxiomsConfig:
    data = _load_toml(args.config).get("axioms", {}) if args.config else {}

    def pick(flag, key, default):
        return flag if flag is not None else data.get(key, default)

    return AxiomsConfig(
        d=int(pick(args.d, "d", 3)),
        sigma=float(pick(args.sigma, "sigma", 1.0)),
        triples=int(pick(args.triples, "triples", 20)),
        atoms=int(pick(args.atoms, "atoms", 12)),
        m=int(pick(args.m, "m", 300)),
        trials=int(pick(args.trials, "trials", 4)),
        seed=_resolve_seed(args.seed, data.get("seed")),
        noise_family=pick(args.noise, "noise_family", "gaussian"),
        spread=float(pick(args.spread, "spread", 2.0)),
    )


def _axioms_stdout(report) -> str:
    lines = [
        f"triangle checks {len(report.triangle)} violations {report.triangle_violations}",
        f"symmetry max |diff| {report.symmetry_max_diff!r} exact {report.symmetry_exact}",
        "self-distance " + " ".join(f"m={m} mean={v!r}" for m, v in report.self_means)
        + f" decreasing {report.self_decreasing}",
        f"bias allowance {report.allowance!r}",
        f"passed {report.passed}",
    ]
    return "\n".join(lines) + "\n"


def cmd_axioms(args) -> int:
    cfg = _axioms_config_from(args)
    started = _utcnow()
    report = run_metric_axioms(cfg)
    stdout_text = _axioms_stdout(report)
    file_outputs = {}
    if args.out:
        file_outputs[args.out] = json.dumps(
            dataclasses.asdict(report), sort_keys=True, indent=2) + "\n"
    _emit(args, "axioms", cfg.seed, dataclasses.asdict(cfg), started,
          stdout_text, file_outputs)
    return 0 if report.passed else 1


# ------------------------------------------------------------------ bounds

def _bounds_stdout(args) -> str:
    c1 = args.c1
    if c1 is None and args.noise != "gaussian":
        cert = verify_density_bound(NoiseModel(args.noise, args.sigma))
        c1 = cert.c1_delta
    reports = bound_report(sigma=args.sigma, d=args.d, K=args.k, n=args.n,
                           c1=c1, sigma2=args.sigma2, diam=args.diam,
                           t=args.t)
    width = max(len(r.name) for r in reports)
    lines = []
    for r in reports:
        inputs = " ".join(f"{k}={v!r}" for k, v in r.inputs.items())
        lines.append(f"{r.name:<{width}}  {r.value!r}  ({inputs})")
    return "\n".join(lines) + "\n"


def cmd_bounds(args) -> int:
    started = _utcnow()
    stdout_text = _bounds_stdout(args)
    config = {k: getattr(args, k) for k in
              ("sigma", "d", "k", "n", "c1", "sigma2", "diam", "t", "noise")}
    _emit(args, "bounds", 0, config, started, stdout_text, {})
    return 0


# -------------------------------------------------------- sinkhorn-compare

def _sinkhorn_compare_stdout(atoms: int, d: int, seed: int, epsilon,
                             epsilon_relative, max_iter: int, tol: float) -> str:
    gen = _rng.stream(seed, "sinkhorn-compare")
    mu = _measures.DiscreteMeasure(gen.standard_normal((atoms, d)),
                                   _positive_weights(gen, atoms))
    nu = _measures.DiscreteMeasure(gen.standard_normal((atoms, d)) + 1.0,
                                   _positive_weights(gen, atoms))
    med = median_pairwise_cost(mu, nu)
    exact = solve_transport(mu, nu).cost
    if epsilon is not None:
        eps_values = epsilon
    else:
        eps_values = tuple(s * med for s in epsilon_relative)
    lines = [f"atoms {atoms} d {d} seed {seed} median_cost {med!r} exact_w1 {exact!r}"]
    for eps in eps_values:
        sol = sinkhorn_solve(mu, nu, eps, tol=tol, max_iter=max_iter)
        lines.append(f"eps {eps!r} value {sol.value!r} gap {sol.value - exact!r} "
                     f"iterations {sol.iterations} marginal_err {sol.marginal_error!r}")
    return "\n".join(lines) + "\n"


def _positive_weights(gen, k: int):
    w = gen.random(k) + 0.1
    return w / w.sum()


def cmd_sinkhorn_compare(args) -> int:
    seed = _resolve_seed(args.seed)
    epsilon = _parse_vector(args.epsilon) if args.epsilon else None
    epsilon_relative = (_parse_vector(args.epsilon_relative)
                        if args.epsilon_relative else (1e-3, 1e-2, 1e-1, 1.0))
    started = _utcnow()
    stdout_text = _sinkhorn_compare_stdout(args.atoms, args.d, seed, epsilon,
                                           epsilon_relative, args.max_iter,
                                           args.tol)
    config = {"atoms": args.atoms, "d": args.d,
              "epsilon": list(epsilon) if epsilon else None,
              "epsilon_relative": list(epsilon_relative),
              "max_iter": args.max_iter, "tol": args.tol}
    _emit(args, "sinkhorn-compare", seed, config, started, stdout_text, {})
    return 0


# -------------------------------------------------------------------- plot

def cmd_plot(args) -> int:
    from .plotting import render_loglog_svg

    with open(args.infile, "r", encoding="ascii") as fh:
        csv_text = fh.read()
    table = ResultTable.from_csv_string(csv_text)
    started = _utcnow()
    svg = render_loglog_svg(table, title=args.title)
    stdout_text = f"plotted {len(table.rows)} rows to {args.out}\n"
    config = {"input": args.infile, "input_sha256": _sha256_text(csv_text),
              "title": args.title}
    _emit(args, "plot", 0, config, started, stdout_text, {args.out: svg})
    return 0


# ------------------------------------------------------------------ replay

def _replay_estimate(manifest) -> tuple:
    cfg = manifest["config"]
    source = _source_from_payload(cfg["source"])
    noise = NoiseModel(cfg["noise_family"], cfg["sigma"])
    values, _ = _estimate_values(source, noise, cfg["n"], cfg["m"],
                                 cfg["trials"], manifest["seed"])
    stdout_text, rows = _estimate_render(source, cfg["sigma"], cfg["n"],
                                         cfg["m"], values)
    timings = manifest.get("timings_ms") or []
    if len(timings) != len(rows):
        raise ConfigError("manifest timings do not match the trial count")
    rows = [dataclasses.replace(r, elapsed_ms=t) for r, t in zip(rows, timings)]
    csv_text = ResultTable(rows=rows).to_csv_string()
    files = {path: csv_text for path in manifest["outputs"] if path != "stdout"}
    return stdout_text, files


def _replay_sweep(manifest, jobs: int) -> tuple:
    cfg = _sweep_config_from_payload(manifest["config"])
    recorded_hash = manifest["config"].get("config_hash")
    if recorded_hash is not None and recorded_hash != config_hash(cfg):
        raise ConfigError("manifest config_hash does not match its config")
    table = run_convergence_sweep(cfg, jobs=jobs)
    timings = manifest.get("timings_ms") or []
    if len(timings) != len(table.rows):
        raise ConfigError("manifest timings do not match the row count")
    table.rows = [dataclasses.replace(r, elapsed_ms=t)
                  for r, t in zip(table.rows, timings)]
    csv_text = table.to_csv_string()
    paths = [p for p in manifest["outputs"] if p != "stdout"]
    stdout_text = _sweep_stdout(table, paths[0] if paths else "-")
    return stdout_text, {path: csv_text for path in paths}


def _replay_axioms(manifest) -> tuple:
    cfg = AxiomsConfig(**manifest["config"])
    report = run_metric_axioms(cfg)
    stdout_text = _axioms_stdout(report)
    text = json.dumps(dataclasses.asdict(report), sort_keys=True, indent=2) + "\n"
    files = {path: text for path in manifest["outputs"] if path != "stdout"}
    return stdout_text, files


def _replay_plot(manifest) -> tuple:
    from .plotting import render_loglog_svg

    cfg = manifest["config"]
    with open(cfg["input"], "r", encoding="ascii") as fh:
        csv_text = fh.read()
    if _sha256_text(csv_text) != cfg["input_sha256"]:
        raise ConfigError(f"plot input {cfg['input']} changed since the run")
    table = ResultTable.from_csv_string(csv_text)
    svg = render_loglog_svg(table, title=cfg["title"])
    paths = [p for p in manifest["outputs"] if p != "stdout"]
    stdout_text = f"plotted {len(table.rows)} rows to {paths[0]}\n"
    return stdout_text, {path: svg for path in paths}


def _replay_bounds(manifest) -> tuple:
    cfg = manifest["config"]
    ns = argparse.Namespace(**cfg)
    return _bounds_stdout(ns), {}


def _replay_sinkhorn_compare(manifest) -> tuple:
    cfg = manifest["config"]
    stdout_text = _sinkhorn_compare_stdout(
        cfg["atoms"], cfg["d"], manifest["seed"],
        tuple(cfg["epsilon"]) if cfg["epsilon"] else None,
        tuple(cfg["epsilon_relative"]), cfg["max_iter"], cfg["tol"])
    return stdout_text, {}


def cmd_replay(args) -> int:
    try:
        with open(args.manifest_file, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"manifest not found: {args.manifest_file}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"manifest does not parse: {exc}") from exc
    command = manifest.get("command")
    handlers = {
        "estimate": lambda: _replay_estimate(manifest),
        "convergence": lambda: _replay_sweep(manifest, args.jobs),
        "sigma-sweep": lambda: _replay_sweep(manifest, args.jobs),
        "axioms": lambda: _replay_axioms(manifest),
        "plot": lambda: _replay_plot(manifest),
        "bounds": lambda: _replay_bounds(manifest),
        "sinkhorn-compare": lambda: _replay_sinkhorn_compare(manifest),
    }
    if command not in handlers:
        raise ConfigError(f"manifest command {command!r} is not replayable")
    stdout_text, files = handlers[command]()

    mismatches = []
    recorded = manifest.get("outputs", {})
    produced = {"stdout": stdout_text, **files}
    for path, text in produced.items():
        want = recorded.get(path)
        got = _sha256_text(text)
        if want != got:
            mismatches.append(path)
        if path != "stdout":
            _atomic_write(path, text)
    for path in produced:
        print(f"replay {path}: {'ok' if path not in mismatches else 'MISMATCH'}")
    if mismatches:
        print(f"replay failed: {len(mismatches)} output(s) differ", file=sys.stderr)
        return 1
    return 0


# ------------------------------------------------------------------ parser

def _add_manifest_flag(p) -> None:
    p.add_argument("--manifest", default=None,
                   help="manifest path (default: OUT.manifest.json when --out is given)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gsot",
        description="Estimate and study noise-smoothed 1-Wasserstein distances.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("estimate", help="one plug-in distance estimate")
    p.add_argument("--source", required=True, choices=FAMILIES)
    p.add_argument("--d", required=True, type=int)
    p.add_argument("--sigma", required=True, type=float)
    p.add_argument("--n", required=True, type=int,
                   help="empirical sample size (ignored for dirac-pair)")
    p.add_argument("--noise", default="gaussian", choices=NOISE_FAMILIES)
    p.add_argument("--m", type=int, default=None,
                   help="cloud resolution (default max(n, 1000))")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--side", type=float, default=1.0)
    p.add_argument("--std", type=float, default=1.0)
    p.add_argument("--x", default=None, help="dirac-pair first point, comma-separated")
    p.add_argument("--y", default=None, help="dirac-pair second point")
    p.add_argument("--means", default=None,
                   help="mixture means, rows separated by ';'")
    p.add_argument("--mix-weights", dest="mix_weights", default=None)
    p.add_argument("--K", type=float, default=None)
    p.add_argument("--out", default=None)
    _add_manifest_flag(p)
    p.set_defaults(func=cmd_estimate)

    for name, func in (("convergence", cmd_convergence),
                       ("sigma-sweep", cmd_sigma_sweep)):
        p = sub.add_parser(name, help=f"{name} sweep over the config grid")
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--noise", default=None, choices=NOISE_FAMILIES)
        p.add_argument("--sigma-grid", dest="sigma_grid", default=None)
        p.add_argument("--m-rule", dest="m_rule", default=None,
                       choices=("equal-n", "fixed"))
        p.add_argument("--m-fixed", dest="m_fixed", type=int, default=None)
        p.add_argument("--crn", action="store_true")
        p.add_argument("--no-crn", action="store_true")
        if name == "convergence":
            p.add_argument("--n-grid", dest="n_grid", default=None)
        else:
            p.add_argument("--n", type=int, default=None)
        _add_manifest_flag(p)
        p.set_defaults(func=func)

    p = sub.add_parser("axioms", help="metric-axioms statistical harness")
    p.add_argument("--config", default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--triples", type=int, default=None)
    p.add_argument("--atoms", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--noise", default=None, choices=NOISE_FAMILIES)
    p.add_argument("--spread", type=float, default=None)
    p.add_argument("--out", default=None)
    _add_manifest_flag(p)
    p.set_defaults(func=cmd_axioms)

    p = sub.add_parser("bounds", help="closed-form bound table")
    p.add_argument("--sigma", required=True, type=float)
    p.add_argument("--d", required=True, type=int)
    p.add_argument("--k", required=True, type=float)
    p.add_argument("--n", required=True, type=int)
    p.add_argument("--c1", type=float, default=None)
    p.add_argument("--sigma2", type=float, default=None)
    p.add_argument("--diam", type=float, default=None)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--noise", default="gaussian", choices=NOISE_FAMILIES,
                   help="family whose certified envelope constant supplies c1")
    _add_manifest_flag(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("sinkhorn-compare",
                       help="entropic values vs the exact solver on one instance")
    p.add_argument("--atoms", type=int, default=20)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epsilon", default=None,
                   help="absolute epsilon values, comma-separated")
    p.add_argument("--epsilon-relative", dest="epsilon_relative", default=None,
                   help="epsilon as fractions of the median pairwise cost")
    p.add_argument("--max-iter", dest="max_iter", type=int, default=100_000)
    p.add_argument("--tol", type=float, default=1e-9)
    _add_manifest_flag(p)
    p.set_defaults(func=cmd_sinkhorn_compare)

    p = sub.add_parser("plot", help="render a sweep CSV as a log-log SVG")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--title", default="mean estimate vs n")
    _add_manifest_flag(p)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("replay", help="re-execute a run manifest and verify hashes")
    p.add_argument("--manifest", dest="manifest_file", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GsotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
