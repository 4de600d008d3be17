"""Command-line interface: inhom, adf, fit, predict, evaluate, synth, pipeline.

All randomness in a run derives from one global --seed, fanned out to
fixed per-purpose streams so adding a subcommand never shifts another's
stream. JSON outputs are pretty-printed with sorted keys and contain no
timestamps, so identical invocations produce byte-identical files.

Exit codes: 0 ok, 2 usage, 3 data validation, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import dataset as ds_mod
from . import evaluation as ev_mod
from . import inference as inf_mod
from . import inhomogeneity as ih_mod
from . import stationarity as st_mod
from . import synth as sy_mod
from .errors import DataValidationError, NumericalError
from .gp import GpPredictor, SqeKernel

OUT_DIR_ENV = "INHOMOG_OUT_DIR"

# fixed stream ids for seed fan-out; never renumber
_STREAMS = {
    "synth": 1,
    "fit-stationary": 2,
    "fit-nonstationary": 3,
}

_CONFIG_KEYS = {
    "model", "n_iter", "n_burn", "lookback", "seeds", "prior_sd", "proposal_sd",
    "delta_seed", "delta_prior_sd", "delta_proposal_sd", "jitter",
}


def derive_seed(global_seed: int, stream: str) -> int:
    seq = np.random.SeedSequence([int(global_seed), _STREAMS[stream]])
    return int(seq.generate_state(1)[0])


def _resolve(path: str | Path) -> Path:
    path = Path(path)
    base = os.environ.get(OUT_DIR_ENV)
    if base and not path.is_absolute():
        return Path(base) / path
    return path


def _write_json(payload: dict, path: str | Path) -> None:
    out = _resolve(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _csv_column(path: str | Path, column: str) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise DataValidationError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if column not in header:
            raise DataValidationError(f"{path}: column {column!r} absent from header {header}")
        j = header.index(column)
        values = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                values.append(float(row[j]))
            except (ValueError, IndexError):
                raise DataValidationError(f"{path}:{lineno}: bad cell in column {column!r}") from None
    return np.asarray(values)


def _comma_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _comma_floats(text: str) -> list[float]:
    try:
        return [float(part) for part in _comma_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}") from None


def _comma_ints(text: str) -> list[int]:
    try:
        return [int(part) for part in _comma_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: {text!r}") from None


def _shape(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a shape like 3x4: {text!r}") from None


def _load_dataset(args) -> ds_mod.Dataset:
    outputs = _comma_list(args.outputs)
    shape = args.shape if getattr(args, "shape", None) else None
    if args.inputs:
        return ds_mod.load_csv(args.input, _comma_list(args.inputs), outputs, shape)
    # no declared inputs: read only the output columns, index rows 1..N
    columns = [_csv_column(args.input, col) for col in outputs]
    out = np.column_stack(columns)
    if out.shape[0] < 2:
        raise DataValidationError(f"{args.input}: N < 2")
    return ds_mod.Dataset(
        inputs=np.arange(1, out.shape[0] + 1, dtype=float)[:, None],
        outputs=out,
        input_names=("index",),
        output_names=tuple(outputs),
        shape=shape if shape else (out.shape[1],),
    )


def _tolerance_from_args(args) -> ih_mod.ToleranceConfig:
    if args.beta is not None:
        return ih_mod.ToleranceConfig(mode="proportional", beta=args.beta)
    delta = args.delta if args.delta is not None else 0.05
    return ih_mod.ToleranceConfig(mode="constant", delta=delta)


def _estimator_from_args(args, p: int) -> ih_mod.CorrEstimatorConfig:
    kind = args.estimator
    if kind is None:
        kind = "windowed" if p == 1 else "tensor"
    full = ih_mod.WINDOWED if kind == "windowed" else ih_mod.TENSOR
    return ih_mod.CorrEstimatorConfig(kind=full, half_width=args.half_width)


def cmd_inhom(args) -> int:
    data = _load_dataset(args)
    tol = _tolerance_from_args(args)
    est = _estimator_from_args(args, data.p)
    so = ds_mod.standardize(data)
    rd = ds_mod.reduce(data)
    ls = ih_mod.l_series(rd, so, est, tol)
    report = ih_mod.inhomogeneity_parameter(ls, n=data.n, estimator=est, tolerance=tol)
    payload = {
        "n": report.n,
        "m": report.m,
        "p": report.p,
        "incompatible_indices": list(report.incompatible),
        "config": {
            "estimator": {"kind": est.kind, "half_width": est.half_width, "corr_floor": est.corr_floor},
            "tolerance": {"mode": tol.mode, "delta": tol.delta, "beta": tol.beta},
        },
    }
    if args.out:
        _write_json(payload, args.out)
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))
    if args.lvalues:
        incompatible = set(report.incompatible)
        path = _resolve(args.lvalues)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "L", "band_lo", "band_hi", "incompatible"])
            for i in range(len(ls)):
                writer.writerow([
                    i + 1,
                    f"{ls.values[i]:.17g}",
                    f"{ls.band_lo[i]:.17g}",
                    f"{ls.band_hi[i]:.17g}",
                    1 if (i + 1) in incompatible else 0,
                ])
    return 0


def cmd_adf(args) -> int:
    series = _csv_column(args.input, args.column)
    result = st_mod.adf_test(series, max_lag=args.max_lag, lag_rule=args.lag_rule)
    payload = {
        "statistic": result.statistic,
        "lags_used": result.lags_used,
        "n_effective": result.n_effective,
        "critical_values": result.critical_values,
        "reject_at": list(result.reject_at),
        "p_value": result.p_value,
    }
    if args.out:
        _write_json(payload, args.out)
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def cmd_synth(args) -> int:
    seed = derive_seed(args.seed, "synth")
    spec = sy_mod.SynthSpec(
        kind=args.kind,
        n=args.n,
        rng_seed=seed,
        lengthscales=tuple(args.lengthscales),
        boundaries=tuple(args.boundaries or ()),
        noise_sd=args.noise_sd,
    )
    deltas = None
    if args.kind == "stationary-gp":
        data = sy_mod.sample_gp(spec)
    elif args.kind == "piecewise-gp":
        data = sy_mod.sample_piecewise_gp(spec)
    elif args.kind == "unit-root":
        data = sy_mod.sample_unit_root(spec)
    else:
        data, deltas = sy_mod.sample_example1_like(spec)
    ds_mod.write_csv(data, _resolve(args.out))
    if args.noise_out:
        if deltas is None:
            raise DataValidationError("--noise-out applies only to --kind noisy-trend")
        path = _resolve(args.noise_out)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "delta"])
            for i, v in enumerate(deltas, start=1):
                writer.writerow([i, f"{v:.17g}"])
    return 0


def load_config(path: str | Path) -> dict:
    """Parse a TOML chain-config file; unknown keys are rejected."""
    path = Path(path)
    if not path.exists():
        raise DataValidationError(f"no such config file: {path}")
    try:
        with path.open("rb") as fh:
            payload = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise DataValidationError(f"{path}: {exc}") from None
    unknown = set(payload) - _CONFIG_KEYS
    if unknown:
        raise DataValidationError(f"{path}: unknown config keys {sorted(unknown)}")
    return payload


def _chain_config(args, model: str, rng_seed: int) -> inf_mod.ChainConfig:
    file_cfg = load_config(args.config) if getattr(args, "config", None) else {}

    def pick(flag_name, file_key, default):
        flag_val = getattr(args, flag_name, None)
        if flag_val is not None:
            return flag_val
        if file_key in file_cfg:
            return file_cfg[file_key]
        return default

    seeds = pick("seeds", "seeds", [1.0])
    return inf_mod.ChainConfig(
        model=model,
        n_iter=int(pick("n_iter", "n_iter", 10000)),
        n_burn=int(pick("n_burn", "n_burn", 2000)),
        seeds=np.asarray(seeds, dtype=float),
        prior_sd=np.asarray(pick("prior_sd", "prior_sd", None), dtype=float)
        if pick("prior_sd", "prior_sd", None) is not None else None,
        proposal_sd=np.asarray(pick("proposal_sd", "proposal_sd", None), dtype=float)
        if pick("proposal_sd", "proposal_sd", None) is not None else None,
        lookback=int(pick("lookback", "lookback", 100)),
        delta_seed=pick("delta_seed", "delta_seed", 0.5),
        delta_prior_sd=pick("delta_prior_sd", "delta_prior_sd", None),
        delta_proposal_sd=pick("delta_proposal_sd", "delta_proposal_sd", None),
        jitter=float(pick("jitter", "jitter", 1e-8)),
        rng_seed=rng_seed,
    )


def _fingerprint(data: ds_mod.Dataset) -> str:
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(data.inputs).tobytes())
    digest.update(np.ascontiguousarray(data.outputs).tobytes())
    digest.update(",".join(data.column_names).encode())
    return digest.hexdigest()[:16]


def _write_trace_csv(trace: inf_mod.ChainTrace, path: Path) -> None:
    d = trace.ell.shape[1]
    header = ["iter"] + [f"ell_{m + 1}" for m in range(d)]
    if trace.delta is not None:
        header += [f"delta_{m + 1}" for m in range(d)]
    header += ["log_post_outer"]
    if trace.log_post_inner is not None:
        header += [f"log_post_inner_{m + 1}" for m in range(d)]
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t in range(trace.ell.shape[0]):
            row = [t + 1] + [f"{v:.17g}" for v in trace.ell[t]]
            if trace.delta is not None:
                row += [f"{v:.17g}" for v in trace.delta[t]]
            row += [f"{trace.log_post_outer[t]:.17g}"]
            if trace.log_post_inner is not None:
                row += [f"{v:.17g}" for v in trace.log_post_inner[t]]
            writer.writerow(row)


def _fit_model(data: ds_mod.Dataset, cfg: inf_mod.ChainConfig, progress=None):
    if data.p != 1:
        raise DataValidationError("model fitting requires a single scalar output column")
    so = ds_mod.standardize(data)
    trace, summary = inf_mod.run_chain(cfg, data.inputs, so.values[:, 0], progress=progress)
    d = data.d
    model = {
        "model": cfg.model,
        "lengthscales": [float(v) for v in summary.mean[:d]],
        "jitter": cfg.jitter,
        "standardization": {"mean": so.mean.tolist(), "sd": so.sd.tolist()},
        "train": {
            "inputs": data.inputs.tolist(),
            "outputs": data.outputs[:, 0].tolist(),
            "input_names": list(data.input_names),
            "output_names": list(data.output_names),
        },
        "fingerprint": _fingerprint(data),
        "posterior": summary.as_dict(),
        "accept_rate": trace.accept_rate,
        "config": {
            "n_iter": cfg.n_iter,
            "n_burn": cfg.n_burn,
            "lookback": cfg.lookback,
            "seeds": cfg.seeds.tolist(),
            "prior_sd": cfg.prior_sd.tolist(),
            "proposal_sd": cfg.proposal_sd.tolist(),
            "delta_seed": cfg.delta_seed.tolist(),
            "delta_prior_sd": cfg.delta_prior_sd.tolist(),
            "delta_proposal_sd": cfg.delta_proposal_sd.tolist(),
            "rng_seed": cfg.rng_seed,
        },
    }
    if cfg.model == inf_mod.NONSTATIONARY:
        model["deltas"] = [float(v) for v in summary.mean[d:]]
    return model, trace


def cmd_fit(args) -> int:
    data = ds_mod.load_csv(args.input, _comma_list(args.inputs), _comma_list(args.outputs))
    cfg = _chain_config(args, args.model, derive_seed(args.seed, f"fit-{args.model}"))
    progress = _progress_printer(cfg.n_iter) if args.verbose else None
    model, trace = _fit_model(data, cfg, progress)
    _write_json(model, args.out)
    if args.trace:
        _write_trace_csv(trace, _resolve(args.trace))
    return 0


def _progress_printer(n_iter: int):
    step = max(1, n_iter // 20)

    def report(t: int):
        if t % step == 0 or t == n_iter:
            print(f"iteration {t}/{n_iter}", file=sys.stderr)

    return report


def _predict_from_model(model: dict, test: ds_mod.Dataset) -> ev_mod.PredictionSet:
    train_inputs = np.asarray(model["train"]["inputs"], dtype=float)
    train_outputs = np.asarray(model["train"]["outputs"], dtype=float)
    mean = np.asarray(model["standardization"]["mean"], dtype=float)
    sd = np.asarray(model["standardization"]["sd"], dtype=float)
    so = ds_mod.StandardizedOutputs(
        values=((train_outputs - mean[0]) / sd[0])[:, None], mean=mean, sd=sd
    )
    predictor = GpPredictor(
        train_inputs,
        so.values[:, 0],
        SqeKernel(np.asarray(model["lengthscales"], dtype=float)),
        jitter=float(model["jitter"]),
        standardization=so,
    )
    means = np.empty(test.n)
    sds = np.empty(test.n)
    for i in range(test.n):
        pred = predictor.predict(test.inputs[i])
        means[i] = pred.mean
        sds[i] = np.sqrt(pred.variance)
    return ev_mod.PredictionSet(x=test.inputs, mean=means, sd=sds, y_true=test.outputs[:, 0])


def _load_model(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise DataValidationError(f"no such model file: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataValidationError(f"{path}: not a model file ({exc})") from None


def cmd_predict(args) -> int:
    model = _load_model(args.model)
    names = model["train"]
    test = ds_mod.load_csv(args.test, names["input_names"], names["output_names"])
    ps = _predict_from_model(model, test)
    ev_mod.write_predictions_csv(ps, _resolve(args.out), input_names=names["input_names"])
    return 0


def cmd_evaluate(args) -> int:
    ps = ev_mod.read_predictions_csv(args.predictions)
    payload = {
        "model": args.model_desc,
        "n_test": ps.n,
        "rmse": ev_mod.rmse(ps),
        "compatibility": ev_mod.compatibility(ps),
    }
    _write_json(payload, args.out)
    return 0


def cmd_pipeline(args) -> int:
    out_dir = _resolve(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train = ds_mod.load_csv(args.train, _comma_list(args.inputs), _comma_list(args.outputs))
    test = ds_mod.load_csv(args.test, _comma_list(args.inputs), _comma_list(args.outputs))

    tol = _tolerance_from_args(args)
    est = _estimator_from_args(args, train.p)
    ls = ih_mod.l_series(ds_mod.reduce(train), ds_mod.standardize(train), est, tol)
    report = ih_mod.inhomogeneity_parameter(ls, n=train.n, estimator=est, tolerance=tol)
    _write_json(
        {"n": report.n, "m": report.m, "p": report.p,
         "incompatible_indices": list(report.incompatible)},
        out_dir / "report.json",
    )

    models = _comma_list(args.models)
    comparison: dict[str, dict] = {}
    for name in models:
        if name not in (inf_mod.STATIONARY, inf_mod.NONSTATIONARY):
            raise DataValidationError(f"unknown model {name!r} in --models")
        cfg = _chain_config(args, name, derive_seed(args.seed, f"fit-{name}"))
        progress = _progress_printer(cfg.n_iter) if args.verbose else None
        model, trace = _fit_model(train, cfg, progress)
        _write_json(model, out_dir / f"model_{name}.json")
        _write_trace_csv(trace, out_dir / f"trace_{name}.csv")
        ps = _predict_from_model(model, test)
        ev_mod.write_predictions_csv(
            ps, out_dir / f"predictions_{name}.csv", input_names=train.input_names
        )
        comparison[name] = {"rmse": ev_mod.rmse(ps), "compatibility": ev_mod.compatibility(ps)}

    _write_json(
        {"train_inhomogeneity": report.p, "n_test": test.n, "models": comparison},
        out_dir / "comparison.json",
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inhomog",
        description="Inhomogeneity diagnostics, unit-root testing, and GP model comparison.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    def add_common_io(p):
        p.add_argument("--seed", type=int, default=0, help="global RNG seed")
        p.add_argument("--verbose", action="store_true", help="print progress")

    p = sub.add_parser("inhom", help="compute the inhomogeneity parameter", formatter_class=fmt)
    p.add_argument("--input", required=True, help="CSV file")
    p.add_argument("--outputs", required=True, help="comma-separated output columns")
    p.add_argument("--inputs", default=None, help="comma-separated input columns (optional)")
    p.add_argument("--shape", type=_shape, default=None, help="output tensor shape, e.g. 3x4")
    band = p.add_mutually_exclusive_group()
    band.add_argument("--delta", type=float, default=None, help="constant band half-width (default 0.05)")
    band.add_argument("--beta", type=float, default=None, help="proportional band factor in (0,1)")
    p.add_argument("--estimator", choices=["windowed", "tensor"], default=None,
                   help="correlation estimator (default: windowed for scalar outputs, tensor otherwise)")
    p.add_argument("--half-width", type=int, default=5, help="window half-width")
    p.add_argument("--out", default=None, help="report JSON path (default: stdout)")
    p.add_argument("--lvalues", default=None, help="optional L-values CSV path")
    add_common_io(p)
    p.set_defaults(func=cmd_inhom)

    p = sub.add_parser("adf", help="augmented Dickey-Fuller unit-root test", formatter_class=fmt)
    p.add_argument("--input", required=True, help="CSV file")
    p.add_argument("--column", required=True, help="series column name")
    p.add_argument("--max-lag", type=int, default=None, help="maximum lag (default: automatic)")
    p.add_argument("--lag-rule", choices=["aic", "fixed"], default="aic", help="lag selection rule")
    p.add_argument("--out", default=None, help="result JSON path (default: stdout)")
    add_common_io(p)
    p.set_defaults(func=cmd_adf)

    p = sub.add_parser("synth", help="generate synthetic datasets", formatter_class=fmt)
    p.add_argument("--kind", required=True, choices=list(sy_mod.KINDS))
    p.add_argument("--n", type=int, required=True, help="series length")
    p.add_argument("--lengthscales", type=_comma_floats, default=[5.0],
                   help="length scale(s), comma-separated")
    p.add_argument("--boundaries", type=_comma_ints, default=None,
                   help="piecewise segment start indices, comma-separated")
    p.add_argument("--noise-sd", type=float, default=1.0, help="unit-root innovation sd")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--noise-out", default=None, help="per-index noise bound CSV (noisy-trend)")
    add_common_io(p)
    p.set_defaults(func=cmd_synth)

    def add_chain_flags(p):
        p.add_argument("--config", default=None, help="TOML config file (flags override)")
        p.add_argument("--n-iter", type=int, default=None, help="total iterations (default 10000)")
        p.add_argument("--n-burn", type=int, default=None, help="burn-in iterations (default 2000)")
        p.add_argument("--lookback", type=int, default=None, help="lookback window length (default 100)")
        p.add_argument("--seeds", type=_comma_floats, default=None,
                       help="initial length scales, one per input dimension (default 1.0)")
        p.add_argument("--prior-sd", type=_comma_floats, default=None,
                       help="prior sds (default 100x seeds)")
        p.add_argument("--proposal-sd", type=_comma_floats, default=None,
                       help="proposal sds (default 0.5x seeds)")
        p.add_argument("--delta-seed", type=_comma_floats, default=None,
                       help="inner window-scale seeds (default 0.5)")
        p.add_argument("--delta-prior-sd", type=_comma_floats, default=None)
        p.add_argument("--delta-proposal-sd", type=_comma_floats, default=None)
        p.add_argument("--jitter", type=float, default=None, help="diagonal jitter (default 1e-8)")

    p = sub.add_parser("fit", help="run an MCMC fit", formatter_class=fmt)
    p.add_argument("--model", required=True, choices=[inf_mod.STATIONARY, inf_mod.NONSTATIONARY])
    p.add_argument("--input", required=True, help="training CSV")
    p.add_argument("--inputs", required=True, help="comma-separated input columns")
    p.add_argument("--outputs", required=True, help="single output column")
    add_chain_flags(p)
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--trace", default=None, help="trace CSV path")
    add_common_io(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="closed-form prediction at test inputs", formatter_class=fmt)
    p.add_argument("--model", required=True, help="model JSON from fit")
    p.add_argument("--test", required=True, help="test CSV (same schema as training)")
    p.add_argument("--out", required=True, help="predictions CSV path")
    add_common_io(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score a predictions file", formatter_class=fmt)
    p.add_argument("--predictions", required=True, help="predictions CSV from predict")
    p.add_argument("--out", required=True, help="summary JSON path")
    p.add_argument("--model-desc", default="", help="model descriptor echoed in the summary")
    add_common_io(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="inhom + fit + predict + evaluate, side by side",
                       formatter_class=fmt)
    p.add_argument("--train", required=True, help="training CSV")
    p.add_argument("--test", required=True, help="test CSV")
    p.add_argument("--inputs", required=True, help="comma-separated input columns")
    p.add_argument("--outputs", required=True, help="single output column")
    p.add_argument("--models", default="stationary,nonstationary",
                   help="comma-separated models to fit")
    band = p.add_mutually_exclusive_group()
    band.add_argument("--delta", type=float, default=None, help="constant band half-width (default 0.05)")
    band.add_argument("--beta", type=float, default=None, help="proportional band factor")
    p.add_argument("--estimator", choices=["windowed", "tensor"], default=None)
    p.add_argument("--half-width", type=int, default=5, help="window half-width")
    add_chain_flags(p)
    p.add_argument("--out-dir", required=True, help="directory for all artifacts")
    add_common_io(p)
    p.set_defaults(func=cmd_pipeline)

    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        return args.func(args)
    except DataValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


def main() -> None:
    raise SystemExit(dispatch())


if __name__ == "__main__":
    main()
