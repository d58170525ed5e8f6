"""Experiment orchestration CLI.

Subcommands: validate, rates, homog, compare, sim, jump, metrics, fig1.
A JSON experiment config (``--config``) can drive any of them; artifacts
are CSV/JSON (floats in shortest round-trip form, so reruns with the same
config and seeds are byte-identical in the numeric columns) plus a
run-metadata JSON.  Exit codes: 0 ok, 2 validation error, 3 numerical
error, 4 I/O error.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import click
import numpy as np

from . import __version__
from .errors import ModelValidationError, NumericalError, QtrajError
from .homogenize import homogenized_generator, compare_semigroups
from .jump import marginal, simulate_jump
from .metrics import (
    PathFunction, conditional_variation, mz_distance, offdiag_norm, smooth,
    time_outside_balls,
)
from .qnd import MarkovGenerator, ThreeScaleModel, check_qnd, transition_rates
from .sde import simulate_ensemble, simulate_three_level_diagonal
from .superop import lindblad_from_gksl, maximally_coherent, maximally_mixed, pointer_state

log = logging.getLogger("qtraj")

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# serialization helpers
# ---------------------------------------------------------------------------

def canonical_json(obj):
    """Canonical serialization used for config hashing and round-trips."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(obj):
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def _fmt(x):
    """Shortest round-trip decimal representation of a double."""
    return repr(float(x))


def write_csv(path, header, columns):
    """Write equal-length columns; raises on empty or ragged input."""
    columns = [np.asarray(c) for c in columns]
    if not columns or any(c.size == 0 for c in columns):
        raise ModelValidationError("refusing to write empty series")
    n = columns[0].shape[0]
    if any(c.shape[0] != n for c in columns):
        raise ModelValidationError("columns have unequal lengths")
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(n):
            cells = []
            for c in columns:
                x = c[i]
                cells.append("" if (isinstance(x, float) and np.isnan(x)) else _fmt(x))
            fh.write(",".join(cells) + "\n")
    return path


def emit_plot_data(x, series, labels, out_path, svg=False, xlabel="t"):
    """CSV with one column per series; optionally a companion SVG plot."""
    if len(series) != len(labels):
        raise ModelValidationError("one label per series required")
    write_csv(out_path, [xlabel] + list(labels), [np.asarray(x)] + list(series))
    if svg:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(8, 3))
        for s, lbl in zip(series, labels):
            ax.plot(x, s, label=lbl, lw=0.7)
        ax.set_xlabel(xlabel)
        ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        svg_path = Path(out_path).with_suffix(".svg")
        fig.savefig(svg_path)
        plt.close(fig)
        return Path(out_path), svg_path
    return Path(out_path)


class RunMetadata:
    def __init__(self, cfg_obj, seeds=()):
        self.data = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "config_hash": config_hash(cfg_obj),
            "config": cfg_obj,
            "seeds": list(map(int, seeds)),
            "version": __version__,
            "numpy_version": np.__version__,
            "wall_clock_s": {},
        }
        self._t0 = None
        self._phase = None

    def phase(self, name):
        self.finish_phase()
        self._phase = name
        self._t0 = time.perf_counter()
        return self

    def finish_phase(self):
        if self._phase is not None:
            self.data["wall_clock_s"][self._phase] = time.perf_counter() - self._t0
            self._phase = None

    def write(self, out_dir):
        self.finish_phase()
        p = Path(out_dir) / "run_metadata.json"
        p.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n")
        return p


def _load_model(model_arg):
    """Model from a path, an inline dict, or the literal 'fig1'/'rabi'."""
    from .presets import rabi_model, three_level_model

    if isinstance(model_arg, dict):
        return ThreeScaleModel.from_dict(model_arg)
    if model_arg in ("fig1", "three-level"):
        return three_level_model(gamma=10.0)
    if model_arg == "rabi":
        return rabi_model(gamma=10.0)
    path = Path(model_arg)
    if not path.exists():
        raise ModelValidationError(f"model file not found: {path}")
    return ThreeScaleModel.from_json(path.read_text())


def _initial_state(name, d):
    if name == "mixed":
        return maximally_mixed(d)
    if name == "coherent":
        return maximally_coherent(d)
    if name.startswith("pointer"):
        i = int(name[len("pointer"):] or 0)
        if not 0 <= i < d:
            raise ModelValidationError(f"pointer index {i} outside 0..{d-1}")
        return pointer_state(i, d)
    raise ModelValidationError(
        f"unknown initial state '{name}' (use mixed, coherent, pointerK)")


def _out_dir(ctx_out, kind, cfg_obj):
    if ctx_out:
        out = Path(ctx_out)
    else:
        root = Path(os.environ.get("QTRAJ_OUT_ROOT", "runs"))
        out = root / f"{kind}-{config_hash(cfg_obj)[:8]}"
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# command implementations (shared by CLI flags and --config dispatch)
# ---------------------------------------------------------------------------

def _cmd_validate(model_arg, tol, out, echo=print):
    model = _load_model(model_arg)
    report = check_qnd(model, tol)
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    echo(text)
    if out:
        (Path(out) / "assumptions.json").write_text(text + "\n")
    return report


def _cmd_rates(model_arg, out, echo=print):
    model = _load_model(model_arg)
    T = transition_rates(model)
    text = json.dumps(T.to_dict(), indent=2, sort_keys=True)
    echo(text)
    if out:
        (Path(out) / "rates.json").write_text(text + "\n")
    return T


def _cmd_homog(model_arg, out, full=False, echo=print):
    model = _load_model(model_arg)
    l0 = lindblad_from_gksl(model.level0)
    l1 = lindblad_from_gksl(model.level1)
    l2 = lindblad_from_gksl(model.level2)
    res = homogenized_generator(l0, l1, l2)
    P, pinv, linf = (res.projector.matrix, res.pseudo_inverse.matrix,
                     res.l_infinity.matrix)
    M2 = l2.matrix
    eye = np.eye(M2.shape[0])
    summary = {
        "spectral_gap": res.spectral_gap,
        "kernel_dim": res.kernel_dim,
        "residuals": {
            "P2_minus_P": float(np.linalg.norm(P @ P - P, 2)),
            "P_L2": float(np.linalg.norm(P @ M2, 2)),
            "L2_P": float(np.linalg.norm(M2 @ P, 2)),
            "L2_pinv_minus_IminusP": float(np.linalg.norm(M2 @ pinv - (eye - P), 2)),
            "pinv_P": float(np.linalg.norm(pinv @ P, 2)),
        },
    }
    text = json.dumps(summary, indent=2, sort_keys=True)
    echo(text)
    if out:
        (Path(out) / "homog_summary.json").write_text(text + "\n")
        if full:
            np.savez_compressed(Path(out) / "homog_operators.npz",
                                projector=P, pseudo_inverse=pinv,
                                l_infinity=linf)
    return res


def _cmd_compare(model_arg, gammas, t, out, echo=print):
    model = _load_model(model_arg)
    l0 = lindblad_from_gksl(model.level0)
    l1 = lindblad_from_gksl(model.level1)
    l2 = lindblad_from_gksl(model.level2)
    pairs = compare_semigroups(l0, l1, l2, gammas, t)
    if out:
        write_csv(Path(out) / "compare.csv", ["gamma", "error"],
                  [np.array([g for g, _ in pairs]), np.array([e for _, e in pairs])])
    for g, e in pairs:
        echo(f"gamma={_fmt(g)} error={_fmt(e)}")
    return pairs


def _traj_csv_columns(times, states):
    d = states.shape[-1]
    diag = np.einsum('tii->ti', states).real
    off = states.copy()
    idx = np.arange(d)
    off[:, idx, idx] = 0.0
    offn = np.sqrt((np.abs(off) ** 2).sum(axis=(1, 2)))
    header = ["t"] + [f"diag_{i}" for i in range(d)] + ["offdiag_norm"]
    cols = [times] + [diag[:, i] for i in range(d)] + [offn]
    return header, cols


def _cmd_sim(model_arg, gamma, t_end, h, n, seed, stride, rho0_name, out,
             workers=1, write_states=True, meta=None, echo=print):
    model = _load_model(model_arg)
    if gamma is not None:
        model = model.with_gamma(gamma)
    rho0 = _initial_state(rho0_name, model.dim)
    ens = simulate_ensemble(model, rho0, n, t_end, h=h, base_seed=seed,
                            save_stride=stride, keep_states=True,
                            track_pi_l_norm=True, workers=workers)
    out = Path(out)
    for i in range(ens.n_traj):
        header, cols = _traj_csv_columns(ens.times, ens.states[i])
        write_csv(out / f"trajectory_{i:04d}.csv", header, cols)
    d = model.dim
    diag_mean = np.einsum('tii->ti', ens.mean).real
    diag_se = np.einsum('tii->ti', ens.stderr_real)
    header = (["t"] + [f"mean_diag_{i}" for i in range(d)]
              + [f"se_diag_{i}" for i in range(d)])
    cols = [ens.times] + [diag_mean[:, i] for i in range(d)] \
        + [diag_se[:, i] for i in range(d)]
    write_csv(out / "ensemble.csv", header, cols)
    if write_states:
        np.savez_compressed(out / "states.npz", times=ens.times,
                            states=ens.states, seeds=np.asarray(ens.seeds))
    (out / "model.json").write_text(model.to_json(indent=2) + "\n")
    echo(f"wrote {ens.n_traj} trajectories, {len(ens.times)} saved times, "
         f"h={_fmt(ens.h)} to {out}")
    return ens


def _cmd_jump(rates_arg, model_arg, mu_arg, t_end, n, seed, out, points=101,
              echo=print):
    if rates_arg:
        path = Path(rates_arg)
        if not path.exists():
            raise ModelValidationError(f"rates file not found: {path}")
        T = MarkovGenerator.from_json(path.read_text())
    elif model_arg:
        T = transition_rates(_load_model(model_arg))
    else:
        raise ModelValidationError("need --rates-file or --model")
    d = T.dim
    if mu_arg:
        mu = np.array([float(x) for x in mu_arg.split(",")])
    else:
        mu = np.full(d, 1.0 / d)
    out = Path(out)
    rows_path, rows_t, rows_s = [], [], []
    for i in range(n):
        p = simulate_jump(T, mu, t_end, seed=seed + i)
        rows_path += [i] * len(p.jump_times)
        rows_t += list(p.jump_times)
        rows_s += list(p.states[1:])
    if rows_t:
        write_csv(out / "jump_paths.csv", ["path", "t_jump", "new_state"],
                  [np.array(rows_path), np.array(rows_t), np.array(rows_s)])
    ts = np.linspace(0.0, t_end, points)
    marg = np.stack([marginal(T, mu, t) for t in ts])
    write_csv(out / "jump_marginal.csv", ["t"] + [f"p_{i}" for i in range(d)],
              [ts] + [marg[:, i] for i in range(d)])
    echo(f"wrote {n} paths and the marginal grid to {out}")


def _cmd_metrics(run_dir, out, eps, tau, t_max, echo=print):
    run_dir = Path(run_dir)
    npz_path = run_dir / "states.npz"
    if not npz_path.exists():
        raise ModelValidationError(
            f"{npz_path} not found; rerun `sim` with state output enabled")
    data = np.load(npz_path)
    times, states = data["times"], data["states"]
    n = states.shape[0]
    paths = [PathFunction(times=times, values=states[i]) for i in range(n)]

    diagnostics = {"n_trajectories": int(n), "horizon": float(times[-1])}
    t_out = np.array([time_outside_balls(p, eps) for p in paths])
    diagnostics["time_outside"] = {
        "epsilon": eps,
        "mean": float(t_out.mean()),
        "stderr": float(t_out.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
    }

    off = np.stack([offdiag_norm(p).values for p in paths])
    write_csv(Path(out) / "offdiag_decay.csv", ["t", "mean_offdiag_norm"],
              [times, off.mean(axis=0)])

    k = min(n, 10)
    mz = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            mz[i, j] = mz[j, i] = mz_distance(paths[i], paths[j], t_max).value
    diagnostics["mz_pairwise_first_k"] = {"k": k, "matrix": mz.tolist(),
                                          "truncation_error": float(np.exp(-t_max))}

    model_path = run_dir / "model.json"
    if model_path.exists() and tau is not None:
        model = ThreeScaleModel.from_json(model_path.read_text())

        class _Shim:
            pass

        shim = _Shim()
        shim.states = states
        shim.times = times
        shim.n_traj = n
        shim.pi_l_norm_integral = None
        est, se = conditional_variation(model, shim, tau)
        diagnostics["conditional_variation"] = {"tau": tau, "estimate": est,
                                                "stderr": se}
    text = json.dumps(diagnostics, indent=2, sort_keys=True)
    echo(text)
    (Path(out) / "diagnostics.json").write_text(text + "\n")
    return diagnostics


def _cmd_fig1(gamma, steps, smooth_window, seed, h, out, svg=False, echo=print):
    times, values = simulate_three_level_diagonal(gamma, steps, h=h, seed=seed)
    x = values[0]
    weighted = x @ np.array([1.0, 2.0, 3.0])
    out = Path(out)
    series = [("x1", x[:, 0]), ("x2", x[:, 1]), ("x3", x[:, 2]),
              ("weighted", weighted)]
    written = []
    for name, raw in series:
        raw_path = PathFunction(times=times, values=raw)
        sm = smooth(raw_path, smooth_window)
        padded = np.full(times.size, np.nan)
        padded[times.size - sm.values.size:] = sm.values
        written.append(emit_plot_data(times, [raw, padded],
                                      [name, f"{name}_smoothed"],
                                      out / f"fig1_{name}.csv", svg=svg))
    echo(f"wrote {len(written)} series to {out} "
         f"(h={_fmt(times[1] - times[0])}, horizon={_fmt(times[-1])})")
    return times, x


# ---------------------------------------------------------------------------
# click wiring
# ---------------------------------------------------------------------------

@click.group(invoke_without_command=True)
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Experiment config JSON; dispatches to the configured kind.")
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Output directory (default: $QTRAJ_OUT_ROOT/<kind>-<hash>).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--threads", type=int, default=1, show_default=True,
              help="Worker cap for ensemble simulation.")
@click.option("--log-level", default="warning", show_default=True)
@click.pass_context
def cli(ctx, config_path, out_dir, seed, threads, log_level):
    logging.basicConfig(level=getattr(logging, log_level.upper(), logging.WARNING))
    ctx.ensure_object(dict)
    ctx.obj.update(out=out_dir, seed=seed, threads=threads)
    if ctx.invoked_subcommand is None:
        if config_path is None:
            click.echo(ctx.get_help())
            return
        run_config(Path(config_path), out_dir, threads)


def run_config(config_path, out_override=None, threads=1):
    """Dispatch an ExperimentConfig file to its command implementation."""
    try:
        cfg = json.loads(Path(config_path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelValidationError(f"bad config JSON: {exc}") from None
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ModelValidationError("config must be an object with a 'kind'")
    if cfg.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ModelValidationError(
            f"unsupported schema_version {cfg.get('schema_version')}")
    kind = cfg["kind"]
    params = dict(cfg.get("params", {}))
    model = cfg.get("model")
    out = Path(out_override) if out_override else _out_dir(cfg.get("out"), kind, cfg)
    out.mkdir(parents=True, exist_ok=True)
    meta = RunMetadata(cfg, seeds=[params.get("seed", 0)])
    meta.phase("run")
    if kind == "validate":
        _cmd_validate(model, params.get("tol", 1e-10), out)
    elif kind == "rates":
        _cmd_rates(model, out)
    elif kind == "homog":
        _cmd_homog(model, out, full=params.get("full", False))
    elif kind == "compare":
        _cmd_compare(model, params.get("gammas", [3, 10, 30, 100]),
                     params.get("t", 1.0), out)
    elif kind == "sim":
        _cmd_sim(model, params.get("gamma"), params["t_end"], params.get("h"),
                 params.get("n", 1), params.get("seed", 0),
                 params.get("stride", 1), params.get("rho0", "mixed"), out,
                 workers=threads, write_states=params.get("states", True),
                 meta=meta)
    elif kind == "jump":
        _cmd_jump(params.get("rates_file"), model, params.get("mu"),
                  params["t_end"], params.get("n", 1), params.get("seed", 0),
                  out, points=params.get("points", 101))
    elif kind == "metrics":
        _cmd_metrics(params["run"], out, params.get("eps", 0.2),
                     params.get("tau"), params.get("t_max", 30.0))
    elif kind == "fig1":
        _cmd_fig1(params.get("gamma", 1e4), params.get("steps", 10 ** 6),
                  params.get("smooth", 1000), params.get("seed", 0),
                  params.get("h"), out, svg=params.get("svg", False))
    else:
        raise ModelValidationError(f"unknown experiment kind '{kind}'")
    meta.write(out)
    return out


def _meta_for(ctx, kind, **params):
    cfg = {"schema_version": SCHEMA_VERSION, "kind": kind, "params": params}
    out = _out_dir(ctx.obj.get("out"), kind, cfg)
    meta = RunMetadata(cfg, seeds=[params.get("seed", ctx.obj.get("seed", 0))])
    return cfg, out, meta


@cli.command()
@click.argument("model", type=str)
@click.option("--tol", type=float, default=1e-10, show_default=True)
@click.pass_context
def validate(ctx, model, tol):
    """Check the structural assumptions of a model file."""
    cfg, out, meta = _meta_for(ctx, "validate", model=str(model), tol=tol)
    meta.phase("run")
    _cmd_validate(model, tol, out, echo=click.echo)
    meta.write(out)


@cli.command()
@click.argument("model", type=str)
@click.pass_context
def rates(ctx, model):
    """Jump rates of the strong-noise limit of a model."""
    cfg, out, meta = _meta_for(ctx, "rates", model=str(model))
    meta.phase("run")
    _cmd_rates(model, out, echo=click.echo)
    meta.write(out)


@cli.command()
@click.argument("model", type=str)
@click.option("--full", is_flag=True, help="Also write the operator matrices.")
@click.pass_context
def homog(ctx, model, full):
    """Kernel projector, pseudo-inverse and homogenized generator."""
    cfg, out, meta = _meta_for(ctx, "homog", model=str(model), full=full)
    meta.phase("run")
    _cmd_homog(model, out, full=full, echo=click.echo)
    meta.write(out)


@cli.command()
@click.argument("model", type=str)
@click.option("--gammas", default="3,10,30,100", show_default=True)
@click.option("--t", type=float, default=1.0, show_default=True)
@click.pass_context
def compare(ctx, model, gammas, t):
    """Norm distance between the true and homogenized semigroups."""
    glist = [float(g) for g in gammas.split(",")]
    cfg, out, meta = _meta_for(ctx, "compare", model=str(model), gammas=glist, t=t)
    meta.phase("run")
    _cmd_compare(model, glist, t, out, echo=click.echo)
    meta.write(out)


@cli.command()
@click.argument("model", type=str)
@click.option("--gamma", type=float, default=None, help="Override the model's gamma.")
@click.option("--t-end", type=float, required=True)
@click.option("--h", type=float, default=None,
              help="Step size (capped at 1e-2 / gamma^2).")
@click.option("--n", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--stride", type=int, default=1, show_default=True)
@click.option("--rho0", default="mixed", show_default=True,
              help="mixed | coherent | pointerK")
@click.option("--no-states", is_flag=True, help="Skip the states.npz artifact.")
@click.pass_context
def sim(ctx, model, gamma, t_end, h, n, seed, stride, rho0, no_states):
    """Monte-Carlo ensemble of diffusive trajectories."""
    seed = ctx.obj["seed"] if seed is None else seed
    cfg, out, meta = _meta_for(ctx, "sim", model=str(model), gamma=gamma,
                               t_end=t_end, h=h, n=n, seed=seed, stride=stride,
                               rho0=rho0, states=not no_states)
    meta.phase("run")
    _cmd_sim(model, gamma, t_end, h, n, seed, stride, rho0, out,
             workers=ctx.obj["threads"], write_states=not no_states,
             meta=meta, echo=click.echo)
    meta.write(out)


@cli.command("jump")
@click.option("--rates-file", type=str, default=None,
              help="MarkovGenerator JSON; alternative to --model.")
@click.option("--model", type=str, default=None)
@click.option("--mu", type=str, default=None, help="Comma-separated initial law.")
@click.option("--t-end", type=float, required=True)
@click.option("--n", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--points", type=int, default=101, show_default=True)
@click.pass_context
def jump_cmd(ctx, rates_file, model, mu, t_end, n, seed, points):
    """Sample the limiting jump process and its marginal."""
    seed = ctx.obj["seed"] if seed is None else seed
    cfg, out, meta = _meta_for(ctx, "jump", rates_file=rates_file,
                               model=model, mu=mu, t_end=t_end, n=n,
                               seed=seed, points=points)
    meta.phase("run")
    _cmd_jump(rates_file, model, mu, t_end, n, seed, out, points=points,
              echo=click.echo)
    meta.write(out)


@cli.command("metrics")
@click.option("--run", "run_dir", type=click.Path(), required=True,
              help="A `sim` output directory.")
@click.option("--eps", type=float, default=0.2, show_default=True)
@click.option("--tau", type=float, default=None)
@click.option("--t-max", type=float, default=30.0, show_default=True)
@click.pass_context
def metrics_cmd(ctx, run_dir, eps, tau, t_max):
    """Convergence diagnostics for a finished simulation run."""
    cfg, out, meta = _meta_for(ctx, "metrics", run=str(run_dir), eps=eps,
                               tau=tau, t_max=t_max)
    meta.phase("run")
    _cmd_metrics(run_dir, out, eps, tau, t_max, echo=click.echo)
    meta.write(out)


@cli.command()
@click.option("--gamma", type=float, default=1e4, show_default=True)
@click.option("--steps", type=int, default=10 ** 6, show_default=True)
@click.option("--smooth", "smooth_window", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--h", type=float, default=None)
@click.option("--svg", is_flag=True)
@click.pass_context
def fig1(ctx, gamma, steps, smooth_window, seed, h, svg):
    """Three-level collapse demo: diagonal coordinates, raw and smoothed."""
    seed = ctx.obj["seed"] if seed is None else seed
    cfg, out, meta = _meta_for(ctx, "fig1", gamma=gamma, steps=steps,
                               smooth=smooth_window, seed=seed, h=h, svg=svg)
    meta.phase("run")
    _cmd_fig1(gamma, steps, smooth_window, seed, h, out, svg=svg,
              echo=click.echo)
    meta.write(out)


def main(argv=None):
    try:
        cli(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        return 1
    except click.ClickException as exc:
        exc.show()
        return 2
    except ModelValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except QtrajError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
