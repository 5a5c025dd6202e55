"""Command-line front end.

    gsfluct fixed-point  --S 1 --beta 0.2 --h 0.3 --D 0.05
    gsfluct clt          --S 1 --N 12 --beta 0.2 --h 0.3 --D 0.05 --samples 2000 --out runs/
    gsfluct concentration ...
    gsfluct identities   --S 2 --N 8 --beta 0.3 --steps 64

Parameters may also come from an INI file given with --config, with a [model]
section (S, N, beta, h, D) and a [run] section (samples, steps, nodes, tol,
seed, u, out, workers, check); flags override the file.
"""

import argparse
import configparser
from dataclasses import asdict, dataclass, fields
import math
import os
import sys

import numpy as np

from . import effective, experiments, interpolation, model, records
from .parallel import resolve_workers
from .seeding import derive_seed, generator

COMMANDS = ("fixed-point", "clt", "identities", "concentration")
DEFAULT_SAMPLES = {"fixed-point": 0, "clt": 2000, "concentration": 500, "identities": 100}
EXECUTION_ONLY = ("out", "workers", "check")


@dataclass(frozen=True)
class RunConfig:
    S: int
    N: int
    beta: float
    h: float = 0.0
    D: float = 0.0
    samples: int = 0
    steps: int = interpolation.DEFAULT_STEPS
    nodes: int = effective.DEFAULT_NODES
    tol: float = 1e-12
    u: tuple = experiments.DEFAULT_U_GRID
    seed: int = 0
    out: str = None
    workers: int = 1
    check: bool = False
    zero_config: bool = False

    @property
    def params(self):
        return model.ModelParams(self.S, self.N, self.beta, self.h, self.D)

    def provenance(self):
        """The configuration echoed into outputs; knobs that cannot change results are left out."""
        d = asdict(self)
        for key in EXECUTION_ONLY:
            d.pop(key)
        d["u"] = list(d["u"])
        return d


def _u_list(text):
    return tuple(float(x) for x in str(text).split(",") if x.strip())


def _bool(text):
    return str(text).strip().lower() in ("1", "true", "yes", "on")


_CASTS = {"S": int, "N": int, "beta": float, "h": float, "D": float, "samples": int,
          "steps": int, "nodes": int, "tol": float, "u": _u_list, "seed": int,
          "out": str, "workers": int, "check": _bool, "zero_config": _bool}


def read_config_file(path):
    parser = configparser.ConfigParser()
    parser.optionxform = str
    if not parser.read(path):
        raise FileNotFoundError(path)
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            key = key.replace("-", "_")
            if key not in _CASTS:
                raise ValueError(f"unknown key {key!r} in [{section}] of {path}")
            values[key] = _CASTS[key](raw)
    return values


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [model] and [run] sections")
    common.add_argument("--S", type=int, help="spin cap: spins take values in -S..S")
    common.add_argument("--N", type=int, help="number of sites")
    common.add_argument("--beta", type=float, help="inverse temperature")
    common.add_argument("--h", type=float, help="external field (>= 0)")
    common.add_argument("--D", type=float, help="crystal field")
    common.add_argument("--samples", type=int, help="disorder samples / paths")
    common.add_argument("--steps", type=int, help="time steps of the interpolation grid")
    common.add_argument("--nodes", type=int, help="Gauss-Hermite nodes")
    common.add_argument("--tol", type=float, help="fixed-point tolerance")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--u", type=_u_list, help="comma-separated characteristic-function points")
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int, help="worker processes (default $GSFLUCT_WORKERS or 1)")
    common.add_argument("--check", action="store_true", default=None,
                        help="exit nonzero unless the acceptance bands hold")
    common.add_argument("--zero-config", dest="zero_config", action="store_true", default=None,
                        help="identities: use the all-zero configuration")

    parser = argparse.ArgumentParser(prog="gsfluct", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def resolve_config(args, parser):
    values = read_config_file(args.config) if args.config else {}
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    if args.command == "fixed-point":
        values.setdefault("N", 1)
    for key in ("S", "N", "beta"):
        if key not in values:
            parser.error(f"the following arguments are required: --{key}")
    values.setdefault("samples", DEFAULT_SAMPLES[args.command])
    values["workers"] = resolve_workers(values.get("workers"))
    try:
        cfg = RunConfig(**values)
        cfg.params
    except ValueError as exc:
        parser.error(str(exc))
    return cfg


def _emit(cfg, name, text):
    if cfg.out is None:
        return
    os.makedirs(cfg.out, exist_ok=True)
    with open(os.path.join(cfg.out, name), "w", newline="") as fh:
        fh.write(text)


def _report(cfg, command, stem, **parts):
    doc = records.summary_document(command, cfg.provenance(), **parts)
    text = records.dump_json(doc)
    _emit(cfg, f"{stem}.json", text)
    sys.stdout.write(text)
    return doc


def cmd_fixed_point(cfg):
    params = cfg.params
    fp = effective.fixed_point_solve(params, tol=cfg.tol, node_count=cfg.nodes)
    law = effective.limit_variance(fp, params, cfg.nodes) if fp.converged else None
    check = experiments.BandCheck("fixed-point residual", fp.residual, cfg.tol)
    _report(cfg, "fixed-point", "fixed_point", fixed_point=asdict(fp),
            limit_law=asdict(law) if law else None, checks=[check])
    return 0 if fp.converged else 1


def _effective_parts(fp, law):
    return dict(fixed_point=asdict(fp), limit_law=asdict(law))


def cmd_clt(cfg):
    exp_cfg = experiments.ExperimentConfig(cfg.params, cfg.samples, cfg.seed, cfg.u, cfg.nodes, cfg.tol)
    s = experiments.run_clt_experiment(exp_cfg, cfg.workers)
    _emit(cfg, "clt_samples.csv",
          records.csv_text(records.CLT_COLUMNS, records.clt_rows(s), cfg.provenance()))
    checks = s.checks()
    summary = {
        "N": s.N, "samples": int(s.samples.size),
        "empirical_mean": s.empirical_mean, "mean_se": s.mean_se,
        "empirical_variance": s.empirical_variance, "variance_se": s.variance_se,
        "third_abs_moment": s.third_abs_moment, "third_abs_se": s.third_abs_se,
        "ecf": [{"u": u, "re": z.real, "im": z.imag, "se": se,
                 "target": math.exp(-u * u * s.nu_squared_ref / 2)}
                for u, z, se in zip(s.u_grid, s.ecf, s.ecf_se)],
        "ks_statistic": s.ks_statistic, "degenerate": s.degenerate,
        "nu_squared_ref": s.nu_squared_ref,
    }
    doc = _report(cfg, "clt", "clt_summary", summary=summary, checks=checks,
                  **_effective_parts(s.fixed_point, s.law))
    return 0 if (doc["passed"] or not cfg.check) else 1


def cmd_concentration(cfg):
    exp_cfg = experiments.ExperimentConfig(cfg.params, cfg.samples, cfg.seed, cfg.u, cfg.nodes, cfg.tol)
    s = experiments.run_concentration_experiment(exp_cfg, cfg.workers)
    _emit(cfg, "concentration_samples.csv",
          records.csv_text(records.CONCENTRATION_COLUMNS, records.concentration_rows(s),
                           cfg.provenance()))
    summary = {"N": s.N, "samples": int(s.seeds.size),
               "n_times_var_r12": s.n_times_var_r12, "r12_se": s.r12_se,
               "n_times_var_r11": s.n_times_var_r11, "r11_se": s.r11_se,
               "bound_r12": s.bound_r12, "bound_r11": s.bound_r11}
    doc = _report(cfg, "concentration", "concentration_summary", summary=summary,
                  checks=s.checks(), fixed_point=asdict(s.fixed_point))
    return 0 if (doc["passed"] or not cfg.check) else 1


def _configs(cfg, j):
    if cfg.zero_config:
        zero = np.zeros(cfg.N, dtype=np.int64)
        return zero, zero
    rng = generator(derive_seed(cfg.seed, j))
    return (rng.integers(-cfg.S, cfg.S + 1, cfg.N), rng.integers(-cfg.S, cfg.S + 1, cfg.N))


def identity_suite(cfg):
    """Run the four interpolation identities; returns (checks, summary)."""
    params = cfg.params
    fp, _ = experiments.solve_effective(params, cfg.nodes, cfg.tol)
    grid = interpolation.PathGrid(cfg.steps)
    count = max(cfg.samples, 2)

    worst = 0.0
    z2 = []
    qv_gap = 0.0
    for j in range(count):
        s1, s2 = _configs(cfg, 2 * j)
        path = interpolation.sample_path(params, grid, derive_seed(cfg.seed, 2 * j + 1))
        res = interpolation.endpoint_identity_check(s1, path, fp, params)
        scale = 1 + abs(model.hamiltonian(s1, path.couplings(), params))
        worst = max(worst, res / scale)
        empirical, analytic = interpolation.quadratic_variation_estimate(s1, s2, path, fp, params)
        mean, sd = interpolation.qv_moments(s1, s2, fp, params, grid)
        qv_gap = max(qv_gap, abs(empirical - analytic))
        z2.append(0.0 if sd == 0 else ((empirical - mean) / sd) ** 2)
    qv_rms_z = float(np.sqrt(np.mean(z2)))

    rng = generator(derive_seed(cfg.seed, 2 * count + 2))
    args = rng.uniform(-2, 2, size=(8, 10_000))
    lhs, rhs = interpolation.drift_rearrangement_check(*args)
    drift_rel = float(np.max(np.abs(lhs - rhs) / (1 + np.abs(lhs))))

    checks = [
        experiments.BandCheck("endpoint relative residual", worst, 1e-9),
        experiments.BandCheck("quadratic variation rms z-score", qv_rms_z, 2.0),
        experiments.BandCheck("drift rearrangement relative gap", drift_rel, 1e-12),
    ]
    summary = {"endpoint_max_relative_residual": worst, "qv_max_abs_gap": qv_gap,
               "qv_rms_z": qv_rms_z, "drift_max_relative_gap": drift_rel}
    if not cfg.zero_config:
        ibp_grid = grid if grid.steps % 2 == 0 else interpolation.PathGrid(2)
        est = interpolation.ibp_identity_estimate(params, fp, 0.5, count, ibp_grid,
                                                  derive_seed(cfg.seed, 2 * count + 1), cfg.workers)
        checks.append(experiments.BandCheck("gaussian ibp |lhs - rhs|", est.gap,
                                            3 * (est.lhs_se + est.rhs_se)))
        summary["ibp"] = asdict(est)
    return checks, summary, fp


def cmd_identities(cfg):
    checks, summary, fp = identity_suite(cfg)
    doc = _report(cfg, "identities", "identities", summary=summary, checks=checks,
                  fixed_point=asdict(fp))
    return 0 if doc["passed"] else 1


HANDLERS = {"fixed-point": cmd_fixed_point, "clt": cmd_clt,
            "concentration": cmd_concentration, "identities": cmd_identities}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = resolve_config(args, parser)
    try:
        return HANDLERS[args.command](cfg)
    except experiments.ConvergenceError as exc:
        print(f"gsfluct: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
