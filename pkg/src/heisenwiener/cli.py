"""Command line entry point: ``heisenwiener {kernel,sample,cylinder,fk,validate}``.

Every subcommand accepts ``--config FILE`` (see :mod:`heisenwiener.config`);
flags override file values.  Outputs carry provenance: CSV files start with
``# heisenwiener <version>`` and ``# config <json>`` comment lines, and JSON
lines streams start with a ``{"record": "provenance", ...}`` record.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure,
4 acceptance failure.  Errors are also written to stderr as one JSON record.
"""

import argparse
import contextlib
import csv
import json
import sys

import numpy as np

from . import __version__, config, feynmankac as fk, heatkernel as hk, measure, sampler, validation

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ACCEPTANCE = 0, 2, 3, 4

KERNEL_COLUMNS = ["t", "|z|", "u", "p_t", "est_tail_error"]
DENSITY_COLUMNS = ["r_lo", "r_hi", "u_lo", "u_hi", "mass", "density", "stderr", "count"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise config.ConfigError(message)


def _floats(text):
    return config._floats(text)


def build_parser():
    p = _Parser(prog="heisenwiener", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--out", help="output path, '-' for stdout")
        return sp

    k = common(sub.add_parser("kernel", help="evaluate p_t on points"))
    k.add_argument("--n", type=int)
    k.add_argument("--t", type=_floats)
    k.add_argument("--z", type=_floats, help="comma-separated |z| values")
    k.add_argument("--u", type=_floats)
    k.add_argument("--method", choices=["nodes", "adaptive"])

    s = common(sub.add_parser("sample", help="simulate paths"))
    s.add_argument("--n", type=int)
    s.add_argument("--t", type=float)
    s.add_argument("--intervals", type=int)
    s.add_argument("--substeps", type=int)
    s.add_argument("--n-paths", dest="n_paths", type=int)
    s.add_argument("--scheme", choices=list(sampler.SCHEMES))
    s.add_argument("--summary", help="JSON-lines file for the moments summary")

    c = common(sub.add_parser("cylinder", help="Wiener measure of a cylinder set"))
    c.add_argument("--method", choices=["quadrature", "mc", "both"])
    c.add_argument("--n-paths", dest="n_paths", type=int)
    c.add_argument("--substeps", type=int)

    f = common(sub.add_parser("fk", help="Feynman-Kac solution at a point"))
    f.add_argument("--t", type=float)
    f.add_argument("--n-paths", dest="n_paths", type=int)
    f.add_argument("--substeps", type=int)
    f.add_argument("--density-out", dest="density_out")

    v = common(sub.add_parser("validate", help="run acceptance criteria"))
    v.add_argument("--suite", choices=["all"] + sorted(validation.SUITES))
    v.add_argument("--scale", type=float)
    return p


@contextlib.contextmanager
def _open_out(path):
    if path in (None, "", "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _csv_header(fh, cfg):
    fh.write("# heisenwiener %s\n# config %s\n" % (__version__, cfg.dumps()))


def _jsonl(fh, record):
    fh.write(json.dumps(record, sort_keys=True) + "\n")


def _provenance(cfg):
    return {"record": "provenance", "package": "heisenwiener", "version": __version__,
            "config": cfg.as_dict()}


# -- subcommands -------------------------------------------------------------------

def cmd_kernel(cfg):
    kcfg = hk.KernelConfig(n=cfg["n"])
    zs = cfg["z"] if cfg["z"] is not None else [0.0]
    rows = []
    for t in cfg["t"]:
        for r in zs:
            for u in cfg["u"]:
                pt = np.zeros(2 * cfg["n"] + 1)
                pt[0], pt[-1] = r, u
                if cfg["method"] == "adaptive":
                    val, err = hk.kernel_eval(kcfg, t, pt, method="adaptive"), float("nan")
                else:
                    val, err = hk.kernel_eval(kcfg, t, pt, return_error=True)
                rows.append([repr(float(x)) for x in (t, r, u, val, err)])
    with _open_out(cfg["out"]) as fh:
        _csv_header(fh, cfg)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(KERNEL_COLUMNS)
        w.writerows(rows)
    return EXIT_OK


def cmd_sample(cfg):
    n = cfg["n"]
    grid = sampler.PathGrid.uniform(cfg["t"], cfg["intervals"], cfg["substeps"])
    batch = sampler.sample_paths(n, grid, cfg["n_paths"], cfg["seed"], workers=cfg["workers"],
                                 scheme=cfg["scheme"])
    coords = [c for i in range(1, n + 1) for c in ("x_%d" % i, "y_%d" % i)] + ["u"]
    with _open_out(cfg["out"]) as fh:
        _csv_header(fh, cfg)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path_id", "time"] + coords)
        for k in range(batch.n_paths):
            for t, pt in zip(grid.times, batch.points[k]):
                w.writerow([batch.first_path + k, repr(float(t))] + [repr(float(x)) for x in pt])
    end = batch.points[:, -1]
    from .estimates import mean_estimate, variance_estimate
    summary = {"record": "moments", "t": cfg["t"], "n_paths": batch.n_paths, "seed": cfg["seed"],
               "E_abs_z2": mean_estimate(np.sum(end[:, :-1] ** 2, axis=1)).value,
               "E_abs_z2_target": 4.0 * n * cfg["t"],
               "var_u": variance_estimate(end[:, -1]).value if batch.n_paths > 1 else None,
               "var_u_target": 16.0 * n * cfg["t"] ** 2}
    target = cfg["summary"]
    if target:
        with open(target, "w") as fh:
            _jsonl(fh, _provenance(cfg))
            _jsonl(fh, summary)
    else:
        _jsonl(sys.stderr, summary)
    return EXIT_OK


def cmd_cylinder(cfg):
    I = measure.CylinderSet(cfg["times"], config.cylinder_boxes(cfg))
    with _open_out(cfg["out"]) as fh:
        _jsonl(fh, _provenance(cfg))
        if cfg["method"] in ("quadrature", "both"):
            qc = measure.QuadratureConfig(nodes_z=cfg["nodes_z"], nodes_u=cfg["nodes_u"])
            q = measure.cylinder_measure_quadrature(I, qc)
            _jsonl(fh, {"record": "cylinder", "method": "quadrature", "value": q.value,
                        "error": q.truncation_mass, "nodes": q.nodes})
        if cfg["method"] in ("mc", "both"):
            e = measure.cylinder_measure_mc(I, cfg["n_paths"], cfg["seed"], cfg["substeps"],
                                            workers=cfg["workers"])
            _jsonl(fh, {"record": "cylinder", "method": "mc", "value": e.value, "error": e.stderr,
                        "n_paths": e.n_paths, "seed": e.seed})
    return EXIT_OK


def _initial_data(cfg):
    kind = cfg["f"]
    if kind == "constant":
        return fk.InitialData.constant(cfg["f_c"])
    if kind == "gaussian_bump":
        if cfg["f_center"] is None:
            raise config.ConfigError("gaussian_bump needs f_center")
        return fk.InitialData.gaussian_bump(cfg["f_center"], cfg["f_width"], cfg["f_amplitude"])
    if kind == "indicator_box":
        if cfg["f_box"] is None:
            raise config.ConfigError("indicator_box needs f_box")
        return fk.InitialData.indicator_box(cfg["f_box"])
    raise config.ConfigError("unknown f kind %r" % kind)


def _potential(cfg):
    kind = cfg["V"]
    if kind == "constant":
        return fk.Potential.constant(cfg["V_c"])
    if kind == "quadratic_radial":
        return fk.Potential.quadratic_radial(cfg["V_alpha"], cfg["V_beta"])
    raise config.ConfigError("V must be constant or quadratic_radial in config files")


def cmd_fk(cfg):
    n = cfg["n"]
    base = np.zeros(2 * n + 1) if cfg["base"] is None else np.asarray(cfg["base"])
    if base.size != 2 * n + 1:
        raise config.ConfigError("base needs %d coordinates" % (2 * n + 1))
    try:
        f, V = _initial_data(cfg), _potential(cfg)
    except (KeyError, ValueError) as exc:
        raise config.ConfigError(str(exc)) from None
    if f.kind == "gaussian_bump" and np.size(f.params["center"]) != 2 * n + 1:
        raise config.ConfigError("f_center needs %d coordinates" % (2 * n + 1))
    est = fk.fk_solve(cfg["t"], base, f, V, cfg["n_paths"], cfg["seed"], cfg["substeps"],
                      cfg["scheme"], cfg["workers"])
    with _open_out(cfg["out"]) as fh:
        _jsonl(fh, _provenance(cfg))
        _jsonl(fh, {"record": "estimate", "value": est.value, "stderr": est.stderr,
                    "n_paths": est.n_paths, "seed": est.seed})
    if cfg["density_out"]:
        r_e, u_e = cfg["density_r_edges"], cfg["density_u_edges"]
        if not r_e or not u_e:
            raise config.ConfigError("density output needs density_r_edges and density_u_edges")
        d = fk.fk_kernel_density(cfg["t"], V, [r_e, u_e], cfg["n_paths"], cfg["seed"], base=base,
                                 substeps=cfg["substeps"], scheme=cfg["scheme"],
                                 workers=cfg["workers"])
        write_density_csv(cfg["density_out"], d, cfg)
    return EXIT_OK


def write_density_csv(path, d, cfg):
    r_e, u_e = d.edges
    with _open_out(path) as fh:
        _csv_header(fh, cfg)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DENSITY_COLUMNS)
        dens, se = d.density, d.stderr
        for i in range(r_e.size - 1):
            for j in range(u_e.size - 1):
                w.writerow([repr(float(x)) for x in (r_e[i], r_e[i + 1], u_e[j], u_e[j + 1],
                                                    d.mass[i, j], dens[i, j], se[i, j])]
                           + [int(d.counts[i, j])])


def cmd_validate(cfg):
    numbers = validation.select(cfg["suite"])
    progress = lambda r: print(r.line(), file=sys.stderr, flush=True)
    report = validation.validate_all(cfg["seed"], cfg["scale"], cfg["workers"], numbers, progress)
    with _open_out(cfg["out"]) as fh:
        fh.write(report.text())
    return EXIT_OK if report.passed else EXIT_ACCEPTANCE


COMMANDS = {"kernel": cmd_kernel, "sample": cmd_sample, "cylinder": cmd_cylinder, "fk": cmd_fk,
            "validate": cmd_validate}


def _error(code, kind, exc):
    _jsonl(sys.stderr, {"record": "error", "kind": kind, "message": str(exc), "exit_code": code})
    return code


def run_cli(argv=None):
    """Run one subcommand and return its exit code."""
    try:
        args = build_parser().parse_args(argv)
        overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
        cfg = config.load(args.command, args.config, overrides)
        return COMMANDS[args.command](cfg)
    except config.ConfigError as exc:
        return _error(EXIT_CONFIG, "config", exc)
    except (ArithmeticError, FloatingPointError, np.linalg.LinAlgError) as exc:
        return _error(EXIT_NUMERIC, "numerical", exc)
    except (ValueError, IndexError) as exc:
        # invalid parameter combinations surfacing from the library
        return _error(EXIT_CONFIG, "config", exc)


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
