"""Command-line interface.

Subcommands: simulate, fit, ic, extcoef, rlevel, transform. Each takes a
JSON config (see ``config.schema.json``), an optional seed override and
an output directory; every run echoes the resolved config with a content
hash so artifacts are reproducible byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import tempfile
import warnings

import numpy as np

from . import __version__
from .covmodel import GridSpec, SiteSet
from .empirical import fit_vs_empirical_sse
from .extremal import GevParams, gev_to_frechet
from .inference import (CovariateModelTemplate, Dataset, MaxMixtureTemplate,
                        PairSelection, ParametricRadialTemplate, fit)
from .mathkit import nelder_mead
from .returnlevel import (Region, areal_extremal_coefficient,
                          return_level_curve, return_level_max_exact)
from .simulate import (SimulationConfig, simulate_extremal_t,
                       unit_square_sites)

COMMANDS = ("simulate", "fit", "ic", "extcoef", "rlevel", "transform")


class ConfigError(ValueError):
    def __init__(self, message, field=None):
        self.field = field
        super().__init__(message)


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: str, payload: dict) -> None:
    _atomic_write(path, json.dumps(payload, indent=1, sort_keys=True))


def load_config(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _require(cfg: dict, key: str, where: str = "config"):
    if key not in cfg:
        raise ConfigError(f"{where} is missing required field {key!r}", key)
    return cfg[key]


# ---------------------------------------------------------------------------
# data ingestion

def read_stations(path: str) -> SiteSet:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError(f"stations file {path} is empty")
    for required in ("id", "x", "y"):
        if required not in rows[0]:
            raise ConfigError(f"stations file lacks column {required!r}")
    ids = [r["id"] for r in rows]
    if len(set(ids)) != len(ids):
        raise ConfigError("duplicate station ids in stations file")
    coords = np.array([[float(r["x"]), float(r["y"])] for r in rows])
    covs = {}
    for name in rows[0]:
        if name in ("id", "x", "y"):
            continue
        covs[name] = np.array([float(r[name]) for r in rows])
    return SiteSet(coords, covs, ids=ids)


def read_maxima(path: str, sites: SiteSet, *, assume_frechet=True) -> Dataset:
    """Long-format maxima (year, station_id, value); absent rows = missing."""
    index = {sid: j for j, sid in enumerate(sites.ids)}
    cells = {}
    years = set()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for required in ("year", "station_id", "value"):
            if required not in (reader.fieldnames or []):
                raise ConfigError(f"maxima file lacks column {required!r}")
        for lineno, row in enumerate(reader, start=2):
            sid = row["station_id"]
            if sid not in index:
                raise ConfigError(
                    f"unknown station id {sid!r} at {path}:{lineno}")
            try:
                year = int(row["year"])
                value = float(row["value"])
            except ValueError as err:
                raise ConfigError(
                    f"non-numeric entry at {path}:{lineno}: {err}") from err
            key = (year, index[sid])
            if key in cells:
                raise ConfigError(
                    f"duplicate (year, station) entry at {path}:{lineno}")
            cells[key] = value
            years.add(year)
    if not cells:
        raise ConfigError(f"maxima file {path} has no data rows")
    year_list = sorted(years)
    values = np.full((len(year_list), sites.n_sites), np.nan)
    for (year, j), v in cells.items():
        values[year_list.index(year), j] = v
    ds = Dataset(sites, values, unit_frechet=assume_frechet)
    ds.years = year_list
    return ds


def ingest(stations_path: str, maxima_path: str, *, assume_frechet=True):
    """Load a (stations, maxima) CSV pair into a Dataset."""
    sites = read_stations(stations_path)
    data = read_maxima(maxima_path, sites, assume_frechet=assume_frechet)
    counts = data.mask.sum(axis=0)
    data.station_counts = {sid: int(c) for sid, c in zip(sites.ids, counts)}
    return data


def write_maxima_csv(path: str, data: Dataset) -> None:
    years = getattr(data, "years", list(range(1, data.m + 1)))
    lines = ["year,station_id,value"]
    for i, year in enumerate(years):
        for j, sid in enumerate(data.sites.ids):
            if data.mask[i, j]:
                lines.append(f"{year},{sid},{float(data.values[i, j])!r}")
    _atomic_write(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# marginal GEV fit and transform

def fit_gev(values) -> GevParams:
    """Per-station GEV fit by maximum likelihood (Nelder-Mead)."""
    x = np.asarray(values, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("need at least two observations for a GEV fit")
    sd = float(np.std(x))
    if sd == 0.0:
        raise ValueError("GEV fit is degenerate for constant data")
    sigma0 = sd * math.sqrt(6.0) / math.pi
    mu0 = float(np.mean(x)) - 0.57721566 * sigma0

    def nll(w):
        mu, lsig, xi = w
        sigma = math.exp(lsig)
        if abs(xi) < 1e-8:
            t = (x - mu) / sigma
            return n * lsig + float(np.sum(t) + np.sum(np.exp(-t)))
        arg = 1.0 + xi * (x - mu) / sigma
        if np.any(arg <= 0.0):
            return math.inf
        return n * lsig + float((1.0 + 1.0 / xi) * np.sum(np.log(arg))
                                + np.sum(arg ** (-1.0 / xi)))

    res = nelder_mead(nll, np.array([mu0, math.log(sigma0), 0.1]),
                      xatol=1e-7, fatol=1e-9)
    if not res.converged or not math.isfinite(res.fun):
        raise ValueError("GEV maximum likelihood fit did not converge")
    mu, lsig, xi = res.x
    return GevParams(float(mu), float(math.exp(lsig)), float(xi))


def marginal_transform(data: Dataset, gev_params: dict = None, *,
                       min_years: int = 20):
    """Transform raw block maxima to the unit Frechet scale.

    Fits a GEV per station by maximum likelihood unless ``gev_params``
    supplies (mu, sigma, xi) per station id. Stations whose fit fails
    (or that have fewer than ``min_years`` observations in the fitting
    path) are dropped with a warning.
    """
    sites = data.sites
    params, keep = {}, []
    for j, sid in enumerate(sites.ids):
        obs = data.values[data.mask[:, j], j]
        if gev_params is not None:
            if sid not in gev_params:
                raise ConfigError(f"no GEV parameters supplied for {sid!r}")
            params[sid] = gev_params[sid]
            keep.append(j)
            continue
        if obs.size < min_years:
            warnings.warn(f"station {sid} dropped: {obs.size} < {min_years} "
                          "observations", stacklevel=2)
            continue
        try:
            params[sid] = fit_gev(obs)
        except ValueError:
            warnings.warn(f"station {sid} dropped: GEV fit failed",
                          stacklevel=2)
            continue
        keep.append(j)
    if not keep:
        raise ValueError("no station survived the marginal GEV fit")
    keep = np.array(keep, dtype=int)
    new_sites = SiteSet(
        sites.coords[keep],
        {k: v[keep] for k, v in sites.covariates.items()},
        ids=[sites.ids[j] for j in keep],
    )
    values = np.full((data.m, keep.size), np.nan)
    for col, j in enumerate(keep):
        sid = sites.ids[j]
        rows = data.mask[:, j]
        values[rows, col] = gev_to_frechet(data.values[rows, j], params[sid])
    out = Dataset(new_sites, values, unit_frechet=True)
    out.years = getattr(data, "years", list(range(1, data.m + 1)))
    return out, params


# ---------------------------------------------------------------------------
# config -> objects

def build_sites(cfg: dict) -> SiteSet:
    spec = _require(cfg, "sites")
    if "stations_csv" in spec:
        return read_stations(spec["stations_csv"])
    if "random_unit_square" in spec:
        r = spec["random_unit_square"]
        return unit_square_sites(int(_require(r, "n", "sites.random_unit_square")),
                                 int(r.get("seed", 0)))
    if "grid" in spec:
        g = spec["grid"]
        grid = GridSpec(origin=tuple(g.get("origin", (0.0, 0.0))),
                        spacing=float(_require(g, "spacing", "sites.grid")),
                        nx=int(_require(g, "nx", "sites.grid")),
                        ny=int(_require(g, "ny", "sites.grid")))
        return SiteSet(grid.coords(), grid=grid)
    raise ConfigError("sites must provide stations_csv, random_unit_square "
                      "or grid", "sites")


def project_lonlat(sites: SiteSet, reference_latitude: float) -> SiteSet:
    """Equirectangular projection of (lon, lat) coordinates, in degrees.

    x = lon * cos(reference_latitude), y = lat; adequate for regional
    extents where a full map projection is unnecessary.
    """
    c = math.cos(math.radians(reference_latitude))
    coords = sites.coords.copy()
    coords[:, 0] = coords[:, 0] * c
    return SiteSet(coords, dict(sites.covariates), ids=list(sites.ids))


def build_template(model_cfg: dict, sites: SiteSet):
    kind = _require(model_cfg, "type", "model")
    if kind == "parametric":
        est = model_cfg.get("estimate", {})
        return ParametricRadialTemplate(
            beta1=float(model_cfg.get("beta1", 0.1)),
            beta2=float(model_cfg.get("beta2", 0.0)),
            df=float(model_cfg.get("df", 5.0)),
            alpha=float(model_cfg.get("alpha", 1.0)),
            estimate_beta2=bool(est.get("beta2", True)),
            estimate_df=bool(est.get("df", False)),
            estimate_alpha=bool(est.get("alpha", True)),
            brown_resnick_scaling=bool(model_cfg.get("brown_resnick_scaling",
                                                     True)),
        )
    if kind == "covariate":
        df_cfg = model_cfg.get("df", {})
        if isinstance(df_cfg, (int, float)):
            df_cfg = {"value": df_cfg}
        alpha = model_cfg.get("alpha", 1.0)
        alphas = tuple(alpha) if isinstance(alpha, (list, tuple)) else (alpha,)
        mix = model_cfg.get("mixture_a_covariates")
        try:
            return CovariateModelTemplate(
                sites,
                omega_x_covs=tuple(model_cfg.get("omega_x_covariates", ())),
                anisotropic=not bool(model_cfg.get("isotropic", True)),
                omega_y_covs=tuple(model_cfg.get("omega_y_covariates", ())),
                mixture_a_covs=None if mix is None else tuple(mix),
                df=float(df_cfg.get("value", 5.0)),
                estimate_df=bool(df_cfg.get("estimate", False)),
                alphas=tuple(float(a) for a in alphas),
            )
        except KeyError as err:
            raise ConfigError(str(err), "model.covariates") from err
    if kind == "max_mixture":
        comps = _require(model_cfg, "components", "model")
        if len(comps) != 2:
            raise ConfigError("max_mixture needs exactly two components",
                              "model.components")
        try:
            return MaxMixtureTemplate(
                sites,
                build_template(comps[0], sites),
                build_template(comps[1], sites),
                a_covs=tuple(model_cfg.get("a_covariates", ())),
            )
        except KeyError as err:
            raise ConfigError(str(err), "model.a_covariates") from err
    raise ConfigError(f"unknown model type {kind!r}", "model.type")


def build_model(model_cfg: dict, sites: SiteSet, overrides: dict = None):
    template = build_template(model_cfg, sites)
    pv = template.parameter_vector()
    if overrides:
        pv = pv.with_values(**overrides)
    return template.build(pv.natural())


def _sim_config(cfg: dict, seed: int, m: int = None) -> SimulationConfig:
    sim = cfg.get("simulate", {})
    return SimulationConfig(
        m=int(m if m is not None else _require(sim, "m", "simulate")),
        seed=seed,
        max_points=int(sim.get("max_points", 10_000)),
        kappa=float(sim.get("kappa", 200.0)),
    )


def _pair_policy(cfg: dict) -> PairSelection:
    p = cfg.get("pairs", {"policy": "all"})
    return PairSelection(policy=p.get("policy", "all"), q=p.get("q"),
                         pairs=tuple(map(tuple, p.get("pairs", ()))) or None)


def _load_dataset(cfg: dict, *, assume_frechet=True) -> Dataset:
    d = _require(cfg, "data")
    data = ingest(_require(d, "stations_csv", "data"),
                  _require(d, "maxima_csv", "data"),
                  assume_frechet=bool(d.get("frechet", assume_frechet)))
    if "projection" in d:
        ref = float(_require(d["projection"], "reference_latitude",
                             "data.projection"))
        sites = project_lonlat(data.sites, ref)
        data = Dataset(sites, data.values, data.mask,
                       unit_frechet=data.unit_frechet)
    return data


# ---------------------------------------------------------------------------
# commands

def _cmd_simulate(cfg, seed, out):
    sites = build_sites(cfg)
    model = build_model(_require(cfg, "model"), sites,
                        cfg.get("model_values"))
    config = _sim_config(cfg, seed)
    fields = simulate_extremal_t(sites, model, config)
    fields.to_csv(os.path.join(out, "fields.csv"))
    _write_json(os.path.join(out, "provenance.json"), fields.provenance)
    return {"fields_csv": "fields.csv", "m": config.m}


def _cmd_fit(cfg, seed, out):
    data = _load_dataset(cfg)
    template = build_template(_require(cfg, "model"), data.sites)
    fit_cfg = cfg.get("fit", {})
    result = fit(data, template, policy=_pair_policy(cfg),
                 restarts=int(fit_cfg.get("restarts", 3)),
                 restart_seed=seed)
    result.save_json(os.path.join(out, "fit.json"))
    return {"fit_json": "fit.json", "loglik": result.loglik,
            "clic": result.clic, "cbic": result.cbic}


def _cmd_ic(cfg, seed, out):
    data = _load_dataset(cfg)
    models = _require(cfg.get("ic", {}), "models", "ic")
    fit_cfg = cfg.get("fit", {})
    rows = []
    for k, spec in enumerate(models):
        if isinstance(spec, str):
            with open(spec) as fh:
                spec = json.load(fh)
        label = spec.get("label", f"model_{k + 1:02d}")
        template = build_template(spec, data.sites)
        result = fit(data, template, policy=_pair_policy(cfg),
                     restarts=int(fit_cfg.get("restarts", 3)),
                     restart_seed=seed)
        rows.append({
            "model": label, "n_free": len(result.params.free),
            "loglik": result.loglik, "clic": result.clic,
            "cbic": result.cbic, "converged": bool(result.converged),
        })
        result.save_json(os.path.join(out, f"fit_{label}.json"))
    by_clic = sorted(rows, key=lambda r: r["clic"])
    for rank, row in enumerate(by_clic, start=1):
        row["clic_rank"] = rank
    for rank, row in enumerate(sorted(rows, key=lambda r: r["cbic"]), start=1):
        row["cbic_rank"] = rank
    lines = ["model,n_free,loglik,clic,cbic,clic_rank,cbic_rank,converged"]
    for r in rows:
        lines.append(f"{r['model']},{r['n_free']},{r['loglik']!r},"
                     f"{r['clic']!r},{r['cbic']!r},{r['clic_rank']},"
                     f"{r['cbic_rank']},{r['converged']}")
    _atomic_write(os.path.join(out, "ic_table.csv"), "\n".join(lines) + "\n")
    _write_json(os.path.join(out, "ic_table.json"), {"models": rows})
    return {"ic_table_csv": "ic_table.csv", "best_clic": by_clic[0]["model"]}


def _cmd_extcoef(cfg, seed, out):
    data = _load_dataset(cfg)
    ext = cfg.get("extcoef", {})
    template = build_template(_require(cfg, "model"), data.sites)
    fit_cfg = cfg.get("fit", {})
    result = fit(data, template, policy=_pair_policy(cfg),
                 restarts=int(fit_cfg.get("restarts", 3)), restart_seed=seed,
                 compute_sandwich=False)
    table, sse = fit_vs_empirical_sse(result, data,
                                      estimator=ext.get("estimator",
                                                        "madogram"))
    table.to_csv(os.path.join(out, "theta_pairs.csv"))
    _write_json(os.path.join(out, "extcoef.json"), {
        "sse": sse, "n_pairs": len(table.records),
        "truncated_fraction": table.truncated_fraction,
        "estimator": ext.get("estimator", "madogram"),
    })
    return {"theta_pairs_csv": "theta_pairs.csv", "sse": sse}


def _cmd_rlevel(cfg, seed, out):
    rl = _require(cfg, "rlevel")
    reg_cfg = _require(rl, "region", "rlevel")
    region = Region(xmin=float(reg_cfg["xmin"]), xmax=float(reg_cfg["xmax"]),
                    ymin=float(reg_cfg["ymin"]), ymax=float(reg_cfg["ymax"]),
                    spacing=float(reg_cfg.get("spacing", 0.05)))
    region_id = reg_cfg.get("id", "region")
    sites = region.pixel_sites()
    model = build_model(_require(cfg, "model"), sites,
                        cfg.get("model_values"))
    m = int(_require(rl, "m", "rlevel"))
    periods = [float(n) for n in rl.get("periods", (10, 100, 1000))]
    scale = rl.get("scale", "gumbel")
    sim = cfg.get("simulate", {})
    kappa = float(sim.get("kappa", 200.0))
    max_points = int(sim.get("max_points", 10_000))
    config = SimulationConfig(m=m, seed=seed, kappa=kappa,
                              max_points=max_points)
    fields = simulate_extremal_t(sites, model, config)
    summary = {"region": region_id, "m": m, "scale": scale, "curves": {}}
    for kind in rl.get("functionals", ("INT", "MIN", "MAX")):
        curve = return_level_curve(model, region, kind, periods, m, seed,
                                   scale, region_id=region_id, fields=fields)
        name = f"rlevel_{kind}_{region_id}.csv"
        curve.to_csv(os.path.join(out, name))
        summary["curves"][kind] = {"csv": name, "points": curve.points}
    theta, theta_se = areal_extremal_coefficient(model, region, m, seed,
                                                 fields=fields)
    summary["areal_theta"] = theta
    summary["areal_theta_stderr"] = theta_se
    summary["max_exact"] = {
        str(int(n)): return_level_max_exact(theta, n) for n in periods
    }
    _write_json(os.path.join(out, "rlevel.json"), summary)
    return summary


def _cmd_transform(cfg, seed, out):
    data = _load_dataset(cfg, assume_frechet=False)
    tr = cfg.get("transform", {})
    gev_params = None
    if tr.get("gev_params_csv"):
        gev_params = {}
        with open(tr["gev_params_csv"], newline="") as fh:
            for row in csv.DictReader(fh):
                gev_params[row["station_id"]] = GevParams(
                    float(row["mu"]), float(row["sigma"]), float(row["xi"]))
    frechet, params = marginal_transform(
        data, gev_params, min_years=int(tr.get("min_years", 20)))
    write_maxima_csv(os.path.join(out, "frechet_maxima.csv"), frechet)
    lines = ["station_id,mu,sigma,xi"]
    for sid in frechet.sites.ids:
        p = params[sid]
        lines.append(f"{sid},{p.mu!r},{p.sigma!r},{p.xi!r}")
    _atomic_write(os.path.join(out, "gev_params.csv"), "\n".join(lines) + "\n")
    covnames = [c for c in frechet.sites.covariates if c != "intercept"]
    stations = ["id,x,y" + "".join(f",{c}" for c in covnames)]
    for j, sid in enumerate(frechet.sites.ids):
        x, y = frechet.sites.coords[j]
        row = f"{sid},{float(x)!r},{float(y)!r}"
        row += "".join(f",{float(frechet.sites.covariates[c][j])!r}"
                       for c in covnames)
        stations.append(row)
    _atomic_write(os.path.join(out, "stations_kept.csv"),
                  "\n".join(stations) + "\n")
    return {"frechet_maxima_csv": "frechet_maxima.csv",
            "gev_params_csv": "gev_params.csv",
            "stations_kept": len(frechet.sites.ids)}


_DISPATCH = {
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "ic": _cmd_ic,
    "extcoef": _cmd_extcoef,
    "rlevel": _cmd_rlevel,
    "transform": _cmd_transform,
}


def run(config: dict, command: str, out_dir: str = None,
        seed: int = None) -> dict:
    """Execute one command; returns a result summary dictionary."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}", "command")
    resolved = dict(config)
    resolved["command"] = command
    if seed is not None:
        resolved["seed"] = seed
    run_seed = int(resolved.get("seed", 0))
    out = out_dir or resolved.get("out_dir", ".")
    os.makedirs(out, exist_ok=True)
    summary = _DISPATCH[command](resolved, run_seed, out)
    echo = {
        "command": command,
        "seed": run_seed,
        "config": resolved,
        "config_hash": config_hash(resolved),
        "versions": {"nsmaxstab": __version__, "numpy": np.__version__},
        "result": summary,
    }
    _write_json(os.path.join(out, "run_config.json"), echo)
    return echo


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nsmaxstab",
        description="Non-stationary extremal-t max-stable toolkit",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--out", default=None, help="output directory")
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        echo = run(config, args.command, out_dir=args.out, seed=args.seed)
    except (ConfigError, ValueError, OSError, KeyError) as err:
        payload = {"error": type(err).__name__, "message": str(err)}
        if isinstance(err, ConfigError) and err.field:
            payload["field"] = err.field
        print(json.dumps(payload), file=sys.stderr)
        return 1
    print(json.dumps({"status": "ok", "command": args.command,
                      "config_hash": echo["config_hash"]}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
