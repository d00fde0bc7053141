"""Command-line pipeline: ingest, weights, estimate, identify, irf,
decompose, ftest, simulate.

Every command reads one JSON config (a seed is mandatory; nothing falls
back to wall-clock entropy) plus a few flag overrides, and writes its
artifacts under the configured output directory. Exit codes: 0 success,
2 bad inputs, 3 identification failure, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import report
from .dataio import (
    UNCERTAINTY_VARS,
    CountrySpec,
    DominantSpec,
    Panel,
    apply_transforms,
    bis_symmetrize,
    build_weights,
    country_specs,
    load_exposures,
    load_panel,
    write_exposures,
    write_panel,
)
from .errors import DataError, IdentificationError, NumericalError
from .gvar import (
    CompanionSpectrum,
    GvarModel,
    cross_correlation_stats,
    estimate_gvar,
    residual_autocorrelation,
)
from .ident import identify, recover_shocks, require_accepted, target_for
from .inference import f_test_common, f_test_foreign
from .irf import bootstrap_irf, decompose
from .serialize import mat_to_json
from .simulate import make_dgp, simulate


@dataclass
class RunConfig:
    """Parsed run configuration shared by every subcommand."""

    seed: int
    output_dir: str
    panel_csv: str | None = None
    meta_json: str | None = None
    exposures_csv: tuple[str, ...] = ()
    bis_claims: tuple[str, ...] = ()
    bis_liabilities: tuple[str, ...] = ()
    benchmark: str | None = None
    countries: tuple[CountrySpec, ...] = ()
    menus: dict | None = None
    dominant: DominantSpec | None = None
    targets: tuple[tuple[str, tuple[str, str]], ...] = ()
    sigma_h: float = 0.1
    max_draws: int = 100
    scheme: str = "block"
    scaling: str = "standardized"
    replications: int = 500
    h_max: int = 24
    coverage: float = 0.68
    window: int = 6
    jobs: int = 1
    max_lag: int = 12
    model_path: str | None = None
    dgp: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: str, args: argparse.Namespace) -> "RunConfig":
        try:
            with open(path) as fh:
                obj = json.load(fh)
        except OSError as exc:
            raise DataError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise DataError(f"config {path} is not valid JSON: {exc}") from exc
        if "seed" not in obj:
            raise DataError("config must set an integer seed; runs are never clock-seeded")
        ident = obj.get("identification", {})
        boot = obj.get("bootstrap", {})
        bis = obj.get("bis", {})
        targets = []
        for t in obj.get("targets", []):
            names = tuple(t.get("variables", UNCERTAINTY_VARS))
            if len(names) != 2:
                raise DataError(f"target for {t.get('country')} needs exactly two variables")
            targets.append((t["country"], names))
        cfg = cls(
            seed=int(obj["seed"]),
            output_dir=obj.get("output_dir", "out"),
            panel_csv=obj.get("panel_csv"),
            meta_json=obj.get("meta_json"),
            exposures_csv=tuple(obj.get("exposures_csv", [])),
            bis_claims=tuple(bis.get("claims", [])),
            bis_liabilities=tuple(bis.get("liabilities", [])),
            benchmark=obj.get("benchmark"),
            countries=tuple(CountrySpec.from_json(c) for c in obj.get("countries", [])),
            menus=obj.get("menus"),
            dominant=DominantSpec.from_json(obj["dominant"]) if obj.get("dominant") else None,
            targets=tuple(targets),
            sigma_h=float(ident.get("sigma_h", 0.1)),
            max_draws=int(ident.get("max_draws", 100)),
            scheme=ident.get("scheme", "block"),
            scaling=ident.get("scaling", "standardized"),
            replications=int(boot.get("replications", 500)),
            h_max=int(boot.get("h_max", 24)),
            coverage=float(boot.get("coverage", 0.68)),
            window=int(obj.get("window", 6)),
            jobs=int(boot.get("jobs", 1)),
            max_lag=int(obj.get("max_lag", 12)),
            dgp=obj.get("dgp", {}),
        )
        for name in ("seed", "jobs", "replications", "max_draws", "h_max"):
            value = getattr(args, name, None)
            if value is not None:
                setattr(cfg, name, value)
        if getattr(args, "output_dir", None):
            cfg.output_dir = args.output_dir
        if getattr(args, "scheme", None):
            cfg.scheme = args.scheme
        if getattr(args, "model", None):
            cfg.model_path = args.model
        return cfg

    def out(self, name: str) -> str:
        return os.path.join(self.output_dir, name)


def _load_panel(cfg: RunConfig) -> Panel:
    if not cfg.panel_csv or not cfg.meta_json:
        raise DataError("config must set panel_csv and meta_json")
    panel = load_panel(cfg.panel_csv, cfg.meta_json)
    return apply_transforms(panel, benchmark=cfg.benchmark)


def _load_weights(cfg: RunConfig):
    if cfg.bis_claims or cfg.bis_liabilities:
        if len(cfg.bis_claims) != len(cfg.bis_liabilities) or not cfg.bis_claims:
            raise DataError("bis claims and liabilities file lists must pair up")
        countries = None
        total = None
        for cpath, lpath in zip(cfg.bis_claims, cfg.bis_liabilities):
            c_countries, claims = load_exposures(cpath)
            l_countries, liabilities = load_exposures(lpath)
            if c_countries != l_countries:
                raise DataError(f"labels differ between {cpath} and {lpath}")
            sym = bis_symmetrize(claims, liabilities)
            if countries is None:
                countries, total = c_countries, sym
            elif c_countries != countries:
                raise DataError(f"exposure labels differ across file pairs")
            else:
                total = total + sym
        return build_weights(countries, total / len(cfg.bis_claims))
    if not cfg.exposures_csv:
        raise DataError("config must set exposures_csv or bis file pairs")
    countries, exposures = load_exposures(cfg.exposures_csv)
    return build_weights(countries, exposures)


def _specs(cfg: RunConfig, panel: Panel) -> tuple[CountrySpec, ...]:
    if cfg.countries:
        return cfg.countries
    if cfg.menus:
        menus = dict(cfg.menus)
        return tuple(
            country_specs(
                panel,
                member_countries=menus.get("member_countries", []),
                other_eu=menus.get("other_eu", []),
                non_eu=menus.get("non_eu", []),
                us=menus.get("us"),
                dominant=cfg.dominant,
                p=int(menus.get("p", 2)),
                q=int(menus.get("q", 0)),
                q_overrides=menus.get("q_overrides", {}),
            )
        )
    raise DataError("config must list countries or describe menus")


def _estimate(cfg: RunConfig) -> GvarModel:
    panel = _load_panel(cfg)
    weights = _load_weights(cfg)
    specs = _specs(cfg, panel)
    return estimate_gvar(panel, specs, weights, cfg.dominant)


def cmd_ingest(cfg: RunConfig) -> int:
    panel = _load_panel(cfg)
    write_panel(panel, cfg.out("panel_transformed.csv"), cfg.out("meta_transformed.json"))
    report.write_json(
        cfg.out("ingest_summary.json"),
        {
            "n_periods": panel.n_periods,
            "n_series": panel.n_series,
            "first": panel.dates[0],
            "last": panel.dates[-1],
            "columns": [m.to_json() for m in panel.meta],
        },
    )
    return 0


def cmd_weights(cfg: RunConfig) -> int:
    weights = _load_weights(cfg)
    write_exposures(weights.countries, weights.w, cfg.out("weights.csv"))
    return 0


def cmd_estimate(cfg: RunConfig) -> int:
    model = _estimate(cfg)
    report.write_json(cfg.out("model.json"), model.to_json())
    spectrum = CompanionSpectrum(
        eigenvalues=model.solution.eigenvalues,
        max_modulus=model.solution.max_modulus,
    )
    report.write_eigenvalues_csv(cfg.out("eigenvalues.csv"), spectrum)
    report.plot_eigenvalues_svg(cfg.out("eigenvalues.svg"), spectrum)
    acf = residual_autocorrelation(model.u, cfg.max_lag)
    report.write_autocorr_csv(cfg.out("autocorr.csv"), acf, model.index.labels)
    max_corr, mean_corr = cross_correlation_stats(model.solution.omega_u)
    report.write_json(
        cfg.out("diagnostics.json"),
        {
            "n_variables": len(model.index),
            "t_eff": model.u.shape[0],
            "stable": model.solution.stable,
            "max_modulus": model.solution.max_modulus,
            "max_abs_cross_correlation": max_corr,
            "mean_abs_cross_correlation": mean_corr,
        },
    )
    if not model.solution.stable:
        print(
            f"warning: system is not stable (max eigenvalue modulus "
            f"{model.solution.max_modulus:.4f})",
            file=sys.stderr,
        )
    return 0


def cmd_identify(cfg: RunConfig) -> int:
    path = cfg.model_path or cfg.out("model.json")
    try:
        model = GvarModel.from_json(report.load_json(path))
    except OSError as exc:
        raise DataError(f"cannot read model artifact {path}: {exc}") from exc
    if not cfg.targets:
        raise DataError("config lists no identification targets")
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(cfg.targets))
    for (country, names), child in zip(cfg.targets, seeds):
        target = target_for(model.index, country, names, scaling=cfg.scaling)
        result = require_accepted(
            identify(
                model.solution.omega_u,
                target,
                np.random.default_rng(child),
                max_draws=cfg.max_draws,
                sigma_h=cfg.sigma_h,
                scheme=cfg.scheme,
            )
        )
        report.write_json(
            cfg.out(f"{country}_draws.json"),
            {
                "country": country,
                "variables": list(names),
                "draws": [
                    {
                        "draw_index": d.draw_index,
                        "s": mat_to_json(d.s),
                        "q_tilde": mat_to_json(d.q_tilde),
                    }
                    for d in result.accepted
                ],
            },
        )
        report.write_json(
            cfg.out(f"{country}_ident_success.json"),
            {
                "country": country,
                "n_draws": result.n_draws,
                "accepted": len(result.accepted),
                "success_rate": result.success_rate,
            },
        )
        shocks = recover_shocks(result.accepted[0].s, model.u)[:, :2]
        labels = [f"{country}.{n}" for n in names]
        report.write_shocks_csv(cfg.out(f"{country}_shocks.csv"), model.dates, shocks, labels)
        report.plot_shock_hist_svg(cfg.out(f"{country}_shocks.svg"), shocks, labels)
    return 0


def _bootstrap_targets(cfg: RunConfig, with_direct: bool):
    model = _estimate(cfg)
    if not cfg.targets:
        raise DataError("config lists no identification targets")
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(cfg.targets))
    for (country, names), child in zip(cfg.targets, seeds):
        target = target_for(model.index, country, names, scaling=cfg.scaling)
        result = bootstrap_irf(
            model,
            target,
            seed=child,
            n_replications=cfg.replications,
            max_draws=cfg.max_draws,
            h_max=cfg.h_max,
            sigma_h=cfg.sigma_h,
            coverage=cfg.coverage,
            scheme=cfg.scheme,
            jobs=cfg.jobs,
            with_direct=with_direct,
            shock_names=names,
        )
        yield country, result


def cmd_irf(cfg: RunConfig) -> int:
    for country, result in _bootstrap_targets(cfg, with_direct=False):
        report.write_irf_csv(cfg.out(f"{country}_irf.csv"), result.total)
        report.plot_irf_svg(cfg.output_dir, result.total)
        report.write_success_json(cfg.out(f"{country}_success.json"), result)
    return 0


def cmd_decompose(cfg: RunConfig) -> int:
    for country, result in _bootstrap_targets(cfg, with_direct=True):
        split = decompose(result.total, result.direct, window=cfg.window)
        report.write_decomposition_csv(cfg.out(f"{country}_decomposition.csv"), split)
        report.plot_decomposition_svg(cfg.out(f"{country}_decomposition.svg"), split)
        report.write_success_json(cfg.out(f"{country}_success.json"), result)
    return 0


def cmd_ftest(cfg: RunConfig) -> int:
    panel = _load_panel(cfg)
    weights = _load_weights(cfg)
    specs = _specs(cfg, panel)
    index_entries = [(s.country, n) for s in specs for n in s.domestic_vars]
    if cfg.dominant is not None:
        index_entries.extend((cfg.dominant.label, n) for n in cfg.dominant.variables)
    panel_m = panel.select(index_entries)
    common_rows = []
    foreign_rows = []
    dominant_names = set(panel_m.dominant_names())
    for spec in specs:
        if dominant_names & set(spec.foreign_vars):
            common_rows.extend(f_test_common(panel_m, spec, weights))
        if set(spec.foreign_vars) - dominant_names:
            foreign_rows.extend(f_test_foreign(panel_m, spec, weights))
    if common_rows:
        report.write_ftest_csv(cfg.out("ftest_common.csv"), common_rows)
    if foreign_rows:
        report.write_ftest_csv(cfg.out("ftest_foreign.csv"), foreign_rows)
    report.write_json(
        cfg.out("ftest_summary.json"),
        {
            "common_equations": len(common_rows),
            "common_rejections": sum(1 for r in common_rows if r.reject),
            "foreign_equations": len(foreign_rows),
            "foreign_rejections": sum(1 for r in foreign_rows if r.reject),
        },
    )
    return 0


def cmd_simulate(cfg: RunConfig) -> int:
    dgp_cfg = dict(cfg.dgp)
    n_periods = int(dgp_cfg.pop("periods", 186))
    dgp = make_dgp(seed=cfg.seed, **dgp_cfg)
    panel = simulate(dgp, n_periods, seed=np.random.default_rng([cfg.seed, 1]))
    panel_path = cfg.out("panel.csv")
    meta_path = cfg.out("meta.json")
    expo_path = cfg.out("exposures.csv")
    write_panel(panel, panel_path, meta_path)
    write_exposures(dgp.weights.countries, dgp.weights.w, expo_path)
    report.write_json(cfg.out("dgp.json"), dgp.to_json())
    run_cfg = {
        "seed": cfg.seed,
        "output_dir": cfg.output_dir,
        "panel_csv": panel_path,
        "meta_json": meta_path,
        "exposures_csv": [expo_path],
        "countries": [s.to_json() for s in dgp.specs],
        "targets": [{"country": dgp.target_country, "variables": list(UNCERTAINTY_VARS)}],
        "identification": {
            "sigma_h": cfg.sigma_h,
            "max_draws": cfg.max_draws,
            "scheme": cfg.scheme,
            "scaling": cfg.scaling,
        },
        "bootstrap": {
            "replications": cfg.replications,
            "h_max": cfg.h_max,
            "coverage": cfg.coverage,
            "jobs": cfg.jobs,
        },
        "window": cfg.window,
    }
    if dgp.dominant_spec is not None:
        run_cfg["dominant"] = dgp.dominant_spec.to_json()
    report.write_json(cfg.out("run_config.json"), run_cfg)
    return 0


COMMANDS = {
    "ingest": (cmd_ingest, "load a panel, apply transforms, write the result"),
    "weights": (cmd_weights, "build normalized weights from exposure files"),
    "estimate": (cmd_estimate, "estimate all blocks, stack, solve, write model.json"),
    "identify": (cmd_identify, "run magnitude-restriction draws on a saved model"),
    "irf": (cmd_irf, "bootstrap impulse responses for each target"),
    "decompose": (cmd_decompose, "split peak responses into direct and spillover parts"),
    "ftest": (cmd_ftest, "per-equation relevance tests of instrument and foreign blocks"),
    "simulate": (cmd_simulate, "draw a synthetic system and write its panel"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gvarkit",
        description="multi-country uncertainty spillover toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (fn, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("config", help="path to a JSON run configuration")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--output-dir", help="override the output directory")
        sp.add_argument("--jobs", type=int, help="bootstrap worker processes")
        sp.add_argument("--replications", type=int, help="bootstrap replications")
        sp.add_argument("--max-draws", type=int, help="rotation draws per attempt")
        sp.add_argument("--h-max", type=int, help="impulse response horizon")
        sp.add_argument("--scheme", choices=("block", "multi", "naive"))
        if name == "identify":
            sp.add_argument("--model", help="path to a model.json artifact")
        sp.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config, args)
        os.makedirs(cfg.output_dir, exist_ok=True)
        return args.func(cfg)
    except (DataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IdentificationError as exc:
        print(f"identification failed: {exc}", file=sys.stderr)
        return 3
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
