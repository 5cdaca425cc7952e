"""Batch driver: Z sweeps, spectrum caching and table output.

Example::

    boundqed --Z 3-10,20,92 --mode all --out-dir results --cache-dir cache
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .analysis import comparison_table, fit_c, plot_rows, reference_rows
from .angular import required_kappas
from .cache import SpectrumCache
from .constants import ALPHA, CONSTANTS_VERSION, M_E_EV
from .selfenergy import SelfEnergyEngine
from .sese import SeseResult, both_modes
from .spectrum import DiracBasis, build_spectrum
from .splinebasis import GRID_SCHEMES, build_basis

log = logging.getLogger("boundqed")

MODES = ("first-order", "sese", "sign", "all")
UNSTABLE_Z = (1, 2)
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2

HEADER = (f"# energies in eV; 1 m_e = {M_E_EV!r} eV; alpha = 1/{1 / ALPHA:.6f}; "
          f"constants version {CONSTANTS_VERSION}")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    z_list: tuple = ()
    n_points: int = 28
    order: int = 9
    n_waves: int = 7
    box_coeff: float = 40.0
    scheme: str = "exponential"
    mode: str = "all"
    out_dir: Path = Path("results")
    cache_dir: Path | None = None
    threads: int = 1
    quad_order: int | None = None
    k_study: tuple = ()

    def validate(self) -> None:
        if self.n_points < self.order:
            raise ConfigError(f"grid points N={self.n_points} must be >= spline order k={self.order}")
        if self.order < 2:
            raise ConfigError("spline order must be >= 2")
        if self.n_waves < 3:
            raise ConfigError("need at least 3 partial waves for the odd/even extrapolation")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.scheme not in GRID_SCHEMES:
            raise ConfigError(f"grid scheme must be one of {GRID_SCHEMES}")
        if not self.box_coeff > 0:
            raise ConfigError("box coefficient must be positive")
        if self.threads < 1:
            raise ConfigError("thread budget must be >= 1")
        if self.quad_order is not None and self.quad_order < self.order + 3:
            raise ConfigError("quadrature order must be at least k + 3")
        for z in self.z_list:
            if not 1 <= z <= 92:
                raise ConfigError(f"Z={z} outside [1, 92]")
        for k in self.k_study:
            if not 2 <= k <= self.n_points:
                raise ConfigError(f"k-study order {k} invalid for N={self.n_points}")

    def echo(self) -> dict:
        d = asdict(self)
        d["out_dir"] = str(self.out_dir)
        d["cache_dir"] = None if self.cache_dir is None else str(self.cache_dir)
        d["z_list"] = list(self.z_list)
        d["k_study"] = list(self.k_study)
        return d


def parse_z(text: str) -> tuple:
    """'3-10,20,92' -> (3, 4, ..., 10, 20, 92); empty string -> ()."""
    out = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        try:
            if "-" in part:
                lo, hi = (int(x) for x in part.split("-", 1))
                if hi < lo:
                    raise ConfigError(f"descending Z range {part!r}")
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"cannot parse Z list item {part!r}") from None
    return tuple(sorted(set(out)))


# -- computation ----------------------------------------------------------------

@dataclass
class ZOutcome:
    Z: int
    first_order: object = None
    exact: SeseResult | None = None
    sign: SeseResult | None = None
    runtime: float = 0.0
    error: str | None = None


def make_engine(cfg: RunConfig, Z: int, order: int | None = None) -> SelfEnergyEngine:
    k = cfg.order if order is None else order
    basis = DiracBasis(build_basis(cfg.n_points, k, cfg.box_coeff / (Z * ALPHA),
                                   cfg.scheme, quad_order=cfg.quad_order))
    cache = SpectrumCache(cfg.cache_dir) if cfg.cache_dir is not None else None
    kappas = required_kappas(-1, cfg.n_waves - 1)
    bound = build_spectrum(basis, Z, kappas, cache=cache)
    free = build_spectrum(basis, 0, kappas, cache=cache)
    return SelfEnergyEngine(bound, free, cfg.n_waves, threads=cfg.threads)


def compute_z(cfg: RunConfig, Z: int, order: int | None = None, mode: str | None = None) -> ZOutcome:
    mode = cfg.mode if mode is None else mode
    t0 = time.perf_counter()
    eng = make_engine(cfg, Z, order)
    a = eng.bound.reference(-1)
    out = ZOutcome(Z)
    if mode in ("first-order", "all"):
        out.first_order = eng.partial_waves(a)
    if mode in ("sese", "sign", "all"):
        out.exact, out.sign = both_modes(a, eng)
    out.runtime = time.perf_counter() - t0
    return out


# -- output ---------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and not np.isfinite(x)):
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.10e}"


def write_csv(path: Path, columns: list, rows: list, notes: list = ()) -> None:
    lines = [HEADER] + [f"# {n}" for n in notes]
    lines.append(",".join(columns))
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def write_curve(path: Path, pairs: list, label: str) -> None:
    lines = [HEADER, f"# Z  {label}"]
    lines += [f"{z:d} {v:.10e}" for z, v in pairs if v is not None]
    path.write_text("\n".join(lines) + "\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(type(o))


def write_record(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=1, sort_keys=True, default=_json_default) + "\n")


def first_order_record(series) -> dict:
    return {
        "terms_eV": [asdict(t) for t in series.terms],
        "partial_sums_eV": series.partial_sums.tolist(),
        "limit_eV": series.limit, "error_eV": series.error,
        "even_limit_eV": series.even_limit, "odd_limit_eV": series.odd_limit,
    }


def emit_first_order(outdir: Path, oc: ZOutcome) -> None:
    ser = oc.first_order
    rows = []
    for (l, s), t in zip(enumerate(ser.partial_sums), ser.terms):
        rows.append((l, "even" if l % 2 == 0 else "odd", t.renormalized, t.log_part, t.sign_part, s))
    notes = ["l: photon multipole; term: renormalized contribution of that l; "
             "partial_sum: sum over multipoles 0..l",
             f"extrapolated {float(ser.limit)!r} +- {float(ser.error)!r}; "
             f"even-l limit {float(ser.even_limit)!r}; odd-l limit {float(ser.odd_limit)!r}"]
    write_csv(outdir / f"first_order_Z{oc.Z:03d}.csv",
              ["l", "parity", "term", "log_part", "sign_part", "partial_sum"], rows, notes)


def emit_sese_tables(outdir: Path, outcomes: list) -> dict:
    done = [o for o in outcomes if o.exact is not None]
    if not done:
        return {}
    refs = reference_rows()
    dE = {o.Z: o.exact.delta_e for o in done}
    table = {r.Z: r for r in comparison_table(dE)}
    rows = []
    for o in done:
        r = table[o.Z]
        ref = refs.get(o.Z, {})
        rows.append((o.Z, o.exact.delta_e, o.exact.error, o.exact.g, o.exact.negative_energy,
                     o.exact.n_intermediate, ref.get("dE_highz"), ref.get("dE_allorder"),
                     ref.get("dE_benchmark"), ref.get("G_allorder"), ref.get("G_benchmark"),
                     r.deviations.get("dE_highz"), r.deviations.get("dE_allorder"),
                     r.deviations.get("dE_benchmark")))
    write_csv(outdir / "sese_table.csv",
              ["Z", "dE", "dE_err", "G", "dE_negative", "n_intermediate",
               "dE_highz", "dE_allorder", "dE_benchmark", "G_allorder", "G_benchmark",
               "dev_highz_pct", "dev_allorder_pct", "dev_benchmark_pct"], rows,
              ["dE: extrapolated irreducible loop-after-loop shift of 1s; G = dE / "
               "[m_e (alpha/pi)^2 (Z alpha)^5]; dE_negative: part from negative-energy states",
               "dev_*_pct = |dE - ref| / |dE| * 100"])
    write_csv(outdir / "sign_approximation.csv", ["Z", "dE_sign", "dE_exact", "ratio"],
              [(o.Z, o.sign.delta_e, o.exact.delta_e,
                o.sign.delta_e / o.exact.delta_e if o.exact.delta_e else None) for o in done],
              ["dE_sign keeps only sign terms in every first-order element"])
    g = {o.Z: o.exact.g for o in done}
    fit = None
    try:
        fit = fit_c(g)
    except ValueError:
        pass
    C = fit.C if fit is not None else 0.0
    prow = plot_rows(g, C)
    write_csv(outdir / "g_curves.csv", ["Z", "G_computed", "G_allorder", "G_expansion", "G_fit"],
              prow, [f"G_fit uses C = {float(C)!r}" + ("" if fit else " (no computed G with 3 <= Z <= 20)")])
    for i, name in enumerate(("G_computed", "G_allorder", "G_expansion", "G_fit"), start=1):
        write_curve(outdir / f"curve_{name}.dat", [(r[0], r[i]) for r in prow], name)
    summary = {"C": None if fit is None else {"mean": fit.C, "spread": fit.spread,
                                              "per_z": fit.per_z, "z_set": list(fit.z_set)}}
    write_record(outdir / "fit_c.json", summary)
    return summary


def run(cfg: RunConfig) -> int:
    """Compute every requested Z; returns the process exit status."""
    try:
        cfg.validate()
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    if not cfg.z_list:
        return EXIT_OK
    for z in cfg.z_list:
        if z in UNSTABLE_Z:
            log.warning("Z=%d: results for Z = 1, 2 are numerically unstable in this scheme", z)
    outdir = Path(cfg.out_dir)
    (outdir / "records").mkdir(parents=True, exist_ok=True)
    outcomes, failures, timings = [], {}, {}
    for z in cfg.z_list:
        try:
            oc = compute_z(cfg, z)
        except Exception as exc:  # keep the finished Z values, report this one
            log.error("Z=%d failed: %s: %s", z, type(exc).__name__, exc)
            failures[z] = f"{type(exc).__name__}: {exc}"
            continue
        timings[z] = oc.runtime
        log.info("Z=%d done in %.1f s", z, oc.runtime)
        outcomes.append(oc)
        if oc.first_order is not None:
            emit_first_order(outdir, oc)
            write_record(outdir / "records" / f"Z{z:03d}_first-order.json",
                         {"config": cfg.echo(), "Z": z, "mode": "first-order",
                          "result": first_order_record(oc.first_order)})
        for res in (oc.exact, oc.sign):
            if res is not None:
                write_record(outdir / "records" / f"Z{z:03d}_{res.mode}.json",
                             {"config": cfg.echo(), "Z": z, "mode": res.mode,
                              "result": res.record()})
        # aggregate tables are rewritten after every Z so partial runs leave usable output
        emit_sese_tables(outdir, outcomes)
    if cfg.k_study:
        known = {(o.Z, cfg.order): o.exact.delta_e for o in outcomes if o.exact is not None}
        study = stability_study(cfg, cfg.k_study, failures, known)
        write_csv(outdir / "stability.csv", ["Z", "k_a", "k_b", "dE_a", "dE_b", "deviation_pct", "flag"],
                  [(r["Z"], r["k_a"], r["k_b"], r["dE_a"], r["dE_b"], r["deviation_pct"],
                    r["flag"]) for r in study],
                  ["deviation_pct = |dE_a - dE_b| / |dE_b| * 100 with k_b the larger order; "
                   "flag = 1 above 10%"])
    # wall-clock data are kept apart so the result files stay reproducible
    write_record(outdir / "timings.json", {str(z): t for z, t in timings.items()})
    if failures:
        write_record(outdir / "failures.json", {str(z): m for z, m in failures.items()})
        return EXIT_NUMERIC
    return EXIT_OK


def stability_study(cfg: RunConfig, orders=(4, 9), failures: dict | None = None,
                    known: dict | None = None) -> list[dict]:
    """Loop-after-loop shift at two spline orders with N and s fixed; per-Z deviation.

    ``known`` maps (Z, k) to shifts already computed with this configuration.
    """
    k_a, k_b = sorted(orders)
    known = {} if known is None else known

    def shift(z, k):
        if (z, k) not in known:
            known[z, k] = compute_z(cfg, z, order=k, mode="sese").exact.delta_e
        return known[z, k]

    rows = []
    for z in cfg.z_list:
        try:
            lo = shift(z, k_a)
            hi = shift(z, k_b)
        except Exception as exc:
            if failures is None:
                raise
            failures[f"{z}/k-study"] = f"{type(exc).__name__}: {exc}"
            continue
        dev = 100.0 * abs(lo - hi) / abs(hi) if hi else float("inf")
        rows.append({"Z": z, "k_a": k_a, "k_b": k_b, "dE_a": lo, "dE_b": hi,
                     "deviation_pct": dev, "flag": int(dev > 10.0)})
    return rows


# -- argument handling --------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="boundqed", description="One-loop and loop-after-loop self-energy of the "
                "1s state of hydrogen-like ions in a B-spline Dirac pseudospectrum.")
    p.add_argument("--Z", default="", help="nuclear charges, e.g. '3-10,20,92'")
    p.add_argument("--grid-points", type=int, default=28, help="breakpoints N (default 28)")
    p.add_argument("--spline-order", type=int, default=9, help="spline order k (default 9)")
    p.add_argument("--partial-waves", type=int, default=7, help="multipoles s (default 7)")
    p.add_argument("--box-coeff", type=float, default=40.0,
                   help="box radius in units of 1/(Z alpha m_e) (default 40)")
    p.add_argument("--grid-scheme", default="exponential", choices=GRID_SCHEMES)
    p.add_argument("--quad-order", type=int, default=None, help="Gauss points per knot interval")
    p.add_argument("--mode", default="all", choices=MODES)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--cache-dir", type=Path, default=None)
    p.add_argument("--out-dir", type=Path, default=Path("results"))
    p.add_argument("--k-study", default="", help="two spline orders to compare, e.g. '4,9'")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(ns) -> RunConfig:
    k_study = tuple(int(x) for x in ns.k_study.split(",") if x.strip()) if ns.k_study else ()
    if k_study and len(k_study) != 2:
        raise ConfigError("--k-study takes exactly two spline orders")
    return RunConfig(z_list=parse_z(ns.Z), n_points=ns.grid_points, order=ns.spline_order,
                     n_waves=ns.partial_waves, box_coeff=ns.box_coeff, scheme=ns.grid_scheme,
                     mode=ns.mode, out_dir=ns.out_dir, cache_dir=ns.cache_dir,
                     threads=ns.threads, quad_order=ns.quad_order, k_study=k_study)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(ns)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
