"""Command-line interface.

Usage::

    python -m artifact {modes,temporal,estimate,validate} --config CONFIG [--out DIR]
                       [--format {csv,json}] [--threads N] [--converge]

``CONFIG`` is a JSON document with ``"schema_version": 1`` or the name of a
bundled recipe (``fig2`` .. ``fig5``). Exit status is 0 on success, 1 when a
validation or convergence check fails and 2 for configuration errors.
"""

import argparse
import csv
import json
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.optimize import OptimizeWarning

from . import coupling, estimator, geometry, modes, oracle, specfun, temporal

SCHEMA_VERSION = 1
BUILTIN = ("fig2", "fig3", "fig4", "fig5")


class ConfigError(ValueError):
    pass


# -- config -----------------------------------------------------------------

def load_config(path):
    """Read a JSON config file or a bundled recipe name."""
    if path is None:
        return {"schema_version": SCHEMA_VERSION}
    p = Path(path)
    if not p.exists() and path in BUILTIN:
        text = resources.files("artifact").joinpath("configs", f"{path}.json").read_text()
        src = f"<builtin {path}>"
    else:
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
        src = str(p)
    try:
        cfg = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{src}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{src}: top level must be a JSON object")
    version = cfg.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: expected {SCHEMA_VERSION}, got {version!r}")
    return cfg


def _section(cfg, name, required=True):
    sec = cfg.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"{name}: section missing")
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(f"{name}: must be an object")
    return sec


def _get(sec, where, key, kind, default=None, positive=False, nonneg=False):
    val = sec.get(key, default)
    field = f"{where}.{key}"
    if val is None:
        raise ConfigError(f"{field}: required")
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(f"{field}: must be an integer, got {val!r}")
    elif kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"{field}: must be a number, got {val!r}")
        val = float(val)
        if not np.isfinite(val):
            raise ConfigError(f"{field}: must be finite")
    elif kind is list:
        vals = val if isinstance(val, list) else [val]
        if not vals or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in vals):
            raise ConfigError(f"{field}: must be a number or a non-empty list of numbers")
        val = [float(v) for v in vals]
        if nonneg and any(v < 0 for v in val):
            raise ConfigError(f"{field}: values must be non-negative")
        return val
    elif kind is str:
        if not isinstance(val, str):
            raise ConfigError(f"{field}: must be a string")
    if positive and not val > 0:
        raise ConfigError(f"{field}: must be positive, got {val!r}")
    if nonneg and val < 0:
        raise ConfigError(f"{field}: must be non-negative, got {val!r}")
    return val


def parse_geometry(g, where="geometry"):
    """Build an :class:`ExperimentGeometry` from a config object.

    Either ``fresnel`` (unit length scales) or the physical triple
    ``sigma``, ``sigma_z``, ``k_s`` must be given. The coupling scale is
    ``coupling_prefactor`` or assembled from a ``physical`` object with keys
    ``g0, lambda_s, n, I0`` (plus ``V`` for the cold-cloud regime).
    """
    if not isinstance(g, dict):
        raise ConfigError(f"{where}: must be an object")
    try:
        regime = geometry.Regime.parse(g.get("regime"))
    except ValueError as exc:
        raise ConfigError(f"{where}.regime: {exc}") from exc
    kappa = g.get("kappa")
    if kappa is not None:
        kappa = _get(g, where, "kappa", float, nonneg=True)
    try:
        if "fresnel" in g:
            F = _get(g, where, "fresnel", float, positive=True)
            geom = geometry.ExperimentGeometry.from_fresnel(regime, F, kappa)
        else:
            sigma = _get(g, where, "sigma", float, positive=True)
            sigma_z = _get(g, where, "sigma_z", float, positive=True)
            k_s = _get(g, where, "k_s", float, positive=True)
            geom = geometry.ExperimentGeometry(regime, sigma, sigma_z, k_s, kappa)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from exc
    if "physical" in g:
        ph = g["physical"]
        w = f"{where}.physical"
        if not isinstance(ph, dict):
            raise ConfigError(f"{w}: must be an object")
        args = {k: _get(ph, w, k, float, positive=True) for k in ("g0", "lambda_s", "n", "I0")}
        if regime is geometry.Regime.COLD:
            args["V"] = _get(ph, w, "V", float, positive=True)
            args["sigma"], args["sigma_z"] = geom.sigma, geom.sigma_z
        pref = geometry.assemble_prefactor(regime, **args)
    else:
        pref = _get(g, where, "coupling_prefactor", float, default=1.0, positive=True)
    geom = geometry.ExperimentGeometry(geom.regime, geom.sigma, geom.sigma_z, geom.k_s, geom.kappa, pref)
    label = g.get("label") or f"{regime.value}_F{_fmt(geometry.fresnel_number(geom))}"
    return label, geom


def _geometries(cfg):
    if "geometries" in cfg:
        items = cfg["geometries"]
        if not isinstance(items, list) or not items:
            raise ConfigError("geometries: must be a non-empty list")
        return [parse_geometry(g, f"geometries[{i}]") for i, g in enumerate(items)]
    if "geometry" in cfg:
        return [parse_geometry(cfg["geometry"])]
    raise ConfigError("geometry: section missing")


# -- output -------------------------------------------------------------------

def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_table(path, header, rows, fmt):
    """Write a table as CSV (17 significant digits) or JSON; returns the path."""
    path = Path(f"{path}.{fmt}")
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
    else:
        data = {"columns": list(header), "rows": [[_jsonable(v) for v in r] for r in rows]}
        write_json(path, data)
    return path


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if np.isfinite(v) else str(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    return v


def write_json(path, data):
    with open(path, "w", newline="") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return Path(path)


def _complex_json(a):
    a = np.asarray(a)
    return {"re": a.real.tolist(), "im": a.imag.tolist()}


# -- commands -----------------------------------------------------------------

def _decompose_all(red, l_max, n_z, m_max, threads):
    # blocks are assembled in parallel; the SVDs stay on the calling thread
    # because LAPACK results may differ in the last bits across threads
    def build(m):
        return coupling.build_block(red, m, l_max, n_z)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            blocks = list(ex.map(build, range(m_max + 1)))
    else:
        blocks = [build(m) for m in range(m_max + 1)]
    return [modes.decompose(b) for b in blocks]


def cmd_modes(cfg, out, fmt, threads=1, converge=False):
    """Spectra, decompositions and optional mode profiles for each geometry."""
    mp = _section(cfg, "mode_params", required=False)
    l_max = _get(mp, "mode_params", "l_max", int, 40, positive=True)
    n_z = _get(mp, "mode_params", "n_z", int, 41)
    if n_z < 3:
        raise ConfigError("mode_params.n_z: must be at least 3")
    m_max = _get(mp, "mode_params", "m_max", int, 5, nonneg=True)
    n_store = _get(mp, "mode_params", "stored_modes", int, 5, nonneg=True)
    profiles = mp.get("profiles", [])
    if not isinstance(profiles, list):
        raise ConfigError("mode_params.profiles: must be a list")
    status = 0
    written = []
    for label, geom in _geometries(cfg):
        red = geometry.reduce(geom)
        decs = _decompose_all(red, l_max, n_z, m_max, threads)
        spec = modes.spectrum(decs, red, geom)
        written.append(write_table(out / f"spectrum_{label}", ["m", "l", "zeta_reduced", "zeta_physical"],
                                   [(m, l, z, zp) for l, m, z, zp in spec], fmt))
        k_keep = min(n_store, l_max + 1)
        doc = {
            "geometry": {"regime": geom.regime.value, "fresnel": red.fresnel, "chi": red.chi,
                         "kappa": red.kappa, "waist": red.waist, "z_range": list(red.z_range),
                         "coupling_prefactor": geom.coupling_prefactor},
            "l_max": l_max, "n_z": n_z, "m_max": m_max,
            "note": "modes with azimuthal index -m share the singular values of +m",
            "z_nodes": decs[0].z_nodes, "z_weights": decs[0].z_weights,
            "blocks": [{"m": d.m, "singular_values": d.singular_values,
                        "photon_coeffs": _complex_json(d.photon_coeffs[:k_keep]),
                        "atomic_coeffs": _complex_json(d.atomic_coeffs[:k_keep])} for d in decs],
        }
        written.append(write_json(out / f"decomposition_{label}.json", doc))
        for i, pr in enumerate(profiles):
            where = f"mode_params.profiles[{i}]"
            if not isinstance(pr, dict):
                raise ConfigError(f"{where}: must be an object")
            k = _get(pr, where, "l", int, nonneg=True)
            m = _get(pr, where, "m", int, nonneg=True)
            kind = _get(pr, where, "kind", str, "photon")
            if m > m_max or k > l_max or kind not in ("photon", "atom"):
                raise ConfigError(f"{where}: (l, m, kind) outside the computed set")
            rho = _get(pr, where, "rho", list, nonneg=True)
            zs = _get(pr, where, "z", list)
            evalf = modes.photon_mode_eval if kind == "photon" else modes.atomic_mode_eval
            rows = []
            for z in zs:
                try:
                    vals = evalf(decs[m], k, np.array(rho) * red.waist, z * red.sigma_z, red)
                except ValueError as exc:
                    raise ConfigError(f"{where}.z: {exc}") from exc
                rows += [(r, z, v.real, v.imag) for r, v in zip(rho, np.atleast_1d(vals))]
            written.append(write_table(out / f"profile_{label}_{kind}_l{k}_m{m}",
                                       ["rho", "z", "re", "im"], rows, fmt))
        if converge:
            fine = _decompose_all(red, 2 * l_max, n_z, m_max, threads)
            a = np.array([r[2] for r in spec[:5]])
            b = np.array([r[2] for r in modes.spectrum(fine)[:5]])
            rel = float(np.max(np.abs(a - b) / b))
            ok = rel < 1e-6
            written.append(write_json(out / f"convergence_{label}.json",
                                      {"l_max": [l_max, 2 * l_max], "max_rel_change_top5": rel,
                                       "threshold": 1e-6, "converged": ok}))
            if not ok:
                print(f"{label}: truncation check failed, top-5 change {rel:.3g}", file=sys.stderr)
                status = 1
    return status, written


def cmd_temporal(cfg, out, fmt, threads=1, converge=False):
    """Occupations and g1 grids for each requested decay rate."""
    tp = _section(cfg, "temporal_params")
    zeta = _get(tp, "temporal_params", "zeta", float, positive=True)
    gammas = _get(tp, "temporal_params", "gamma_loss", list, [0.0], nonneg=True)
    t_max = _get(tp, "temporal_params", "t_max", float, 3.0, positive=True)
    n_t = _get(tp, "temporal_params", "n_t", int, 61, positive=True)
    n_g1 = _get(tp, "temporal_params", "n_g1", int, 31, positive=True)
    if n_t < 2 or n_g1 < 2:
        raise ConfigError("temporal_params: n_t and n_g1 must be at least 2")
    t = np.linspace(0.0, t_max, n_t)
    tg = np.linspace(0.0, t_max, n_g1 + 1)[1:]
    written = []
    for G in gammas:
        p = temporal.TemporalParams(zeta, G)
        nb = temporal.corr_bb(p, t, t)
        nph = temporal.cumulative_photons(p, t)
        written.append(write_table(out / f"occupations_gamma{G:g}", ["t", "mean_spinwaves", "cumulative_photons"],
                                   zip(t, nb, nph), fmt))
        T, Tp = np.meshgrid(tg, tg, indexing="ij")
        g = temporal.g1(p, T, Tp)
        written.append(write_table(out / f"g1_gamma{G:g}", ["t", "tp", "g1"],
                                   zip(T.ravel(), Tp.ravel(), g.ravel()), fmt))
    return 0, written


def cmd_estimate(cfg, out, fmt, threads=1, converge=False):
    """Optimal weight function and summary statistics."""
    ep = _section(cfg, "estimator_params")
    zeta = _get(ep, "estimator_params", "zeta", float, nonneg=True)
    G = _get(ep, "estimator_params", "gamma_loss", float, 0.0, nonneg=True)
    T = _get(ep, "estimator_params", "T", float, positive=True)
    n_t = _get(ep, "estimator_params", "n_t", int, 400)
    method = _get(ep, "estimator_params", "method", str, "auto")
    window = _get(ep, "estimator_params", "fit_window", float, min(3.0, T), positive=True)
    fit_method = _get(ep, "estimator_params", "fit_method", str, "direct")
    if method not in ("collocation", "ritz", "auto"):
        raise ConfigError("estimator_params.method: expected collocation, ritz or auto")
    if fit_method not in ("log", "direct"):
        raise ConfigError("estimator_params.fit_method: expected log or direct")
    if n_t < 8:
        raise ConfigError("estimator_params.n_t: must be at least 8")
    if zeta == 0:
        raise ConfigError("estimator_params.zeta: zeta = 0 is a degenerate problem (no scattered photons)")
    prob = estimator.EstimatorProblem(temporal.TemporalParams(zeta, G), T, n_t)
    sol = estimator.solve_weights(prob, method)
    try:
        with warnings.catch_warnings():
            # a flat w (lossless case) leaves the fit covariance undefined
            warnings.simplefilter("ignore", OptimizeWarning)
            A, B, rms = estimator.fit_exponential(sol.weights, sol.t_nodes, min(window, T), fit_method)
    except (ValueError, RuntimeError):
        A = B = rms = float("nan")
    written = [write_table(out / "weights", ["t", "w"], zip(sol.t_nodes, sol.weights), fmt)]
    summary = {"d2": sol.expected_sq_error, "n_b": sol.n_b, "db": sol.noise_reduction_db,
               "fitA": A, "fitB": B, "fit_rms": rms, "fit_window": window, "fit_method": fit_method,
               "method": sol.method, "zeta": zeta, "gamma_loss": G, "T": T, "n_t": n_t}
    written.append(write_json(out / "summary.json", summary))
    return 0, written


def run_validation(cfg):
    """Run every check suite; returns ``(passed, report)``."""
    vp = cfg.get("validate", {}) if isinstance(cfg.get("validate", {}), dict) else {}
    report = {}

    def suite(name, dev, thr):
        report[name] = {"max_deviation": dev, "threshold": thr, "passed": bool(dev < thr)}

    # closed-form matrix elements against extended-precision quadrature
    dev = 0.0
    for reg in ("a", "b"):
        for F in (0.1, 10.0):
            red = geometry.reduced(reg, F)
            idx = np.arange(5)
            for m in range(3):
                for z in np.linspace(*red.z_range, 3):
                    q, _ = coupling.coupling_matrix_quadrature(red, m, 4, z, dps=30)
                    c = coupling.coupling_element(red, m, idx[:, None], idx[None, :], z)
                    dev = max(dev, float(np.max(np.abs(c - q) / np.abs(c))))
    suite("quadrature_vs_closed_form", dev, 1e-8)

    # LG orthonormality and SVD coefficient orthonormality
    dev = 0.0
    x, wt = np.polynomial.legendre.leggauss(256)
    for z in (0.0, 0.7):
        R = 8 * np.sqrt(1 + 4 * z**2)
        rho = 0.5 * R * (x + 1)
        for m in range(3):
            G = specfun.lg_table(5, m, rho, z, 1.0, 1.0)
            gram = (G.conj() * (np.pi * R * rho * wt)) @ G.T
            dev = max(dev, float(np.max(np.abs(gram - np.eye(6)))))
    inj = vp.get("inject_perturbation")
    rec_dev = 0.0
    for reg in ("a", "b"):
        red = geometry.reduced(reg, 1.0)
        for m in range(2):
            blk = coupling.build_block(red, m, 12, 21)
            if inj and inj.get("m", 0) == m and reg == "a":
                H = blk.elements.copy()
                H[inj.get("l", 0), inj.get("lp", 0), inj.get("j", 0)] += float(inj.get("size", 1e-3))
                blk = coupling.CouplingBlock(m, blk.l_max, blk.z_nodes, blk.z_weights, H)
            d = modes.decompose(blk)
            k = d.n_modes
            dev = max(dev, float(np.max(np.abs(d.photon_coeffs @ d.photon_coeffs.conj().T - np.eye(k)))))
            ca = d.atomic_coeffs.reshape(k, -1, len(d.z_nodes)) * np.sqrt(d.z_weights)
            ca = ca.reshape(k, -1)
            dev = max(dev, float(np.max(np.abs(ca @ ca.conj().T - np.eye(k)))))
            # reconstruction checked against a fresh evaluation of the elements
            fresh = coupling.build_block(red, m, 12, 21).elements
            err = np.sqrt(np.sum(np.abs(d.reconstruct() - fresh) ** 2 * d.z_weights))
            rec_dev = max(rec_dev, float(err / np.sqrt(np.sum(np.abs(fresh) ** 2 * d.z_weights))))
    suite("orthonormality", dev, 1e-9)
    suite("svd_reconstruction", rec_dev, 1e-8)

    # covariance propagation against the closed-form correlations
    dev = 0.0
    tg = np.linspace(0.0, 2.0, 5)
    T, Tp = np.meshgrid(tg, tg, indexing="ij")
    for z in (0.5, 1.0, 2.0):
        for G in (0.0, 0.5, 2.0):
            p = temporal.TemporalParams(z, G)
            rec = oracle.propagate_covariance(p, tg, 1e-4)
            for num, ref in ((rec.aa, temporal.corr_aa(p, T, Tp)), (rec.bb, temporal.corr_bb(p, T, Tp)),
                             (rec.ba, temporal.corr_ba(p, T, Tp))):
                dev = max(dev, float(np.max(np.abs(num - ref) / np.where(ref == 0, 1, np.abs(ref)))))
    suite("oracle_vs_closed_form", dev, 1e-3)

    dev = max(oracle.bogoliubov_defect(z, 1e-3, 200) for z in (0.5, 1.0, 2.0))
    suite("bogoliubov", dev, 1e-10)
    return all(s["passed"] for s in report.values()), report


def cmd_validate(cfg, out, fmt, threads=1, converge=False):
    """Run all check suites and write a JSON report."""
    ok, report = run_validation(cfg)
    path = write_json(out / "validation.json", {"passed": ok, "suites": report})
    for name, s in report.items():
        print(f"{name}: {'pass' if s['passed'] else 'FAIL'} (max deviation {s['max_deviation']:.3g}, "
              f"threshold {s['threshold']:.0e})")
    return (0 if ok else 1), [path]


COMMANDS = {"modes": cmd_modes, "temporal": cmd_temporal, "estimate": cmd_estimate, "validate": cmd_validate}


def build_parser():
    ap = argparse.ArgumentParser(prog="artifact", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON config path or bundled recipe name (fig2..fig5)")
    ap.add_argument("--out", help="output directory (default: config output.path or ./out)")
    ap.add_argument("--format", choices=("csv", "json"), help="table format (default: csv)")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for per-m decompositions")
    ap.add_argument("--converge", action="store_true", help="check the spectrum under doubled l_max")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command != "validate" and args.config is None:
            raise ConfigError("--config is required for this command")
        cfg = load_config(args.config)
        outsec = cfg.get("output", {})
        if not isinstance(outsec, dict):
            raise ConfigError("output: must be an object")
        fmt = args.format or outsec.get("format", "csv")
        if fmt not in ("csv", "json"):
            raise ConfigError(f"output.format: expected csv or json, got {fmt!r}")
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        out = Path(args.out or outsec.get("path", "out"))
        out.mkdir(parents=True, exist_ok=True)
        status, written = COMMANDS[args.command](cfg, out, fmt, args.threads, args.converge)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except estimator.DegenerateProblemError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    for p in written:
        print(p)
    return status


if __name__ == "__main__":
    sys.exit(main())
