"""Command line entry point: ``geozeta <group> <command> ...``.

Every command that writes ``-o OUT`` also writes ``OUT.manifest.json`` with
the command line, the sha256 of every input file, and the library and
catalog versions.  ``geozeta replay OUT.manifest.json`` reruns it.

Exit codes: 0 ok, 2 parse, 3 validation, 4 numeric, 5 precondition.
"""

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__, heat, lie, spectrum, zeta
from ._numerics import canonical_dumps, complex_from_json, fmt_float
from .errors import GeozetaError, ParseError, ValidationError
from .validation import check_distinct_paths, check_grid, parse_complex

MANIFEST_SUFFIX = ".manifest.json"


# ------------------------------------------------------------------ helpers

def worker_count():
    raw = os.environ.get("GEOZETA_THREADS", "")
    if not raw:
        return min(4, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"GEOZETA_THREADS must be an integer (got {raw!r})") from None
    if n < 1:
        raise ValidationError("GEOZETA_THREADS must be >= 1")
    return n


def parallel_map(fn, items):
    """Order-preserving map; results are written single-threaded afterwards."""
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def cell(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return fmt_float(x + 0.0)  # -0.0 prints as 0
    return str(x)


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([cell(x) for x in row])
    return buf.getvalue()


def atomic_write(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path):
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError as exc:
        raise ParseError(f"cannot read {str(path)!r}: {exc.strerror}") from None


def s_list(values):
    return [parse_complex(v) for v in values]


def load_length_spectrum(path, strict):
    spec = spectrum.load_spectrum(path)
    if strict and spec.synthetic:
        raise ValidationError(f"{path}: synthetic spectrum rejected by --strict ({spec.provenance})")
    return spec


# ------------------------------------------------------------------ commands
# Each returns (text, inputs): the artifact text and the input files it read.

def cmd_lie_info(a):
    datum = lie.get_datum(a.name)
    doc = datum.to_dict()
    doc["pattern"] = lie.restricted_root_pattern(datum)
    doc["catalog_version"] = lie.catalog_version()
    return canonical_dumps(doc) + "\n", []


def cmd_spectrum_validate(a):
    spec = spectrum.load_spectrum(a.file)
    spectrum.validate_spectrum(spec)
    rows = [(len(spec.primitives), len(spec.classes), spec.cutoff, spec.min_length if spec.classes else 0.0,
             spec.growth_rate, spec.synthetic, spec.datum_name)]
    header = ["primitives", "classes", "cutoff", "min_length", "growth", "synthetic", "datum_name"]
    return csv_text(header, rows), [a.file]


def cmd_spectrum_synth(a):
    if a.output is None:
        raise ValidationError("spectrum synth needs -o/--output")
    spec = spectrum.synth_spectrum(lie.get_datum(a.datum), a.seed, a.lmax, a.growth, a.min_length)
    return spectrum.dumps_spectrum(spec), []


def cmd_zeta_eval(a):
    spec = load_length_spectrum(a.spectrum, a.strict)

    def one(s):
        if a.ruelle:
            return zeta.log_ruelle(spec, s, method=a.method or "factorized", use_omega=not a.no_omega)
        return zeta.log_selberg(spec, s, use_omega=not a.no_omega, trace_tag=a.trace_tag,
                                method=a.method or "closed")
    rows = [(e.s.real, e.s.imag, e.log_value.real, e.log_value.imag, e.truncation_bound)
            for e in parallel_map(one, s_list(a.s))]
    return csv_text(["s_re", "s_im", "logZ_re", "logZ_im", "bound"], rows), [a.spectrum]


def cmd_zeta_check_opposite(a):
    spec = load_length_spectrum(a.spectrum, a.strict)
    twist = dict(t.split(":", 1) for t in a.twist)
    rep = zeta.opposite_parabolic_check(spec, s_list(a.s), trace_tag=a.trace_tag, w_twist=twist)
    rows = [(s.real, s.imag, d, rep.bound, d <= rep.bound) for s, d in zip(rep.samples, rep.discrepancies)]
    return csv_text(["s_re", "s_im", "discrepancy", "bound", "passed"], rows), [a.spectrum]


def cmd_zeta_zero_scan(a):
    spec = load_length_spectrum(a.spectrum, a.strict)
    grid = check_grid(a.grid)
    rects = []
    for text in a.rect:
        parts = text.split(",")
        if len(parts) != 2:
            raise ParseError(f"--rect expects 'corner0,corner1' (got {text!r})")
        rects.append((parse_complex(parts[0]), parse_complex(parts[1])))
    counts = parallel_map(lambda r: zeta.zero_free_region_check(spec, r, grid, trace_tag=a.trace_tag), rects)
    rows = [(z0.real, z0.imag, z1.real, z1.imag, grid, n) for (z0, z1), n in zip(rects, counts)]
    return csv_text(["re0", "im0", "re1", "im1", "grid", "winding"], rows), [a.spectrum]


def cmd_zeta_c_constant(a):
    try:
        doc = json.loads(Path(a.orders).read_text(encoding="utf-8"))
        datum = lie.get_datum(doc["datum_name"])
        orders = {(int(e["c"]), int(e["i"])): int(e["order"]) for e in doc["shift_orders"]}
        points = [(complex_from_json(p), int(o)) for p, o in doc.get("points", [])]
    except OSError as exc:
        raise ParseError(f"cannot read {a.orders!r}: {exc.strerror}") from None
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{a.orders}: malformed order file ({exc})") from None
    rows = [("c_constant", "", "", zeta.assemble_c_constant(datum, orders), 0.0)]
    for s in s_list(a.s):
        v = zeta.regularized_product(zeta.OrderList.from_pairs(points), s)
        rows.append(("regularized_product", s.real, s.imag, v.real, v.imag))
    return csv_text(["quantity", "s_re", "s_im", "value_re", "value_im"], rows), [a.orders]


def cmd_heat_theta(a):
    spec = load_length_spectrum(a.spectrum, a.strict)
    datum = lie.get_datum(a.datum or spec.datum_name)
    ts = [float(t) for t in a.t]
    vals = parallel_map(lambda t: heat.theta_geometric(spec, datum, t, use_omega=not a.no_omega), ts)
    rows = [(t, complex(v).real, complex(v).imag) for t, v in zip(ts, vals)]
    return csv_text(["t", "theta_re", "theta_im"], rows), [a.spectrum]


def cmd_heat_bridge(a):
    spec = load_length_spectrum(a.spectrum, a.strict)
    datum = lie.get_datum(a.datum or spec.datum_name)
    try:
        entry = datum.shift_table[a.shift_index]
    except IndexError:
        raise ValidationError(f"{datum.name} has no shift entry {a.shift_index}") from None
    lams = [float(x) for x in a.lam]
    reps = parallel_map(lambda lam: heat.resolvent_bridge_check(spec, datum, lam, entry), lams)
    rows = [(lam, r.mu, r.zeta_point, r.kernel_max_error, r.heat_side.real, r.zeta_side.real, r.relative_error)
            for lam, r in zip(lams, reps)]
    header = ["lambda", "mu", "zeta_point", "kernel_max_error", "heat_side", "zeta_side", "relative_error"]
    return csv_text(header, rows), [a.spectrum]


def cmd_det_zeta(a):
    spec = heat.load_eigenvalues(a.eigenvalues)
    method = a.method
    if method == "auto":
        method = "direct" if spec.heat_dimension == 0 else "mellin"
    if method == "mellin":
        m = heat.spectral_mellin(spec, a.lambda_shift)
        fn = m
    else:
        def fn(s):
            return heat.spectral_zeta(spec, s, a.lambda_shift, method)
    pts = s_list(a.s)
    vals = parallel_map(fn, pts)
    rows = [(s.real, s.imag, complex(v).real, complex(v).imag) for s, v in zip(pts, vals)]
    return csv_text(["s_re", "s_im", "zeta_re", "zeta_im"], rows), [a.eigenvalues]


def cmd_det_prime(a):
    spec = heat.load_eigenvalues(a.eigenvalues)
    m = heat.spectral_mellin(spec, a.lambda_shift)
    log_det = -m.derivative_at_zero()
    rows = [(spec.label, m.at_zero(), log_det, math.exp(log_det), m.error_estimate)]
    return csv_text(["label", "zeta_at_zero", "log_det_prime", "det_prime", "fit_residual"], rows), [a.eigenvalues]


def cmd_det_torsion(a):
    specs = [heat.load_eigenvalues(p) for p in a.eigenvalues]
    logs = parallel_map(lambda qs: heat.log_det_prime(qs[1]) if lie.torsion_exponent(qs[0]) else 0.0,
                        list(enumerate(specs)))
    rows = [(q, s.label, lie.torsion_exponent(q), ld) for q, (s, ld) in enumerate(zip(specs, logs))]
    total = math.fsum(lie.torsion_exponent(q) * ld for q, ld in enumerate(logs))
    rows.append(("total", "torsion", "", math.exp(total)))
    return csv_text(["q", "label", "exponent", "value"], rows), list(a.eigenvalues)


def cmd_det_l2(a):
    models = [heat.load_plancherel(p) for p in a.model]
    logs = parallel_map(lambda qm: heat.l2_log_det(qm[1], a.refine) if lie.torsion_exponent(qm[0]) else 0.0,
                        list(enumerate(models)))
    rows = [(q, m.label, lie.torsion_exponent(q), ld) for q, (m, ld) in enumerate(zip(models, logs))]
    total = math.fsum(lie.torsion_exponent(q) * ld for q, ld in enumerate(logs))
    rows.append(("total", "l2_torsion", "", math.exp(total)))
    return csv_text(["q", "label", "exponent", "value"], rows), list(a.model)


def cmd_det_ratio(a):
    value = heat.torsion_ratio_assembly(a.torsion, a.l2_torsion, a.dim_omega)
    return csv_text(["torsion", "l2_torsion", "dim_omega", "ratio"],
                    [(a.torsion, a.l2_torsion, a.dim_omega, value)]), []


# ------------------------------------------------------------------ parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParseError(f"{self.prog}: {message}")


def build_parser():
    p = _Parser(prog="geozeta", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"geozeta {__version__}")
    groups = p.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def command(sub, name, fn, help_text):
        c = sub.add_parser(name, help=help_text)
        c.set_defaults(func=fn)
        c.add_argument("-o", "--output", help="artifact path (a manifest is written next to it)")
        c.add_argument("--strict", action="store_true", help="reject synthetic length spectra")
        return c

    lie_p = groups.add_parser("lie", help="catalog of group data").add_subparsers(dest="cmd", required=True)
    c = command(lie_p, "info", cmd_lie_info, "print a catalog entry")
    c.add_argument("name")

    sp = groups.add_parser("spectrum", help="length spectrum files").add_subparsers(dest="cmd", required=True)
    c = command(sp, "validate", cmd_spectrum_validate, "validate a spectrum file")
    c.add_argument("file")
    c = command(sp, "synth", cmd_spectrum_synth, "write a synthetic spectrum")
    c.add_argument("--datum", required=True)
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--lmax", type=float, required=True)
    c.add_argument("--growth", type=float, required=True)
    c.add_argument("--min-length", type=float, default=1.0)

    zp = groups.add_parser("zeta", help="Selberg and Ruelle zeta functions").add_subparsers(dest="cmd", required=True)
    c = command(zp, "eval", cmd_zeta_eval, "log Z at points s")
    c.add_argument("--spectrum", required=True)
    c.add_argument("--s", action="append", required=True, help="complex point, e.g. 3+0i (repeatable)")
    c.add_argument("--ruelle", action="store_true")
    c.add_argument("--method", choices=["closed", "euler", "factorized", "direct"])
    c.add_argument("--trace-tag")
    c.add_argument("--no-omega", action="store_true")
    c = command(zp, "check-opposite", cmd_zeta_check_opposite, "opposite-parabolic comparison")
    c.add_argument("--spectrum", required=True)
    c.add_argument("--s", action="append", required=True)
    c.add_argument("--trace-tag")
    c.add_argument("--twist", action="append", default=[], help="tag:twisted_tag (repeatable)")
    c = command(zp, "zero-scan", cmd_zeta_zero_scan, "winding number around rectangles")
    c.add_argument("--spectrum", required=True)
    c.add_argument("--rect", action="append", required=True, help="corner0,corner1 e.g. 4-1i,6+1i")
    c.add_argument("--grid", type=int, default=400)
    c.add_argument("--trace-tag")
    c = command(zp, "c-constant", cmd_zeta_c_constant, "assemble c from shift orders")
    c.add_argument("--orders", required=True)
    c.add_argument("--s", action="append", default=[], help="also evaluate the regularized product here")

    hp = groups.add_parser("heat", help="geodesic heat theta series").add_subparsers(dest="cmd", required=True)
    c = command(hp, "theta", cmd_heat_theta, "geodesic theta at times t")
    c.add_argument("--spectrum", required=True)
    c.add_argument("--t", action="append", type=float, required=True)
    c.add_argument("--datum")
    c.add_argument("--no-omega", action="store_true")
    c = command(hp, "bridge", cmd_heat_bridge, "heat-side vs zeta-side resolvent comparison")
    c.add_argument("--spectrum", required=True)
    c.add_argument("--lam", action="append", type=float, required=True)
    c.add_argument("--shift-index", type=int, default=0)
    c.add_argument("--datum")

    dp = groups.add_parser("det", help="spectral zeta, determinants, torsion").add_subparsers(dest="cmd", required=True)
    c = command(dp, "zeta", cmd_det_zeta, "spectral zeta at points s")
    c.add_argument("--eigenvalues", required=True)
    c.add_argument("--s", action="append", required=True)
    c.add_argument("--lambda-shift", type=float, default=0.0)
    c.add_argument("--method", choices=["auto", "direct", "mellin"], default="auto")
    c = command(dp, "prime", cmd_det_prime, "zeta-regularized determinant")
    c.add_argument("--eigenvalues", required=True)
    c.add_argument("--lambda-shift", type=float, default=0.0)
    c = command(dp, "torsion", cmd_det_torsion, "torsion from eigenvalue files in degree order q = 0, 1, ...")
    c.add_argument("eigenvalues", nargs="+")
    c = command(dp, "l2", cmd_det_l2, "L2 determinants and torsion from Plancherel models, q = 0, 1, ...")
    c.add_argument("model", nargs="+")
    c.add_argument("--refine", type=int, default=1)
    c = command(dp, "ratio", cmd_det_ratio, "T / T2^dim_omega")
    c.add_argument("--torsion", type=float, required=True)
    c.add_argument("--l2-torsion", type=float, required=True)
    c.add_argument("--dim-omega", type=int, required=True)

    rp = groups.add_parser("replay", help="rerun a command from its manifest")
    rp.add_argument("manifest")
    rp.add_argument("-o", "--output", help="write here instead of the recorded output path")
    rp.set_defaults(func=None)
    return p


def _strip_output(argv):
    out, skip = [], False
    for i, tok in enumerate(argv):
        if skip:
            skip = False
            continue
        if tok in ("-o", "--output"):
            skip = True
            continue
        if tok.startswith("--output="):
            continue
        out.append(tok)
    return out


def execute(argv):
    """Run one command; returns the process exit status."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.group == "replay":
        return replay(args.manifest, args.output)
    text, inputs = args.func(args)
    if args.output is None:
        sys.stdout.write(text)
        return 0
    check_distinct_paths(inputs, args.output)
    manifest = {
        "argv": _strip_output(list(argv)),
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "output": str(args.output),
        "output_sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
        "version": __version__,
        "catalog_version": lie.catalog_version(),
    }
    atomic_write(args.output, text)
    atomic_write(str(args.output) + MANIFEST_SUFFIX, canonical_dumps(manifest) + "\n")
    return 0


def replay(manifest_path, output=None):
    try:
        doc = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
        argv, inputs = list(doc["argv"]), dict(doc["inputs"])
    except OSError as exc:
        raise ParseError(f"cannot read manifest {manifest_path!r}: {exc.strerror}") from None
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"{manifest_path}: malformed manifest ({exc})") from None
    for path, digest in inputs.items():
        if sha256_file(path) != digest:
            raise ValidationError(f"input {path} changed since the manifest was written")
    if doc.get("version") != __version__:
        raise ValidationError(f"manifest written by version {doc.get('version')}, running {__version__}")
    return execute(argv + ["-o", output or doc["output"]])


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        return execute(argv)
    except GeozetaError as exc:
        sys.stderr.write(json.dumps(exc.to_dict(), sort_keys=True) + "\n")
        return exc.exit_code
    except ValueError as exc:
        err = ValidationError(str(exc))
        sys.stderr.write(json.dumps(err.to_dict(), sort_keys=True) + "\n")
        return err.exit_code


if __name__ == "__main__":
    sys.exit(main())
