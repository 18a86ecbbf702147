"""Command-line entry point: generators, refutation builders, checkers,
certificate transforms, restrictions, the shrinkage experiment, and the SDP
search, glued together by reproducible file formats.

Every command accepts `--manifest out.json` recording parameters, seed, and
input/output hashes; `reproduce` reruns a manifest and verifies the outputs
byte-for-byte.  Exit codes: 0 success, 1 check failure, 2 usage error.
Seeds default to the SOSFORGE_SEED environment variable (lowest precedence),
then 0.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time

from . import __version__
from .algebra import Poly
from .formulas import (
    CnfFormula,
    Graph,
    XorBlockGraph,
    XorSystem,
    constraints_from_json,
    constraints_to_json,
    encode_xor,
    gen_block,
    gen_bruteforce_gadget,
    gen_clique,
    gen_random_3xor,
    gen_threshold,
    build_xor_graph,
    read_dimacs,
    relativize,
    symmetric_template,
    generalize_domain,
    write_dimacs,
)
from .lasserre import (
    build_coefficient_system,
    extract_exact,
    ExtractionError,
    min_degree,
    solve_feasibility,
)
from .resolution import (
    ProofError,
    build_bruteforce_refutation,
    build_clique_refutation,
    build_relativized_refutation,
    build_threshold_refutation,
    check_proof,
    read_trace,
    threshold_refutation_system,
    write_trace,
)
from .restriction import (
    apply_restriction,
    check_recovers_base,
    sample_restriction,
    shrinkage_experiment,
)
from .sos import (
    CertificateError,
    block_to_xor,
    cert_from_json,
    cert_to_json,
    check_certificate,
    clique_to_block,
    compile_resolution,
    measure_certificate,
)

# per command: which option names are input files / output files
INPUTS = {
    "gen-clique": ["graph"],
    "gen-block": ["graph"],
    "gen-xor-graph": ["xor"],
    "relativize": ["infile"],
    "refute-clique": ["graph"],
    "refute-relativized": ["graph", "base", "inner"],
    "check-res": ["cnf", "proof"],
    "compile-sos": ["cnf", "proof"],
    "check-sos": ["cert"],
    "transform-clique-block": ["cert", "xor_graph"],
    "transform-block-xor": ["cert", "xor_graph"],
    "restrict": ["infile"],
    "sos-search": ["infile"],
    "measure": ["cert", "cnf", "proof"],
}
OUTPUTS = {
    "gen-clique": ["out"],
    "gen-block": ["out"],
    "gen-3xor": ["out"],
    "gen-xor-graph": ["out"],
    "gen-threshold": ["out"],
    "relativize": ["out"],
    "refute-clique": ["out", "cnf_out"],
    "refute-bruteforce": ["out", "cnf_out"],
    "refute-threshold": ["out", "cnf_out"],
    "refute-relativized": ["out", "cnf_out"],
    "compile-sos": ["out"],
    "transform-clique-block": ["out"],
    "transform-block-xor": ["out"],
    "restrict": ["out", "witness"],
    "shrink": ["out"],
    "sos-search": ["out", "cert_out"],
}


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _write(path: str, text: str):
    with open(path, "w") as fh:
        fh.write(text)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load_json(path: str):
    with open(path) as fh:
        return json.load(fh)


def _seed_of(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    return int(os.environ.get("SOSFORGE_SEED", "0"))


def _load_cnf(path: str) -> CnfFormula:
    with open(path) as fh:
        return read_dimacs(fh.read())


def _xbg_to_json(xbg: XorBlockGraph) -> dict:
    return {
        "graph": xbg.graph.to_json(),
        "xor": xbg.system.to_json(),
        "k": xbg.k,
        "block_vars": [list(vs) for vs in xbg.block_vars],
        "assignments": {
            label: {str(i): b for i, b in sorted(assign.items())}
            for label, assign in xbg.assignments.items()
        },
    }


def _xbg_from_json(data: dict) -> XorBlockGraph:
    return XorBlockGraph(
        graph=Graph.from_json(data["graph"]),
        system=XorSystem.from_json(data["xor"]),
        k=data["k"],
        block_vars=tuple(tuple(vs) for vs in data["block_vars"]),
        assignments={
            label: {int(i): b for i, b in assign.items()}
            for label, assign in data["assignments"].items()
        },
    )


def _base_from_relativized(rel: CnfFormula, k: int) -> CnfFormula:
    """Reconstruct F[k] from a relativized formula: strip the selector guards
    off the selectable clauses (anything mentioning a non-THR variable) and
    re-instantiate the symmetric template on [k]."""
    from .algebra import Clause

    base_clauses = set()
    for c in rel.clauses:
        if all(v.kind in ("s", "p", "y") for v in c.variables()):
            continue
        lits = {(v, pol) for v, pol in c.literals if v.kind != "s"}
        base_clauses.add(Clause(frozenset(lits)))
    f_m = CnfFormula(
        frozenset(base_clauses), rel.space, domain_size=rel.meta.get("m")
    )
    return generalize_domain(symmetric_template(f_m), k)


# ---------------------------------------------------------------------------
# Command handlers (each returns an exit code)
# ---------------------------------------------------------------------------


def cmd_gen_clique(args):
    graph = Graph.from_json(_load_json(args.graph))
    formula = gen_clique(graph, args.k)
    _write(args.out, write_dimacs(formula))
    return 0


def cmd_gen_block(args):
    graph = Graph.from_json(_load_json(args.graph))
    block = gen_block(graph, args.k)
    _write(args.out, _dump_json(constraints_to_json(block.constraints)))
    return 0


def cmd_gen_3xor(args):
    system = gen_random_3xor(args.n, args.delta, _seed_of(args))
    data = system.to_json()
    data["seed"] = _seed_of(args)
    _write(args.out, _dump_json(data))
    return 0


def cmd_gen_xor_graph(args):
    system = XorSystem.from_json(_load_json(args.xor))
    xbg = build_xor_graph(system, args.k, keep_violating=args.keep_violating)
    _write(args.out, _dump_json(_xbg_to_json(xbg)))
    return 0


def cmd_gen_threshold(args):
    _write(args.out, write_dimacs(gen_threshold(args.k, args.m)))
    return 0


def cmd_relativize(args):
    base = _load_cnf(args.infile)
    _write(args.out, write_dimacs(relativize(base, args.k, args.m)))
    return 0


def _emit_proof(args, formula, proof):
    _write(args.out, write_trace(proof, formula))
    if args.cnf_out:
        _write(args.cnf_out, write_dimacs(formula))
    measures = check_proof(formula, proof)
    print(measures)
    return 0


def cmd_refute_clique(args):
    graph = Graph.from_json(_load_json(args.graph))
    proof = build_clique_refutation(graph, args.k)
    return _emit_proof(args, gen_clique(graph, args.k), proof)


def cmd_refute_bruteforce(args):
    ms = [int(t) for t in args.ms.split(",")]
    proof = build_bruteforce_refutation(args.k, ms)
    return _emit_proof(args, gen_bruteforce_gadget(args.k, ms), proof)


def cmd_refute_threshold(args):
    proof = build_threshold_refutation(args.k, args.m)
    return _emit_proof(args, threshold_refutation_system(args.k, args.m), proof)


def cmd_refute_relativized(args):
    if args.graph:
        graph = Graph.from_json(_load_json(args.graph))
        base = gen_clique(graph, args.k)
        inner = build_clique_refutation(graph, args.k)
    elif args.base and args.inner:
        base = _load_cnf(args.base)
        with open(args.inner) as fh:
            inner = read_trace(fh.read(), base)
    else:
        print("refute-relativized needs --graph or both --base and --inner", file=sys.stderr)
        return 2
    proof = build_relativized_refutation(base, args.k, args.m, inner)
    return _emit_proof(args, relativize(base, args.k, args.m), proof)


def cmd_check_res(args):
    formula = _load_cnf(args.cnf)
    with open(args.proof) as fh:
        proof = read_trace(fh.read(), formula)
    try:
        measures = check_proof(formula, proof)
    except ProofError as e:
        print("REJECTED: %s" % e)
        return 1
    print(measures)
    return 0


def cmd_compile_sos(args):
    formula = _load_cnf(args.cnf)
    with open(args.proof) as fh:
        proof = read_trace(fh.read(), formula)
    cert = compile_resolution(formula, proof)
    _write(args.out, _dump_json(cert_to_json(cert)))
    print(measure_certificate(cert))
    return 0


def cmd_check_sos(args):
    cert = cert_from_json(_load_json(args.cert))
    try:
        measures = check_certificate(cert.system, cert)
    except CertificateError as e:
        print("REJECTED: %s" % e)
        return 1
    print(measures)
    return 0


def cmd_transform_clique_block(args):
    cert = cert_from_json(_load_json(args.cert))
    xbg = _xbg_from_json(_load_json(args.xor_graph))
    formula = gen_clique(xbg.graph, xbg.k)
    block = gen_block(xbg.graph, xbg.k)
    out = clique_to_block(cert, formula, block)
    _write(args.out, _dump_json(cert_to_json(out)))
    print(measure_certificate(out))
    return 0


def cmd_transform_block_xor(args):
    cert = cert_from_json(_load_json(args.cert))
    xbg = _xbg_from_json(_load_json(args.xor_graph))
    out = block_to_xor(cert, xbg)
    _write(args.out, _dump_json(cert_to_json(out)))
    print(measure_certificate(out))
    return 0


def cmd_restrict(args):
    rel = _load_cnf(args.infile)
    rho = sample_restriction(rel, _seed_of(args))
    restricted = apply_restriction(rel, rho)
    _write(args.out, write_dimacs(restricted))
    base = _base_from_relativized(rel, rel.meta["k"])
    result = check_recovers_base(rel, rho, base)
    if args.witness:
        _write(args.witness, _dump_json(result.to_json()))
    if not result.ok:
        print("restriction does not recover the base formula: %r" % (result.counterexample,))
        return 1
    print("recovered base formula; domain map %s" % result.domain_map)
    return 0


def cmd_shrink(args):
    report = shrinkage_experiment(
        args.m, args.k, args.l, args.lprime, args.trials, _seed_of(args)
    )
    text = _dump_json(report.to_json())
    if args.out:
        _write(args.out, text)
    print(text, end="")
    return 0


def cmd_sos_search(args):
    constraints, _ = constraints_from_json(_load_json(args.infile))
    result = min_degree(
        constraints,
        args.dmax,
        tol_eq=args.tol_eq,
        tol_psd=args.tol_psd,
        max_iters=args.max_iters,
    )
    payload = {
        "found": result.found,
        "degree": result.degree,
        "d_max": result.d_max,
        "numeric_only": result.numeric_only,
        "outcomes": {str(d): o.to_json() for d, o in result.outcomes.items()},
    }
    if args.out:
        _write(args.out, _dump_json(payload))
    print(str(result))
    if result.found and result.certificate is not None and args.cert_out:
        _write(args.cert_out, _dump_json(cert_to_json(result.certificate)))
    return 0


def cmd_measure(args):
    if args.cert:
        cert = cert_from_json(_load_json(args.cert))
        print(measure_certificate(cert))
        return 0
    if args.cnf and args.proof:
        formula = _load_cnf(args.cnf)
        with open(args.proof) as fh:
            proof = read_trace(fh.read(), formula)
        print(check_proof(formula, proof))
        return 0
    print("measure needs --cert or both --cnf and --proof", file=sys.stderr)
    return 2


def cmd_reproduce(args):
    manifest = _load_json(args.manifest_file)
    command = manifest["command"]
    params = dict(manifest["parameters"])
    outputs = manifest["outputs"]
    with tempfile.TemporaryDirectory() as tmp:
        remap = {}
        for flag in OUTPUTS.get(command, []):
            if params.get(flag):
                new = os.path.join(tmp, os.path.basename(params[flag]))
                remap[params[flag]] = new
                params[flag] = new
        argv = [command]
        for key, val in params.items():
            if val is None or val is False:
                continue
            flag = "--" + key.replace("_", "-")
            if key == "infile":
                flag = "--in"
            if val is True:
                argv.append(flag)
            else:
                argv.extend([flag, str(val)])
        code = dispatch(argv)
        if code != 0:
            print("rerun exited with %d" % code)
            return 1
        for orig, digest in outputs.items():
            new = remap.get(orig, orig)
            if _sha256(new) != digest:
                print("hash mismatch for %s" % orig)
                return 1
    print("reproduced %d output(s) byte-identically" % len(outputs))
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sosforge",
        description="proof-complexity workbench: formula families, resolution "
        "refutations, exact SOS certificates, restrictions, SDP search",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=fn)
        p.add_argument("--manifest", help="write a run manifest to this path")
        return p

    p = add("gen-clique", cmd_gen_clique, help="k-clique CNF from a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", required=True)

    p = add("gen-block", cmd_gen_block, help="block polynomial encoding")
    p.add_argument("--graph", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", required=True)

    p = add("gen-3xor", cmd_gen_3xor, help="random 3-XOR system")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=int, default=8)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)

    p = add("gen-xor-graph", cmd_gen_xor_graph, help="k-partite graph of a 3-XOR system")
    p.add_argument("--xor", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--keep-violating", action="store_true")
    p.add_argument("--out", required=True)

    p = add("gen-threshold", cmd_gen_threshold, help="threshold-k formula")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--out", required=True)

    p = add("relativize", cmd_relativize, help="relativize a symmetric CNF")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--out", required=True)

    p = add("refute-clique", cmd_refute_clique, help="resolution refutation of a clique CNF")
    p.add_argument("--graph", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--cnf-out", dest="cnf_out")

    p = add("refute-bruteforce", cmd_refute_bruteforce, help="refutation of the gadget")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--ms", required=True, help="comma-separated row sizes")
    p.add_argument("--out", required=True)
    p.add_argument("--cnf-out", dest="cnf_out")

    p = add("refute-threshold", cmd_refute_threshold, help="refutation of THR plus subset clauses")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--cnf-out", dest="cnf_out")

    p = add("refute-relativized", cmd_refute_relativized, help="refutation of a relativized formula")
    p.add_argument("--graph")
    p.add_argument("--base")
    p.add_argument("--inner")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--cnf-out", dest="cnf_out")

    p = add("check-res", cmd_check_res, help="check a resolution trace")
    p.add_argument("--cnf", required=True)
    p.add_argument("--proof", required=True)

    p = add("compile-sos", cmd_compile_sos, help="compile resolution into an SOS certificate")
    p.add_argument("--cnf", required=True)
    p.add_argument("--proof", required=True)
    p.add_argument("--out", required=True)

    p = add("check-sos", cmd_check_sos, help="check an SOS certificate exactly")
    p.add_argument("--cert", required=True)

    p = add("transform-clique-block", cmd_transform_clique_block, help="clique -> block certificate")
    p.add_argument("--cert", required=True)
    p.add_argument("--xor-graph", dest="xor_graph", required=True)
    p.add_argument("--out", required=True)

    p = add("transform-block-xor", cmd_transform_block_xor, help="block -> 3-XOR certificate")
    p.add_argument("--cert", required=True)
    p.add_argument("--xor-graph", dest="xor_graph", required=True)
    p.add_argument("--out", required=True)

    p = add("restrict", cmd_restrict, help="sample and apply a random restriction")
    p.add_argument("--seed", type=int)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--witness")

    p = add("shrink", cmd_shrink, help="monomial shrinkage experiment")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--lprime", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = add("sos-search", cmd_sos_search, help="minimum-degree SOS refutation search")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--dmax", type=int, required=True)
    p.add_argument("--tol-eq", dest="tol_eq", type=float, default=1e-8)
    p.add_argument("--tol-psd", dest="tol_psd", type=float, default=1e-8)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=20000)
    p.add_argument("--out")
    p.add_argument("--cert-out", dest="cert_out")

    p = add("measure", cmd_measure, help="measures of a proof or certificate")
    p.add_argument("--cert")
    p.add_argument("--cnf")
    p.add_argument("--proof")

    p = add("reproduce", cmd_reproduce, help="rerun a manifest and verify output hashes")
    p.add_argument("manifest_file")

    return parser


def dispatch(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    if not getattr(args, "command", None):
        parser.print_help()
        return 2
    t0 = time.monotonic()
    try:
        code = args.func(args)
    except (ProofError, CertificateError) as e:
        print("FAILED: %s" % e, file=sys.stderr)
        return 1
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as e:
        print("error: %s" % e, file=sys.stderr)
        return 2
    wall = time.monotonic() - t0
    if code == 0 and getattr(args, "manifest", None):
        skip = {"manifest", "func", "command", "manifest_file"}
        params = {k: v for k, v in vars(args).items() if k not in skip}
        manifest = {
            "command": args.command,
            "parameters": params,
            "seed": getattr(args, "seed", None),
            "inputs": {
                params[f]: _sha256(params[f])
                for f in INPUTS.get(args.command, [])
                if params.get(f)
            },
            "outputs": {
                params[f]: _sha256(params[f])
                for f in OUTPUTS.get(args.command, [])
                if params.get(f)
            },
            "tool_version": __version__,
            "wall_clock_s": wall,
        }
        _write(args.manifest, _dump_json(manifest))
    return code


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
