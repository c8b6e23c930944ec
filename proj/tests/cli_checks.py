"""CLI contract checks: exit codes, determinism, schema validity."""

import json
import pathlib
import subprocess
import sys
import tempfile

from jsonschema import Draft202012Validator
from referencing import Registry, Resource

BIN = sys.argv[1]
SCHEMAS = pathlib.Path(sys.argv[2])

UNIT = {"kind": "union", "pieces": [{"interval": [0, 1]}]}
TWO = {"kind": "union", "pieces": [{"interval": [0, 1 / 3]}, {"interval": [2 / 3, 1]}]}
FAT = {"kind": "union", "pieces": [{"svc": {"base": [0, 1], "rho": "4^-n"}}]}
THIN = {"kind": "union", "pieces": [{"svc": {"base": [0, 1], "rho": "3^-n"}}]}
FIVE = {
    "E": {"kind": "union", "pieces": [{"point": x} for x in (0, 0.15, 0.4, 0.55, 1)]},
    "mu": {"atoms": [[0, 0.5], [0.15, 0.25], [0.4, 1], [0.55, 0.5], [1, 0.75]]},
}
ID = {"pl": {"breaks": [0, 1], "values": [0, 1]}}


def registry():
    resources = []
    for p in SCHEMAS.glob("*.json"):
        resources.append((p.name, Resource.from_contents(json.loads(p.read_text()))))
    return Registry().with_resources(resources)


REG = registry()


def validate(doc, schema):
    s = json.loads((SCHEMAS / schema).read_text())
    errors = list(Draft202012Validator(s, registry=REG).iter_errors(doc))
    assert not errors, f"{schema}: {errors[0].message} at {list(errors[0].path)}"


def run(*args, code=0):
    r = subprocess.run([BIN, *map(str, args)], capture_output=True, text=True)
    assert r.returncode == code, f"{args}: exit {r.returncode}, expected {code}\n{r.stdout}\n{r.stderr}"
    return r


def run_json(*args, schema=None):
    doc = json.loads(run(*args, "--json").stdout)
    if schema:
        validate(doc, schema)
    return doc


def dumps(x):
    return json.dumps(x)


def check_catalog():
    doc = run_json("catalog", schema="catalog_report.schema.json")
    entries = doc["entries"]
    assert len(entries) >= 3
    assert any("approximated speed measure" in e.get("flags", []) for e in entries)
    assert any(e["boundary"] == "Dirichlet at 0" for e in entries)
    for e in entries:
        assert e["measure"]["lo"] <= e["measure"]["hi"]
        validate(e["E"], "set.schema.json")
        validate(e["mu"], "measure.schema.json")


def check_round_trip():
    # Emitted objects re-parse losslessly: feeding E back in reproduces it.
    for e in run_json("catalog")["entries"]:
        again = run_json("classify", "--set", dumps(e["E"]), schema="classify_report.schema.json")
        if again["witness"] is not None:
            assert again["witness"]["E"] == e["E"], e["name"]
        form = {"E": e["E"], "mu": e["mu"]}
        if "approximation" not in e:
            run_json("energy", "--form", dumps(form), "--f", dumps(ID), schema="energy_report.schema.json")


def check_energy():
    doc = run_json("energy", "--form", dumps({"E": TWO}), "--f", dumps(ID), schema="energy_report.schema.json")
    assert abs(doc["energy"]["mid"] - 0.5) < 1e-12 and doc["energy"]["width"] == 0
    minimal = {"E": FAT, "scale": {"variant": "charset", "G": {"intervals": []}}}
    doc = run_json("energy", "--form", dumps(minimal), "--f", dumps({"scale_of": True}), "--tol", "1e-9")
    assert doc["energy"]["lo"] <= 0.25 <= doc["energy"]["hi"]
    assert doc["local"]["hi"] == 0


def check_energy_strict_exit2():
    half_open = {"E": {"kind": "union", "pieces": [{"interval": [0, 1]}], "l_in_E": False}}
    one = {"pl": {"breaks": [0, 1], "values": [1, 1]}}
    r = run("energy", "--form", dumps(half_open), "--f", dumps(one), "--strict", code=2)
    assert "boundary" in r.stderr
    run("energy", "--form", dumps(half_open), "--f", dumps(one))


def check_energy_tol_exit3():
    form = {"E": UNIT, "scale": {"variant": "charset", "G": {"ubiquitous": {"base": [0, 1], "budget": 0.5}}}}
    f = {
        "coordinate": {"variant": "charset", "G": {"ubiquitous": {"base": [0, 1], "budget": 0.3}}},
        "knots": [0, 1],
        "slopes": [1],
    }
    run("energy", "--form", dumps(form), "--f", dumps(f), "--tol", "1e-12", code=3)


def check_classify():
    expected = [(UNIT, "yes", "no"), (TWO, "yes", "no"), (THIN, "no", "yes-trivial"), (FAT, "yes", "yes"),
                ({"kind": "union", "pieces": [{"point": 0}, {"point": 1}]}, "no", "yes-trivial")]
    for s, proper, minimal in expected:
        doc = run_json("classify", "--set", dumps(s), schema="classify_report.schema.json")
        assert (doc["proper_subspaces"], doc["minimal_exists"]) == (proper, minimal), (s, doc)
        if proper == "yes":
            assert doc["witness"]["is_proper"]["decision"] == "yes"


def check_compare():
    ga = {"union": [{"ubiquitous": {"base": [0, 0.5]}}, {"interval": [0.5, 1]}]}
    gb = {"union": [{"interval": [0, 0.5]}, {"ubiquitous": {"base": [0.5, 1]}}]}
    doc = run_json("compare", "--set", dumps(UNIT), "--ga", dumps(ga), "--gb", dumps(gb),
                   schema="compare_report.schema.json")
    assert doc["decision"] == "incomparable"


def check_simulate_determinism():
    with tempfile.TemporaryDirectory() as d:
        outs = []
        for k in range(2):
            out = pathlib.Path(d) / str(k)
            run("simulate", "--form", dumps(FIVE), "--x0", "0.4", "--paths", "500", "--seed", "7", "--out", out)
            report = json.loads((out / "report.json").read_text())
            validate(report, "simulate_report.schema.json")
            report["config"].pop("out")
            outs.append(((out / "paths.csv").read_bytes(), report))
        assert outs[0][0] == outs[1][0]
        assert outs[0][1] == outs[1][1]
        assert outs[0][0].startswith(b"path,seed,stream,t,state\n")
        report = outs[0][1]
        assert report["chain"]["skip_free"]["rate"] == 1.0
        assert report["chain"]["detailed_balance"]
        out = pathlib.Path(d) / "other"
        run("simulate", "--form", dumps(FIVE), "--x0", "0.4", "--paths", "500", "--seed", "8", "--out", out)
        assert (out / "paths.csv").read_bytes() != outs[0][0]


def check_simulate_methods_agree():
    doc = run_json("simulate", "--form", dumps(FIVE), "--x0", "0.4", "--paths", "10000", "--seed", "3",
                   "--method", "both", schema="simulate_report.schema.json")
    assert doc["agreement"]["within_4_sigma"], doc["agreement"]
    assert doc["chain"]["hitting"]["within_4_sigma"]


def check_simulate_qk_exit4():
    bad = {"E": {"kind": "union", "pieces": [{"point": 1}, {"point": 2}]},
           "mu": {"atoms": [[1, 1], [2, 1]], "minus_inf_left_of": 0}}
    run("simulate", "--form", dumps(bad), code=4)


def check_verify_subspace():
    parent = {"E": UNIT}
    child = {"E": UNIT, "scale": {"variant": "charset", "G": {"ubiquitous": {"base": [0, 1]}}}}
    doc = run_json("verify-subspace", "--parent", dumps(parent), "--child", dumps(child), "--probes", "20",
                   "--tol", "1e-8", schema="verify_report.schema.json")
    assert doc["verdict"] == "PASS" and len(doc["rows"]) == 20
    half = {"E": UNIT, "scale": {"variant": "pl", "breaks": [0, 1], "values": [0, 0.5]}}
    doc = run_json("verify-subspace", "--parent", dumps(parent), "--child", dumps(half), "--probes", "5",
                   "--tol", "1e-10", schema="verify_report.schema.json")
    assert doc["verdict"] == "FAIL"
    for row in doc["rows"]:
        lhs = row["parent_energy"]["mid"] - row["child_energy"]["mid"]
        assert abs(lhs - row["predicted"]["mid"]) <= 1e-10
    doc = run_json("verify-subspace", "--parent", dumps(parent), "--child", dumps(parent), "--probes", "3")
    assert doc["verdict"] == "PASS"
    with tempfile.TemporaryDirectory() as d:
        run("verify-subspace", "--parent", dumps(parent), "--child", dumps(half), "--probes", "2", "--out", d)
        csv = (pathlib.Path(d) / "subspace.csv").read_text().splitlines()
        assert csv[0] == "probe,lhs,rhs,gap,predicted,verdict" and len(csv) == 3


def check_verify_mismatch_exit2():
    other = {"E": {"kind": "union", "pieces": [{"interval": [0, 2]}]}}
    run("verify-subspace", "--parent", dumps({"E": UNIT}), "--child", dumps(other), code=2)


if __name__ == "__main__":
    globals()["check_" + sys.argv[3]]()
    print("ok", sys.argv[3])
