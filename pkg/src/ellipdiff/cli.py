"""Command-line workbench: a thin client over the HTTP service.

By default each invocation spins up the service in-process; set
ELLIPDIFF_SERVER to a base URL to talk to a remote instance instead.
ELLIPDIFF_SEED overrides any seed option.  Exit codes: 0 = all
verifications passed, 1 = a verification failed, 2 = usage or schema
error.  Output is JSON with sorted keys, so a fixed request (including
the seed) yields byte-identical output.
"""

from __future__ import annotations

import json
import os
import sys

import click

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class ServiceClient:
    def __init__(self):
        self._remote = os.environ.get("ELLIPDIFF_SERVER")
        self._client = None

    def post(self, path: str, payload: dict):
        if self._client is None:
            if self._remote:
                import httpx

                self._client = httpx.Client(base_url=self._remote, timeout=600)
            else:
                from fastapi.testclient import TestClient

                from .service import create_app

                self._client = TestClient(create_app())
        return self._client.post(path, json=payload)


def _seed(value: int) -> int:
    env = os.environ.get("ELLIPDIFF_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise click.UsageError("ELLIPDIFF_SEED must be an integer")
    return value


def _emit(data, out: str | None):
    text = json.dumps(data, sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _finish(ctx, resp, out: str | None):
    if resp.status_code == 422 or resp.status_code == 400:
        _emit(resp.json(), None)
        ctx.exit(EXIT_USAGE)
    if resp.status_code != 200:
        click.echo(f"service error {resp.status_code}: {resp.text}", err=True)
        ctx.exit(EXIT_USAGE)
    body = resp.json()
    _emit(body, out)
    ctx.exit(EXIT_PASS if body.get("passed", False) else EXIT_FAIL)


def _run_selftest(ctx, modules: list, seed: int, out: str | None):
    resp = ServiceClient().post("/self-test",
                                {"modules": modules, "seed": _seed(seed)})
    _finish(ctx, resp, out)


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read {path}: {exc}")


def _lattice_opt(omega1: str, omega2: str) -> dict:
    def parse(s: str):
        try:
            re_s, im_s = s.split(",")
            return [float(re_s), float(im_s)]
        except ValueError:
            raise click.UsageError("lattice generators must be 're,im'")

    return {"omega1": parse(omega1), "omega2": parse(omega2)}


@click.group()
def main():
    """Workbench for elliptic difference systems."""


@main.command()
@click.argument("kind", type=click.Choice(["special"]))
@click.option("--rank", default=2, show_default=True)
@click.option("--p", "p", default=2, show_default=True)
@click.option("--q", "q", default=3, show_default=True)
@click.option("--omega1", default="1,0", show_default=True)
@click.option("--omega2", default="0.3,1.1", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None, help="write JSON here instead of stdout")
@click.option("--self-test", is_flag=True, help="run the module invariant suite")
@click.pass_context
def build(ctx, kind, rank, p, q, omega1, omega2, seed, out, self_test):
    """Construct a standard pair and report its consistency."""
    if self_test:
        _run_selftest(ctx, ["canonical", "diffmod"], seed, out)
    payload = {
        "kind": kind,
        "rank": rank,
        "p": p,
        "q": q,
        "lattice": _lattice_opt(omega1, omega2),
        "seed": _seed(seed),
    }
    _finish(ctx, ServiceClient().post("/build", payload), out)


@main.command("check-consistency")
@click.argument("pair_json", required=False)
@click.option("--samples", default=20, show_default=True)
@click.option("--tol", default=1e-8, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None)
@click.option("--self-test", is_flag=True)
@click.pass_context
def check_consistency(ctx, pair_json, samples, tol, seed, out, self_test):
    """Probe B(z/p)A(z) = A(z/q)B(z) for a pair JSON file."""
    if self_test:
        _run_selftest(ctx, ["diffmod"], seed, out)
    if not pair_json:
        raise click.UsageError("pair JSON path required (or use --self-test)")
    payload = {
        "pair": _load_json(pair_json),
        "n_samples": samples,
        "tol": tol,
        "seed": _seed(seed),
    }
    _finish(ctx, ServiceClient().post("/check-consistency", payload), out)


@main.command()
@click.argument("pair_json", required=False)
@click.option("--order", default=40, show_default=True)
@click.option("--p", "p", default=2, show_default=True)
@click.option("--q", "q", default=3, show_default=True)
@click.option("--synthesize-rank", default=None, type=int,
              help="reduce a synthesized instance instead of a file")
@click.option("--tol", default=1e-9, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None)
@click.option("--self-test", is_flag=True)
@click.pass_context
def reduce(ctx, pair_json, order, p, q, synthesize_rank, tol, seed, out,
           self_test):
    """Reduce a pair, given as series coefficients, to constants."""
    if self_test:
        _run_selftest(ctx, ["formal"], seed, out)
    payload = {"p": p, "q": q, "order": order, "tol": tol}
    if synthesize_rank is not None:
        payload["synthesize"] = {"rank": synthesize_rank, "seed": _seed(seed)}
    elif pair_json:
        data = _load_json(pair_json)
        for key in ("A_coefficients", "B_coefficients"):
            if key not in data:
                raise click.UsageError(f"input JSON lacks {key}")
            payload[key] = data[key]
        payload["p"] = data.get("p", p)
        payload["q"] = data.get("q", q)
    else:
        raise click.UsageError(
            "need a coefficients JSON or --synthesize-rank (or --self-test)")
    _finish(ctx, ServiceClient().post("/reduce", payload), out)


@main.command("continue")
@click.option("--kind", type=click.Choice(["special", "rank1-product"]),
              default="special", show_default=True)
@click.option("--rank", default=2, show_default=True)
@click.option("--p", "p", default=2, show_default=True)
@click.option("--q", "q", default=3, show_default=True)
@click.option("--point", "points", multiple=True,
              help="re,im evaluation point (repeatable)")
@click.option("--order", default=24, show_default=True)
@click.option("--tol", default=1e-7, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None)
@click.option("--self-test", is_flag=True)
@click.pass_context
def continue_cmd(ctx, kind, rank, p, q, points, order, tol, seed, out,
                 self_test):
    """Continue the normalized gauge and probe its constancy."""
    if self_test:
        _run_selftest(ctx, ["continuation"], seed, out)
    pts = []
    for s in points:
        try:
            re_s, im_s = s.split(",")
            pts.append([float(re_s), float(im_s)])
        except ValueError:
            raise click.UsageError("--point must be 're,im'")
    payload = {
        "kind": kind,
        "rank": rank,
        "p": p,
        "q": q,
        "points": pts,
        "order": order,
        "tol": tol,
        "seed": _seed(seed),
    }
    _finish(ctx, ServiceClient().post("/continue", payload), out)


@main.command()
@click.argument("ts_json", required=False)
@click.option("--emit-table", is_flag=True,
              help="emit the rank <= 3 classification table")
@click.option("--per-class", default=5, show_default=True)
@click.option("--p", "p", default=2, show_default=True)
@click.option("--q", "q", default=3, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None)
@click.option("--self-test", is_flag=True)
@click.pass_context
def classify(ctx, ts_json, emit_table, per_class, p, q, seed, out, self_test):
    """Classify a block-scalar pair (T, S) of rank <= 3."""
    if self_test:
        _run_selftest(ctx, ["canonical"], seed, out)
    if emit_table:
        payload = {"p": p, "q": q, "per_class": per_class, "seed": _seed(seed)}
        _finish(ctx, ServiceClient().post("/classify/table", payload), out)
    if not ts_json:
        raise click.UsageError(
            "pair JSON path required (or --emit-table / --self-test)")
    data = _load_json(ts_json)
    for key in ("T", "S", "partition"):
        if key not in data:
            raise click.UsageError(f"input JSON lacks {key}")
    payload = {
        "T": data["T"],
        "S": data["S"],
        "partition": data["partition"],
        "p": data.get("p", p),
        "q": data.get("q", q),
    }
    _finish(ctx, ServiceClient().post("/classify", payload), out)


@main.command("periodicity-demo")
@click.argument("scenario_json", required=False)
@click.option("--p", "p", default=2, show_default=True)
@click.option("--q", "q", default=3, show_default=True)
@click.option("--level-factor", default=1, show_default=True,
              help="richness of the synthesized torsion scenario")
@click.option("--corrupt", type=click.Choice(["divA", "point"]), default=None)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None)
@click.option("--self-test", is_flag=True)
@click.pass_context
def periodicity_demo(ctx, scenario_json, p, q, level_factor, corrupt, seed,
                     out, self_test):
    """Run the periodic-modification checker on a divisor scenario."""
    if self_test:
        _run_selftest(ctx, ["periodicity"], seed, out)
    if scenario_json:
        payload = {"scenario": _load_json(scenario_json), "p": p, "q": q}
    else:
        payload = {
            "synthesize": {"k": level_factor, "seed": _seed(seed),
                           "corrupt": corrupt},
            "p": p,
            "q": q,
        }
    _finish(ctx, ServiceClient().post("/periodicity-demo", payload), out)


@main.command()
@click.option("--t", "t_opt", required=False, help="re,im scaling eigenvalue")
@click.option("--p", "p", default=2, show_default=True)
@click.option("--g", "g_path", required=False,
              help="JSON file {exponent: [re,im]}")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None)
@click.option("--self-test", is_flag=True)
@click.pass_context
def descent(ctx, t_opt, p, g_path, seed, out, self_test):
    """Solve h(z/p) = t h(z) + g(z) in Laurent polynomials."""
    if self_test:
        _run_selftest(ctx, ["descent"], seed, out)
    if not t_opt or not g_path:
        raise click.UsageError("--t and --g required (or use --self-test)")
    try:
        re_s, im_s = t_opt.split(",")
        t = [float(re_s), float(im_s)]
    except ValueError:
        raise click.UsageError("--t must be 're,im'")
    payload = {"t": t, "p": p, "g": _load_json(g_path)}
    _finish(ctx, ServiceClient().post("/descent", payload), out)


@main.command("self-test")
@click.option("--module", "modules", multiple=True,
              help="restrict to specific suites (repeatable)")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None)
@click.pass_context
def self_test(ctx, modules, seed, out):
    """Run every module's invariant suite."""
    _run_selftest(ctx, list(modules) or None, seed, out)


if __name__ == "__main__":
    main()
