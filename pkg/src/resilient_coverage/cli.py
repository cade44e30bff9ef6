"""Command line front door: pools, team selection, simulations,
experiments, the operator service, and the clique-cover tool.

Every command that draws randomness takes one --seed flag; everything
else is deterministic, so runs are reproducible byte for byte.
Infeasible selections exit with code 2 and a JSON diagnostic on stderr.
"""

import csv
import json
import sys
from dataclasses import replace

import click
import numpy as np

from .cliques import DegreeTooHigh, distributed_clique_cover
from .reliability import RobotSpec
from .scenario import (
    ScenarioConfig,
    SelectionInfeasible,
    experiment_added_robots,
    experiment_coverage_vs_L,
    experiment_robots_vs_L,
    generate_pool,
    run_scenario,
)
from .selection import (
    DegenerateReliability,
    Infeasible,
    build_initial_ilp,
    solve_min_cardinality,
)


def _fail(code: str, detail: str) -> None:
    click.echo(json.dumps({"error": code, "detail": detail}), err=True)
    sys.exit(2)


def _load_config(path: str, seed) -> ScenarioConfig:
    with open(path) as fh:
        config = ScenarioConfig.from_json(json.load(fh))
    if seed is not None:
        config = replace(config, seed=seed)
    return config


def _parse_floats(_ctx, _param, value):
    return tuple(float(v) for v in value.split(",")) if value else ()


def _parse_ints(_ctx, _param, value):
    return tuple(int(v) for v in value.split(",")) if value else ()


@click.group()
def main():
    """Resilient multi-robot blanket coverage toolkit."""


@main.group()
def pool():
    """Robot pool files."""


@pool.command("gen")
@click.option("--size", default=50, show_default=True)
@click.option("--lifespan-mean", default=420.0, show_default=True)
@click.option("--lifespan-std-frac", default=0.1, show_default=True)
@click.option("--max-cost", default=50.0, show_default=True)
@click.option("--max-area", default=200.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def pool_gen(size, lifespan_mean, lifespan_std_frac, max_cost, max_area, seed, out):
    """Sample a heterogeneous robot pool and write it as JSON."""
    config = ScenarioConfig(
        seed=seed,
        pool_size=size,
        lifespan_mean=lifespan_mean,
        lifespan_std_frac=lifespan_std_frac,
        max_cost=max_cost,
        max_area=max_area,
    )
    specs = generate_pool(config, np.random.default_rng(seed))
    with open(out, "w") as fh:
        json.dump([s.to_json() for s in specs], fh, indent=2)
    click.echo(f"wrote {len(specs)} robots to {out}")


@main.command()
@click.option("--pool", "pool_path", required=True, type=click.Path(exists=True))
@click.option("--beta", default=500.0, show_default=True)
@click.option("--alpha", default=0.3, show_default=True)
@click.option("--delta", default=1.0, show_default=True)
@click.option("--area-q", default=900.0, show_default=True)
@click.option("--horizon", default=500.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
def select(pool_path, beta, alpha, delta, area_q, horizon, out):
    """Minimum-cardinality team for budget, reliability, and area."""
    with open(pool_path) as fh:
        doc = json.load(fh)
    specs = [RobotSpec.from_json(d) for d in (doc["pool"] if isinstance(doc, dict) else doc)]
    try:
        ilp = build_initial_ilp(
            specs,
            beta=beta,
            alpha=alpha,
            delta=delta,
            area_q=area_q,
            horizon=horizon,
        )
        selection = solve_min_cardinality(ilp)
    except (Infeasible, DegenerateReliability) as exc:
        _fail("Infeasible", str(exc))
    text = json.dumps(selection.to_json(), indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    click.echo(text)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--seed", default=None, type=int, help="Override the config seed.")
def simulate(config_path, out, seed):
    """Run one full scenario and write its event log as ndjson."""
    config = _load_config(config_path, seed)
    try:
        runlog = run_scenario(config)
    except SelectionInfeasible as exc:
        with open(out, "w") as fh:
            fh.write(exc.runlog.to_ndjson())
        _fail("Infeasible", str(exc))
    with open(out, "w") as fh:
        fh.write(runlog.to_ndjson())
    click.echo(f"wrote {len(runlog.events)} events to {out}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(config_path, port, host):
    """Start the operator session service."""
    import uvicorn

    from .service import create_app

    config = _load_config(config_path, None)
    uvicorn.run(create_app(default_config=config), host=host, port=port)


@main.group()
def experiment():
    """Parameter studies written as L,trial,metric,value CSV tables."""


def _experiment_options(fn):
    fn = click.option("--config", "config_path", required=True, type=click.Path(exists=True))(fn)
    fn = click.option("--Ls", "ls", required=True, callback=_parse_floats)(fn)
    fn = click.option("--trials", default=10, show_default=True)(fn)
    fn = click.option("--jobs", default=1, show_default=True)(fn)
    fn = click.option("--seed", default=None, type=int)(fn)
    fn = click.option("--out", required=True, type=click.Path(dir_okay=False))(fn)
    return fn


@experiment.command("coverage-vs-L")
@_experiment_options
def experiment_coverage(config_path, ls, trials, jobs, seed, out):
    config = _load_config(config_path, seed)
    table = experiment_coverage_vs_L(config, Ls=ls, trials=trials, jobs=jobs)
    table.write(out)
    click.echo(f"wrote {len(table.rows)} rows to {out}")


@experiment.command("robots-vs-L")
@_experiment_options
@click.option("--gamma", default=1.0, show_default=True)
def experiment_robots(config_path, ls, trials, jobs, seed, out, gamma):
    config = _load_config(config_path, seed)
    table = experiment_robots_vs_L(config, Ls=ls, trials=trials, gamma=gamma, jobs=jobs)
    table.write(out)
    click.echo(f"wrote {len(table.rows)} rows to {out}")


@experiment.command("added-robots")
@_experiment_options
@click.option("--counts", required=True, callback=_parse_ints)
def experiment_added(config_path, ls, trials, jobs, seed, out, counts):
    config = _load_config(config_path, seed)
    table = experiment_added_robots(
        config, Ls=ls, added_counts=counts, trials=trials, jobs=jobs
    )
    table.write(out)
    click.echo(f"wrote {len(table.rows)} rows to {out}")


@main.command("clique-cover")
@click.option("--positions", required=True, type=click.Path(exists=True))
@click.option("--range", "comm_range", required=True, type=float)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def clique_cover(positions, comm_range, out):
    """Partition robots into cliques of the communication graph.

    The positions file is CSV with an id,x,y header (id optional; row
    order is used when it is absent).
    """
    ids, points = [], []
    with open(positions, newline="") as fh:
        for i, row in enumerate(csv.DictReader(fh)):
            ids.append(int(row["id"]) if "id" in row else i)
            points.append((float(row["x"]), float(row["y"])))
    try:
        cover = distributed_clique_cover(points, comm_range, ids=ids)
    except DegreeTooHigh as exc:
        raise click.ClickException(f"communication graph too dense: {exc}")
    with open(out, "w") as fh:
        json.dump({"blocks": cover}, fh, indent=2)
    click.echo(f"wrote {len(cover)} blocks to {out}")
