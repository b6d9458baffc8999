"""Batch CLI: a thin HTTP client of the flexhull service.

Without --server the commands run against an in-process app instance, so no
daemon is needed; with --server they talk to a remote deployment.  Exit
codes: 0 success, 1 config/schema error, 2 solver failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx
from pydantic import ValidationError

from .service.schemas import FleetConfigModel


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    # no server given: run against an in-process app instance
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient

    from .service.app import create_app

    return TestClient(create_app(), raise_server_exceptions=False)


def _load_config(path: Path, seed: int | None) -> FleetConfigModel:
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)
    try:
        cfg = FleetConfigModel.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = ".".join(str(p) for p in first["loc"])
        click.echo(f"config error: field '{loc}': {first['msg']}", err=True)
        sys.exit(1)
    if seed is not None:
        cfg.fit.seed = seed
    return cfg


def _out_dir(cfg: FleetConfigModel, out: Path | None) -> Path:
    target = out or (Path(cfg.outputs) if cfg.outputs else None)
    if target is None:
        click.echo("config error: field 'outputs': missing (or pass --out)", err=True)
        sys.exit(1)
    target.mkdir(parents=True, exist_ok=True)
    return target


def _post(client: httpx.Client, url: str, payload: dict) -> dict:
    resp = client.post(url, json=payload)
    if resp.status_code == 422:
        detail = resp.json().get("detail")
        click.echo(f"config error: {detail}", err=True)
        sys.exit(1)
    if resp.status_code == 502:
        click.echo(f"solver failure: {resp.json().get('detail')}", err=True)
        sys.exit(2)
    if resp.status_code != 200:
        click.echo(f"service error {resp.status_code}: {resp.text}", err=True)
        sys.exit(2)
    return resp.json()


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, points) -> None:
    lines = ["p,q"] + [f"{x[0]!r},{x[1]!r}" for x in points]
    path.write_text("\n".join(lines) + "\n")


def _der_fit_file(der_cfg: dict, result: dict) -> dict:
    return {
        "index": result["index"],
        "der": der_cfg,
        "outer": {"alpha": result["outer"]["alpha"], "beta": result["outer"]["beta"]},
        "inner": result["inner"],
        "inner_skipped": result["inner_skipped"],
    }


@click.group()
@click.option("--server", default=None, help="Base URL of a running flexhull service.")
@click.pass_context
def main(ctx, server):
    """Homothetic flexibility-domain approximation toolkit."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


_shared = [
    click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path),
                 required=True, help="Fleet config JSON."),
    click.option("--jobs", type=int, default=1, show_default=True),
    click.option("--seed", type=int, default=None, help="Override fit.seed."),
    click.option("--out", type=click.Path(path_type=Path), default=None,
                 help="Output directory (overrides config 'outputs')."),
]


def shared_options(f):
    for opt in reversed(_shared):
        f = opt(f)
    return f


@main.command("fit")
@shared_options
@click.option("--der-index", type=int, default=0, show_default=True)
@click.pass_context
def fit_cmd(ctx, config_path, jobs, seed, out, der_index):
    """Fit one DER (outer + inner where applicable)."""
    cfg = _load_config(config_path, seed)
    if not 0 <= der_index < len(cfg.ders):
        click.echo(f"config error: der-index {der_index} out of range", err=True)
        sys.exit(1)
    out_dir = _out_dir(cfg, out)
    with _client(ctx.obj["server"]) as client:
        payload = {
            "der": cfg.ders[der_index].model_dump(),
            "prototype": cfg.prototype.model_dump(),
            "fit": cfg.fit.model_dump(),
            "index": der_index,
        }
        result = _post(client, "/fit/one", payload)
    _write_json(out_dir / f"der_{der_index}_fit.json",
                _der_fit_file(cfg.ders[der_index].model_dump(), result))
    click.echo(f"wrote {out_dir / f'der_{der_index}_fit.json'}")


@main.command("aggregate")
@shared_options
@click.pass_context
def aggregate_cmd(ctx, config_path, jobs, seed, out):
    """Fit every DER, aggregate, and score the approximation."""
    cfg = _load_config(config_path, seed)
    out_dir = _out_dir(cfg, out)
    with _client(ctx.obj["server"]) as client:
        data = _post(client, "/fleet/run", {"config": cfg.model_dump(), "jobs": jobs})
    for idx, msg in data["failures"]:
        click.echo(f"DER {idx}: {msg}", err=True)
    if data["failures"]:
        sys.exit(2)
    for der_cfg, result in zip(cfg.ders, data["ders"]):
        _write_json(out_dir / f"der_{result['index']}_fit.json",
                    _der_fit_file(der_cfg.model_dump(), result))
    fleet = data["fleet"]
    _write_json(out_dir / "aggregate.json", fleet)
    metrics = {k: fleet.get(k) for k in ("pi_d", "pi_a")}
    click.echo(f"wrote {len(cfg.ders)} DER fit files + aggregate.json; metrics: {metrics}")
    if not data["audit"]["ok"]:
        click.echo("warning: certificate audit reported violations", err=True)


@main.command("oracle")
@shared_options
@click.pass_context
def oracle_cmd(ctx, config_path, jobs, seed, out):
    """Compare certificate fits against the geometric oracle."""
    cfg = _load_config(config_path, seed)
    out_dir = _out_dir(cfg, out)
    with _client(ctx.obj["server"]) as client:
        data = _post(client, "/oracle/run", {"config": cfg.model_dump(), "jobs": jobs})
    _write_json(out_dir / "oracle_report.json", data)
    worst = max((r["outer_alpha_rel_gap"] for r in data["rows"]), default=0.0)
    click.echo(f"wrote oracle_report.json; worst outer alpha gap: {worst:.3e}")


@main.command("emit-plots")
@shared_options
@click.pass_context
def emit_plots_cmd(ctx, config_path, jobs, seed, out):
    """Emit CSV point sets for per-DER and aggregate panels."""
    cfg = _load_config(config_path, seed)
    out_dir = _out_dir(cfg, out)
    with _client(ctx.obj["server"]) as client:
        data = _post(client, "/plots", {"config": cfg.model_dump(), "jobs": jobs})
    for der in data["ders"]:
        i = der["index"]
        _write_csv(out_dir / f"der_{i}_boundary.csv", der["boundary"])
        _write_csv(out_dir / f"der_{i}_outer.csv", der["outer_loop"])
        if der["inner_loop"]:
            _write_csv(out_dir / f"der_{i}_inner.csv", der["inner_loop"])
    agg = data["aggregate"]
    if agg:
        _write_csv(out_dir / "aggregate_cloud.csv", agg["cloud"])
        _write_csv(out_dir / "aggregate_outer.csv", agg["outer_loop"])
        if agg["inner_loop"]:
            _write_csv(out_dir / "aggregate_inner.csv", agg["inner_loop"])
    click.echo(f"wrote plot CSVs to {out_dir}")


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve_cmd(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("flexhull.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
