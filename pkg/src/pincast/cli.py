"""Command-line client for the experiment service.

Every subcommand builds a request, posts it to the HTTP service (an
in-process instance by default, or a remote one via --server), and
renders the response as a summary line and/or CSV.
"""

from __future__ import annotations

import asyncio
import json
from typing import Optional

import click
import httpx

from . import harness


def _request(server: Optional[str], path: str, payload: dict) -> dict:
    if server:
        try:
            response = httpx.post(server.rstrip("/") + path, json=payload,
                                  timeout=600.0)
        except httpx.HTTPError as exc:
            raise click.ClickException(f"{path}: {exc}") from exc
    else:
        from .service import app  # imported lazily: fastapi only when needed

        async def _post():
            transport = httpx.ASGITransport(app=app)
            async with httpx.AsyncClient(
                transport=transport, base_url="http://pincast.local"
            ) as client:
                return await client.post(path, json=payload, timeout=600.0)

        response = asyncio.run(_post())
    if response.status_code != 200:
        raise click.ClickException(
            f"{path} failed ({response.status_code}): {response.text}")
    return response.json()


server_option = click.option(
    "--server", default=None, metavar="URL",
    help="Remote service URL (default: run in-process).")
out_option = click.option(
    "--out", type=click.Path(dir_okay=False, writable=True), default=None,
    help="Write the result as CSV.")


@click.group()
def main() -> None:
    """Broadcast shape control experiments on a simulated pin array."""


def _delay_common(data: dict, out: Optional[str]) -> None:
    result = harness.DelayResult(**data)
    click.echo(
        f"n={result.n} t_msg={result.t_msg_ms}ms method={result.method} "
        f"tau={result.tau_ms:.9g}ms predicted={result.tau_pred_ms:.9g}ms "
        f"replicates={result.replicates}")
    if out:
        harness.emit_csv(result, out)
        click.echo(f"wrote {out}")


@main.command("delay-binary")
@click.option("--n", default=16, show_default=True, help="Module count.")
@click.option("--tmsg-ms", default=5, show_default=True,
              help="Transmission slot per frame.")
@click.option("--method", type=click.Choice(["seq", "dct"]), default="dct",
              show_default=True,
              help="seq = one addressed frame per module; dct = broadcast.")
@click.option("--replicates", default=20, show_default=True)
@server_option
@out_option
def delay_binary(n, tmsg_ms, method, replicates, server, out):
    """Binary-refresh delay between first and last module inputs."""
    data = _request(server, "/delay/binary", {
        "n": n, "t_msg_ms": tmsg_ms, "method": method,
        "replicates": replicates})
    _delay_common(data, out)


@main.command("delay-wave")
@click.option("--n", default=16, show_default=True, help="Module count.")
@click.option("--tmsg-ms", default=5, show_default=True,
              help="Transmission slot per frame.")
@click.option("--method", type=click.Choice(["seq", "wave"]), default="wave",
              show_default=True,
              help="seq = addressed heights per sweep; wave = broadcast pair.")
@click.option("--period-ms", default=3000, show_default=True,
              help="Traveling-wave period T.")
@click.option("--replicates", default=6, show_default=True)
@server_option
@out_option
def delay_wave(n, tmsg_ms, method, period_ms, replicates, server, out):
    """Traveling-wave delay with actuator dynamics."""
    data = _request(server, "/delay/wave", {
        "n": n, "t_msg_ms": tmsg_ms, "method": method,
        "period_ms": period_ms, "replicates": replicates})
    _delay_common(data, out)


@main.command("shapes")
@click.option("--shape", type=click.Choice(
    ["identity", "plane", "parabola", "checkers", "peak", "random"]),
    default="parabola", show_default=True)
@click.option("--method", type=click.Choice(["seq", "dct", "mp"]),
              default="mp", show_default=True)
@click.option("--quantized", is_flag=True,
              help="Round-trip every term through the 8-byte wire format.")
@click.option("--terms", default=16, show_default=True,
              help="Decomposition term budget.")
@click.option("--seed", default=1, show_default=True,
              help="Seed for the random builtin shape.")
@click.option("--replicates", default=6, show_default=True)
@server_option
@out_option
def shapes(shape, method, quantized, terms, seed, replicates, server, out):
    """Incremental shape approximation error curve."""
    data = _request(server, "/shapes", {
        "shape": shape, "method": method, "quantized": quantized,
        "terms": terms, "seed": seed, "replicates": replicates})
    curve = harness.ErrorCurve(
        data["shape"], data["method"],
        [(pt["terms_used"], pt["rel_error"]) for pt in data["points"]],
        data["quantized"],
        [pt["rel_error_pred"] for pt in data["points"]])
    for (m, err), pred in zip(curve.points, curve.pred_errors):
        click.echo(f"terms={m:2d} rel_error={err:.9g} predicted={pred:.9g}")
    if out:
        harness.emit_csv(curve, out)
        click.echo(f"wrote {out}")


@main.command("manipulate")
@click.option("--rate", default=60.0, show_default=True, help="Ticks per second.")
@click.option("--duration-s", default=2.0, show_default=True)
@click.option("--sigma", default=1.0, show_default=True,
              help="Gaussian bump width (module units).")
@click.option("--amplitude", default=0.7, show_default=True,
              help="Gaussian bump amplitude (stroke fraction).")
@click.option("--cols", default=4, show_default=True)
@click.option("--rows", default=4, show_default=True)
@click.option("--waypoint", "waypoints", multiple=True, metavar="X,Y",
              help="Path waypoint in module coordinates (repeatable); "
              "default is a closed 20 cm rectangle.")
@server_option
@out_option
def manipulate(rate, duration_s, sigma, amplitude, cols, rows, waypoints,
               server, out):
    """Slide a broadcast Gaussian bump along a scripted path."""
    if waypoints:
        try:
            parsed = [tuple(float(v) for v in w.split(",")) for w in waypoints]
        except ValueError as exc:
            raise click.ClickException(f"bad waypoint: {exc}") from exc
        if any(len(p) != 2 for p in parsed):
            raise click.ClickException("waypoints must be X,Y pairs")
    else:
        parsed = [tuple(p) for p in harness.DEFAULT_RECT_WAYPOINTS]
    data = _request(server, "/manipulate", {
        "waypoints": parsed, "rate_hz": rate, "sigma": sigma,
        "amplitude": amplitude, "duration_s": duration_s,
        "cols": cols, "rows": rows})
    result = harness.ManipulationResult(
        data["cols"], data["rows"], data["rate_hz"], data["frames_sent"],
        [(t["t_ms"], (t["center_x"], t["center_y"]), t["targets_mm"])
         for t in data["ticks"]],
        data["pitch_mm"])
    span_ms = result.ticks[-1][0] - result.ticks[0][0]
    centers = [c for _, c, _ in result.ticks]
    dist = sum(
        ((x2 - x1) ** 2 + (y2 - y1) ** 2) ** 0.5
        for (x1, y1), (x2, y2) in zip(centers, centers[1:]))
    speed_cm_s = dist * result.pitch_mm / 10.0 / (span_ms / 1000.0)
    click.echo(
        f"ticks={len(result.ticks)} frames={result.frames_sent} "
        f"rate={result.rate_hz:.9g}Hz mean_speed={speed_cm_s:.9g}cm/s")
    if out:
        harness.emit_csv(result, out)
        click.echo(f"wrote {out}")


@main.command("encode")
@click.option("--form", type=click.Choice(["dct", "mp", "rbf", "wave", "seq"]),
              required=True)
@click.option("--amplitude", type=float, default=None)
@click.option("--index", type=int, default=None, help="Series index (dct).")
@click.option("--scale", type=float, default=None)
@click.option("--position", type=float, default=None)
@click.option("--frequency", type=float, default=None)
@click.option("--phase", type=float, default=None)
@click.option("--width", type=float, default=None)
@click.option("--center-x", type=float, default=None)
@click.option("--center-y", type=float, default=None)
@click.option("--wavevector", type=float, default=None)
@click.option("--cos-amp", type=float, default=None)
@click.option("--sin-amp", type=float, default=None)
@click.option("--module-index", type=int, default=None)
@click.option("--height-mm", type=float, default=None)
@server_option
def encode(form, server, **fields):
    """Round-trip one term through the 8-byte wire format."""
    payload = {"form": form}
    payload.update({k: v for k, v in fields.items() if v is not None})
    data = _request(server, "/encode", payload)
    click.echo(f"form={data['form']} header=0x{data['header_byte']:02X} "
               f"seq_id={data['seq_id']}")
    click.echo(f"payload={data['payload_hex']}")
    click.echo(f"wire={data['wire_hex']}")
    click.echo("decoded=" + json.dumps(data["decoded"], sort_keys=True))


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8008, show_default=True)
def serve(host, port):
    """Run the HTTP service (requires the 'server' extra)."""
    try:
        import uvicorn
    except ImportError as exc:  # pragma: no cover
        raise click.ClickException(
            "uvicorn is not installed; pip install pincast[server]") from exc
    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
