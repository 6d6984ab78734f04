# bidprice/cli.py
"""
Command-line interface for the bid-price toolkit.
"""
import json
import logging
import sys
import uuid
from contextlib import contextmanager
from dataclasses import asdict
from pathlib import Path
from typing import Dict, Iterator, List, Optional

import numpy as np
import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from config.settings import board_settings, masking_settings, simulation_settings
from . import __version__
from .attack import audit_attack
from .benchmark import benchmark_models, general_mode_benchmark, pass_rate
from .channel import Channel, HttpChannel, InProcessChannel
from .exceptions import BidPriceError, ProtocolError
from .lp import build_collective, solve, write_coefficients
from .manifest import check_collision, start_manifest, write_manifest
from .masking import KeyKind, KeyPolicy, assemble_masked_model, generate_keys, mask
from .mmatrix import MMatrixMode
from .models import AllianceInstance, SimConfig
from .network import PartyBlocks, assemble_blocks, demo_instance, generate_instance, load_instance, save_instance
from .protocol import (
    PartyActor,
    ProtocolTranscript,
    build_actors,
    outcome_document,
    run_actors,
    transcript_document,
    verify_semi_honest,
)
from .report import render_summary, results_frame, summary_frame, write_reports
from .seeding import make_rng
from .sparsity import sparsity_report
from .strategies import simulate as run_simulation
from .wire import decode_payload, encode_payload, frame, unframe

app = typer.Typer(
    name="bidprice",
    help="Data-private bid-price control for capacity-sharing alliances.",
    no_args_is_help=True,
    add_completion=False,
)

console = Console()
err_console = Console(stderr=True)
logger = logging.getLogger(__name__)

KEYS_HELP = "Key kind: dense, sparse or identity"


@app.callback()
def configure(debug: bool = typer.Option(False, "--debug", help="Enable debug logging")) -> None:
    """Set up rich logging on standard error."""
    logging.basicConfig(
        level=logging.DEBUG if debug else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=err_console, rich_tracebacks=True)],
        force=True,
    )


@contextmanager
def _command(name: str) -> Iterator[None]:
    """Turn toolkit errors into exit code 1 with the message on stderr."""
    try:
        yield
    except BidPriceError as e:
        logger.error(f"{name} failed: {e}")
        err_console.print(f"[red]{name} failed: {e}[/red]")
        raise typer.Exit(code=1)


def _key_policy(keys: str, mode: str = "diagonal", permute: bool = False,
                extra_rows: int = 0) -> KeyPolicy:
    try:
        kind, mmatrix_mode = KeyKind(keys), MMatrixMode(mode)
    except ValueError as e:
        raise typer.BadParameter(str(e)) from e
    return KeyPolicy.from_settings(
        kind=kind, mmatrix_mode=mmatrix_mode, permute=permute, extra_rows_d=extra_rows, extra_rows_e=extra_rows,
    )


def _write_json(path: Path, document: object) -> Path:
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _prepare(out_dir: Path, command: str, seeds: Dict[str, int], force: bool) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    check_collision(out_dir, command, seeds, force)


@app.command()
def gen(
    seed: int = typer.Option(1, help="Master seed"),
    paths: int = typer.Option(100, help="Number of OD paths"),
    parties: int = typer.Option(2, help="Number of parties"),
    hubs: int = typer.Option(2, help="Number of hubs"),
    rho: float = typer.Option(simulation_settings.load_factor, help="Load factor"),
    horizon: int = typer.Option(simulation_settings.horizon, help="Booking horizon T"),
    demo: bool = typer.Option(False, "--demo", help="Write the two-party demonstration network instead"),
    out_dir: Path = typer.Option(Path("out/gen"), "--out-dir", "--out", help="Output directory"),
    force: bool = typer.Option(False, "--force", help="Overwrite a run made with other seeds"),
) -> None:
    """Generate an alliance instance file."""
    with _command("gen"):
        seeds = {"master": seed}
        _prepare(out_dir, "gen", seeds, force)
        if demo:
            instance = demo_instance()
        else:
            instance, _ = generate_instance(seed, paths, parties, hubs, rho, horizon)
        target = out_dir / "instance.json"
        save_instance(instance, target)
        write_manifest(out_dir, start_manifest("gen", sys.argv, seeds, instance), [target])
        console.print(f"[green]✓ Wrote {len(instance.paths)} paths, {len(instance.legs)} legs to {target}[/green]")


@app.command("mask")
def mask_command(
    instance_file: Path = typer.Option(..., "--instance", help="Instance file"),
    keys: str = typer.Option(masking_settings.key_kind, "--keys", help=KEYS_HELP),
    mode: str = typer.Option(masking_settings.mmatrix_mode, "--mode", help="M-matrix mode: diagonal or general"),
    permute: bool = typer.Option(masking_settings.permute, "--permute", help="Permute columns before masking"),
    extra_rows: int = typer.Option(0, "--extra-rows", help="Extra rows of D and E"),
    seed: int = typer.Option(1, help="Master seed"),
    out_dir: Path = typer.Option(Path("out/mask"), "--out-dir", help="Output directory"),
    force: bool = typer.Option(False, "--force"),
) -> None:
    """Mask every party's blocks and write the payload frames and the masked LP."""
    with _command("mask"):
        seeds = {"master": seed}
        _prepare(out_dir, "mask", seeds, force)
        instance = load_instance(instance_file)
        blocks = assemble_blocks(instance)
        policy = _key_policy(keys, mode, permute, extra_rows)

        written: List[Path] = []
        payloads = {}
        for party in blocks.parties:
            party_keys = generate_keys(blocks, party, make_rng(seed, "keys", party, 0), policy)
            payloads[party] = mask(blocks, party, party_keys, policy.kind)
            target = out_dir / f"payload-{party}.bin"
            target.write_bytes(frame(encode_payload(payloads[party])))
            written.append(target)

        model = assemble_masked_model(payloads, blocks.c, blocks.parties)
        lp_file = out_dir / "masked-lp.txt"
        write_coefficients(model.lp, lp_file)
        written.append(lp_file)
        write_manifest(out_dir, start_manifest("mask", sys.argv, seeds, instance), written)
        console.print(f"[green]✓ Masked {len(blocks.parties)} parties: {model.lp.n_rows} rows, "
                      f"{model.lp.n_vars} columns[/green]")


def _run_protocol(instance: AllianceInstance, policy: KeyPolicy, seed: int, transport: str,
                  board_url: Optional[str]):
    blocks = assemble_blocks(instance)
    if transport == "inproc":
        channel: Channel = InProcessChannel()
        actors = build_actors(blocks, channel, policy, seed)
        return run_actors(actors, blocks.c), actors
    if transport != "http":
        raise typer.BadParameter(f"Unknown transport '{transport}'. Valid transports are: inproc, http")

    from board.main import BoardServer

    def over_http(url: str):
        channel = HttpChannel(url, session_id=uuid.uuid4().hex)
        actors = build_actors(blocks, channel, policy, seed)
        try:
            return run_actors(actors, blocks.c), actors
        finally:
            channel.close()

    if board_url:
        return over_http(board_url)
    with BoardServer(board_settings.host, board_settings.port) as server:
        return over_http(server.url)


def _check_against_collective(instance: AllianceInstance, z: float) -> bool:
    direct = solve(build_collective(instance))
    ok = direct.optimal and abs(direct.objective - z) <= 1e-6 * (1.0 + abs(direct.objective))
    if not ok:
        logger.warning(f"Protocol Z={z:.6f} differs from the direct collective solve Z={direct.objective:.6f}")
    return ok


@app.command()
def protocol(
    instance_file: Path = typer.Option(..., "--instance", help="Instance file"),
    keys: str = typer.Option(masking_settings.key_kind, "--keys", help=KEYS_HELP),
    mode: str = typer.Option(masking_settings.mmatrix_mode, "--mode", help="M-matrix mode: diagonal or general"),
    permute: bool = typer.Option(masking_settings.permute, "--permute"),
    transport: str = typer.Option("inproc", "--transport", help="inproc or http"),
    board_url: Optional[str] = typer.Option(None, "--board-url", help="Existing board; started locally if omitted"),
    seed: int = typer.Option(1, help="Master seed"),
    out_dir: Path = typer.Option(Path("out/protocol"), "--out-dir", help="Output directory"),
    force: bool = typer.Option(False, "--force"),
) -> None:
    """Run the multi-party protocol and write the transcript and every party's outcome."""
    with _command("protocol"):
        seeds = {"master": seed}
        _prepare(out_dir, "protocol", seeds, force)
        instance = load_instance(instance_file)
        policy = _key_policy(keys, mode, permute)
        transcript, _ = _run_protocol(instance, policy, seed, transport, board_url)

        written = [_write_json(out_dir / "transcript.json", transcript_document(transcript))]
        for party, outcome in transcript.outcomes.items():
            written.append(_write_json(out_dir / f"outcome-{party}.json", outcome_document(outcome)))

        report = verify_semi_honest(transcript)
        for finding in report.findings:
            err_console.print(f"[yellow]Audit: party {finding.party}: {finding.message}[/yellow]")
        checks = _check_against_collective(instance, transcript.Z)
        write_manifest(out_dir, start_manifest("protocol", sys.argv, seeds, instance), written, checks)

        table = Table(title="Protocol outcome", border_style="blue")
        table.add_column("Party", style="cyan")
        table.add_column("Z", justify="right")
        table.add_column("Rounds", justify="right")
        for party, outcome in transcript.outcomes.items():
            table.add_row(party, f"{outcome.Z:.6f}", str(outcome.rounds))
        console.print(table)
        if not checks:
            raise ProtocolError("Recovered Z does not match the direct collective solve")


@app.command()
def sparsity(
    instance_file: Path = typer.Option(..., "--instance", help="Instance file"),
    seed: int = typer.Option(1, help="Master seed"),
    out_dir: Path = typer.Option(Path("out/sparsity"), "--out-dir", help="Output directory"),
    force: bool = typer.Option(False, "--force"),
) -> None:
    """Compare nonzeros of sparse, dense and identity keys per party."""
    with _command("sparsity"):
        seeds = {"master": seed}
        _prepare(out_dir, "sparsity", seeds, force)
        instance = load_instance(instance_file)
        blocks = assemble_blocks(instance)

        keysets = {}
        for kind in (KeyKind.SPARSE, KeyKind.DENSE, KeyKind.IDENTITY):
            policy = KeyPolicy.from_settings(kind=kind)
            keysets[kind] = {
                party: generate_keys(blocks, party, make_rng(seed, "sparsity", kind.value, party), policy)
                for party in blocks.parties
            }
        report = sparsity_report(blocks, keysets[KeyKind.SPARSE], keysets[KeyKind.DENSE], keysets[KeyKind.IDENTITY])
        target = out_dir / "sparsity.csv"
        report.to_csv(target, index=False)
        write_manifest(out_dir, start_manifest("sparsity", sys.argv, seeds, instance), [target])

        totals = report.assign(nnz=report["nnz_A"] + report["nnz_B"]).groupby("mode")["nnz"].sum()
        for mode, nnz in totals.items():
            console.print(f"  {mode:<9} nnz(A D', B D') = {nnz}")
        err_console.print("[yellow]Sparse keys follow the structure of A_k and B_k and may weaken privacy[/yellow]")


@app.command()
def bench(
    sizes: str = typer.Option("100x2,200x2", help="Comma-separated PATHSxPARTIES sizes"),
    runs: int = typer.Option(5, help="Key draws per size"),
    general_trials: int = typer.Option(0, "--general-trials", help="General M-matrix key draws per size; 0 skips"),
    seed: int = typer.Option(1, help="Master seed"),
    backend: str = typer.Option("highs", help="Solver backend"),
    out_dir: Path = typer.Option(Path("out/bench"), "--out-dir", help="Output directory"),
    force: bool = typer.Option(False, "--force"),
) -> None:
    """Time CP, CCS-dense and CCS-sparse solves and measure general M-matrix pass rates."""
    with _command("bench"):
        try:
            parsed = [tuple(int(v) for v in item.lower().split("x")) for item in sizes.split(",") if item]
        except ValueError as e:
            raise typer.BadParameter(f"Invalid sizes '{sizes}': {e}") from e
        seeds = {"master": seed}
        _prepare(out_dir, "bench", seeds, force)
        timing = benchmark_models(parsed, runs, seed, backend)
        general = general_mode_benchmark(parsed, general_trials, seed, backend) if general_trials > 0 else None
        written = write_reports(out_dir, timing=timing, general=general)
        write_manifest(out_dir, start_manifest("bench", sys.argv, seeds), written)
        console.print(render_summary(None, timing, general))
        if general is not None and pass_rate(general) < 1.0:
            err_console.print(
                f"[yellow]General M-matrix keys certified {100.0 * pass_rate(general):.1f}% of trials; "
                f"the masked region is tighter than the original[/yellow]"
            )


@app.command()
def simulate(
    instance_file: Path = typer.Option(..., "--instance", help="Instance file"),
    strategies: str = typer.Option("cp,ccs,ic", help="Comma-separated strategies"),
    rho: float = typer.Option(simulation_settings.load_factor, help="Load factor"),
    reps: int = typer.Option(simulation_settings.replications, help="Replications"),
    segments: int = typer.Option(simulation_settings.segments, help="Reoptimization segments"),
    horizon: Optional[int] = typer.Option(None, help="Booking horizon; the instance's by default"),
    keys: str = typer.Option(masking_settings.key_kind, "--keys", help=KEYS_HELP),
    booking_limits: bool = typer.Option(simulation_settings.booking_limits, "--booking-limits/--no-booking-limits"),
    workers: int = typer.Option(simulation_settings.workers, help="Replication threads"),
    seed: int = typer.Option(1, help="Master seed"),
    out_dir: Path = typer.Option(Path("out/simulate"), "--out-dir", help="Output directory"),
    force: bool = typer.Option(False, "--force"),
) -> None:
    """Simulate bookings under CP, CCS and IC and report revenues relative to CP."""
    with _command("simulate"):
        instance = load_instance(instance_file)
        try:
            config = SimConfig(
                horizon=horizon or instance.config.horizon,
                load_factor=rho,
                segments=segments,
                replications=reps,
                seed=seed,
                strategies=strategies.split(","),
                key_kind=keys,
                booking_limits=booking_limits,
                capacity_offset=simulation_settings.capacity_offset,
            )
        except ValueError as e:
            raise typer.BadParameter(str(e)) from e
        seeds = {"master": seed}
        _prepare(out_dir, "simulate", seeds, force)

        result = run_simulation(instance, config, workers=workers)
        written = write_reports(out_dir, result)
        write_manifest(out_dir, start_manifest("simulate", sys.argv, seeds, instance), written)
        console.print(render_summary(summary_frame(results_frame(result))))


@app.command()
def audit(
    instance_file: Path = typer.Option(..., "--instance", help="Instance file"),
    keys: str = typer.Option(masking_settings.key_kind, "--keys", help=KEYS_HELP),
    permute: bool = typer.Option(masking_settings.permute, "--permute"),
    seed: int = typer.Option(1, help="Master seed"),
    strict: bool = typer.Option(False, "--strict", help="Exit with code 2 on any finding"),
    out_dir: Path = typer.Option(Path("out/audit"), "--out-dir", help="Output directory"),
    force: bool = typer.Option(False, "--force"),
) -> None:
    """
    Audit a protocol run as a semi-honest party, and show what leaked G_k and
    F_k would reveal.
    """
    with _command("audit"):
        seeds = {"master": seed}
        _prepare(out_dir, "audit", seeds, force)
        instance = load_instance(instance_file)
        blocks = assemble_blocks(instance)
        transcript, actors = _run_protocol(instance, _key_policy(keys, permute=permute), seed, "inproc", None)
        report = verify_semi_honest(transcript)

        leaks = {}
        for actor in actors:
            leaks[actor.party] = _leaked_key_residual(actor, blocks[actor.party], transcript)

        document = {
            "findings": [asdict(f) for f in report.findings],
            "notes": [asdict(f) for f in report.notes],
            "leaked_key_reconstruction_error": leaks,
        }
        target = _write_json(out_dir / "audit.json", document)
        write_manifest(out_dir, start_manifest("audit", sys.argv, seeds, instance), [target], report.clean)

        for finding in report.findings:
            err_console.print(f"[yellow]Finding: party {finding.party}: {finding.message}[/yellow]")
        for party, error in leaks.items():
            console.print(f"  party {party}: leaked G_k, F_k rebuild A_k with max error {error:.2e}")
        if strict and not report.clean:
            raise typer.Exit(code=2)


def _leaked_key_residual(actor: PartyActor, party_blocks: PartyBlocks, transcript: ProtocolTranscript) -> float:
    """Max error of A_k rebuilt from the payload with the party's own G_k and F_k."""
    payload = decode_payload(unframe(transcript.payload_frames()[actor.party]))
    keys = actor.keys
    if keys.D.shape[0] != keys.D.shape[1] or keys.E.shape[0] != keys.E.shape[1]:
        return float("nan")
    rebuilt = audit_attack(payload, keys.G, keys.F)
    return float(np.max(np.abs(rebuilt.A - keys.permuted(party_blocks.A, axis=1)), initial=0.0))


@app.command()
def serve(
    host: str = typer.Option(board_settings.host, help="Bind address"),
    port: int = typer.Option(board_settings.port, help="Port"),
) -> None:
    """Run the message board used by the HTTP transport."""
    from board.main import main as run_board

    run_board(host, port)


@app.command()
def version() -> None:
    """Show the toolkit version."""
    console.print(__version__)


def main() -> None:
    app()


if __name__ == "__main__":
    main()
