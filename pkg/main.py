import functools
import os
import sys

# Fix Windows encoding issues
if sys.platform == "win32":
    os.environ['PYTHONIOENCODING'] = 'utf-8'
    os.environ['PYTHONUTF8'] = '1'

import click
from rich.console import Console
from rich.table import Table

from analyses.runner import run as run_analysis
from ptchain import __version__
from ptchain.config import Analysis, load_run_config
from ptchain.errors import ConfigError
from utils.logger import configure_logging, log_error, log_info

EXIT_FAILURE = 1
EXIT_CONFIG = 2

PERT_KINDS = ["none", "two_site_plus", "two_site_minus", "two_site_double_plus", "single_site"]


def print_banner():
    """Print application banner"""
    banner = """
╔══════════════════════════════════════════════════════════════╗
║                🧲 ptchain: PT-breaking in Ising chains        ║
║                                                              ║
║  Exact diagonalization of non-Hermitian spin chains          ║
╚══════════════════════════════════════════════════════════════╝
    """
    click.echo(banner)


def print_results_summary(result):
    """Print the files a run produced"""
    click.echo("\n📁 OUTPUT FILES GENERATED:")
    click.echo("=" * 70)
    for filename in result.get('outputs', []) + [result.get('manifest')]:
        if filename and os.path.exists(filename):
            size_str = f"{os.path.getsize(filename):,} bytes"
            click.echo(f"✅ {filename:<45} │ {size_str}")
        elif filename:
            click.echo(f"❌ {filename:<45} │ Missing")
    click.echo("=" * 70)

    summary = result.get('summary') or {}
    if summary:
        click.echo("\n📋 SUMMARY:")
        for key, value in summary.items():
            click.echo(f"   • {key}: {value}")


def print_validation_table(records):
    """Pass/fail table for the oracle comparison"""
    if not records:
        return
    table = Table(title="Analytic vs numeric thresholds")
    columns = list(records[0].keys())
    for name in columns:
        table.add_column(name, justify="left" if name in ("case", "class") else "right")
    for record in records:
        cells = []
        for name in columns:
            value = record[name]
            if name == 'passed':
                cells.append("[green]PASS[/green]" if value else "[red]FAIL[/red]")
            elif isinstance(value, float):
                cells.append(f"{value:.6g}")
            else:
                cells.append("n/a" if value is None else str(value))
        table.add_row(*cells)
    Console().print(table)


class GridParam(click.ParamType):
    """Grid as 'start:stop:num' or a comma-separated list"""

    name = "grid"

    def convert(self, value, param, ctx):
        if isinstance(value, (list, dict)):
            return value
        text = str(value).strip()
        try:
            if ":" in text:
                start, stop, num = text.split(":")
                return {"start": float(start), "stop": float(stop), "num": int(num)}
            return [float(x) for x in text.split(",") if x.strip()]
        except ValueError:
            self.fail(f"{value!r} is neither start:stop:num nor a comma-separated list", param, ctx)


GRID = GridParam()


def common_options(func):
    """Flags mirroring the config keys; any flag given overrides the file"""
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), help="JSON run configuration."),
        click.option("-N", "--n-sites", "N", type=int, help="Number of spins."),
        click.option("-J", "--coupling", "J", type=float, help="Ising coupling J >= 0."),
        click.option("--hz", type=float, help="Transverse field h_z."),
        click.option("--boundary", type=click.Choice(["open", "periodic"])),
        click.option("--pert", "pert_kind", type=click.Choice(PERT_KINDS), help="Perturbation kind."),
        click.option("-p", "pert_p", type=int, help="First perturbed site."),
        click.option("-q", "pert_q", type=int, help="Second perturbed site."),
        click.option("--gamma-plus", type=float, help="single_site sigma+ strength."),
        click.option("--gamma-minus", type=float, help="single_site sigma- strength."),
        click.option("--all-sites", is_flag=True, default=False, help="Batch over every site / site pair."),
        click.option("--gamma", type=float, help="Perturbation strength."),
        click.option("--gamma-max", type=float, help="Upper end of the threshold scan."),
        click.option("--tol", type=float, help="Bisection tolerance."),
        click.option("--snap-tol", type=float, help="Relative |Im E| treated as zero."),
        click.option("--coarse-points", type=int, help="Points of the ascending threshold scan."),
        click.option("--gamma-grid", type=GRID),
        click.option("--gp-grid", type=GRID),
        click.option("--gm-grid", type=GRID),
        click.option("--hz-grid", type=GRID),
        click.option("--hz-samples", type=GRID),
        click.option("--hz-fit-max", type=float, help="Largest h_z entering the field-response line."),
        click.option("--j-grid", "J_grid", type=GRID, help="Couplings of the coupling sweep."),
        click.option("--site", type=int, help="Site of the (gamma+, gamma-) phase diagram."),
        click.option("--solver", type=click.Choice(["lapack", "francis"])),
        click.option("--jobs", type=int, help="Parallel grid cells (default PTCHAIN_JOBS or 1)."),
        click.option("-o", "--output-dir", type=click.Path(file_okay=False)),
        click.option("-v", "--verbose", is_flag=True, default=False, help="Debug logging."),
    ]
    return functools.reduce(lambda f, option: option(f), reversed(options), func)


def build_overrides(options):
    """Map CLI options onto config keys, dropping the ones not given"""
    pert_kind = options.pop("pert_kind")
    pert = {
        "kind": pert_kind,
        "p": options.pop("pert_p"),
        "q": options.pop("pert_q"),
        "gamma_plus": options.pop("gamma_plus"),
        "gamma_minus": options.pop("gamma_minus"),
        "sites": "all" if options.pop("all_sites") else None,
    }
    pert = {k: v for k, v in pert.items() if v is not None}
    overrides = {k: v for k, v in options.items() if v is not None}
    if pert_kind == "none":
        overrides["pert"] = "none"
    elif pert:
        overrides["pert"] = pert
    return overrides


def execute(analysis: Analysis, options):
    """Assemble the config, run one analysis and exit with its status"""
    config_path = options.pop("config_path")
    verbose = options.pop("verbose")
    overrides = build_overrides(options)
    overrides["analysis"] = analysis.value

    try:
        config = load_run_config(config_path, overrides)
    except ConfigError as e:
        click.echo(f"❌ Configuration error: {e}", err=True)
        sys.exit(EXIT_CONFIG)

    configure_logging(config.output_dir, verbose)
    print_banner()
    log_info(f"Output directory: {config.output_dir}")

    try:
        result = run_analysis(config)
    except KeyboardInterrupt:
        click.echo("\n⚠️  Run interrupted by user", err=True)
        log_error("Run interrupted by user (Ctrl+C)")
        sys.exit(EXIT_FAILURE)
    except OSError as e:
        click.echo(f"\n❌ Could not write outputs: {e}", err=True)
        log_error(f"I/O error: {e}")
        sys.exit(EXIT_FAILURE)

    if analysis is Analysis.VALIDATE:
        print_validation_table(result.get('records'))

    if result['success']:
        click.echo(f"\n🎉 {analysis.value.upper()} COMPLETED in {result['duration']:.2f} seconds")
        print_results_summary(result)
        return

    click.echo(f"\n❌ {analysis.value} failed: {result.get('error')}", err=True)
    click.echo(f"Check {os.path.join(config.output_dir, 'ptchain.log')} for details.", err=True)
    sys.exit(EXIT_CONFIG if result.get('error_type') == 'ConfigError' else EXIT_FAILURE)


@click.group()
@click.version_option(__version__, prog_name="ptchain")
def cli():
    """PT-symmetry breaking thresholds of non-Hermitian transverse-field Ising chains."""


@cli.command()
@common_options
def spectrum(**options):
    """Full complex spectrum at one strength -> spectrum.csv"""
    execute(Analysis.SPECTRUM, options)


@cli.command()
@common_options
def threshold(**options):
    """PT threshold per perturbation -> threshold.csv"""
    execute(Analysis.THRESHOLD, options)


@cli.command()
@common_options
def flow(**options):
    """Eigenvalue flow over a strength grid -> flow.csv"""
    execute(Analysis.FLOW, options)


@cli.command("phase-diagram")
@common_options
def phase_diagram(**options):
    """max Im(E) over (gamma+, gamma-) or (gamma, h_z) -> phase.csv"""
    execute(Analysis.PHASE_GRID, options)


@cli.command("field-response")
@common_options
def field_response(**options):
    """Linear fit of the threshold against h_z -> field_response.csv"""
    execute(Analysis.FIELD_RESPONSE, options)


@cli.command("coupling-sweep")
@common_options
def coupling_sweep(**options):
    """Threshold against J at fixed h_z -> coupling_sweep.csv"""
    execute(Analysis.COUPLING_SWEEP, options)


@cli.command()
@common_options
def validate(**options):
    """Closed-form zero-field thresholds against the numeric search -> validate.csv"""
    execute(Analysis.VALIDATE, options)


if __name__ == "__main__":
    cli()
