"""Command line front end: reduce, sketch, estimate, experiment."""

from __future__ import annotations

import click

from .harness import ExperimentConfig, run_experiment, write_csv, write_long
from .hashing import Seed
from .rounding import reduce_weighted
from .sets import read_weighted_set
from .sketch import SketchParams, WeightedSketch, compute_sketch, estimate_jaccard

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


def _parse_bits(text: str) -> int | str:
    if text in ("full", "half"):
        return text
    try:
        return int(text)
    except ValueError:
        raise click.BadParameter(f"bits must be an integer, 'full', or 'half', not {text!r}")


@click.group()
def main() -> None:
    """Weighted Jaccard sketching above a similarity threshold."""


_seed_option = click.option(
    "--seed", "seed_hex", required=True, metavar="HEX", help="Hash seed as a hex string."
)


@main.command()
@click.argument("infile", type=click.File("r"))
@click.option("-o", "--output", type=click.File("w"), default="-", help="Item list destination.")
@_seed_option
@click.option(
    "--variant",
    type=click.Choice(["independent", "dependent"]),
    default="independent",
    show_default=True,
)
def reduce(infile, output, seed_hex: str, variant: str) -> None:
    """Round a weighted set into items, one <element>\\t<index> per line."""
    w = read_weighted_set(infile)
    s = reduce_weighted(w, Seed.from_hex(seed_hex), variant)
    for elem, idx in s.items():
        output.write(f"{elem.decode('utf-8')}\t{idx}\n")


def _params_options(fn):
    opts = [
        click.option("--alpha", type=float, default=0.5, show_default=True,
                     help="Similarity threshold."),
        click.option("--samples", "-k", type=int, default=256, show_default=True,
                     help="Comparable-sample budget k."),
        click.option("--tau", type=int, default=1, show_default=True,
                     help="Threshold subdivision."),
        click.option("--scales", "-t", type=int, default=3, show_default=True,
                     help="Scales kept per sketch."),
        click.option("--redundancy", "-L", type=int, default=5, show_default=True,
                     help="Minimum expected items per bin."),
        click.option("--bits", type=str, default="2", show_default=True,
                     help="Stored bits per bin: 1/2/4/8/16, full, or half."),
        click.option("--variant", type=click.Choice(["independent", "dependent"]),
                     default="independent", show_default=True),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


@main.command()
@click.argument("infile", type=click.File("r"))
@click.option("-o", "--output", type=click.File("wb"), required=True,
              help="Sketch file destination.")
@_seed_option
@_params_options
def sketch(infile, output, seed_hex, alpha, samples, tau, scales, redundancy, bits, variant):
    """Sketch a weighted set into a binary sketch file."""
    params = SketchParams(
        alpha=alpha,
        samples=samples,
        tau=tau,
        scales=scales,
        redundancy=redundancy,
        bits=_parse_bits(bits),
        variant=variant,
    )
    w = read_weighted_set(infile)
    if len(w) == 0:
        raise click.ClickException("input set is empty")
    sk = compute_sketch(w, params, Seed.from_hex(seed_hex))
    sk.save(output)


@main.command()
@click.argument("sketch_a", type=click.File("rb"))
@click.argument("sketch_b", type=click.File("rb"))
def estimate(sketch_a, sketch_b) -> None:
    """Estimate similarity from two sketch files."""
    a = WeightedSketch.load(sketch_a)
    b = WeightedSketch.load(sketch_b)
    try:
        result = estimate_jaccard(a, b)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    if result.is_below_threshold:
        click.echo(f"below-threshold {result.threshold:g}")
    else:
        click.echo(f"{result.value:.6f}\t{result.scales_used}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="TOML config mirroring the experiment fields.")
@click.option("-o", "--output", type=click.File("w"), required=True, help="CSV destination.")
@click.option("--long-out", type=click.File("w"), default=None,
              help="Optional long-format output for plotting tools.")
@click.option("--trials", type=int, default=None, help="Override the trial count.")
@click.option("--seed", "seed_hex", default=None, metavar="HEX", help="Override the master seed.")
def experiment(config_path, output, long_out, trials, seed_hex) -> None:
    """Run an accuracy sweep from a config file and write CSV rows."""
    with open(config_path, "rb") as fh:
        data = tomllib.load(fh)
    overrides: dict[str, object] = {}
    if trials is not None:
        overrides["trials"] = trials
    if seed_hex is not None:
        overrides["seed_hex"] = seed_hex
    try:
        cfg = ExperimentConfig.from_mapping(data, **overrides)
    except (ValueError, TypeError) as exc:
        raise click.ClickException(f"bad config: {exc}")
    rows = run_experiment(cfg)
    write_csv(rows, output)
    if long_out is not None:
        write_long(rows, long_out)


if __name__ == "__main__":
    main(prog_name="wjacc")
