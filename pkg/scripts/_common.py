"""Shared plumbing: dataclass config from command-line overrides, CSV output."""

from __future__ import annotations

import argparse
import csv
from dataclasses import asdict, fields


def parse_config(cls, description: str):
    """Expose every dataclass field as ``--name value`` (lists comma separated)."""
    defaults = cls()
    parser = argparse.ArgumentParser(description=description)
    for f in fields(cls):
        value = getattr(defaults, f.name)
        flag = "--" + f.name.replace("_", "-")
        if isinstance(value, list):
            cast = type(value[0]) if value else str
            parser.add_argument(flag, type=lambda s, c=cast: [c(v) for v in s.split(",")], default=value)
        else:
            parser.add_argument(flag, type=type(value), default=value)
    return cls(**vars(parser.parse_args()))


def write_csv(path: str, rows: list) -> None:
    if not rows:
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def describe(cfg) -> str:
    return ", ".join(f"{k}={v}" for k, v in asdict(cfg).items())
