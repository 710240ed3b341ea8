"""Shared helpers for the demo scripts."""
import pathlib

OUT = pathlib.Path(__file__).resolve().parent / "out"


def out_path(name):
    OUT.mkdir(exist_ok=True)
    return OUT / name
