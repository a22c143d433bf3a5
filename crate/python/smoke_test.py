"""Smoke test for the pybosepath extension.

Build with `cargo build -p pybosepath` (or `maturin develop -m crates/py/Cargo.toml`),
then run `python3 python/smoke_test.py`. Without an installed wheel the
script loads `target/<profile>/libpybosepath.so` directly.
"""

import importlib.machinery
import importlib.util
import math
import pathlib
import sys


def load():
    try:
        import pybosepath

        return pybosepath
    except ImportError:
        pass
    root = pathlib.Path(__file__).resolve().parents[1]
    for profile in ("release", "debug"):
        for name in ("libpybosepath.so", "libpybosepath.dylib", "pybosepath.dll"):
            lib = root / "target" / profile / name
            if lib.exists():
                loader = importlib.machinery.ExtensionFileLoader("pybosepath", str(lib))
                spec = importlib.util.spec_from_loader("pybosepath", loader)
                mod = importlib.util.module_from_spec(spec)
                loader.exec_module(mod)
                sys.modules["pybosepath"] = mod
                return mod
    sys.exit("pybosepath not built; run `cargo build -p pybosepath` first")


def main():
    bp = load()
    print("pybosepath", bp.__version__)

    alpha = bp.scattering_length(bp.Pair.square_well(2.0, 1.0))
    assert abs(alpha - (1.0 - math.tanh(1.0))) < 1e-6, alpha

    grid = bp.Grid(2, 6.0, 64)
    gp = bp.gp_minimize(bp.Trap.harmonic(), 0.0, grid)
    assert abs(gp["chi_gp"] - 2.0) < 1e-2, gp["chi_gp"]
    assert len(gp["phi"]) == len(grid)

    g1 = bp.Grid(1, 4.0, 24)
    pair = bp.Pair.gaussian(1.0, 0.5)
    st = bp.hartree_minimize(bp.Trap.harmonic(), pair, 2, g1)
    gs = bp.canonical_ground(bp.Trap.harmonic(), pair, 2, g1)
    assert st["chi_product"] >= gs["chi_n"] - 1e-6, (st["chi_product"], gs["chi_n"])

    try:
        bp.Grid(2, -1.0, 16)
    except ValueError:
        pass
    else:
        raise AssertionError("negative half-width accepted")

    print("ok")


if __name__ == "__main__":
    main()
