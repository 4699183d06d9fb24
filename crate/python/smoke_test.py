"""Build the extension module and exercise it once.

Usage: python3 python/smoke_test.py [--no-build]
"""

import importlib.util
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    if "--no-build" not in sys.argv:
        subprocess.run(
            ["cargo", "build", "--release", "--offline", "-p", "ncbiharm-py"],
            cwd=ROOT,
            check=True,
        )
    lib = ROOT / "target" / "release" / "libncbiharm_py.so"
    target = pathlib.Path(tempfile.mkdtemp()) / "ncbiharm_py.so"
    shutil.copy(lib, target)
    spec = importlib.util.spec_from_file_location("ncbiharm_py", target)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def main():
    nb = load()
    mesh = nb.Mesh.structured(4, "three-directional")
    print(mesh)
    assert len(mesh.cells) == 32

    back = nb.Mesh.from_text(mesh.to_text())
    assert back.cells == mesh.cells

    for which in ("a", "dirichlet", "navier"):
        report = nb.check_complex(mesh, which)
        assert report["passed"], (which, report)

    counts = dict(nb.basis_counts(nb.Mesh.structured(2, "diagonal"), "navier"))
    assert sum(counts.values()) == 23, counts

    sol = nb.solve(mesh, "navier-sin")
    assert sol["errH2"] < 1.0 and sol["dofs"] > 0
    print("navier-sin n=4:", {k: v for k, v in sol.items() if k != "coefficients"})

    csv = nb.study("dirichlet-sin2", [2, 4, 8])
    lines = csv.strip().splitlines()
    assert lines[0] == "level,h,dofs,errH2,rateH2,errH1,rateH1,errL2,rateL2"
    assert len(lines) == 4
    print(csv, end="")

    beta = nb.inf_sup(nb.Mesh.lshape(4, 0.1, 3), "dirichlet")
    assert beta > 0.05
    print(f"inf-sup on L-shape: {beta:.4f}")

    try:
        nb.Mesh.lshape(3)
    except ValueError:
        pass
    else:
        raise AssertionError("odd n accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
