"""Smoke test for the specball_py extension.

Build first:
    cargo build --release -p specball-py --features extension-module
then run:
    python3 python/smoke_test.py
"""

import cmath
import importlib.util
import json
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parents[1]


def load():
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libspecball_py.so"
        if lib.exists():
            break
    else:
        sys.exit("libspecball_py.so not found; build the specball-py crate first")
    tmp = pathlib.Path(tempfile.mkdtemp())
    dest = tmp / "specball_py.so"
    shutil.copy(lib, dest)
    loader = importlib.util.spec_from_file_location("specball_py", dest)
    mod = importlib.util.module_from_spec(loader)
    loader.loader.exec_module(mod)
    return mod


def main():
    sb = load()

    assert sb.golden_tables_match()
    assert "Θ12" in sb.tables_text(3)

    x11 = sb.Polynomial("x11", 2)
    t12 = sb.VectorField.generator("Theta12", 2)
    t21 = sb.VectorField.generator("Theta21", 2)
    xi1 = sb.VectorField.generator("Xi1", 2)
    assert str(t12.apply(x11)) == "x21"
    # derivation commutator convention
    assert t12.bracket(t21) == -xi1
    assert (x11 * x11).degree() == 2

    ids = sb.verify_identities(2)
    assert any(i == "cross-term" and ok for i, ok, _ in ids)

    assert all(full for _, _, _, full in sb.closure_ranks(2, 3))
    assert sb.cross_image(3) == (7, 7, False)
    assert sb.theta12_jordan_blocks(3) == [3, 2, 2, 1, 1]
    dims = sb.kernel_dims("xi1", 2, 4)
    assert [k for _, k, _ in dims] == [1, 2, 4, 6, 9]

    assert sb.char_poly([[1, 0], [0, 1]]) == [2, 1]
    assert abs(sb.spectral_radius([[0, 4], [0.01, 0]]) - 0.2) < 1e-12
    assert not sb.in_spectral_ball([[1, 0], [0, 0]])
    assert abs(sb.epsilon(1) - (cmath.e - 1)) < 1e-15

    a = sb.random_ball_matrix(3, seed=7)
    assert sb.in_spectral_ball(a)
    b = sb.overshear_flow("Theta12", "x11", 0.4 + 0.1j, a)
    drift = max(abs(p - q) for p, q in zip(sb.char_poly(a), sb.char_poly(b)))
    assert drift < 1e-10, drift
    word = json.dumps([
        {"overshear": {"theta": [1, 2], "f": "x11", "t": [0.3, 0.0]}},
        {"moebius": {"alpha": [0.2, 0.1], "gamma": [1, 0]}},
        {"transpose": {}},
    ])
    assert sb.in_spectral_ball(sb.apply_word(word, a))
    m = sb.moebius(0.3, 1, [[0, 0], [0, 0]])
    assert abs(m[0][0] + 0.3) < 1e-15

    try:
        sb.Polynomial("x33", 2)
    except ValueError:
        pass
    else:
        raise AssertionError("out-of-range variable accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
