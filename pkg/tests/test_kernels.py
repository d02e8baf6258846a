import os
import random
import subprocess
import sys

import pytest

from relshap import kernels
from relshap.accel import PlayerMaskEvaluator, compile_view
from relshap.harness import example1
from relshap.provenance import compute_lineage


def test_backend_reports():
    assert kernels.active_backend() in ("c", "python")


@pytest.mark.skipif(not kernels.compiled_available(), reason="extension not built")
def test_backends_bit_identical():
    instance, query = example1()
    part = compute_lineage(query, instance)
    view = compile_view(query, instance)
    pe_c = PlayerMaskEvaluator(view, part, backend="c")
    pe_py = PlayerMaskEvaluator(view, part, backend="python")
    for enc in range(64):
        assert pe_c(enc) == pe_py(enc)


@pytest.mark.skipif(not kernels.compiled_available(), reason="extension not built")
def test_backends_identical_on_count_exists():
    instance, query = example1()
    part = compute_lineage(query, instance)
    rnd = random.Random(5)
    for kind in ("count", "exists"):
        qd = query.to_dict()
        qd["aggregate"] = {"kind": kind}
        from relshap.relcore import QuerySpec

        view = compile_view(QuerySpec.from_dict(qd), instance)
        pe_c = PlayerMaskEvaluator(view, part, backend="c")
        pe_py = PlayerMaskEvaluator(view, part, backend="python")
        for _ in range(100):
            enc = rnd.getrandbits(part.n)
            assert pe_c(enc) == pe_py(enc)


def test_pure_env_forces_python_backend():
    env = dict(os.environ, RELSHAP_PURE="1")
    out = subprocess.run(
        [sys.executable, "-c", "import relshap; print(relshap.active_backend())"],
        capture_output=True,
        text=True,
        env=env,
        check=True,
    )
    assert out.stdout.strip() == "python"


def test_pure_backend_same_estimate():
    """The fallback must reproduce the compiled backend's report bit-for-bit."""
    code = (
        "import json, relshap\n"
        "from relshap.samplers import EstimatorConfig, run_arss\n"
        "inst, q = relshap.example1()\n"
        "ctx = relshap.GameContext(q, inst)\n"
        "rep = run_arss(ctx, 'orders:0', EstimatorConfig(method='arss', m=150, seed=3))\n"
        "print(json.dumps(rep.deterministic_state()))\n"
    )
    here = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True, check=True
    ).stdout
    pure = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True,
        text=True,
        env=dict(os.environ, RELSHAP_PURE="1"),
        check=True,
    ).stdout
    import json

    a, b = json.loads(here), json.loads(pure)
    a.pop("backend")
    b.pop("backend")
    assert a == b
