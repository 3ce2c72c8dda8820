"""Tests for the problem-description language and the command-line frontend.

The language tests pin the parsed document model, the canonical rendering,
round-trip stability, warning and error reporting with line positions, and
the construction of solver-ready objects from documents.  The frontend tests
drive every subcommand in-process through ``run_command`` against the bundled
problem corpus, pinning report fields, exit codes, and byte determinism.
"""

import json
import os
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

import poissondef
from poissondef.cli import run_command
from poissondef.deformation import run_solver, verify_family
from poissondef.dsl import parse, render
from poissondef.errors import ParseError
from poissondef.symbolic import LaurentPoly

EXAMPLES = Path(poissondef.__file__).parent / "examples"
CORPUS = sorted(p.name for p in EXAMPLES.glob("*.pdef"))

P3_HYPERPLANE = """
# hyperplane inside three-dimensional projective space
manifold p3_hyperplane;
builtin P3;
poisson on U0: z1 * d/z1 ^ d/z2;
submanifold normal U0: [z3];
submanifold normal U1: [z3];
submanifold normal U2: [z3];
submanifold normal U3: absent;
params t order 4 degree 2;
family U0: z3 = t;
family U1: z3 = t * z1;
family U2: z3 = t * z1;
"""

F0_INSTABILITY = """
manifold f0_instability;
builtin Fm(0);
poisson on U1: xi * d/z ^ d/xi;
submanifold normal U1: [xi];
submanifold normal U2: [xip];
submanifold normal U3: absent;
submanifold normal U4: absent;
params t order 3 degree 2;
mode prescribed;
lambda U1: xi * d/z ^ d/xi - t * z * d/z ^ d/xi;
"""

P2_EXTENDED = """
manifold p2_extended;
builtin P2;
poisson on U0: z1 * d/z1 ^ d/z2;
submanifold normal U0: [z1];
submanifold normal U1: absent;
submanifold normal U2: [z2];
params t1 t2 order 3 degree 2;
mode extended;
family U0: z1 = -t1 * z2 - t2;
family U2: z2 = -t1 - t2 * z1;
lambda U0: z1 * d/z1 ^ d/z2 + t1 * z2 * d/z1 ^ d/z2 + t2 * d/z1 ^ d/z2;
"""

EXPLICIT_ATLAS = """
manifold twisted_line;
chart U0 vars z w;
chart U1 vars y u;
transition U0 -> U1: z = y^-1, w = y^2 * u;
transition U1 -> U0: y = z^-1, u = z^2 * w;
"""

CANONICAL_HYPERPLANE = """\
manifold p3_hyperplane;
builtin P3;
poisson on U0: z1 * d/z1 ^ d/z2;
submanifold normal U0: [z3];
submanifold normal U1: [z3];
submanifold normal U2: [z3];
submanifold normal U3: absent;
params t order 4 degree 2;
family U0: z3 = t;
family U1: z3 = z1 * t;
family U2: z3 = z1 * t;
"""


def corpus_path(name):
    return str(EXAMPLES / name)


def run(*argv):
    return run_command(list(argv))


def jrun(*argv):
    code, text = run_command(list(argv) + ["--json"])
    return code, json.loads(text)


# ---------------------------------------------------------------------------
# language: documents and derived objects
# ---------------------------------------------------------------------------


def test_hyperplane_document_fields():
    doc = parse(P3_HYPERPLANE)
    assert doc.name == "p3_hyperplane"
    assert doc.builtin == ("P3", ())
    assert doc.params == ("t",)
    assert doc.order == 4
    assert doc.degree == 2
    man = doc.manifold()
    u0_vars = man.space.chart("U0").vars
    assert man.bivector("U0").coefficient((0, 1)) == LaurentPoly.variable(
        u0_vars, "z1"
    )
    sub = doc.submanifold()
    assert sub.codim == 1
    assert set(sub.present_charts()) == {"U0", "U1", "U2"}


def test_hyperplane_solver_matches_file_family():
    doc = parse(P3_HYPERPLANE)
    problem = doc.problem()
    result = run_solver(problem)
    assert result.ok and result.verify["pass"]
    family = doc.family_state(problem)
    report = verify_family(problem, family, 4)
    assert report["pass"], report
    for name in doc.submanifold().present_charts():
        diff = result.state.phi[name][0] - family.phi[name][0]
        assert diff.is_zero(), name


def test_instability_document_obstructs():
    doc = parse(F0_INSTABILITY)
    assert doc.mode == "prescribed"
    result = run_solver(doc.problem())
    assert not result.ok
    assert result.obstructed.order == 1


def test_lambda_family_auto_push():
    doc = parse(F0_INSTABILITY)
    lam_family = doc.lambda_family(3)
    man = doc.manifold()
    for name in man.space.chart_names:
        diff = lam_family[name].order_zero() - man.bivector(name)
        assert diff.is_zero(), name


def test_extended_family_document_verifies():
    doc = parse(P2_EXTENDED)
    problem = doc.problem()
    family = doc.family_state(problem)
    report = verify_family(problem, family, 3)
    assert report["pass"], report


def test_explicit_atlas_document():
    doc = parse(EXPLICIT_ATLAS)
    validation = doc.space.validate()
    assert validation["pass"], validation
    transition = doc.transitions[("U0", "U1")]
    assert transition["z"].terms == {(-1, 0): Fraction(1)}


@pytest.mark.parametrize(
    "text",
    [P3_HYPERPLANE, F0_INSTABILITY, P2_EXTENDED, EXPLICIT_ATLAS],
    ids=["hyperplane", "instability", "extended", "atlas"],
)
def test_round_trip_samples(text):
    first = render(parse(text))
    second = render(parse(first))
    assert first == second


@pytest.mark.parametrize("name", CORPUS)
def test_round_trip_corpus(name):
    text = (EXAMPLES / name).read_text()
    first = render(parse(text))
    second = render(parse(first))
    assert first == second


def test_canonical_render_pinned():
    assert render(parse(P3_HYPERPLANE)) == CANONICAL_HYPERPLANE


def test_degenerate_wedge_warning():
    doc = parse(
        """
manifold degenerate;
builtin P2;
poisson on U0: d/z1 ^ d/z1;
"""
    )
    assert doc.poisson["U0"].is_zero()
    assert len(doc.warnings) == 1
    assert "degenerate wedge" in doc.warnings[0][2]


def expect_parse_error(text, needle):
    with pytest.raises(ParseError) as info:
        parse(text)
    message = str(info.value)
    assert needle in message, (needle, message)
    return message


def test_parse_error_positions():
    message = expect_parse_error("manifold x\nbuiltin P2;", "expected ';'")
    assert "line 2" in message
    message = expect_parse_error(
        "builtin P2;\npoisson on U0: zz * d/z1 ^ d/z2;",
        "unknown variable 'zz'",
    )
    assert "line 2" in message
    expect_parse_error(
        """
builtin P2;
submanifold normal U0: [z1];
submanifold normal U1: absent;
submanifold normal U2: [z2];
params t order 2 degree 2;
family U0: z1 = t^3;
""",
        "exceeds the declared order",
    )
    expect_parse_error(
        """
builtin P2;
submanifold normal U0: [z1];
submanifold normal U1: absent;
submanifold normal U2: [z2];
params t order 2 degree 2;
family U0: z2 = t;
""",
        "family assigns non-normal variable 'z2' on chart 'U0'",
    )


# ---------------------------------------------------------------------------
# frontend: corpus validation
# ---------------------------------------------------------------------------


def test_corpus_is_nonempty():
    assert len(CORPUS) == 23, CORPUS


@pytest.mark.parametrize("name", CORPUS)
def test_validate_corpus(name):
    code, text = run("validate", corpus_path(name))
    assert code == 0, (name, text)


# ---------------------------------------------------------------------------
# frontend: section-space reports
# ---------------------------------------------------------------------------


def test_h0_affine_weight_window():
    code, report = jrun(
        "h0", corpus_path("c3_line.pdef"), "--complex", "normal",
        "--weights", "0..5",
    )
    assert code == 0
    assert report["schema"] == 1
    assert report["dimensions"] == [1, 1, 1, 1, 1, 1]
    assert report["basis"]["3"][0]["normal"]["U"] == ["0", "x3^3"]


def test_h0_atlas_dimensions():
    code, report = jrun("h0", corpus_path("p3_hyperplane.pdef"))
    assert code == 0 and report["dimension"] == 1
    code, report = jrun("h0", corpus_path("p3_line.pdef"))
    assert code == 0 and report["dimension"] == 2
    code, report = jrun(
        "h0", corpus_path("p2_extended.pdef"), "--complex", "extended"
    )
    assert code == 0 and report["dimension"] == 8


def test_h0_bivector_dimensions():
    dims = []
    for m in range(6):
        code, report = jrun(
            "h0", corpus_path(f"f{m}_bivector.pdef"), "--complex", "bivector"
        )
        assert code == 0
        dims.append(report["dimension"])
    assert dims == [9, 9, 9, 9, 10, 11]


def test_h0_extended_dimensions():
    dims = []
    for m in (0, 1, 3, 4, 5):
        code, report = jrun(
            "h0", corpus_path(f"f{m}_extended.pdef"), "--complex", "extended"
        )
        assert code == 0
        dims.append(report["dimension"])
    assert dims == [7, 7, 9, 10, 11]


def test_hyper_reports():
    code, report = jrun(
        "hyper", corpus_path("c3_line.pdef"), "--weights", "0..3"
    )
    assert code == 0
    assert set(report["h0"]) == {"0", "1", "2", "3"}
    assert set(report["h1"]) == {"0", "1", "2", "3"}
    code, report = jrun(
        "hyper", corpus_path("p3_hyperplane.pdef"), "--bound", "2"
    )
    assert code == 0
    assert report["truncated"] is True
    assert report["h1_estimate"] >= 0


def test_tensors_report():
    code, report = jrun("tensors", corpus_path("p3_hyperplane.pdef"))
    assert code == 0
    assert report["codimension"] == 1
    assert "U0|U1" in report["overlaps"]


# ---------------------------------------------------------------------------
# frontend: solving, verifying, matching
# ---------------------------------------------------------------------------


def test_solve_hyperplane():
    code, report = jrun("solve", corpus_path("p3_hyperplane.pdef"))
    assert code == 0
    assert report["family"]["U0"]["z3"] == "t"
    assert report["verify"]["pass"] is True
    assert report["characteristic_map_identity"] is True


def test_solve_line_seeded():
    code, report = jrun("solve", corpus_path("p3_line.pdef"), "--seed", "1,0")
    assert code == 0, report
    assert report["family"]["U0"]["z1"] == "0"
    assert report["family"]["U0"]["z3"] == "t2 + z2 * t1"


@pytest.mark.parametrize("name", ["f0_instability", "f2_instability"])
def test_solve_instability_exits_two(name):
    code, report = jrun("solve", corpus_path(f"{name}.pdef"))
    assert code == 2
    assert report["obstructed"]["order"] == 1
    assert "equation" in report["obstructed"]["witness"]


def test_solve_instability_degree_sweep():
    for degree in range(1, 7):
        code, report = jrun(
            "solve", corpus_path("f0_instability.pdef"), "--degree",
            str(degree),
        )
        assert code == 2, (degree, report)
        assert report["obstructed"]["order"] == 1


def test_verify_families():
    code, report = jrun(
        "verify", corpus_path("p3_hyperplane.pdef"), "--order", "4"
    )
    assert code == 0 and report["pass"] is True
    code, report = jrun("verify", corpus_path("p3_line.pdef"), "--order", "4")
    assert code == 0 and report["pass"] is True
    code, report = jrun("verify", corpus_path("p2_extended.pdef"))
    assert code == 0 and report["pass"] is True


def test_verify_broken_family_exits_two():
    code, report = jrun("verify", corpus_path("p3_line_bad.pdef"))
    assert code == 2
    assert report["pass"] is False
    assert report["ideal"] == {"U0": 0, "U2": 0}


def test_match_reparametrizations():
    code, report = jrun(
        "match", corpus_path("p3_hyperplane.pdef"),
        corpus_path("p3_hyperplane_s.pdef"),
    )
    assert code == 0 and report["substitution"]["t"] == "s"
    code, report = jrun(
        "match", corpus_path("p3_hyperplane.pdef"),
        corpus_path("p3_hyperplane_s2.pdef"),
    )
    assert code == 0 and report["substitution"]["t"] == "s + s^2"


def test_match_failure_exits_two():
    code, report = jrun(
        "match", corpus_path("p3_line_t.pdef"), corpus_path("p3_line_bad.pdef"),
        "--seed", "0",
    )
    assert code == 2
    assert report["pass"] is False
    assert report["residual_zero"] is False


# ---------------------------------------------------------------------------
# frontend: obstruction calculus
# ---------------------------------------------------------------------------


def test_artin_embedded_deformations():
    code, report = jrun("artin", corpus_path("c3_line.pdef"))
    assert code == 0
    assert report["liftable"] is True
    assert report["class"]["zero"] is True
    assert report["first_order_dimension"] == 4


def test_artin_obstructed_exits_two():
    code, report = jrun(
        "artin", corpus_path("f0_instability.pdef"), "--bound", "4"
    )
    assert code == 2
    assert report["liftable"] is False
    assert report["class"]["zero"] is False
    assert report["witness"]


def test_artin_coupled_and_ambient():
    code, report = jrun("artin", corpus_path("p2_extended_t.pdef"))
    assert code == 0 and report["liftable"] is True
    assert report["first_order_dimension"] == 8
    code, report = jrun("artin", corpus_path("p2_def.pdef"))
    assert code == 0 and report["liftable"] is True
    # structure deformations of the rigid projective plane are cubic
    # anticanonical sections: dimension 10
    assert report["first_order_dimension"] == 10


# ---------------------------------------------------------------------------
# frontend: determinism, errors, human output
# ---------------------------------------------------------------------------


def test_repeated_runs_are_byte_identical():
    first = run("h0", corpus_path("p3_hyperplane.pdef"), "--json")
    second = run("h0", corpus_path("p3_hyperplane.pdef"), "--json")
    assert first == second
    first = run("solve", corpus_path("p3_line.pdef"))
    second = run("solve", corpus_path("p3_line.pdef"))
    assert first == second


def test_usage_errors(tmp_path):
    code, text = run("nonsense")
    assert code == 1
    code, text = run("h0", str(tmp_path / "missing.pdef"))
    assert code == 1 and "cannot read" in text
    broken = tmp_path / "broken.pdef"
    broken.write_text("manifold x\nbuiltin P2;\n")
    code, text = run("h0", str(broken))
    assert code == 1 and "line 2" in text
    code, text = run(
        "h0", corpus_path("p3_hyperplane.pdef"), "--weights", "0..3"
    )
    assert code == 1, text
    code, text = run("h0", corpus_path("c3_line.pdef"), "--weights", "3..0")
    assert code == 1 and "usage error" in text


def test_human_readable_solve_output():
    code, text = run("solve", corpus_path("p3_hyperplane.pdef"))
    assert code == 0
    assert "family:" in text
    assert "z3: t" in text


def test_console_script_matches_in_process():
    completed = subprocess.run(
        ["poissondef", "h0", corpus_path("p3_hyperplane.pdef"), "--json"],
        capture_output=True,
        text=True,
        env={**os.environ, "PYTHONHASHSEED": "0"},
    )
    assert completed.returncode == 0, completed.stderr
    code, text = run("h0", corpus_path("p3_hyperplane.pdef"), "--json")
    assert completed.stdout.rstrip("\n") == text.rstrip("\n")
    assert sys.executable  # the script runs under the same interpreter family
