import json

import pytest

from ordlab.canonical import CanonicalTables, format_tables
from ordlab.cli import main
from ordlab.colourings import builtin_colouring
from ordlab.ordinals import Truncation
from ordlab.adjacency import build_adjacency

from conftest import random_scarce_tables
import random


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestCheckTriangles:
    def test_gomega_clean(self, capsys, tmp_path):
        code, out, _ = run(
            capsys,
            "check-triangles", "--colouring", "gomega",
            "--max-exp", "2", "--max-coeff", "2",
            "--cache-dir", str(tmp_path),
        )
        assert code == 0
        assert "triangles: 0" in out

    def test_complete_triangle(self, capsys, tmp_path):
        code, out, _ = run(
            capsys,
            "check-triangles", "--colouring", "complete",
            "--max-exp", "0", "--max-coeff", "2",
            "--cache-dir", str(tmp_path),
        )
        assert code == 1
        assert "triangle: 0 1 2" in out

    def test_missing_flag_is_usage_error(self, capsys, tmp_path):
        code, _, _ = run(
            capsys, "check-triangles", "--colouring", "gomega", "--max-coeff", "2"
        )
        assert code == 2

    def test_unknown_colouring(self, capsys, tmp_path):
        code, _, err = run(
            capsys,
            "check-triangles", "--colouring", "nope",
            "--max-exp", "1", "--max-coeff", "1",
            "--cache-dir", str(tmp_path),
        )
        assert code == 2 and "unknown colouring" in err

    def test_csv_format(self, capsys, tmp_path):
        code, out, _ = run(
            capsys,
            "check-triangles", "--colouring", "empty",
            "--max-exp", "1", "--max-coeff", "1",
            "--format", "csv", "--cache-dir", str(tmp_path),
        )
        assert code == 0
        header, row = out.splitlines()[:2]
        assert header.split(",")[0] == "report"
        assert row.split(",")[1] == "empty"

    def test_warm_cache_reproduces_report(self, capsys, tmp_path):
        args = (
            "check-triangles", "--colouring", "gomega",
            "--max-exp", "2", "--max-coeff", "1",
            "--cache-dir", str(tmp_path),
        )
        _, first, _ = run(capsys, *args)
        assert any(tmp_path.glob("*.adj"))
        _, second, _ = run(capsys, *args)
        assert first == second

    def test_manifest_appended(self, capsys, tmp_path):
        args = (
            "check-triangles", "--colouring", "empty",
            "--max-exp", "1", "--max-coeff", "1",
            "--cache-dir", str(tmp_path),
        )
        run(capsys, *args)
        run(capsys, *args)
        lines = (tmp_path / "manifests.jsonl").read_text().splitlines()
        assert len(lines) == 2
        entry = json.loads(lines[0])
        assert entry["command"] == "check-triangles"
        assert entry["result_digest"] == json.loads(lines[1])["result_digest"]

    def test_env_cache_dir(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("ORDLAB_CACHE_DIR", str(tmp_path / "envcache"))
        code, _, _ = run(
            capsys,
            "check-triangles", "--colouring", "gomega",
            "--max-exp", "1", "--max-coeff", "2",
        )
        assert code == 0
        assert any((tmp_path / "envcache").glob("*.adj"))


class TestCheckLowerbound:
    def test_passes(self, capsys, tmp_path):
        code, out, _ = run(
            capsys,
            "check-lowerbound", "--k", "1",
            "--max-exp", "5", "--max-coeff", "2",
            "--cache-dir", str(tmp_path),
        )
        assert code == 0
        assert "step-a: pass" in out and "step-d: pass" in out

    def test_k_too_large(self, capsys, tmp_path):
        code, _, err = run(
            capsys,
            "check-lowerbound", "--k", "2",
            "--max-exp", "5", "--max-coeff", "2",
            "--cache-dir", str(tmp_path),
        )
        assert code == 2 and "too large" in err

    def test_defect_via_edge_file(self, capsys, tmp_path):
        # gomega on (E=4, C=1) minus one E2 edge, fed back as a file colouring
        t = Truncation(4, 1)
        adj = build_adjacency(builtin_colouring("gomega"), t)
        lines = []
        dropped = ("w^4", "w^4+w^2")
        for i in range(t.size):
            for j in adj.neighbours(i):
                if j > i:
                    a, b = str(t.ordinal_at(i)), str(t.ordinal_at(j))
                    if (a, b) != dropped:
                        lines.append(f"{a} {b}")
        path = tmp_path / "defect.edges"
        path.write_text("\n".join(lines) + "\n")
        code, out, _ = run(
            capsys,
            "check-lowerbound", "--k", "0",
            "--max-exp", "4", "--max-coeff", "1",
            "--colouring", "file", "--edges", str(path),
            "--cache-dir", str(tmp_path),
        )
        assert code == 1
        assert "counterexample-b: w^4 w^4+w^2" in out


class TestOtherCommands:
    def test_edge_example(self, capsys):
        code, out, _ = run(capsys, "edge", "--a", "w^2*5+3", "--b", "w^3*2")
        assert code == 0 and out == "E3 n=3 colour=1\n"

    def test_edge_none(self, capsys):
        code, out, _ = run(capsys, "edge", "--a", "w^5", "--b", "w^5*2")
        assert code == 0 and out == "none colour=0\n"

    def test_edge_equal_rejected(self, capsys):
        code, _, _ = run(capsys, "edge", "--a", "w", "--b", "w")
        assert code == 2

    def test_enumerate(self, capsys):
        code, out, _ = run(capsys, "enumerate", "--max-exp", "1", "--max-coeff", "1")
        assert code == 0 and out.splitlines() == ["0", "1", "w", "w+1"]

    def test_enumerate_rank(self, capsys):
        code, out, _ = run(
            capsys, "enumerate", "--max-exp", "1", "--max-coeff", "2", "--rank", "1"
        )
        assert code == 0 and out.splitlines() == ["w", "w*2"]

    def test_search_witness_found(self, capsys, tmp_path):
        code, out, _ = run(
            capsys,
            "search-witness", "--colouring", "paper-example",
            "--max-exp", "1", "--max-coeff", "6",
            "--p", "2", "--q", "3", "--limit-rank-max", "1",
            "--cache-dir", str(tmp_path),
        )
        assert code == 0 and "found: yes" in out and "limits:" in out

    def test_search_witness_absent(self, capsys, tmp_path):
        code, out, _ = run(
            capsys,
            "search-witness", "--colouring", "complete",
            "--max-exp", "1", "--max-coeff", "4",
            "--p", "2", "--q", "2",
            "--cache-dir", str(tmp_path),
        )
        assert code == 1 and "found: no" in out

    def test_audit(self, capsys, tmp_path):
        code, out, _ = run(
            capsys,
            "audit", "--colouring", "paper-example",
            "--max-exp", "1", "--max-coeff", "6",
            "--cache-dir", str(tmp_path),
        )
        assert code == 0 and "violations: 0" in out

    def test_extract_tables_paper(self, capsys, tmp_path):
        code, out, _ = run(
            capsys,
            "extract-tables", "--colouring", "paper-example",
            "--max-exp", "1", "--max-coeff", "6",
            "--cache-dir", str(tmp_path),
        )
        assert code == 0
        assert out == (
            "k 2\n"
            "descolor 1 0 0\n"
            "domcolor 0 0 1\n"
            "domcolor 0 1 0\n"
            "domcolor 1 0 0\n"
            "domcolor 1 1 0\n"
        )

    def test_extract_upper_with_tables_file(self, capsys, tmp_path):
        k = 6
        zero = CanonicalTables(
            k,
            {(j, l): 0 for j in range(k) for l in range(j)},
            {(j, l): 0 for j in range(k) for l in range(k)},
        )
        path = tmp_path / "tables.txt"
        path.write_text(format_tables(zero))
        code, out, _ = run(
            capsys,
            "extract-upper", "--colouring", "empty",
            "--max-exp", "5", "--max-coeff", "4",
            "--tables", str(path),
            "--cache-dir", str(tmp_path),
        )
        assert code == 0 and "found: yes" in out

    def test_extract_upper_synthesized(self, capsys, tmp_path):
        tables = random_scarce_tables(6, random.Random(1))
        path = tmp_path / "tables.txt"
        path.write_text(format_tables(tables))
        code, out, _ = run(
            capsys,
            "extract-upper", "--colouring", "synthesized",
            "--max-exp", "5", "--max-coeff", "2",
            "--tables", str(path), "--threshold", "1",
            "--cache-dir", str(tmp_path),
        )
        assert code in (0, 1)
        assert "stage:" in out

    def test_export_tree_figure(self, capsys):
        code, out, _ = run(
            capsys, "export-tree", "--root", "w^3", "--depth", "2", "--fanout", "3"
        )
        assert code == 0
        nodes = [
            line.strip().rstrip(";").strip('"')
            for line in out.splitlines()
            if line.strip().endswith('";') and "->" not in line
        ]
        assert len(nodes) == 13

    def test_export_tree_depth_zero(self, capsys):
        code, out, _ = run(
            capsys, "export-tree", "--root", "w", "--depth", "0", "--fanout", "2",
            "--format", "text",
        )
        assert code == 0 and out.splitlines() == ["w"]

    def test_export_tree_depth_exceeds_rank(self, capsys):
        code, _, _ = run(
            capsys, "export-tree", "--root", "w", "--depth", "2", "--fanout", "2"
        )
        assert code == 2

    def test_export_tree_small(self, capsys):
        code, out, _ = run(
            capsys, "export-tree", "--root", "w", "--depth", "1", "--fanout", "2",
            "--format", "text",
        )
        assert code == 0 and out.splitlines() == ["w", "1", "2"]
