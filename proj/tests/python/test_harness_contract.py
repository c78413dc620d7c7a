# SPDX-License-Identifier: Apache-2.0
"""The renderer's side of `harness <tool> <src> <out>`: exit 0 iff the PNG exists."""

import json
import subprocess
import sys
import textwrap


def _stub(tmp_path, fixture_binary, body):
    path = tmp_path / "harness.py"
    path.write_text(
        textwrap.dedent(
            f"""
            import subprocess, sys
            tool, src, out = sys.argv[1:4]
            FIXTURE = {str(fixture_binary)!r}
            """
        )
        + textwrap.dedent(body)
    )
    return path


def _generate(cli_binary, tmp_path, harness, out, count="5"):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"harness": str(harness), "binaries": {"python3": sys.executable}}))
    return subprocess.run(
        [str(cli_binary), "generate", "--config", str(config), "--query", "sales", "--category", "charts",
         "--count", count, "--seed", "5", "--mock-provider", "--max-attempts", "1", "--timeout", "20",
         "--out", str(out)],
        capture_output=True, text=True, timeout=300)


def test_harness_tools_render_through_the_contract(cli_binary, fixture_binary, tmp_path):
    # The mock code stage emits fixture scenes; the stub hands them to the fixture renderer.
    harness = _stub(tmp_path, fixture_binary, """
        sys.exit(subprocess.run([FIXTURE, src, out]).returncode)
    """)
    out = tmp_path / "shard"
    result = _generate(cli_binary, tmp_path, harness, out)
    assert result.returncode == 0, result.stderr
    tools = [json.loads(line)["tool"] for line in (out / "manifest.jsonl").read_text().splitlines()]
    assert "matplotlib" in tools and "plotly" in tools
    assert subprocess.run([str(cli_binary), "validate", str(out)], capture_output=True).returncode == 0


def test_exit_zero_without_png_is_a_failure(cli_binary, fixture_binary, tmp_path):
    harness = _stub(tmp_path, fixture_binary, """
        sys.exit(0)
    """)
    out = tmp_path / "shard"
    result = _generate(cli_binary, tmp_path, harness, out, count="2")
    # Two jobs: matplotlib and plotly both go through the stub, so every job fails.
    assert result.returncode == 1
    assert "no_output_image" in result.stderr or "all_jobs_failed" in result.stderr


def test_nonzero_exit_is_a_compile_error(cli_binary, fixture_binary, tmp_path):
    harness = _stub(tmp_path, fixture_binary, """
        subprocess.run([FIXTURE, src, out])
        print("traceback: boom", file=sys.stderr)
        sys.exit(1)
    """)
    out = tmp_path / "shard"
    result = _generate(cli_binary, tmp_path, harness, out, count="2")
    assert result.returncode == 1
