from __future__ import annotations

import os
import sys
from importlib import import_module
from pathlib import Path
import pkgutil

RESULTS: list[str] = []

# Ensure project root is on sys.path for direct execution
ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))


def _ok(msg: str) -> None:
    RESULTS.append(f"OK: {msg}")


def _fail(msg: str, e: BaseException | None = None) -> None:
    if e:
        RESULTS.append(f"FAIL: {msg} -> {e}")
    else:
        RESULTS.append(f"FAIL: {msg}")


def env_info() -> None:
    _ok(f"Python {sys.version.split()[0]} on {sys.platform}")
    _ok(f"CWD: {os.getcwd()}")
    try:
        import numpy
        import scipy

        _ok(f"numpy {numpy.__version__}, scipy {scipy.__version__}")
    except Exception as e:
        _fail("numerics stack", e)


def import_all_modules() -> None:
    try:
        import nonholo

        mods = [m.name for m in pkgutil.walk_packages(nonholo.__path__, nonholo.__name__ + ".")]
        failures = 0
        for name in sorted(mods):
            try:
                import_module(name)
            except Exception as e:
                failures += 1
                _fail(f"import {name}", e)
        if failures == 0:
            _ok(f"Imported {len(mods)} modules under nonholo/*")
        else:
            _fail(f"{failures} module(s) failed to import")
    except Exception as e:
        _fail("enumerate nonholo modules", e)


essential_runtime_checks_ran = False


def run_checks(tmp_dir: Path) -> None:
    global essential_runtime_checks_ran
    try:
        from pypdf import PdfReader

        from nonholo.core.paths import scenarios_dir
        from nonholo.data.repo import list_runs
        from nonholo.scenario.config import load_scenario
        from nonholo.scenario.runner import run_scenario
    except Exception as e:
        _fail("import runtime modules (scenario/runner/ledger)", e)
        return

    try:
        scenario = load_scenario(scenarios_dir() / "veselova-affine.cfg").with_overrides(
            t_end=0.5,
            csv=str(tmp_dir / "diag.csv"),
            report=str(tmp_dir / "diag.report.txt"),
            pdf=str(tmp_dir / "diag.pdf"),
        )
        _ok(f"Parsed scenario {scenario.name} ({scenario.model_id})")
    except Exception as e:
        _fail("load bundled scenario", e)
        return

    ledger = tmp_dir / "diag.db"
    try:
        summary = run_scenario(scenario, ledger=str(ledger))
        if summary.exit_code != 0:
            _fail(f"run exited with {summary.exit_code}: {summary.error}")
            return
        _ok(f"Ran {summary.records} records to t={summary.final_time:g}")
        for d in summary.drift:
            _ok(d.to_record())
    except Exception as e:
        _fail("run scenario", e)
        return

    try:
        txt = PdfReader(str(tmp_dir / "diag.pdf")).pages[0].extract_text() or ""
        if "Drift" in txt and "moving_energy" in txt:
            _ok("PDF contains the drift table")
        else:
            _fail("PDF text missing the drift table")
        _ok(f"Ledger holds {len(list_runs(ledger))} run(s)")
    except Exception as e:
        _fail("read PDF/ledger", e)
        return

    essential_runtime_checks_ran = True


def main() -> None:
    tmp_dir = Path.cwd() / ".diag_out"
    tmp_dir.mkdir(exist_ok=True)

    env_info()
    import_all_modules()
    run_checks(tmp_dir)

    print("==== Diagnostics ====")
    for line in RESULTS:
        print(line)
    if essential_runtime_checks_ran:
        print("RESULT: PASS (core runtime checks succeeded)")
    else:
        print("RESULT: WARN/FAIL (see failures above)")


if __name__ == "__main__":
    main()
