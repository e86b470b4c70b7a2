import sys

import run_services
from run_services import SERVICES, Service, launch, log_tail, start_service

LOUD_CHILD = "import sys\nfor _ in range(4000):\n    sys.stderr.write('x' * 99 + '\\n')\nprint('done')\n"


def test_service_table():
    assert [s.port for s in SERVICES] == [8001, 8002, 8003]
    assert SERVICES[2].url == "http://127.0.0.1:8003"
    assert all((run_services.ROOT / s.script).exists() for s in SERVICES)


def test_launch_does_not_block_on_large_stderr(tmp_path):
    log = tmp_path / "loud.log"
    process = launch([sys.executable, "-c", LOUD_CHILD], log)
    assert process.wait(timeout=30) == 0
    assert log.stat().st_size >= 400_000
    assert log_tail(log).rstrip().endswith("done")


def test_start_service_reports_early_exit(tmp_path, monkeypatch, capsys):
    script = tmp_path / "broken_service.py"
    script.write_text("import sys\nsys.exit('cannot bind port')\n")
    monkeypatch.setattr(run_services, "ROOT", tmp_path)
    monkeypatch.setattr(run_services, "is_healthy", lambda service: False)
    assert start_service(Service("broken", script.name, 8999), log_dir=tmp_path / "logs") is None
    out = capsys.readouterr().out
    assert "exited with code 1" in out
    assert "cannot bind port" in out
