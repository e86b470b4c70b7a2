#!/usr/bin/env python3
"""
Starts the simulation, reconstruction and experiment services and restarts
any that exit. Each service writes its output to logs/<name>.log.
"""

import subprocess
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import httpx

ROOT = Path(__file__).resolve().parent
LOG_DIR = ROOT / "logs"
STARTUP_TIMEOUT = 15
LOG_TAIL = 2000


@dataclass(frozen=True)
class Service:
    name: str
    script: str
    port: int

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.port}"


SERVICES = [
    Service("simulation", "services/simulation_service.py", 8001),
    Service("reconstruction", "services/reconstruction_service.py", 8002),
    Service("experiment", "services/experiment_service.py", 8003),
]


def is_healthy(service: Service) -> bool:
    try:
        return httpx.get(f"{service.url}/health", timeout=5).status_code == 200
    except httpx.HTTPError:
        return False


def launch(command, log_path: Path) -> subprocess.Popen:
    """Run command with stdout and stderr appended to log_path, so a chatty child never blocks on a full pipe."""
    log_path.parent.mkdir(parents=True, exist_ok=True)
    with open(log_path, "ab") as log:
        return subprocess.Popen(command, cwd=ROOT, stdout=log, stderr=subprocess.STDOUT)


def log_tail(log_path: Path) -> str:
    if not log_path.exists():
        return ""
    return log_path.read_bytes()[-LOG_TAIL:].decode(errors="replace")


def start_service(service: Service, log_dir: Path = LOG_DIR):
    log_path = log_dir / f"{service.name}.log"
    print(f"Starting {service.name} service on port {service.port} (log: {log_path})")
    try:
        process = launch([sys.executable, str(ROOT / service.script)], log_path)
    except OSError as e:
        print(f"✗ Could not start {service.name}: {e}")
        return None

    deadline = time.time() + STARTUP_TIMEOUT
    while time.time() < deadline:
        if process.poll() is not None:
            print(f"✗ {service.name} exited with code {process.returncode}")
            print(log_tail(log_path))
            return None
        if is_healthy(service):
            print(f"✓ {service.name} ready at {service.url}")
            return process
        time.sleep(0.5)

    print(f"⚠️  {service.name} is running but /health did not answer within {STARTUP_TIMEOUT}s")
    return process


def stop_service(service: Service, process: subprocess.Popen) -> None:
    process.terminate()
    try:
        process.wait(timeout=5)
    except subprocess.TimeoutExpired:
        process.kill()
    print(f"✓ Stopped {service.name}")


def main():
    processes = {}
    for service in SERVICES:
        process = start_service(service)
        if process:
            processes[service] = process
    if not processes:
        sys.exit(1)

    print("Docs under <url>/docs. Ctrl+C stops everything.")
    try:
        while True:
            time.sleep(1)
            for service, process in list(processes.items()):
                if process.poll() is None:
                    continue
                print(f"⚠️  {service.name} exited with code {process.returncode}; restarting")
                restarted = start_service(service)
                if restarted:
                    processes[service] = restarted
                else:
                    del processes[service]
    except KeyboardInterrupt:
        for service, process in processes.items():
            stop_service(service, process)


if __name__ == "__main__":
    main()
