import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from shared.models import ExperimentConfig, ExperimentReport, RunRequest, RunRow, SweepResponse
from shared.errors import TomographyError
from shared.experiment import emit_report, run_single, run_sweep
from typing import Dict
import threading
import uuid
import uvicorn

app = FastAPI(title="Experiment Service", version="1.0.0")

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Finished sweeps, kept for the lifetime of the process
sweeps: Dict[str, ExperimentReport] = {}
sweeps_lock = threading.Lock()

@app.post("/runs", response_model=RunRow)
def create_run(request: RunRequest):
    """One seeded reconstruction for a sweep point and repetition"""
    if request.sweep_index >= len(request.config.sweep):
        raise HTTPException(status_code=404, detail="Sweep point not found")
    try:
        return run_single(request.config, request.sweep_index, request.repetition)
    except TomographyError as exc:
        raise HTTPException(status_code=400, detail=str(exc))

@app.post("/sweeps", response_model=SweepResponse)
def create_sweep(config: ExperimentConfig):
    """Run a full sweep and write its report to config.output_path"""
    try:
        report = run_sweep(config)
        path = emit_report(report, config.output_path)
    except OSError as exc:
        raise HTTPException(status_code=400, detail=f"cannot write report: {exc}")

    sweep_id = str(uuid.uuid4())
    with sweeps_lock:
        sweeps[sweep_id] = report
    return SweepResponse(
        sweep_id=sweep_id,
        output_path=str(path),
        summaries=report.summaries,
        failed=report.failed,
        non_converged=report.non_converged,
    )

@app.get("/sweeps/{sweep_id}", response_model=SweepResponse)
async def get_sweep(sweep_id: str):
    """Summary of a finished sweep"""
    with sweeps_lock:
        report = sweeps.get(sweep_id)
    if not report:
        raise HTTPException(status_code=404, detail="Sweep not found")
    return SweepResponse(
        sweep_id=sweep_id,
        output_path=report.config.output_path,
        summaries=report.summaries,
        failed=report.failed,
        non_converged=report.non_converged,
    )

@app.get("/health")
async def health_check():
    return {"status": "healthy", "service": "experiment", "sweeps": len(sweeps)}

if __name__ == "__main__":
    uvicorn.run(app, host="127.0.0.1", port=8003)
