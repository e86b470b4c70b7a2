import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from shared.models import DatasetRequest, DatasetResponse, StateResponse, StateSpec
from shared.binning import estimate_mean_photon
from shared.errors import TomographyError
from shared.sampler import PhaseSchedule, generate_dataset
from shared.states import prepare_state
import uvicorn

app = FastAPI(title="Simulation Service", version="1.0.0")

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

@app.post("/states", response_model=StateResponse)
def create_state(spec: StateSpec):
    """Density matrix of a test state after the loss channel"""
    try:
        prepared = prepare_state(spec)
    except TomographyError as exc:
        raise HTTPException(status_code=400, detail=str(exc))

    return StateResponse(
        label=spec.label,
        real=prepared.rho_lossy.real.tolist(),
        imag=prepared.rho_lossy.imag.tolist(),
        leakage=prepared.leakage,
        analytic_mean_photon=prepared.analytic_mean_photon,
        lossy_mean_photon=prepared.lossy_mean_photon,
    )

@app.post("/datasets", response_model=DatasetResponse)
def create_dataset(request: DatasetRequest):
    """Simulate homodyne samples for a state"""
    try:
        schedule = PhaseSchedule(phases=request.phases, samples=request.samples)
        dataset = generate_dataset(request.state, schedule, request.eta, request.seed, request.repetition)
    except TomographyError as exc:
        raise HTTPException(status_code=400, detail=str(exc))

    return DatasetResponse(
        thetas=dataset.thetas.tolist(),
        xs=dataset.xs.tolist(),
        nbar_estimate=estimate_mean_photon(dataset),
    )

@app.get("/health")
async def health_check():
    return {"status": "healthy", "service": "simulation"}

if __name__ == "__main__":
    uvicorn.run(app, host="127.0.0.1", port=8001)
