import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from shared.models import (
    NbarRequest, NbarResponse, ReconstructRequest, ReconstructResponse,
    WidthsRequest, WidthsResponse, WidthStrategy,
)
from shared.binning import build_histograms, estimate_mean_photon, realized_widths
from shared.errors import TomographyError
from shared.experiment import likelihood_from_dataset
from shared.mle import reconstruct
from shared.povm import OPERATOR_CACHE
from shared.sampler import QuadratureDataset
import uvicorn

app = FastAPI(title="Reconstruction Service", version="1.0.0")

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

def _parse_strategy(text):
    try:
        return WidthStrategy.parse(text)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc))

@app.post("/reconstruct", response_model=ReconstructResponse)
def reconstruct_state(request: ReconstructRequest):
    """Maximum-likelihood density matrix from raw or binned samples"""
    strategy = _parse_strategy(request.strategy) if request.strategy else None
    try:
        dataset = QuadratureDataset(thetas=request.thetas, xs=request.xs)
        model, histograms = likelihood_from_dataset(
            dataset, request.mode, strategy, request.truncation, request.eta, cache=OPERATOR_CACHE
        )
        result = reconstruct(model, request.mle)
    except TomographyError as exc:
        raise HTTPException(status_code=400, detail=str(exc))

    return ReconstructResponse(
        real=result.rho_hat.real.tolist(),
        imag=result.rho_hat.imag.tolist(),
        metadata=result.to_metadata(model.size),
        widths=realized_widths(histograms).tolist() if histograms else [],
    )

@app.post("/estimate-nbar", response_model=NbarResponse)
async def estimate_nbar(request: NbarRequest):
    """Mean photon number from the second moment of the quadratures"""
    try:
        estimate = estimate_mean_photon(request.xs)
    except TomographyError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return NbarResponse(estimate=estimate, samples=len(request.xs))

@app.post("/widths", response_model=WidthsResponse)
async def bin_widths(request: WidthsRequest):
    """Per-phase bin widths a strategy picks for the samples"""
    strategy = _parse_strategy(request.strategy)
    try:
        dataset = QuadratureDataset(thetas=request.thetas, xs=request.xs)
        histograms = build_histograms(dataset, strategy, request.truncation)
    except TomographyError as exc:
        raise HTTPException(status_code=400, detail=str(exc))

    return WidthsResponse(
        thetas=[h.theta for h in histograms],
        widths=[h.width for h in histograms],
        bins=[h.n_bins for h in histograms],
    )

@app.get("/health")
async def health_check():
    return {
        "status": "healthy",
        "service": "reconstruction",
        "operator_cache": {"hits": OPERATOR_CACHE.hits, "misses": OPERATOR_CACHE.misses},
    }

if __name__ == "__main__":
    uvicorn.run(app, host="127.0.0.1", port=8002)
