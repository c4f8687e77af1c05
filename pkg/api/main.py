"""
Hamming Search API

Endpoints:
    GET  /health: liveness check
    GET  /stats: document count, radius, mode availability
    POST /search: ranked results for one hex code
    POST /index: ingest a codes-file body (text/plain), all or nothing

Run locally:
    HAMSEARCH_CONFIG=service.conf uvicorn api.main:app --reload
or
    python -m src.cli serve --config service.conf
"""

import os
import sys
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Optional

# Allow imports from project root
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse
from fastapi.concurrency import run_in_threadpool

from api.schemas import ErrorResponse, IngestResponse, SearchRequest, SearchResponse, StatsResponse
from src.config import ServiceConfig
from src.exception import (
    CodeParseError,
    CodesFileError,
    DuplicateDocumentError,
    HamSearchError,
    ModeUnavailableError,
)
from src.components.documents import parse_codes
from src.components.index_store import load_index
from src.components.partitioning import ShortCodeExtractor
from src.components.search_index import IndexConfig, SearchIndex, query_response
from src.logger import logging


def status_for(error: HamSearchError) -> int:
    if isinstance(error, (ModeUnavailableError, DuplicateDocumentError)):
        return 409
    return 400


def open_index(config: ServiceConfig) -> Optional[SearchIndex]:
    """Loads the configured index file; an extractor alone gives an empty index ready for ingest."""
    if config.index_path is not None and config.index_path.is_file():
        return load_index(config.index_path)
    if config.extractor_path is not None:
        logging.info(f"No index file; starting empty with extractor {config.extractor_path}")
        return SearchIndex(
            IndexConfig(
                radius=config.radius,
                extractor=ShortCodeExtractor.load(config.extractor_path),
                default_mode=config.default_mode,
                long_postings=config.long_postings,
            )
        )
    logging.warning("Neither an index file nor an extractor is configured; searches will return 503")
    return None


def ingest_text(index: SearchIndex, text: str) -> int:
    """Parse and index a codes-file body. Called from a worker thread."""
    return index.index_documents(parse_codes(text.splitlines()))


def create_app(config: Optional[ServiceConfig] = None, index: Optional[SearchIndex] = None) -> FastAPI:

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if app.state.index is None:
            if app.state.config is None:
                app.state.config = ServiceConfig.load(os.getenv("HAMSEARCH_CONFIG"))
            logging.info("Loading index on startup")
            app.state.index = open_index(app.state.config)
        logging.info("Service ready")
        yield
        logging.info("Shutting down")

    app = FastAPI(
        title="Hamming Search API",
        description="Two-stage similarity search over 256-bit binary hash codes.",
        version="1.0.0",
        lifespan=lifespan,
    )
    app.state.config = config
    app.state.index = index

    @app.exception_handler(HamSearchError)
    async def domain_error(request: Request, exc: HamSearchError):
        body = ErrorResponse(
            error=type(exc).__name__,
            message=str(exc),
            position=exc.position if isinstance(exc, CodeParseError) else None,
            line_numbers=exc.line_numbers if isinstance(exc, CodesFileError) else None,
        )
        return JSONResponse(status_code=status_for(exc), content=body.model_dump(exclude_none=True))

    @app.exception_handler(Exception)
    async def unexpected_error(request: Request, exc: Exception):
        logging.error(f"Unhandled error on {request.url.path}: {exc!r}")
        return JSONResponse(status_code=500, content={"error": "InternalError", "message": "Request failed. Check server logs."})

    def require_index(request: Request) -> SearchIndex:
        index = request.app.state.index
        if index is None:
            raise HTTPException(status_code=503, detail="no index is loaded")
        return index

    def default_k(request: Request) -> int:
        config = request.app.state.config
        return config.default_k if config is not None else 10

    @app.get("/health")
    def health(request: Request):
        return {"status": "ok", "index_loaded": request.app.state.index is not None}

    @app.get("/stats", response_model=StatsResponse)
    def stats(request: Request):
        return require_index(request).stats()

    @app.post("/search", response_model=SearchResponse)
    def search(body: SearchRequest, request: Request):
        index = require_index(request)
        k = body.k if body.k is not None else default_k(request)
        return query_response(index, body.code.strip(), k, body.mode)

    @app.post("/index", response_model=IngestResponse)
    async def ingest(request: Request):
        index = require_index(request)
        raw = await request.body()
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise HTTPException(status_code=400, detail=f"body is not UTF-8: {e}")
        indexed = await run_in_threadpool(ingest_text, index, text)
        logging.info(f"POST /index: {indexed} documents ingested")
        return {"indexed": indexed, "documents": len(index)}

    return app


app = create_app()
