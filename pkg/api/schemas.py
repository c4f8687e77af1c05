from typing import Dict, List, Optional

from pydantic import BaseModel


class SearchRequest(BaseModel):
    code:  str                     # 64 hex chars, or 16 for short mode
    k:     Optional[int] = None    # server default_k when omitted
    mode:  Optional[str] = None    # short | long | twostage; index default when omitted


class SearchHit(BaseModel):
    id:       int
    distance: int
    score:    int


class SearchResponse(BaseModel):
    mode:    str
    k:       int
    results: List[SearchHit]


class IngestResponse(BaseModel):
    indexed:   int
    documents: int


class StatsResponse(BaseModel):
    documents:             int
    radius:                int
    neighbors_per_subcode: int
    default_mode:          str
    modes:                 Dict[str, bool]
    labeled_documents:     int
    generation:            int


class ErrorResponse(BaseModel):
    error:        str
    message:      str
    position:     Optional[int] = None
    line_numbers: Optional[List[int]] = None
