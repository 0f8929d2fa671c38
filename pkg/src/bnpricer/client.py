"""Thin HTTP client for the pricing service.

Without a base URL the client drives the FastAPI app in-process through
an ASGI transport, so batch (CLI) use needs no running server and stays
fully deterministic; with a base URL it talks to a remote instance over
the same wire format.
"""

from __future__ import annotations

import asyncio
from typing import TypeVar

import httpx
from pydantic import BaseModel

from .core_types import BnpError
from .service import schemas

R = TypeVar("R", bound=BaseModel)


class ServiceError(BnpError):
    """Error reported by the service, carrying its module-qualified code."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class PricerClient:
    def __init__(self, base_url: str | None = None, timeout: float = 600.0):
        self._timeout = timeout
        if base_url is None:
            from .service.app import create_app

            self._app = create_app()
            self._client = None
        else:
            self._app = None
            self._client = httpx.Client(base_url=base_url, timeout=timeout)

    def close(self) -> None:
        if self._client is not None:
            self._client.close()

    def __enter__(self) -> "PricerClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- endpoints ---------------------------------------------------------

    def health(self) -> schemas.HealthResponse:
        return self._get("/health", schemas.HealthResponse)

    def estimate(self, req: schemas.EstimateRequest) -> schemas.EstimateResponse:
        return self._post("/estimate", req, schemas.EstimateResponse)

    def price(self, req: schemas.PriceRequest) -> schemas.PriceResponse:
        return self._post("/price", req, schemas.PriceResponse)

    def hedge(self, req: schemas.HedgeRequest) -> schemas.HedgeResponse:
        return self._post("/hedge", req, schemas.HedgeResponse)

    def simulate(self, req: schemas.SimulateRequest) -> schemas.SimulateResponse:
        return self._post("/simulate", req, schemas.SimulateResponse)

    def diagnose(self, req: schemas.DiagnoseRequest) -> schemas.DiagnoseResponse:
        return self._post("/diagnose", req, schemas.DiagnoseResponse)

    # -- transport ---------------------------------------------------------

    def _post(self, path: str, req: BaseModel, model: type[R]) -> R:
        response = self._request("POST", path, req.model_dump(mode="json"))
        return model.model_validate(response)

    def _get(self, path: str, model: type[R]) -> R:
        return model.model_validate(self._request("GET", path, None))

    def _request(self, method: str, path: str, payload: dict | None) -> dict:
        if self._client is not None:
            response = self._client.request(method, path, json=payload)
        else:
            response = asyncio.run(self._asgi_request(method, path, payload))
        if response.status_code >= 400:
            raise _to_error(response)
        return response.json()

    async def _asgi_request(self, method: str, path: str, payload: dict | None):
        transport = httpx.ASGITransport(app=self._app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://bnpricer.local", timeout=self._timeout
        ) as client:
            return await client.request(method, path, json=payload)


def _to_error(response: httpx.Response) -> ServiceError:
    try:
        body = response.json()
    except ValueError:
        return ServiceError("service.http", f"HTTP {response.status_code}")
    if isinstance(body, dict) and "error" in body:
        return ServiceError(body["error"]["code"], body["error"]["message"])
    return ServiceError("service.validation", str(body.get("detail", body)))
