"""Translation clients for back-translation augmentation.

Real machine translation is out of scope; the pipeline talks to any service
implementing the small HTTP protocol below, and ships two offline stand-ins:
an identity client and a deterministic mock that produces stable, per-route
paraphrase-like rewrites.

HTTP protocol: POST JSON ``{"text": str, "source": code, "target": code}``
to the endpoint, response JSON ``{"text": str}``.
"""

from __future__ import annotations

import logging
from typing import Protocol

import requests

from .seeding import derive_seed

logger = logging.getLogger(__name__)


class TranslationError(Exception):
    """A translation request failed after all retries.

    Carries the pivot route and, when known, the origin id of the text being
    augmented so the failure can be logged and the variant skipped.
    """

    def __init__(self, message: str, route: str | None = None, origin_id: str | None = None):
        super().__init__(message)
        self.route = route
        self.origin_id = origin_id


class Translator(Protocol):
    def translate(self, text: str, source: str, target: str) -> str: ...


class IdentityTranslator:
    """Returns its input unchanged; round trips are exact no-ops."""

    def translate(self, text: str, source: str, target: str) -> str:
        return text


class DeterministicMockTranslator:
    """Offline stand-in producing stable pseudo-translations.

    Each call rotates the token order by an amount keyed on (text, source,
    target).  Translating back into English additionally appends the pivot
    language code as a vestigial loanword, so round trips through distinct
    routes always yield distinct texts.
    """

    def translate(self, text: str, source: str, target: str) -> str:
        tokens = text.split()
        if not tokens:
            return text
        k = derive_seed("mock-translate", text, source, target) % len(tokens)
        rotated = tokens[k:] + tokens[:k]
        if target == "en" and source != "en":
            rotated.append(source)
        return " ".join(rotated)


class HttpTranslator:
    """Client for the JSON-over-HTTP translation protocol.

    Retries transport and server errors up to ``retries`` extra attempts;
    a malformed response body is not retried.
    """

    def __init__(
        self,
        endpoint: str,
        timeout: float = 10.0,
        retries: int = 2,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries
        self._session = session or requests.Session()

    def translate(self, text: str, source: str, target: str) -> str:
        payload = {"text": text, "source": source, "target": target}
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = self._session.post(self.endpoint, json=payload, timeout=self.timeout)
                resp.raise_for_status()
                body = resp.json()
            except (requests.RequestException, ValueError) as exc:
                last_error = exc
                logger.warning(
                    "translation request failed (attempt %d/%d): %s",
                    attempt + 1,
                    self.retries + 1,
                    exc,
                )
                continue
            if "text" not in body:
                raise TranslationError(f"response missing 'text' field: {body!r}")
            return str(body["text"])
        raise TranslationError(f"translation failed after {self.retries + 1} attempts: {last_error}")


def make_translator(
    mock: str | None = None,
    endpoint: str | None = None,
    timeout: float = 10.0,
    retries: int = 2,
) -> Translator:
    """Build the translator selected by CLI flags or environment."""
    if mock == "identity":
        return IdentityTranslator()
    if mock == "deterministic":
        return DeterministicMockTranslator()
    if mock is not None:
        raise ValueError(f"unknown mock translator {mock!r}")
    if endpoint is None:
        raise ValueError("either a mock translator or an endpoint URL is required")
    return HttpTranslator(endpoint, timeout=timeout, retries=retries)
