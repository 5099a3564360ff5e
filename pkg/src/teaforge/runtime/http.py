"""Minimal real-network transport built on :mod:`urllib`."""

from __future__ import annotations

import urllib.error
import urllib.parse
import urllib.request

from .exchange import HttpExchange, Response, TransportError

_PATH_SAFE = "/:@!$&'()*+,;=-._~%"


class UrllibTransport:
    """Sends exchanges over the network. Percent-encodes the pathname and query.

    HTTP error statuses come back as ordinary responses; only connection
    level failures raise :class:`TransportError`.
    """

    def build_url(self, exchange: HttpExchange) -> str:
        req = exchange.request
        path = urllib.parse.quote(req.pathname or "/", safe=_PATH_SAFE)
        url = f"{exchange.protocol}://{exchange.host}:{exchange.port}{path}"
        if req.query:
            url += "?" + urllib.parse.urlencode(sorted(req.query.items()))
        return url

    def send(self, exchange: HttpExchange, timeout_ms: int) -> Response:
        req = exchange.request
        data = req.body.getvalue() if req.body is not None else None
        http_req = urllib.request.Request(
            self.build_url(exchange), data=data, headers=dict(req.headers), method=req.method
        )
        try:
            with urllib.request.urlopen(http_req, timeout=timeout_ms / 1000) as resp:
                return Response(resp.status, resp.reason or "", dict(resp.headers.items()), resp.read())
        except urllib.error.HTTPError as err:
            return Response(err.code, err.reason or "", dict(err.headers.items()), err.read())
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise TransportError(str(exc)) from exc
