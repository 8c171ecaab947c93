"""Read-only HTTP server exposing a stored report and what-if verdicts.

The engine stays the single source of doctrinal truth: /api/verdict
recomputes verdicts server-side for the stored pool, so UIs never
reimplement the rules authoritatively. All state is immutable after load and
requests are handled concurrently.
"""

from __future__ import annotations

import dataclasses
import os
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .canonical import dumps_canonical
from .doctrine import LdaRule, acceptability_geometry, evaluate
from .errors import AuditError, ConfigError
from .report import AuditReport
from .search import parse_baseline_policy, select_baseline

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json; charset=utf-8",
    ".svg": "image/svg+xml",
    ".map": "application/json; charset=utf-8",
    ".ico": "image/x-icon",
}

_FALLBACK_INDEX = """<!doctype html>
<html><head><meta charset="utf-8"><title>fairaudit</title></head>
<body><h1>fairaudit report server</h1>
<p>No explorer assets are installed. Endpoints:</p>
<ul><li><a href="/api/report">/api/report</a></li>
<li><code>/api/verdict?di_delta=&amp;udap_k=&amp;tau_pf=&amp;tau_inj=&amp;baseline=</code></li></ul>
</body></html>
"""


def _floats(values: list[str], name: str) -> list[float]:
    try:
        return [float(v) for v in values]
    except ValueError as exc:
        raise ConfigError(f"query parameter {name!r} must be numeric") from exc


def compute_verdict_payload(report: AuditReport, query: dict[str, list[str]]) -> dict:
    """Pure function of (stored pool, query params); identical queries yield
    identical payloads."""
    known = {"di_delta", "udap_k", "tau_pf", "tau_inj", "baseline"}
    unknown = set(query) - known
    if unknown:
        raise ConfigError(f"unknown query parameters: {sorted(unknown)}")

    base_di = report.di_configs[0]
    base_udap = report.udap_configs[0]

    deltas = _floats(query.get("di_delta", []), "di_delta") or [
        c.lda_rule.delta for c in report.di_configs if c.lda_rule.kind == "absolute_tolerance"
    ] or [base_di.lda_rule.delta if base_di.lda_rule.delta is not None else 0.01]
    ks = _floats(query.get("udap_k", []), "udap_k") or [c.k for c in report.udap_configs]
    tau_pf = _floats(query.get("tau_pf", []), "tau_pf")
    tau_inj = _floats(query.get("tau_inj", []), "tau_inj")

    di_configs = [
        dataclasses.replace(
            base_di,
            tau_pf=tau_pf[0] if tau_pf else base_di.tau_pf,
            lda_rule=LdaRule("absolute_tolerance", delta=d),
        )
        for d in deltas
    ]
    udap_configs = [
        dataclasses.replace(base_udap, tau_inj=tau_inj[0] if tau_inj else base_udap.tau_inj, k=k)
        for k in ks
    ]

    pool = report.pool
    if query.get("baseline"):
        policy = parse_baseline_policy(query["baseline"][0])
        pool = dataclasses.replace(pool, baseline_id=select_baseline(pool, policy))

    di_verdict, udap_verdict, divergence = evaluate(pool, di_configs[0], udap_configs[0])
    geometry = acceptability_geometry(pool.baseline, di_configs, udap_configs)
    return {
        "params": {
            "di_delta": deltas,
            "udap_k": ks,
            "tau_pf": di_configs[0].tau_pf,
            "tau_inj": udap_configs[0].tau_inj,
            "baseline": pool.baseline_id,
        },
        "di": di_verdict.to_dict(),
        "udap": udap_verdict.to_dict(),
        "divergence": divergence.to_dict(),
        "geometry": geometry,
    }


def _make_handler(report: AuditReport, assets_dir: str | None):
    report_body = dumps_canonical(report.to_dict()).encode()
    assets_root = os.path.realpath(assets_dir) if assets_dir else None

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args) -> None:  # quiet by default
            pass

        def _send(self, code: int, body: bytes, ctype: str) -> None:
            self.send_response(code)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def _send_json(self, code: int, payload) -> None:
            self._send(code, dumps_canonical(payload).encode(), "application/json; charset=utf-8")

        def do_GET(self) -> None:  # noqa: N802 (http.server API)
            url = urlparse(self.path)
            if url.path == "/api/report":
                self._send(200, report_body, "application/json; charset=utf-8")
            elif url.path == "/api/verdict":
                try:
                    payload = compute_verdict_payload(report, parse_qs(url.query))
                    self._send_json(200, payload)
                except (ConfigError, AuditError) as exc:
                    self._send_json(400, {"error": str(exc)})
            else:
                self._serve_static(url.path)

        def _serve_static(self, path: str) -> None:
            if path in ("/", "/index.html") and (
                assets_root is None or not os.path.isfile(os.path.join(assets_root, "index.html"))
            ):
                self._send(200, _FALLBACK_INDEX.encode(), "text/html; charset=utf-8")
                return
            if assets_root is None:
                self._send(404, b"not found", "text/plain")
                return
            rel = path.lstrip("/") or "index.html"
            full = os.path.realpath(os.path.join(assets_root, rel))
            if not full.startswith(assets_root + os.sep) and full != assets_root:
                self._send(403, b"forbidden", "text/plain")
                return
            if not os.path.isfile(full):
                self._send(404, b"not found", "text/plain")
                return
            ext = os.path.splitext(full)[1].lower()
            with open(full, "rb") as fh:
                self._send(200, fh.read(), _CONTENT_TYPES.get(ext, "application/octet-stream"))

    return Handler


def create_server(
    report: AuditReport, port: int = 8000, assets_dir: str | None = None
) -> ThreadingHTTPServer:
    """Bind a threading HTTP server on 127.0.0.1 (port 0 picks a free one)."""
    return ThreadingHTTPServer(("127.0.0.1", port), _make_handler(report, assets_dir))
