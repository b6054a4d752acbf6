"""Naive reference implementation of matching and of every coverage metric.

Deliberately shares no code with ``restcov`` beyond the Interaction record:
it reads the raw (reference-free) document dict, matches with one regular
expression per template, and computes each metric by enumerating the
documented elements and scanning the whole log once per element.
"""

from __future__ import annotations

import re
from fractions import Fraction
from urllib.parse import unquote, urlsplit

METHODS = ("get", "put", "post", "delete", "options", "head", "patch", "trace")


def _norm(path: str) -> str:
    if path == "":
        return "/"
    return path.rstrip("/") or "/"


def _template_regex(template: str) -> str:
    out = ""
    for piece in re.split(r"(\{[^{}]+\})", _norm(template)):
        out += "([^/]+)" if piece.startswith("{") else re.escape(piece)
    return out


def _concrete(template: str) -> int:
    return sum(1 for seg in _norm(template).split("/") if seg and "{" not in seg)


def operations(doc: dict) -> list[tuple[str, str, dict]]:
    return [
        (template, method.upper(), op)
        for template, item in doc.get("paths", {}).items()
        for method, op in item.items()
        if method in METHODS
    ]


def resolve(doc: dict, method: str, url: str):
    """Return ((template, METHOD), {var: raw}) or an unmatched-reason string."""
    servers = doc.get("servers") or [{"url": "/"}]
    bases = [_norm(urlsplit(s["url"]).path) for s in servers]
    bases = ["" if b == "/" else b for b in bases]
    path = _norm(urlsplit(url).path)
    prefixes = [b for b in bases if path == b or path.startswith(b + "/")]
    if not prefixes:
        return "no_server_prefix"
    rest = _norm(path[len(max(prefixes, key=len)):])
    candidates = []
    any_path = False
    for template, m, op in operations(doc):
        hit = re.fullmatch(_template_regex(template), rest)
        if hit is None:
            continue
        any_path = True
        if m == method.upper():
            names = re.findall(r"\{([^{}]+)\}", template)
            candidates.append(((-_concrete(template), template), (template, m), dict(zip(names, hit.groups()))))
    if not candidates:
        return "no_method" if any_path else "no_path"
    candidates.sort(key=lambda c: c[0])
    return candidates[0][1], candidates[0][2]


def _headers(ix, name):
    return [v for k, v in ix.request_headers if k.lower() == name.lower()]


def _media(headers) -> str | None:
    values = [v for k, v in headers if k.lower() == "content-type"]
    if not values:
        return None
    return values[0].split(";")[0].strip().lower() or None


def supplied_values(ix, param: dict, path_values: dict) -> list[str]:
    name, where = param["name"], param["in"]
    if where == "path":
        return [unquote(path_values[name])] if name in path_values else []
    if where == "query":
        out = []
        for pair in urlsplit(ix.url).query.split("&"):
            if not pair:
                continue
            key, _, value = pair.partition("=")
            if unquote(key.replace("+", " ")) == name:
                out.append(unquote(value.replace("+", " ")))
        return out
    if where == "header":
        return _headers(ix, name)
    out = []
    for header in _headers(ix, "cookie"):
        for item in header.split(";"):
            key, eq, value = item.strip().partition("=")
            if eq and key.strip() == name:
                out.append(value.strip())
    return out


def _literal(value) -> str:
    if value is True:
        return "true"
    if value is False:
        return "false"
    return str(value)


def _domain(param: dict) -> tuple[str, list[str]] | None:
    schema = param.get("schema") or {}
    if "enum" in schema:
        return "enum", list(dict.fromkeys(_literal(v) for v in schema["enum"]))
    if schema.get("type") == "boolean":
        return "boolean", ["true", "false"]
    return None


def _ratio(num: int, den: int):
    return (num, den) if den else None


def oracle_metrics(doc: dict, log) -> dict[str, tuple[int, int] | None]:
    ops = operations(doc)
    resolved = [(ix, resolve(doc, ix.method, ix.url)) for ix in log]
    hits = [(ix, r[0], r[1]) for ix, r in resolved if not isinstance(r, str)]

    def hits_for(key):
        return [(ix, pv) for ix, k, pv in hits if k == key]

    result = {}

    templates = sorted({t for t, _, _ in ops})
    result["path"] = _ratio(sum(any(k[0] == t for _, k, _ in hits) for t in templates), len(templates))
    result["operation"] = _ratio(sum(bool(hits_for((t, m))) for t, m, _ in ops), len(ops))

    num = den = 0
    vnum = vden = 0
    for t, m, op in ops:
        for param in op.get("parameters", []):
            den += 1
            num += any(supplied_values(ix, param, pv) for ix, pv in hits_for((t, m)))
            domain = _domain(param)
            if domain is None:
                continue
            kind, literals = domain
            for literal in literals:
                vden += 1
                for ix, pv in hits_for((t, m)):
                    values = supplied_values(ix, param, pv)
                    if kind == "boolean":
                        values = [v.lower() for v in values]
                    if literal in values:
                        vnum += 1
                        break
    result["parameter"] = _ratio(num, den)
    result["parameter_value"] = _ratio(vnum, vden)

    num = den = 0
    for t, m, op in ops:
        body = op.get("requestBody")
        if not body:
            continue
        types = list(dict.fromkeys(k.split(";")[0].strip().lower() for k in body.get("content", {})))
        if not types or any("*" in x for x in types):
            continue
        for mt in types:
            den += 1
            num += any(_media(ix.request_headers) == mt for ix, _ in hits_for((t, m)))
    result["request_content_type"] = _ratio(num, den)

    classes = set()
    for ix, _, _ in hits:
        if 200 <= ix.status < 300:
            classes.add("ok")
        elif 400 <= ix.status < 600:
            classes.add("err")
    result["status_code_class"] = (len(classes), 2)

    num = den = 0
    for t, m, op in ops:
        for key in op.get("responses", {}):
            if not str(key).isdigit():
                continue
            den += 1
            num += any(ix.status == int(key) for ix, _ in hits_for((t, m)))
    result["status_code"] = _ratio(num, den)

    num = den = 0
    for t, m, op in ops:
        types = []
        for response in op.get("responses", {}).values():
            for k in response.get("content", {}):
                types.append(k.split(";")[0].strip().lower())
        types = list(dict.fromkeys(types))
        if not types or any("*" in x for x in types):
            continue
        for mt in types:
            den += 1
            num += any(_media(ix.response_headers) == mt for ix, _ in hits_for((t, m)))
    result["response_content_type"] = _ratio(num, den)
    return result


def as_fractions(metrics: dict) -> dict:
    return {k: (Fraction(*v) if v else None) for k, v in metrics.items()}
