"""URL canonicalization and hostname helpers.

Canonicalization is purely syntactic: lowercase the host, drop the fragment,
and strip tracking query parameters. Redirect resolution is a network concern
and lives in the crawler.
"""

from __future__ import annotations

from urllib.parse import parse_qsl, urlencode, urlsplit, urlunsplit

#: Query parameters stripped during canonicalization. Entries ending in "*"
#: are prefix patterns. Covers the common tracking families plus the search
#: provider attribution params (utm_source=openai and friends fall under
#: the utm_ prefix).
DEFAULT_TRACKING_PARAMS: tuple[str, ...] = (
    "utm_*",
    "gclid",
    "fbclid",
    "msclkid",
    "mc_cid",
    "mc_eid",
    "igshid",
    "ref",
    "ref_src",
    "ref_url",
)


class InvalidUrlError(ValueError):
    """The input cannot be interpreted as an absolute http(s) URL."""


def is_tracking_param(name: str, patterns: tuple[str, ...] = DEFAULT_TRACKING_PARAMS) -> bool:
    lowered = name.lower()
    for pattern in patterns:
        if pattern.endswith("*"):
            if lowered.startswith(pattern[:-1]):
                return True
        elif lowered == pattern:
            return True
    return False


def canonicalize_url(url: str, tracking_params: tuple[str, ...] = DEFAULT_TRACKING_PARAMS) -> str:
    """Normalize a URL: lowercase scheme/host, drop fragment, strip trackers.

    Remaining query parameters keep their original order, so the function is
    idempotent. Raises InvalidUrlError for anything that is not an absolute
    http(s) URL with a host.
    """
    if not isinstance(url, str) or not url.strip():
        raise InvalidUrlError("empty URL")
    try:
        parts = urlsplit(url.strip())
    except ValueError as exc:
        raise InvalidUrlError(f"unparseable URL: {url!r}") from exc
    scheme = parts.scheme.lower()
    if scheme not in ("http", "https"):
        raise InvalidUrlError(f"unsupported scheme in {url!r}")
    if not parts.hostname:
        raise InvalidUrlError(f"missing host in {url!r}")

    host = parts.hostname.lower()
    netloc = host
    if parts.port is not None:
        netloc = f"{host}:{parts.port}"
    if parts.username:
        cred = parts.username
        if parts.password:
            cred += f":{parts.password}"
        netloc = f"{cred}@{netloc}"

    kept = [
        (name, value)
        for name, value in parse_qsl(parts.query, keep_blank_values=True)
        if not is_tracking_param(name, tracking_params)
    ]
    query = urlencode(kept)
    return urlunsplit((scheme, netloc, parts.path, query, ""))


#: Second-level public suffixes where the registrable domain takes one more
#: label (e.g. example.co.uk). Deliberately small; unknown suffixes fall back
#: to the last two labels.
_TWO_LEVEL_SUFFIXES = frozenset(
    {
        "co.uk", "org.uk", "ac.uk", "gov.uk", "me.uk", "net.uk",
        "com.au", "net.au", "org.au", "edu.au", "gov.au",
        "co.jp", "ne.jp", "or.jp", "ac.jp", "go.jp",
        "co.kr", "or.kr", "go.kr", "ac.kr", "re.kr",
        "com.br", "org.br", "gov.br",
        "co.in", "org.in", "gov.in", "ac.in",
        "com.cn", "org.cn", "gov.cn", "edu.cn",
        "co.nz", "org.nz", "govt.nz", "ac.nz",
        "com.mx", "org.mx", "gob.mx",
        "co.za", "org.za", "gov.za", "ac.za",
        "com.sg", "edu.sg", "gov.sg",
        "com.tw", "org.tw", "gov.tw", "edu.tw",
    }
)


def registrable_domain(hostname: str) -> str:
    """Best-effort registrable domain used as the politeness key.

    Uses a small table of two-level public suffixes; anything unknown keeps
    the last two labels. IP literals and single-label hosts pass through.
    """
    host = hostname.lower().strip(".")
    labels = host.split(".")
    if len(labels) <= 2:
        return host
    if all(part.isdigit() for part in labels):  # IPv4 literal
        return host
    if ".".join(labels[-2:]) in _TWO_LEVEL_SUFFIXES:
        return ".".join(labels[-3:])
    return ".".join(labels[-2:])
