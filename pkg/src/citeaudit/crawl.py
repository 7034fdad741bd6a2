"""Polite batch crawler for cited URLs.

Every HTTP request (robots probes, redirect hops, page fetches) passes
through a shared politeness gate: a global concurrency semaphore plus
per-registrable-domain serialization with a minimum delay between requests
to the same domain. robots.txt is honored with an allow-on-unreachable
default. Redirect chains are capped at 10 hops.

Each URL yields exactly one CrawlOutcome; every failure maps to exactly one
of the seven failure categories. DNS-level failures (never-reachable hosts)
additionally set the phantom flag.

Retrieval is two-stage: an optional rendered fetch hook runs first and falls
back to the plain HTTP client. Builds without a renderer degrade to plain
retrieval and mark that in the report.
"""

from __future__ import annotations

import asyncio
import socket
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Awaitable, Callable, Sequence
from urllib import robotparser
from urllib.parse import urlsplit, urlunsplit

import httpx

from .content import UnsupportedFormatError, extract_main_text, sniff_non_html
from .urls import canonicalize_url, registrable_domain

MAX_REDIRECT_HOPS = 10
DEFAULT_USER_AGENT = "citeaudit-crawler/0.1 (+research; respects robots.txt)"

#: Default bot-block / challenge-page signatures (matched case-insensitively
#: against the fetched body). Exactly 16 entries; override via CrawlConfig.
DEFAULT_BOT_BLOCK_SIGNATURES: tuple[str, ...] = (
    "enable javascript and cookies",
    "checking your browser",
    "verify you are human",
    "verifying you are human",
    "cloudflare ray id",
    "attention required! | cloudflare",
    "just a moment...",
    "access denied",
    "captcha",
    "unusual traffic",
    "are you a robot",
    "bot detection",
    "request blocked",
    "rate limit exceeded",
    "please turn on javascript",
    "ddos protection by",
)

#: Signatures of menu/login interstitials that crawl fine but carry no
#: article content; classified as Other.
DEFAULT_LOGIN_MENU_SIGNATURES: tuple[str, ...] = (
    "log in to continue",
    "sign in to continue",
    "sign in to view",
    "login required",
    "create an account to continue",
    "please sign in",
    "session expired",
)


class FailureCategory(str, Enum):
    BOT_BLOCK_OR_JS = "BotBlockOrJs"
    FILE_FORMAT = "FileFormat"
    EMPTY_RESPONSE = "EmptyResponse"
    SERVER_ERROR = "ServerError"
    TIMEOUT = "Timeout"
    OTHER = "Other"
    DNS_OR_EXPIRED = "DnsOrExpired"


class HostTier(str, Enum):
    FORUM_QA = "ForumQA"
    SOCIAL_BLOG = "SocialBlog"
    ACADEMIC = "Academic"
    GOV_ORG = "GovOrg"
    COMMERCIAL_OTHER = "CommercialOther"
    NEWS = "News"


@dataclass(frozen=True)
class CrawlConfig:
    redirect_timeout: float = 10.0
    fetch_timeout: float = 15.0
    global_concurrency: int = 5
    content_cap: int = 50_000
    min_content_length: int = 50
    per_domain_delay: float = 2.0
    bot_block_signatures: tuple[str, ...] = DEFAULT_BOT_BLOCK_SIGNATURES
    login_menu_signatures: tuple[str, ...] = DEFAULT_LOGIN_MENU_SIGNATURES
    user_agent: str = DEFAULT_USER_AGENT
    # Test hook: map a hostname to a "host:port" connect target while keeping
    # politeness and robots keyed on the original hostname.
    host_aliases: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in (
            "redirect_timeout",
            "fetch_timeout",
            "global_concurrency",
            "content_cap",
            "min_content_length",
            "per_domain_delay",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class CrawlOutcome:
    url_id: str
    url: str
    final_url: str
    status: str  # "Success" | "Failed"
    failure: FailureCategory | None
    content: str
    content_length: int
    fetched_at: str
    phantom: bool
    detail: str = ""

    @property
    def success(self) -> bool:
        return self.status == "Success"


@dataclass
class CrawlReport:
    total: int = 0
    success: int = 0
    failed: int = 0
    by_category: dict[str, int] = field(default_factory=dict)
    by_tier: dict[str, dict[str, int]] = field(default_factory=dict)
    phantom: int = 0
    rendering_enabled: bool = False
    robots_default: str = "allow-on-unreachable"

    def record(self, url: str, outcome: CrawlOutcome) -> None:
        self.total += 1
        tier = classify_host_tier(urlsplit(url).hostname or "").value
        tier_row = self.by_tier.setdefault(tier, {"total": 0, "failed": 0})
        tier_row["total"] += 1
        if outcome.success:
            self.success += 1
        else:
            self.failed += 1
            tier_row["failed"] += 1
            category = outcome.failure.value if outcome.failure else "?"
            self.by_category[category] = self.by_category.get(category, 0) + 1
        if outcome.phantom:
            self.phantom += 1

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "success": self.success,
            "failed": self.failed,
            "by_category": dict(sorted(self.by_category.items())),
            "by_tier": {k: dict(v) for k, v in sorted(self.by_tier.items())},
            "phantom": self.phantom,
            "rendering_enabled": self.rendering_enabled,
            "robots_default": self.robots_default,
        }


# Host tier rule table: exact or suffix hostname matches checked before the
# TLD-class rules; everything else is CommercialOther. Approximate and
# intentionally versioned with the repo.
_TIER_HOSTS: dict[HostTier, tuple[str, ...]] = {
    HostTier.FORUM_QA: (
        "stackoverflow.com", "stackexchange.com", "superuser.com", "serverfault.com",
        "askubuntu.com", "reddit.com", "quora.com", "news.ycombinator.com",
        "wikipedia.org", "wiktionary.org", "fandom.com", "wikihow.com",
    ),
    HostTier.SOCIAL_BLOG: (
        "twitter.com", "x.com", "facebook.com", "instagram.com", "tiktok.com",
        "youtube.com", "medium.com", "substack.com", "wordpress.com",
        "blogspot.com", "tumblr.com", "linkedin.com", "pinterest.com",
    ),
    HostTier.ACADEMIC: (
        "arxiv.org", "doi.org", "springer.com", "sciencedirect.com", "nature.com",
        "ieee.org", "acm.org", "jstor.org", "researchgate.net",
        "semanticscholar.org", "biorxiv.org", "plos.org", "wiley.com",
    ),
    HostTier.GOV_ORG: (
        "who.int", "un.org", "oecd.org", "w3.org", "ietf.org", "europa.eu",
        "worldbank.org", "imf.org", "nih.gov", "cdc.gov",
    ),
    HostTier.NEWS: (
        "nytimes.com", "theguardian.com", "bbc.com", "bbc.co.uk", "cnn.com",
        "reuters.com", "apnews.com", "washingtonpost.com", "bloomberg.com",
        "forbes.com", "wsj.com", "ft.com", "economist.com", "npr.org",
        "aljazeera.com", "wired.com", "theverge.com", "techcrunch.com",
        "arstechnica.com",
    ),
}


def classify_host_tier(hostname: str) -> HostTier:
    """Deterministic host tier from hostname rules; default CommercialOther."""
    host = (hostname or "").lower().strip(".")
    if not host:
        return HostTier.COMMERCIAL_OTHER
    for tier, hosts in _TIER_HOSTS.items():
        for known in hosts:
            if host == known or host.endswith("." + known):
                return tier
    if host.endswith(".edu") or ".edu." in host or ".ac." in host or host.endswith(".ac"):
        return HostTier.ACADEMIC
    if (
        host.endswith(".gov")
        or host.endswith(".mil")
        or host.endswith(".int")
        or ".gov." in host
        or ".go." in host
        or ".mil." in host
    ):
        return HostTier.GOV_ORG
    return HostTier.COMMERCIAL_OTHER


def make_url_id(canonical_url: str) -> str:
    import hashlib

    return "U" + hashlib.sha256(canonical_url.encode("utf-8")).hexdigest()[:12]


class _DomainGate:
    """Serializes requests to one registrable domain with a minimum delay."""

    def __init__(self, delay: float) -> None:
        self.lock = asyncio.Lock()
        self.delay = delay
        self.next_ok = 0.0


class _Politeness:
    def __init__(self, concurrency: int, delay: float) -> None:
        self._semaphore = asyncio.Semaphore(concurrency)
        self._delay = delay
        self._gates: dict[str, _DomainGate] = {}

    def _gate(self, domain: str) -> _DomainGate:
        gate = self._gates.get(domain)
        if gate is None:
            gate = _DomainGate(self._delay)
            self._gates[domain] = gate
        return gate

    async def run(self, domain: str, request: Callable[[], Awaitable]):
        gate = self._gate(domain)
        # Wait out the per-domain delay holding only the domain gate, so the
        # global slots stay available for actual network work.
        async with gate.lock:
            wait = gate.next_ok - time.monotonic()
            if wait > 0:
                await asyncio.sleep(wait)
            async with self._semaphore:
                try:
                    return await request()
                finally:
                    gate.next_ok = time.monotonic() + gate.delay


class _CrawlFailure(Exception):
    def __init__(self, category: FailureCategory, detail: str = "", phantom: bool = False):
        super().__init__(detail)
        self.category = category
        self.detail = detail
        self.phantom = phantom


def _classify_transport_error(exc: Exception) -> _CrawlFailure:
    if isinstance(exc, httpx.TimeoutException):
        return _CrawlFailure(FailureCategory.TIMEOUT, f"timeout: {exc}")
    cause: BaseException | None = exc
    while cause is not None:
        if isinstance(cause, socket.gaierror):
            return _CrawlFailure(
                FailureCategory.DNS_OR_EXPIRED, f"dns: {exc}", phantom=True
            )
        cause = cause.__cause__ or cause.__context__
    if isinstance(exc, httpx.ConnectError) and "name" in str(exc).lower():
        return _CrawlFailure(FailureCategory.DNS_OR_EXPIRED, f"dns: {exc}", phantom=True)
    return _CrawlFailure(FailureCategory.OTHER, f"transport: {exc}")


class Crawler:
    """Batch crawler; externally synchronous via :meth:`crawl_batch`."""

    def __init__(
        self,
        config: CrawlConfig | None = None,
        render_fetch: Callable[[str], Awaitable[str]] | None = None,
    ) -> None:
        self.config = config or CrawlConfig()
        self.render_fetch = render_fetch
        self._politeness: _Politeness | None = None
        self._robots_cache: dict[str, robotparser.RobotFileParser | None] = {}
        self._robots_locks: dict[str, asyncio.Lock] = {}
        self._client: httpx.AsyncClient | None = None

    # -- plumbing ---------------------------------------------------------

    def _connect_url(self, url: str) -> str:
        parts = urlsplit(url)
        host = (parts.hostname or "").lower()
        alias = self.config.host_aliases.get(host)
        if alias is None:
            return url
        return urlunsplit((parts.scheme, alias, parts.path, parts.query, parts.fragment))

    async def _request(self, url: str, timeout: float, stream_only: bool = False) -> httpx.Response:
        """One polite GET. ``stream_only`` closes the body unread (used for
        redirect resolution, where only status and headers matter)."""
        assert self._politeness is not None and self._client is not None
        domain = registrable_domain(urlsplit(url).hostname or "")

        async def send() -> httpx.Response:
            headers = {"User-Agent": self.config.user_agent}
            connect_url = self._connect_url(url)
            if connect_url != url:
                # Alias rewrite keeps virtual-host routing intact.
                headers["Host"] = urlsplit(url).netloc
            request = self._client.build_request(
                "GET", connect_url, headers=headers, timeout=timeout
            )
            response = await self._client.send(request, stream=True, follow_redirects=False)
            try:
                if not stream_only:
                    await response.aread()
            finally:
                await response.aclose()
            return response

        return await self._politeness.run(domain, send)

    # -- robots -----------------------------------------------------------

    async def robots_allowed(self, url: str) -> bool:
        """True iff robots.txt permits the URL for our user agent.

        The robots file is fetched once per host and cached; unreachable or
        erroring robots endpoints default to allow.
        """
        parts = urlsplit(url)
        host_key = f"{parts.scheme}://{parts.netloc.lower()}"
        lock = self._robots_locks.setdefault(host_key, asyncio.Lock())
        async with lock:
            if host_key not in self._robots_cache:
                robots_url = f"{parts.scheme}://{parts.netloc}/robots.txt"
                parser: robotparser.RobotFileParser | None = None
                try:
                    response = await self._request(robots_url, self.config.redirect_timeout)
                    if response.status_code == 200:
                        parser = robotparser.RobotFileParser()
                        parser.parse(response.text.splitlines())
                except Exception:
                    parser = None  # unreachable robots file: default allow
                self._robots_cache[host_key] = parser
        parser = self._robots_cache[host_key]
        if parser is None:
            return True
        return parser.can_fetch(self.config.user_agent, url)

    # -- redirect resolution ----------------------------------------------

    async def resolve_redirects(self, url: str, check_robots: bool = True) -> str:
        """Follow the redirect chain to its terminal URL and re-canonicalize.

        Every hop (the input URL included) is checked against robots.txt
        before it is requested, so disallowed paths are never fetched.
        Raises _CrawlFailure on DNS errors (phantom), timeouts, robots
        denials, and loops or chains longer than MAX_REDIRECT_HOPS (Other).
        """
        current = url
        seen = {current}
        for _ in range(MAX_REDIRECT_HOPS):
            if check_robots and not await self._robots_allowed_safe(current):
                raise _CrawlFailure(FailureCategory.OTHER, "robots.txt disallows")
            try:
                response = await self._request(
                    current, self.config.redirect_timeout, stream_only=True
                )
            except httpx.HTTPError as exc:
                raise _classify_transport_error(exc) from exc
            if not response.is_redirect:
                return canonicalize_url(current)
            location = response.headers.get("location")
            if not location:
                return canonicalize_url(current)
            nxt = canonicalize_url(str(httpx.URL(current).join(location)))
            if nxt in seen:
                raise _CrawlFailure(FailureCategory.OTHER, "redirect loop")
            seen.add(nxt)
            current = nxt
        raise _CrawlFailure(FailureCategory.OTHER, "redirect chain too long")

    async def _robots_allowed_safe(self, url: str) -> bool:
        try:
            return await self.robots_allowed(url)
        except Exception:  # robots machinery must never abort a batch
            return True

    # -- page fetch ---------------------------------------------------------

    def _match_signature(self, text: str, signatures: tuple[str, ...]) -> str | None:
        lowered = text.lower()
        for signature in signatures:
            if signature in lowered:
                return signature
        return None

    async def fetch_page(self, url: str) -> tuple[str, str]:
        """Fetch one resolved URL; returns (content, detail) on success and
        raises _CrawlFailure otherwise.

        Stage one is the rendered fetch hook when configured; any renderer
        error falls back to the plain client. The decoded body is truncated
        to the content cap before main-text extraction.
        """
        body_text: str | None = None
        content_type: str | None = None
        status_code: int | None = None

        if self.render_fetch is not None:
            try:
                body_text = await self.render_fetch(url)
                status_code = 200
                content_type = "text/html"
            except Exception:
                body_text = None  # fall back to plain retrieval

        if body_text is None:
            try:
                response = await self._request(url, self.config.fetch_timeout)
            except httpx.HTTPError as exc:
                raise _classify_transport_error(exc) from exc
            status_code = response.status_code
            content_type = response.headers.get("content-type")
            # Byte-level pre-truncation: worst-case 4 bytes per char keeps
            # at least content_cap characters available after decoding.
            raw = response.content[: self.config.content_cap * 4]
            fmt = sniff_non_html(raw, content_type)
            if fmt is not None:
                raise _CrawlFailure(FailureCategory.FILE_FORMAT, fmt)
            body_text = raw.decode(response.encoding or "utf-8", errors="replace")

        signature = self._match_signature(body_text, self.config.bot_block_signatures)
        if signature is not None:
            raise _CrawlFailure(FailureCategory.BOT_BLOCK_OR_JS, f"signature: {signature}")
        if status_code is not None and status_code >= 400:
            raise _CrawlFailure(FailureCategory.SERVER_ERROR, f"http {status_code}")

        try:
            text = extract_main_text(body_text[: self.config.content_cap], content_type)
        except UnsupportedFormatError as exc:
            raise _CrawlFailure(FailureCategory.FILE_FORMAT, str(exc))
        text = text[: self.config.content_cap]

        signature = self._match_signature(text, self.config.login_menu_signatures)
        if signature is not None:
            raise _CrawlFailure(FailureCategory.OTHER, f"login/menu page: {signature}")
        if len(text) < self.config.min_content_length:
            raise _CrawlFailure(FailureCategory.EMPTY_RESPONSE, f"extracted {len(text)} chars")
        return text, f"http {status_code}"

    # -- single URL ---------------------------------------------------------

    async def crawl_one(self, url: str) -> CrawlOutcome:
        url_id = make_url_id(url)
        fetched_at = datetime.now(timezone.utc).isoformat(timespec="seconds")

        def failed(category: FailureCategory, detail: str, phantom: bool = False, final_url: str = "") -> CrawlOutcome:
            return CrawlOutcome(
                url_id=url_id,
                url=url,
                final_url=final_url or url,
                status="Failed",
                failure=category,
                content="",
                content_length=0,
                fetched_at=fetched_at,
                phantom=phantom,
                detail=detail,
            )

        try:
            final_url = await self.resolve_redirects(url)
        except _CrawlFailure as exc:
            return failed(exc.category, exc.detail, exc.phantom)
        except ValueError as exc:  # un-canonicalizable redirect target
            return failed(FailureCategory.OTHER, f"bad url: {exc}")

        try:
            content, detail = await self.fetch_page(final_url)
        except _CrawlFailure as exc:
            return failed(exc.category, exc.detail, exc.phantom, final_url=final_url)

        return CrawlOutcome(
            url_id=url_id,
            url=url,
            final_url=final_url,
            status="Success",
            failure=None,
            content=content,
            content_length=len(content),
            fetched_at=fetched_at,
            phantom=False,
            detail=detail,
        )

    # -- batch --------------------------------------------------------------

    async def _crawl_all(self, urls: Sequence[str]) -> list[CrawlOutcome]:
        self._politeness = _Politeness(
            self.config.global_concurrency, self.config.per_domain_delay
        )
        timeout = httpx.Timeout(self.config.fetch_timeout)
        async with httpx.AsyncClient(timeout=timeout) as client:
            self._client = client
            try:
                return list(await asyncio.gather(*(self.crawl_one(url) for url in urls)))
            finally:
                self._client = None

    def crawl_batch(self, urls: Sequence[str]) -> tuple[list[CrawlOutcome], CrawlReport]:
        """Crawl a deduplicated list of canonical URLs.

        Raises ValueError when the input contains duplicates (dedup is the
        caller's contract). Returns one outcome per URL, in input order, plus
        an aggregate report.
        """
        if len(set(urls)) != len(urls):
            raise ValueError("duplicate URL in batch input; deduplicate first")
        outcomes = asyncio.run(self._crawl_all(urls))
        report = CrawlReport(rendering_enabled=self.render_fetch is not None)
        for url, outcome in zip(urls, outcomes):
            report.record(url, outcome)
        return outcomes, report


def offline_outcomes(
    url_contents: dict[str, str], config: CrawlConfig | None = None
) -> tuple[list[CrawlOutcome], CrawlReport]:
    """Deterministic crawl substitute for fixture corpora: build outcomes
    from a url -> content mapping with no network, applying the same content
    cap and minimum-length rule."""
    config = config or CrawlConfig()
    outcomes = []
    report = CrawlReport(rendering_enabled=False)
    for url in sorted(url_contents):
        content = url_contents[url][: config.content_cap]
        if len(content) >= config.min_content_length:
            outcome = CrawlOutcome(
                url_id=make_url_id(url),
                url=url,
                final_url=url,
                status="Success",
                failure=None,
                content=content,
                content_length=len(content),
                fetched_at="offline",
                phantom=False,
                detail="offline",
            )
        else:
            outcome = CrawlOutcome(
                url_id=make_url_id(url),
                url=url,
                final_url=url,
                status="Failed",
                failure=FailureCategory.EMPTY_RESPONSE,
                content="",
                content_length=0,
                fetched_at="offline",
                phantom=False,
                detail=f"offline: {len(content)} chars",
            )
        outcomes.append(outcome)
        report.record(url, outcome)
    return outcomes, report
