"""Main-content text extraction with an ordered fallback chain.

Stage 1 looks for an explicit main-content container (<article>, <main>,
role="main"). Stage 2 scores block elements by paragraph text density and
keeps the densest cluster. Stage 3 returns all visible text. The first stage
producing non-empty text wins. Non-HTML payloads (PDF, Office, archives)
raise UnsupportedFormatError so the crawler can classify them as file-format
failures.

Built on html.parser only; no external parsing dependency.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from html.parser import HTMLParser


class UnsupportedFormatError(ValueError):
    """Payload is a non-HTML document format (PDF, Office, archive)."""


_SKIP_TAGS = frozenset({"script", "style", "noscript", "template", "svg", "iframe"})
_CHROME_TAGS = frozenset({"nav", "header", "footer", "aside", "form", "button"})
_BLOCK_TAGS = frozenset(
    {
        "p", "div", "section", "article", "main", "body", "td", "li",
        "blockquote", "pre", "h1", "h2", "h3", "h4", "h5", "h6",
    }
)

_BINARY_MAGIC = (
    (b"%PDF-", "pdf"),
    (b"\xd0\xcf\x11\xe0", "ms-office"),
    (b"PK\x03\x04", "zip-container"),
    (b"\x1f\x8b", "gzip"),
    (b"\x89PNG", "png"),
    (b"\xff\xd8\xff", "jpeg"),
    (b"GIF8", "gif"),
)

_NON_HTML_CONTENT_TYPES = (
    "application/pdf",
    "application/msword",
    "application/vnd.openxmlformats",
    "application/vnd.ms-",
    "application/zip",
    "application/octet-stream",
    "application/x-",
    "image/",
    "audio/",
    "video/",
)


@dataclass
class _Node:
    tag: str
    parent: "_Node | None"
    suppressed: bool
    chrome: bool
    attrs: dict[str, str] = field(default_factory=dict)
    children: list["_Node"] = field(default_factory=list)
    chunks: list[str] = field(default_factory=list)
    link_chunks: list[str] = field(default_factory=list)

    def own_text(self) -> str:
        return " ".join(part for part in (c.strip() for c in self.chunks) if part)

    def all_text(self) -> str:
        parts = [self.own_text()]
        for child in self.children:
            if not child.suppressed:
                parts.append(child.all_text())
        return " ".join(part for part in parts if part)

    def all_link_len(self) -> int:
        total = sum(len(c.strip()) for c in self.link_chunks)
        for child in self.children:
            if not child.suppressed:
                total += child.all_link_len()
        return total


class _TreeBuilder(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.root = _Node("#root", None, suppressed=False, chrome=False)
        self._stack = [self.root]
        self._link_depth = 0

    def handle_starttag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        if tag in ("br", "hr", "img", "meta", "link", "input"):
            return
        parent = self._stack[-1]
        node = _Node(
            tag,
            parent,
            suppressed=parent.suppressed or tag in _SKIP_TAGS,
            chrome=parent.chrome or tag in _CHROME_TAGS,
            attrs={name: (value or "") for name, value in attrs},
        )
        parent.children.append(node)
        self._stack.append(node)
        if tag == "a":
            self._link_depth += 1

    def handle_endtag(self, tag: str) -> None:
        if tag in ("br", "hr", "img", "meta", "link", "input"):
            return
        # Pop to the nearest matching open tag; tolerate malformed nesting.
        for index in range(len(self._stack) - 1, 0, -1):
            if self._stack[index].tag == tag:
                for closed in self._stack[index:]:
                    if closed.tag == "a" and self._link_depth:
                        self._link_depth -= 1
                del self._stack[index:]
                break

    def handle_data(self, data: str) -> None:
        if not data.strip():
            return
        node = self._stack[-1]
        node.chunks.append(data)
        if self._link_depth:
            node.link_chunks.append(data)


def _collapse(text: str) -> str:
    return " ".join(text.split())


def _iter_nodes(node: _Node):
    yield node
    for child in node.children:
        yield from _iter_nodes(child)


def _structural_candidate(root: _Node) -> str:
    for node in _iter_nodes(root):
        if node.suppressed or node.chrome:
            continue
        if node.tag in ("article", "main") or node.attrs.get("role") == "main":
            text = _collapse(node.all_text())
            if text:
                return text
    return ""


def _density_candidate(root: _Node) -> str:
    best_score = 0.0
    best_text = ""
    for node in _iter_nodes(root):
        if node.suppressed or node.chrome or node.tag not in _BLOCK_TAGS:
            continue
        text = _collapse(node.all_text())
        if len(text) < 80:
            continue
        link_len = node.all_link_len()
        # Paragraph density: raw length discounted by link-heavy content.
        score = len(text) * max(0.0, 1.0 - 2.0 * link_len / max(1, len(text)))
        if score > best_score:
            best_score = score
            best_text = text
    return best_text


def _visible_text(root: _Node, include_chrome: bool) -> str:
    parts = []
    for node in _iter_nodes(root):
        if node.suppressed or (node.chrome and not include_chrome):
            continue
        own = node.own_text()
        if own:
            parts.append(own)
    return _collapse(" ".join(parts))


def sniff_non_html(payload: bytes, content_type: str | None = None) -> str | None:
    """Return a format name when the payload is clearly not HTML, else None."""
    if content_type:
        lowered = content_type.lower()
        for prefix in _NON_HTML_CONTENT_TYPES:
            if lowered.startswith(prefix):
                return lowered.split(";")[0]
    for magic, name in _BINARY_MAGIC:
        if payload[: len(magic)] == magic:
            return name
    return None


def extract_main_text(payload: bytes | str, content_type: str | None = None) -> str:
    """Boilerplate-stripped main text of an HTML payload.

    Raises UnsupportedFormatError for document formats this pipeline does not
    parse (PDF, Office, archives, images).
    """
    if isinstance(payload, bytes):
        fmt = sniff_non_html(payload, content_type)
        if fmt is not None:
            raise UnsupportedFormatError(fmt)
        text = payload.decode("utf-8", errors="replace")
    else:
        fmt = sniff_non_html(payload[:16].encode("utf-8", errors="replace"), content_type)
        if fmt is not None:
            raise UnsupportedFormatError(fmt)
        text = payload

    builder = _TreeBuilder()
    try:
        builder.feed(text)
        builder.close()
    except Exception:
        return _collapse(text)

    for candidate in (
        _structural_candidate(builder.root),
        _density_candidate(builder.root),
        _visible_text(builder.root, include_chrome=False),
        _visible_text(builder.root, include_chrome=True),
    ):
        if candidate:
            return candidate
    return ""
