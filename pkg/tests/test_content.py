import pytest

from citeaudit.content import UnsupportedFormatError, extract_main_text, sniff_non_html


ARTICLE = """
<html><head><title>Page</title><style>body{color:red}</style></head>
<body>
<nav><a href="/">Home</a> <a href="/about">About</a></nav>
<article>
<h1>Heading</h1>
<p>First paragraph with the substantive content of the page.</p>
<p>Second paragraph continuing the discussion in detail.</p>
</article>
<footer>Copyright notice</footer>
<script>console.log("hi")</script>
</body></html>
"""


def test_article_container_wins():
    text = extract_main_text(ARTICLE)
    assert "First paragraph with the substantive content" in text
    assert "Second paragraph continuing" in text
    assert "Home" not in text  # nav stripped
    assert "Copyright" not in text  # footer stripped
    assert "console.log" not in text  # script stripped


def test_density_fallback_without_semantic_container():
    html = (
        "<html><body><div class='menu'><a href='/a'>a</a><a href='/b'>b</a></div>"
        "<div><p>" + "Real content sentence with plenty of words to score well. " * 5 + "</p></div>"
        "</body></html>"
    )
    text = extract_main_text(html)
    assert "Real content sentence" in text


def test_plain_text_passthrough():
    body = "a" * 1000
    assert extract_main_text(body) == body


def test_nav_only_page_yields_short_text():
    html = "<html><body><nav><a href='/'>Home</a> <a href='/x'>Products</a></nav></body></html>"
    text = extract_main_text(html)
    assert len(text) < 50


def test_pdf_bytes_rejected():
    with pytest.raises(UnsupportedFormatError):
        extract_main_text(b"%PDF-1.7 binary stuff")


def test_pdf_content_type_rejected():
    with pytest.raises(UnsupportedFormatError):
        extract_main_text(b"<html>whatever</html>", content_type="application/pdf")


def test_office_magic_rejected():
    with pytest.raises(UnsupportedFormatError):
        extract_main_text(b"\xd0\xcf\x11\xe0legacy office")
    with pytest.raises(UnsupportedFormatError):
        extract_main_text(b"PK\x03\x04docx-like")


def test_sniff_allows_html():
    assert sniff_non_html(b"<html><body>x</body></html>", "text/html") is None
    assert sniff_non_html(b"plain words", None) is None


def test_malformed_html_still_extracts():
    text = extract_main_text("<div><p>Unclosed paragraph with content here")
    assert "Unclosed paragraph" in text
