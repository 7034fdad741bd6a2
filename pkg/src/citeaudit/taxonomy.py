"""Label taxonomies and the two predefined scoring matrices.

Five label sets classify a citation pair: query intent (QI), source purpose
(SP), source domain (SD), source type (ST), and answer-source fidelity (ASF).
Two fixed integer matrices map label pairs to 1-5 scores: the 5x6 alignment
matrix crossing intent with purpose, and the 10x6 suitability matrix crossing
domain with type. Fidelity scores are the ordinal suffix of the ASF label.

Everything here is immutable and safe for concurrent use.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence


class IntentLabel(str, Enum):
    """Query intent: what the user needs to consider the query resolved."""

    QI1 = "QI1"  # Factoid
    QI2 = "QI2"  # Explanation
    QI3 = "QI3"  # Instruction
    QI4 = "QI4"  # Comparison
    QI5 = "QI5"  # Opinion

    @property
    def title(self) -> str:
        return _INTENT_TITLES[self]


class PurposeLabel(str, Enum):
    """Source purpose: the communicative function of the cited page."""

    SP1 = "SP1"  # To Promote
    SP2 = "SP2"  # To Inform
    SP3 = "SP3"  # To Instruct
    SP4 = "SP4"  # To Report
    SP5 = "SP5"  # To Discuss
    SP6 = "SP6"  # To Opine

    @property
    def title(self) -> str:
        return _PURPOSE_TITLES[self]


class DomainLabel(str, Enum):
    """Source domain: the substantive topic area of the cited page."""

    SD1 = "SD1"  # Medical/Health
    SD2 = "SD2"  # Legal
    SD3 = "SD3"  # Finance
    SD4 = "SD4"  # Education
    SD5 = "SD5"  # Science
    SD6 = "SD6"  # Code/Data
    SD7 = "SD7"  # Technical
    SD8 = "SD8"  # Social/Professional
    SD9 = "SD9"  # Shopping/Travel
    SD10 = "SD10"  # Everyday

    @property
    def title(self) -> str:
        return _DOMAIN_TITLES[self]


class TypeLabel(str, Enum):
    """Source type: the publishing institution behind the cited page."""

    ST1 = "ST1"  # Official Institution
    ST2 = "ST2"  # Paper/Research
    ST3 = "ST3"  # News/Magazine
    ST4 = "ST4"  # Wiki/Forum
    ST5 = "ST5"  # Blog/Social
    ST6 = "ST6"  # Private Company

    @property
    def title(self) -> str:
        return _TYPE_TITLES[self]


class FidelityLabel(str, Enum):
    """Answer-source fidelity verdict; ordinal score is the numeric suffix."""

    ASF1 = "ASF1"  # Fabricated
    ASF2 = "ASF2"  # Misattributed
    ASF3 = "ASF3"  # Contradicted
    ASF4 = "ASF4"  # Amplified
    ASF5 = "ASF5"  # Supported

    @property
    def title(self) -> str:
        return _FIDELITY_TITLES[self]

    @property
    def ordinal(self) -> int:
        return int(self.value[3:])


_INTENT_TITLES = {
    IntentLabel.QI1: "Factoid",
    IntentLabel.QI2: "Explanation",
    IntentLabel.QI3: "Instruction",
    IntentLabel.QI4: "Comparison",
    IntentLabel.QI5: "Opinion",
}

_PURPOSE_TITLES = {
    PurposeLabel.SP1: "To Promote",
    PurposeLabel.SP2: "To Inform",
    PurposeLabel.SP3: "To Instruct",
    PurposeLabel.SP4: "To Report",
    PurposeLabel.SP5: "To Discuss",
    PurposeLabel.SP6: "To Opine",
}

_DOMAIN_TITLES = {
    DomainLabel.SD1: "Medical/Health",
    DomainLabel.SD2: "Legal",
    DomainLabel.SD3: "Finance",
    DomainLabel.SD4: "Education",
    DomainLabel.SD5: "Science",
    DomainLabel.SD6: "Code/Data",
    DomainLabel.SD7: "Technical",
    DomainLabel.SD8: "Social/Professional",
    DomainLabel.SD9: "Shopping/Travel",
    DomainLabel.SD10: "Everyday",
}

_TYPE_TITLES = {
    TypeLabel.ST1: "Official Institution",
    TypeLabel.ST2: "Paper/Research",
    TypeLabel.ST3: "News/Magazine",
    TypeLabel.ST4: "Wiki/Forum",
    TypeLabel.ST5: "Blog/Social",
    TypeLabel.ST6: "Private Company",
}

_FIDELITY_TITLES = {
    FidelityLabel.ASF1: "Fabricated",
    FidelityLabel.ASF2: "Misattributed",
    FidelityLabel.ASF3: "Contradicted",
    FidelityLabel.ASF4: "Amplified",
    FidelityLabel.ASF5: "Supported",
}

#: High-stakes "Your Money or Your Life" domains.
YMYL_DOMAINS = frozenset({DomainLabel.SD1, DomainLabel.SD2, DomainLabel.SD3})

SCORE_MIN = 1
SCORE_MAX = 5


class MatrixFormatError(ValueError):
    """A matrix grid file violates the expected shape or cell range."""


@dataclass(frozen=True)
class ScoreMatrix:
    """An immutable labeled grid of integer scores in [1, 5]."""

    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    cells: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if len(self.cells) != len(self.row_labels):
            raise MatrixFormatError("row count does not match row labels")
        for row in self.cells:
            if len(row) != len(self.col_labels):
                raise MatrixFormatError("column count does not match column labels")
            for cell in row:
                if not (SCORE_MIN <= cell <= SCORE_MAX):
                    raise MatrixFormatError(f"cell {cell} outside [{SCORE_MIN}, {SCORE_MAX}]")
        object.__setattr__(self, "_row_index", {label: i for i, label in enumerate(self.row_labels)})
        object.__setattr__(self, "_col_index", {label: i for i, label in enumerate(self.col_labels)})

    def score(self, row: str, col: str) -> int:
        return self.cells[self._row_index[row]][self._col_index[col]]  # type: ignore[attr-defined]

    def perturbed(self, delta: int) -> "ScoreMatrix":
        """A copy with every cell shifted by delta and clamped to [1, 5]."""
        if delta not in (-1, 1):
            raise ValueError("delta must be -1 or +1")
        shifted = tuple(
            tuple(min(SCORE_MAX, max(SCORE_MIN, cell + delta)) for cell in row)
            for row in self.cells
        )
        return ScoreMatrix(self.row_labels, self.col_labels, shifted)

    def to_text(self) -> str:
        """Render the grid in the plain-text override format."""
        lines = ["\t".join(("",) + self.col_labels)]
        for label, row in zip(self.row_labels, self.cells):
            lines.append("\t".join([label] + [str(c) for c in row]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ScoreMatrix":
        """Parse the plain-text grid format: a header row of column labels,
        then one row per row label with integer cells. Whitespace-delimited."""
        rows = [line.split() for line in text.splitlines() if line.strip()]
        if len(rows) < 2:
            raise MatrixFormatError("grid needs a header row and at least one data row")
        col_labels = tuple(rows[0])
        row_labels: list[str] = []
        cells: list[tuple[int, ...]] = []
        for raw in rows[1:]:
            if len(raw) != len(col_labels) + 1:
                raise MatrixFormatError(f"row {raw[:1]} has {len(raw) - 1} cells, expected {len(col_labels)}")
            row_labels.append(raw[0])
            try:
                values = tuple(int(v) for v in raw[1:])
            except ValueError as exc:
                raise MatrixFormatError(f"non-integer cell in row {raw[0]}") from exc
            cells.append(values)
        return cls(tuple(row_labels), col_labels, tuple(cells))


#: Alignment scores: query intent (rows) x source purpose (columns).
ALIGNMENT_MATRIX = ScoreMatrix(
    row_labels=tuple(label.value for label in IntentLabel),
    col_labels=tuple(label.value for label in PurposeLabel),
    cells=(
        (1, 5, 3, 4, 2, 1),  # QI1 Factoid
        (1, 5, 4, 3, 3, 2),  # QI2 Explanation
        (2, 3, 5, 2, 4, 2),  # QI3 Instruction
        (3, 4, 2, 3, 3, 3),  # QI4 Comparison
        (2, 3, 2, 3, 4, 5),  # QI5 Opinion
    ),
)

#: Suitability scores: source domain (rows) x source type (columns).
SUITABILITY_MATRIX = ScoreMatrix(
    row_labels=tuple(label.value for label in DomainLabel),
    col_labels=tuple(label.value for label in TypeLabel),
    cells=(
        (5, 5, 3, 1, 1, 2),  # SD1 Medical/Health
        (5, 5, 3, 1, 1, 2),  # SD2 Legal
        (5, 5, 3, 2, 2, 3),  # SD3 Finance
        (5, 5, 3, 3, 2, 3),  # SD4 Education
        (5, 5, 3, 3, 2, 2),  # SD5 Science
        (4, 4, 3, 5, 2, 3),  # SD6 Code/Data
        (5, 4, 3, 3, 2, 3),  # SD7 Technical
        (4, 4, 4, 3, 3, 3),  # SD8 Social/Professional
        (4, 3, 4, 4, 3, 3),  # SD9 Shopping/Travel
        (4, 3, 4, 4, 4, 3),  # SD10 Everyday
    ),
)


def ipa_score(
    qi: IntentLabel, sp: PurposeLabel, matrix: ScoreMatrix = ALIGNMENT_MATRIX
) -> int:
    """Alignment score for a (query intent, source purpose) pair."""
    return matrix.score(IntentLabel(qi).value, PurposeLabel(sp).value)


def ss_score(
    sd: DomainLabel, st: TypeLabel, matrix: ScoreMatrix = SUITABILITY_MATRIX
) -> int:
    """Suitability score for a (source domain, source type) pair."""
    return matrix.score(DomainLabel(sd).value, TypeLabel(st).value)


def asf_score(asf: FidelityLabel) -> int:
    """Fidelity score: the ordinal suffix of the verdict label."""
    return FidelityLabel(asf).ordinal


def is_ymyl(sd: DomainLabel) -> bool:
    """True for the three high-stakes domains: Medical, Legal, Finance."""
    return DomainLabel(sd) in YMYL_DOMAINS


def perturb_cells(matrix: ScoreMatrix, delta: int) -> ScoreMatrix:
    """Shift every cell by delta (one of -1, +1), clamping to [1, 5]."""
    return matrix.perturbed(delta)


def load_matrix_override(
    text: str, expected_rows: Sequence[str], expected_cols: Sequence[str]
) -> ScoreMatrix:
    """Parse an override grid and check its labels match the shipped matrix."""
    matrix = ScoreMatrix.from_text(text)
    if matrix.row_labels != tuple(expected_rows) or matrix.col_labels != tuple(expected_cols):
        raise MatrixFormatError(
            "override labels do not match the expected grid: "
            f"rows {matrix.row_labels} cols {matrix.col_labels}"
        )
    return matrix


def load_alignment_override(text: str) -> ScoreMatrix:
    return load_matrix_override(
        text, ALIGNMENT_MATRIX.row_labels, ALIGNMENT_MATRIX.col_labels
    )


def load_suitability_override(text: str) -> ScoreMatrix:
    return load_matrix_override(
        text, SUITABILITY_MATRIX.row_labels, SUITABILITY_MATRIX.col_labels
    )
