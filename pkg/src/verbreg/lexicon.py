"""Verb-form lexicon: which surface tokens count as regular or irregular past tense.

The lexicon ships as an editable CSV data file rather than code, so the verb
inventory can be revised without touching the toolkit.  Each row is one lemma
with its regular past-tense spellings (preterite and past participle share the
-ed form), its irregular preterite and past-participle spellings, a flag for
verbs whose irregular past is built with the dental suffix -t, and a reference
token count kept for documentation only.

The shipped default file covers 106 lemmas.  Its -t flag marks a reconstructed
22-verb subset (see README); membership is a data edit, not a code change.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

REGULAR = "regular"
IRREGULAR = "irregular"

_FIELDS = ["lemma", "regular", "irregular_preterite", "irregular_participle",
           "t_subset", "ref_count"]


class LexiconError(ValueError):
    """A lexicon file failed validation."""


@dataclass(frozen=True)
class VerbEntry:
    """One lemma with its past-tense surface forms.

    Forms are lowercase alphabetic words.  A form may appear in both the
    irregular preterite and participle sets (e.g. "drank"); it still indexes
    once.  ``reference_token_count`` is documentation, never used in math.
    """

    lemma: str
    regular_forms: frozenset[str]
    irregular_preterite: frozenset[str]
    irregular_participle: frozenset[str]
    t_subset: bool
    reference_token_count: int

    @property
    def irregular_forms(self) -> frozenset[str]:
        return self.irregular_preterite | self.irregular_participle

    def validate(self) -> None:
        if not self.regular_forms:
            raise LexiconError(f"{self.lemma}: no regular forms")
        if not self.irregular_forms:
            raise LexiconError(f"{self.lemma}: no irregular forms")
        overlap = self.regular_forms & self.irregular_forms
        if overlap:
            raise LexiconError(
                f"{self.lemma}: forms listed as both regular and irregular: "
                f"{sorted(overlap)}")
        for form in self.regular_forms | self.irregular_forms | {self.lemma}:
            if not form.isalpha() or form != form.casefold():
                raise LexiconError(f"{self.lemma}: form {form!r} is not a "
                                   "lowercase alphabetic word")
        if self.reference_token_count < 0:
            raise LexiconError(f"{self.lemma}: negative reference token count")


class Lexicon:
    """Immutable verb lexicon with a unique surface-form index.

    The index maps every listed form to ``(lemma, class)`` where class is
    ``"regular"`` or ``"irregular"``.  A surface form belonging to two
    different lemmas is a load-time error: token counting must never have to
    guess which verb a match belongs to.
    """

    def __init__(self, entries: Iterable[VerbEntry]):
        self.entries: tuple[VerbEntry, ...] = tuple(entries)
        index: dict[str, tuple[str, str]] = {}
        by_lemma: dict[str, VerbEntry] = {}
        for entry in self.entries:
            entry.validate()
            if entry.lemma in by_lemma:
                raise LexiconError(f"duplicate lemma {entry.lemma!r}")
            by_lemma[entry.lemma] = entry
            for form, cls in [(f, REGULAR) for f in sorted(entry.regular_forms)] + \
                             [(f, IRREGULAR) for f in sorted(entry.irregular_forms)]:
                prior = index.get(form)
                if prior is not None and prior[0] != entry.lemma:
                    raise LexiconError(
                        f"surface form {form!r} maps to both {prior[0]!r} "
                        f"and {entry.lemma!r}")
                index[form] = (entry.lemma, cls)
        self.form_index: dict[str, tuple[str, str]] = index
        self._by_lemma = by_lemma

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, lemma: str) -> bool:
        return lemma in self._by_lemma

    def entry(self, lemma: str) -> VerbEntry:
        return self._by_lemma[lemma]

    def lemmas(self) -> list[str]:
        return [e.lemma for e in self.entries]

    def classify(self, token: str) -> Optional[tuple[str, str]]:
        """Exact whole-token lookup; the token must already be case-folded."""
        return self.form_index.get(token)

    def t_subset(self) -> list[VerbEntry]:
        return [e for e in self.entries if e.t_subset]


def default_lexicon_path() -> Path:
    return Path(str(resources.files("verbreg").joinpath("data/verb_lexicon.csv")))


def _split_forms(cell: str) -> frozenset[str]:
    # The documented separator is ';'; quoted comma lists are tolerated too.
    parts = cell.replace(",", ";").split(";")
    return frozenset(p.strip() for p in parts if p.strip())


def load_lexicon(path: str | Path | None = None) -> Lexicon:
    """Load and validate a lexicon CSV; ``None`` loads the shipped default.

    Raises :class:`LexiconError` on malformed rows, empty form sets, or a
    surface form shared between lemmas.
    """
    path = default_lexicon_path() if path is None else Path(path)
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != _FIELDS:
            raise LexiconError(
                f"{path}: expected header {','.join(_FIELDS)!r}, "
                f"got {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            if any(row.get(k) is None for k in _FIELDS):
                raise LexiconError(f"{path}:{lineno}: malformed row")
            try:
                t_flag = _parse_flag(row["t_subset"])
                ref = int(row["ref_count"])
            except ValueError as exc:
                raise LexiconError(f"{path}:{lineno}: {exc}") from exc
            try:
                entries.append(VerbEntry(
                    lemma=row["lemma"].strip(),
                    regular_forms=_split_forms(row["regular"]),
                    irregular_preterite=_split_forms(row["irregular_preterite"]),
                    irregular_participle=_split_forms(row["irregular_participle"]),
                    t_subset=t_flag,
                    reference_token_count=ref,
                ))
                entries[-1].validate()
            except LexiconError as exc:
                raise LexiconError(f"{path}:{lineno}: {exc}") from exc
    return Lexicon(entries)


def _parse_flag(text: str) -> bool:
    value = text.strip().lower()
    if value in {"1", "true"}:
        return True
    if value in {"0", "false"}:
        return False
    raise ValueError(f"bad t_subset flag {text!r}")


def save_lexicon(lexicon: Lexicon, path: str | Path) -> None:
    """Write a lexicon back to CSV; round-trips the form sets exactly."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_FIELDS)
        for e in lexicon.entries:
            writer.writerow([
                e.lemma,
                ";".join(sorted(e.regular_forms)),
                ";".join(sorted(e.irregular_preterite)),
                ";".join(sorted(e.irregular_participle)),
                1 if e.t_subset else 0,
                e.reference_token_count,
            ])


def classify_token(lexicon: Lexicon, token: str) -> Optional[tuple[str, str]]:
    """Classify a case-folded token as (lemma, class), or None if unlisted."""
    return lexicon.classify(token)


def t_subset(lexicon: Lexicon) -> list[VerbEntry]:
    """Entries whose irregular past is built with the suffix -t."""
    return lexicon.t_subset()
