"""Corpus model: sites, passages, embeddings, and the file formats that carry them.

A corpus is the immutable input to every downstream stage.  It is assembled
from three files (site registry CSV, passage metadata JSONL, embedding matrix
binary) and validated on load; after that it is never mutated.
"""
from __future__ import annotations

import csv
import json
import math
import re
import struct
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

RELIABILITIES = ("reliable", "mixed", "unreliable")
STANCES = ("Pro", "Against", "Neutral")

EMB_MAGIC = b"EMB1"
MAX_PASSAGE_WORDS = 100


class CorpusError(ValueError):
    """Raised for malformed or inconsistent corpus files."""


@dataclass(frozen=True)
class Site:
    domain: str
    reliability: str
    partisanship: Optional[float] = None

    def __post_init__(self):
        if not self.domain:
            raise CorpusError("site domain must be nonempty")
        if self.reliability not in RELIABILITIES:
            raise CorpusError(f"unknown reliability {self.reliability!r} for {self.domain}")
        if self.partisanship is not None and not -1.0 <= self.partisanship <= 1.0:
            raise CorpusError(f"partisanship out of [-1,1] for {self.domain}")


@dataclass(frozen=True)
class StanceInput:
    passage_id: int
    target: str
    stance: str

    def __post_init__(self):
        if self.stance not in STANCES:
            raise CorpusError(f"stance must be one of {STANCES}, got {self.stance!r}")


@dataclass
class EmbeddingMatrix:
    data: np.ndarray  # (n, dim) float32, row-major
    normalized: bool

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def validate(self):
        if self.data.ndim != 2:
            raise CorpusError("embedding matrix must be 2-D")
        if self.normalized:
            norms = np.linalg.norm(self.data, axis=1)
            bad = np.where(np.abs(norms - 1.0) > 1e-4)[0]
            if bad.size:
                raise CorpusError(
                    f"matrix flagged normalized but row {bad[0]} has norm {norms[bad[0]]:.6f}"
                )

    def normalize(self):
        """Rescale every row to unit L2 norm in place."""
        norms = np.linalg.norm(self.data.astype(np.float64), axis=1)
        zero = np.where(norms == 0.0)[0]
        if zero.size:
            raise CorpusError(f"zero-norm embedding row {zero[0]}")
        self.data = (self.data.astype(np.float64) / norms[:, None]).astype(np.float32)
        self.normalized = True


@dataclass
class Corpus:
    """Validated, cross-referenced view of one ingested dataset."""

    sites: list[Site]
    passage_id: np.ndarray      # u64
    article_id: np.ndarray      # u64
    site_ref: np.ndarray        # i64, index into sites
    published_day: np.ndarray   # f64, days since 1970-01-01 UTC
    word_count: np.ndarray      # i64
    embedding_row: np.ndarray   # i64
    text: list[Optional[str]]
    embeddings: EmbeddingMatrix
    site_index: dict[str, int] = field(default_factory=dict)
    passage_index: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.site_index:
            self.site_index = {s.domain: i for i, s in enumerate(self.sites)}
        if not self.passage_index:
            self.passage_index = {int(p): i for i, p in enumerate(self.passage_id)}

    @property
    def n_passages(self) -> int:
        return len(self.passage_id)

    def ecosystem_of(self, site_ref: int) -> str:
        return self.sites[site_ref].reliability

    def counts_report(self) -> dict:
        per_eco_articles: dict[str, set] = {r: set() for r in RELIABILITIES}
        for aid, sref in zip(self.article_id, self.site_ref):
            per_eco_articles[self.sites[sref].reliability].add(int(aid))
        return {
            "passages": int(self.n_passages),
            "articles": len(set(int(a) for a in self.article_id)),
            "sites": len(self.sites),
            "dim": int(self.embeddings.dim),
            "articles_per_ecosystem": {k: len(v) for k, v in sorted(per_eco_articles.items())},
        }


# ---------------------------------------------------------------------------
# passage splitting

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_TAG_RE = re.compile(r"<[^>]+>")
_SENT_RE = re.compile(r"(?<=[.!?])\s+")

# codepoint ranges treated as emoji and stripped during cleaning
_EMOJI_RANGES = (
    (0x1F000, 0x1FAFF),
    (0x2600, 0x27BF),
    (0x2190, 0x21FF),   # arrows commonly used as dingbats
    (0x2B00, 0x2BFF),
    (0xFE00, 0xFE0F),   # variation selectors
    (0x1F1E6, 0x1F1FF),
    (0x200D, 0x200D),   # zero-width joiner
)


def _strip_emoji(text: str) -> str:
    return "".join(
        ch for ch in text
        if not any(lo <= ord(ch) <= hi for lo, hi in _EMOJI_RANGES)
    )


def clean_article_text(text: str) -> str:
    """Remove URLs, HTML tags, and emoji; collapse other characters unchanged."""
    text = _URL_RE.sub(" ", text)
    text = _TAG_RE.sub(" ", text)
    return _strip_emoji(text)


def split_sentences(paragraph: str) -> list[str]:
    # boundary: '.', '!' or '?' followed by whitespace
    return [s.strip() for s in _SENT_RE.split(paragraph) if s.strip()]


def split_into_passages(article_text: str, max_words: int = MAX_PASSAGE_WORDS) -> list[str]:
    """Split an article into passages of at most ``max_words`` whitespace tokens.

    Paragraphs are delimited by newline/tab; sentences within one paragraph
    are greedily packed into passages.  A single sentence longer than the
    limit becomes its own passage, truncated at ``max_words`` words.
    """
    if max_words < 1:
        raise ValueError("max_words must be >= 1")
    cleaned = clean_article_text(article_text)
    passages: list[str] = []
    for paragraph in re.split(r"[\n\t]+", cleaned):
        sentences = split_sentences(paragraph)
        current: list[str] = []
        count = 0
        for sent in sentences:
            words = sent.split()
            if len(words) > max_words:
                if current:
                    passages.append(" ".join(current))
                    current, count = [], 0
                passages.append(" ".join(words[:max_words]))
                continue
            if count + len(words) > max_words and current:
                passages.append(" ".join(current))
                current, count = [], 0
            current.append(sent)
            count += len(words)
        if current:
            passages.append(" ".join(current))
    return passages


# ---------------------------------------------------------------------------
# site registry

def load_sites(path) -> list[Site]:
    sites: list[Site] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = ["domain", "reliability", "partisanship"]
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected:
            raise CorpusError(f"{path}: site registry header must be {','.join(expected)}")
        for lineno, row in enumerate(reader, start=2):
            domain = row["domain"].strip().lower()
            if domain in seen:
                raise CorpusError(f"{path}:{lineno}: duplicate domain {domain!r}")
            seen.add(domain)
            part_raw = (row.get("partisanship") or "").strip()
            try:
                part = float(part_raw) if part_raw else None
            except ValueError:
                raise CorpusError(f"{path}:{lineno}: malformed partisanship {part_raw!r}") from None
            try:
                sites.append(Site(domain, row["reliability"].strip().lower(), part))
            except CorpusError as exc:
                raise CorpusError(f"{path}:{lineno}: {exc}") from None
    return sites


def write_sites(path, sites: Iterable[Site]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["domain", "reliability", "partisanship"])
        for s in sites:
            part = "" if s.partisanship is None else format(s.partisanship, ".12g")
            writer.writerow([s.domain, s.reliability, part])


# ---------------------------------------------------------------------------
# embedding matrix binary format:
#   magic "EMB1", u32 n, u32 dim, u8 normalized_flag, n*dim f32 LE row-major

def load_embeddings(path) -> EmbeddingMatrix:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != EMB_MAGIC:
            raise CorpusError(f"{path}: bad magic bytes {magic!r}, expected {EMB_MAGIC!r}")
        header = fh.read(9)
        if len(header) != 9:
            raise CorpusError(f"{path}: truncated header")
        n, dim, flag = struct.unpack("<IIB", header)
        raw = fh.read(4 * n * dim)
        if len(raw) != 4 * n * dim:
            raise CorpusError(f"{path}: expected {4*n*dim} data bytes, got {len(raw)}")
        data = np.frombuffer(raw, dtype="<f4").reshape(n, dim).copy()
    mat = EmbeddingMatrix(data=data, normalized=bool(flag))
    mat.validate()
    return mat


def write_embeddings(path, matrix: EmbeddingMatrix):
    with open(path, "wb") as fh:
        fh.write(EMB_MAGIC)
        fh.write(struct.pack("<IIB", matrix.n, matrix.dim, 1 if matrix.normalized else 0))
        fh.write(np.ascontiguousarray(matrix.data, dtype="<f4").tobytes())


# ---------------------------------------------------------------------------
# passage metadata JSONL

_PASSAGE_FIELDS = ("passage_id", "article_id", "site", "published_day", "word_count", "embedding_row")


def load_passages(path):
    """Yield raw passage dicts with line diagnostics."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from None
            missing = [f for f in _PASSAGE_FIELDS if f not in obj]
            if missing:
                raise CorpusError(f"{path}:{lineno}: missing fields {missing}")
            yield lineno, obj


def write_passages(path, corpus: Corpus):
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(corpus.n_passages):
            obj = {
                "passage_id": int(corpus.passage_id[i]),
                "article_id": int(corpus.article_id[i]),
                "site": corpus.sites[corpus.site_ref[i]].domain,
                "published_day": float(corpus.published_day[i]),
                "word_count": int(corpus.word_count[i]),
                "embedding_row": int(corpus.embedding_row[i]),
            }
            if corpus.text[i] is not None:
                obj["text"] = corpus.text[i]
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_corpus(meta_path, emb_path, sites_path) -> Corpus:
    """Load and cross-validate the three corpus files.

    Rows are L2-renormalized in place when the embedding header says
    unnormalized.  Any dangling reference or malformed field fails with a
    file/line diagnostic.
    """
    sites = load_sites(sites_path)
    site_index = {s.domain: i for i, s in enumerate(sites)}
    matrix = load_embeddings(emb_path)
    if not matrix.normalized:
        matrix.normalize()

    pids, aids, srefs, days, wcounts, erows, texts = [], [], [], [], [], [], []
    seen_pids: set[int] = set()
    for lineno, obj in load_passages(meta_path):
        where = f"{meta_path}:{lineno}"
        pid = int(obj["passage_id"])
        if pid in seen_pids:
            raise CorpusError(f"{where}: duplicate passage_id {pid}")
        seen_pids.add(pid)
        domain = str(obj["site"]).lower()
        if domain not in site_index:
            raise CorpusError(f"{where}: dangling site reference {domain!r}")
        day = obj["published_day"]
        if not isinstance(day, (int, float)) or not math.isfinite(float(day)):
            raise CorpusError(f"{where}: malformed published_day {day!r}")
        wc = int(obj["word_count"])
        if not 1 <= wc <= MAX_PASSAGE_WORDS:
            raise CorpusError(f"{where}: word_count {wc} outside [1, {MAX_PASSAGE_WORDS}]")
        erow = int(obj["embedding_row"])
        if not 0 <= erow < matrix.n:
            raise CorpusError(f"{where}: dangling embedding reference {erow} (matrix has {matrix.n} rows)")
        pids.append(pid)
        aids.append(int(obj["article_id"]))
        srefs.append(site_index[domain])
        days.append(float(day))
        wcounts.append(wc)
        erows.append(erow)
        texts.append(obj.get("text"))

    return Corpus(
        sites=sites,
        passage_id=np.asarray(pids, dtype=np.uint64),
        article_id=np.asarray(aids, dtype=np.uint64),
        site_ref=np.asarray(srefs, dtype=np.int64),
        published_day=np.asarray(days, dtype=np.float64),
        word_count=np.asarray(wcounts, dtype=np.int64),
        embedding_row=np.asarray(erows, dtype=np.int64),
        text=texts,
        embeddings=matrix,
        site_index=site_index,
    )


def write_corpus(outdir, corpus: Corpus, prefix: str = "corpus"):
    """Write the three corpus files; inverse of :func:`load_corpus`."""
    from pathlib import Path

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_sites(outdir / f"{prefix}_sites.csv", corpus.sites)
    write_embeddings(outdir / f"{prefix}_embeddings.emb", corpus.embeddings)
    write_passages(outdir / f"{prefix}_passages.jsonl", corpus)
    return (
        outdir / f"{prefix}_passages.jsonl",
        outdir / f"{prefix}_embeddings.emb",
        outdir / f"{prefix}_sites.csv",
    )


# ---------------------------------------------------------------------------
# stance labels CSV

def load_stances(path, corpus: Optional[Corpus] = None) -> list[StanceInput]:
    records: list[StanceInput] = []
    bad_rows: list[str] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = ["passage_id", "target", "stance"]
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected:
            raise CorpusError(f"{path}: stance header must be {','.join(expected)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                rec = StanceInput(int(row["passage_id"]), row["target"].strip(), row["stance"].strip())
            except (ValueError, CorpusError) as exc:
                raise CorpusError(f"{path}:{lineno}: {exc}") from None
            if corpus is not None and rec.passage_id not in corpus.passage_index:
                bad_rows.append(f"{path}:{lineno}: unknown passage_id {rec.passage_id}")
                continue
            records.append(rec)
    if bad_rows:
        raise CorpusError("stance rows reference unknown passages:\n" + "\n".join(bad_rows[:20]))
    return records


def write_stances(path, records: Iterable[StanceInput]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["passage_id", "target", "stance"])
        for r in records:
            writer.writerow([r.passage_id, r.target, r.stance])
