from pathlib import Path

import pytest

from mgtdetect.ingest import Corpus, Document, Label

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def human_fixture_texts() -> list[str]:
    lines = (FIXTURES / "human_texts.txt").read_text(encoding="utf-8").splitlines()
    return [l.strip() for l in lines if l.strip()]


def make_doc(body: str, label: Label = Label.HUMAN, doc_id: str = "d1") -> Document:
    return Document(id=doc_id, body=body, label=label)


def make_corpus(human: list[str], machine: list[str]) -> Corpus:
    docs = [
        Document(id=f"h{i}", body=b, label=Label.HUMAN) for i, b in enumerate(human)
    ] + [
        Document(id=f"m{i}", body=b, label=Label.MACHINE) for i, b in enumerate(machine)
    ]
    return Corpus(tuple(docs))
