from __future__ import annotations

import json
import random
import socket
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from adsmix.corpus import Article, Corpus

_ACCEPTANCE: list[tuple[str, str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    crit = dict(report.user_properties).get("criterion")
    if crit:
        _ACCEPTANCE.append((crit, report.outcome.upper(), report.nodeid))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit, outcome, _ in sorted(_ACCEPTANCE, key=lambda r: int(r[0].split()[0][2:])):
        terminalreporter.write_line(f"{'PASS' if outcome == 'PASSED' else 'FAIL'}  {crit}")


def make_corpus(n: int, split: str = "train", prefix: str = "a") -> Corpus:
    return Corpus(
        [Article(f"{prefix}{i}", f"Article {i} opens. It then ends.", f"summary {i}") for i in range(n)],
        split,
    )


WORDS = ("storm", "vote", "court", "match", "market", "virus", "school", "rocket",
         "river", "police", "film", "bank", "farm", "bridge", "coach", "senate")


def random_article(rng: random.Random, id_: str, n_sent: int | None = None) -> Article:
    n_sent = n_sent or rng.randint(1, 6)
    sents = []
    for s in range(n_sent):
        words = [rng.choice(WORDS) for _ in range(rng.randint(2, 8))]
        if rng.random() < 0.15:
            words.insert(0, rng.choice(["Dr.", "Mr.", "the U.S."]))
        sents.append(" ".join(words).capitalize() + rng.choice([".", "!", "?"]))
    summary = " ".join(rng.choice(WORDS) for _ in range(rng.randint(3, 9)))
    return Article(id_, " ".join(sents), summary)


def random_corpus(n: int, seed: int = 0, split: str = "train") -> Corpus:
    rng = random.Random(seed)
    return Corpus([random_article(rng, f"doc{i}") for i in range(n)], split)


def topic_words(topic: int, n: int = 12) -> list[str]:
    return [f"t{topic}w{i}" for i in range(n)]


def topic_article(rng: random.Random, id_: str, topic: int) -> Article:
    """Article whose sentences and summary draw only on one topic's vocabulary."""
    vocab = topic_words(topic)
    sents = [" ".join(rng.choice(vocab) for _ in range(rng.randint(6, 10))) + "."
             for _ in range(rng.randint(6, 10))]
    summary = " ".join(rng.choice(vocab) for _ in range(rng.randint(8, 14)))
    return Article(id_, " ".join(sents), summary)


class _Handler(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        status, payload, delay = self.server.respond(self.path, body)
        if delay:
            time.sleep(delay)
        data = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        try:
            self.wfile.write(data)
        except BrokenPipeError:
            pass


class StubService:
    """In-process embedding/summarization service with a swappable behaviour."""

    def __init__(self):
        self.calls: list[tuple[str, dict]] = []
        self.dim = 384
        self.mode = "ok"
        self.delay = 0.0
        self.server = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
        self.server.respond = self._respond
        self.server.daemon_threads = True
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    @property
    def url(self) -> str:
        host, port = self.server.server_address
        return f"http://{host}:{port}"

    def _respond(self, path, body):
        self.calls.append((path, body))
        if self.mode == "error":
            return 500, {"error": "boom"}, 0
        if path == "/embed":
            texts = body["texts"]
            if self.mode == "short":
                texts = texts[:-1]
            vecs = [[float((len(t) + i) % 7) for i in range(self.dim)] for t in texts]
            if self.mode == "ragged" and vecs:
                vecs[0] = vecs[0][:-1]
            return 200, {"vectors": vecs}, self.delay
        if path == "/summarize":
            return 200, {"summary": "stub: " + body["text"][:40]}, self.delay
        return 404, {}, 0

    def close(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def stub_service():
    svc = StubService()
    yield svc
    svc.close()


@pytest.fixture
def dead_url():
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    return f"http://127.0.0.1:{port}"
