"""Vote and Debate workflow execution over configurable agent pools.

Agents are described by (model, persona, decoding) configuration types and
assembled into pools by diversity layer:

  L1  single model, default prompt (homogeneous baseline)
  L2  single model, distinct personas
  L3  models round-robin, default prompt
  L4  models and personas both varied

Backends speak the OpenAI-compatible chat-completions / embeddings HTTP
schema, or a deterministic in-process mock for tests and dry runs.
Transcripts persist as append-only JSONL, one per line, schema-versioned.
"""

import hashlib
import json
import math
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from decimal import Decimal, InvalidOperation

import numpy as np
import requests

SCHEMA_VERSION = 1
FIXED_TIMESTAMP = "1970-01-01T00:00:00Z"

LAYERS = ("L1", "L2", "L3", "L4")

DEFAULT_PERSONAS = {
    "mathematician": "You are an expert mathematician who reasons with rigorous algebra.",
    "logician": "You are a careful logician who checks every inference step.",
    "engineer": "You are a pragmatic engineer who estimates numerically before answering.",
    "skeptic": "You are a professional skeptic who tries to falsify the obvious answer first.",
    "teacher": "You are a patient teacher who explains the solution from first principles.",
    "statistician": "You are a statistician who weighs evidence probabilistically.",
    "debater": "You are a competitive debater who considers the strongest counterargument.",
    "scientist": "You are an empirical scientist who reasons from concrete examples.",
}


class BackendError(RuntimeError):
    def __init__(self, message, call_index=None):
        self.call_index = call_index
        super().__init__(message)


class DimensionMismatch(ValueError):
    pass


class InsufficientPool(ValueError):
    pass


@dataclass(frozen=True)
class Decoding:
    temperature: float = 0.7
    top_p: float = 0.95
    max_tokens: int = 1024

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError("top_p must lie in (0, 1]")


@dataclass(frozen=True)
class AgentConfig:
    model_id: str
    persona_id: str = None
    decoding: Decoding = field(default_factory=Decoding)
    tool_access: tuple = ()

    @property
    def type_label(self):
        # the label is a pure function of (model, persona, decoding), so
        # equal tuples share a type
        d = self.decoding
        return (
            f"{self.model_id}|{self.persona_id or 'default'}"
            f"|t{d.temperature}|p{d.top_p}|m{d.max_tokens}"
        )


def build_layer_pool(layer, models, personas, n_agents, decoding=None):
    """Assemble n agent configs for a diversity layer.

    L1 repeats one config; L2 cycles personas over one model; L3 cycles
    models with the default prompt; L4 cycles models and personas jointly,
    stepping both so consecutive agents differ in both axes when the pools
    allow it.
    """
    if layer not in LAYERS:
        raise ValueError(f"unknown layer {layer!r}; expected one of {LAYERS}")
    if n_agents < 1:
        raise ValueError("n_agents must be >= 1")
    if not models:
        raise InsufficientPool("model pool is empty")
    decoding = decoding or Decoding()

    if layer == "L1":
        return [AgentConfig(models[0], None, decoding) for _ in range(n_agents)]
    if layer == "L2":
        if len(personas) < 2:
            raise InsufficientPool("L2 needs at least 2 personas")
        return [AgentConfig(models[0], personas[i % len(personas)], decoding) for i in range(n_agents)]
    if layer == "L3":
        if len(models) < 2:
            raise InsufficientPool("L3 needs at least 2 models")
        return [AgentConfig(models[i % len(models)], None, decoding) for i in range(n_agents)]
    # L4: advance both pools each step.  Stepping model and persona indices
    # together walks lcm(M, P) distinct pairs; shifting the persona index by
    # one per completed walk visits every (model, persona) pair before any
    # repeats, so the first M*P agents are all distinct.
    if len(models) < 2 or len(personas) < 2:
        raise InsufficientPool("L4 needs at least 2 models and 2 personas")
    cycle = math.lcm(len(models), len(personas))
    pool = []
    for i in range(n_agents):
        m = models[i % len(models)]
        p = personas[(i + i // cycle) % len(personas)]
        pool.append(AgentConfig(m, p, decoding))
    return pool


@dataclass(frozen=True)
class DiversityPlan:
    layer: str
    model_pool: tuple
    persona_pool: tuple = ()
    persona_catalog: dict = field(default_factory=lambda: dict(DEFAULT_PERSONAS))
    decoding: Decoding = field(default_factory=Decoding)

    def configs(self, n_agents):
        return build_layer_pool(
            self.layer, list(self.model_pool), list(self.persona_pool), n_agents, self.decoding
        )

    def persona_text(self, persona_id):
        if persona_id is None:
            return None
        try:
            return self.persona_catalog[persona_id]
        except KeyError as exc:
            raise InsufficientPool(f"persona {persona_id!r} missing from catalog") from exc


@dataclass(frozen=True)
class WorkflowSpec:
    kind: str  # "vote" | "debate"
    num_agents: int
    rounds: int = None

    def __post_init__(self):
        if self.kind not in ("vote", "debate"):
            raise ValueError("kind must be 'vote' or 'debate'")
        rounds = self.rounds
        if rounds is None:
            rounds = 1 if self.kind == "vote" else 4
            object.__setattr__(self, "rounds", rounds)
        if self.kind == "vote" and rounds != 1:
            raise ValueError("vote is single-round")
        if rounds < 1:
            raise ValueError("rounds must be >= 1")

    @property
    def call_budget(self):
        # n = N * R
        return self.num_agents * self.rounds


# ---------------------------------------------------------------------------
# answer extraction


_MC_PATTERNS = [
    re.compile(r"answer\s*(?:is|:)?\s*\(?([A-J])\)?(?![A-Za-z])", re.IGNORECASE),
    re.compile(r"\(([A-J])\)"),
    re.compile(r"^\s*([A-J])\s*[.)]?\s*$", re.MULTILINE),
]
_NUM_PATTERNS = [
    re.compile(r"answer\s*(?:is|:)?\s*\$?(-?[\d][\d,]*(?:\.\d+)?)", re.IGNORECASE),
    re.compile(r"=\s*\$?(-?[\d][\d,]*(?:\.\d+)?)\s*\.?\s*$", re.MULTILINE),
    re.compile(r"(-?[\d][\d,]*(?:\.\d+)?)\s*\.?\s*$"),
]


def _canonical_number(text):
    try:
        d = Decimal(text.replace(",", ""))
    except InvalidOperation:
        return None
    return format(d.normalize(), "f")


def extract_answer(raw_output, task_format="mc"):
    """Deterministically pull an answer out of free text; None when nothing matches.

    "mc" yields a single uppercase letter; "numeric" yields a canonicalized
    number (thousands separators stripped, trailing zeros dropped).
    """
    if raw_output is None:
        return None
    text = raw_output.strip()
    if not text:
        return None
    if task_format == "mc":
        for pat in _MC_PATTERNS:
            matches = pat.findall(text)
            if matches:
                return matches[-1].upper()
        return None
    if task_format == "numeric":
        for pat in _NUM_PATTERNS:
            matches = pat.findall(text)
            if matches:
                return _canonical_number(matches[-1])
        return None
    raise ValueError(f"unknown task format {task_format!r}")


def majority_answer(answers):
    """(winner, tie_flag) by plurality over non-None answers.

    Ties break to the lexicographically smallest tied answer; an empty
    field returns (None, False).
    """
    counts = {}
    for a in answers:
        if a is not None:
            counts[a] = counts.get(a, 0) + 1
    if not counts:
        return None, False
    top = max(counts.values())
    tied = sorted(a for a, c in counts.items() if c == top)
    return tied[0], len(tied) > 1


# ---------------------------------------------------------------------------
# backends


class MockChatBackend:
    """Deterministic in-process chat backend.

    Round-1 answers come from `initial_answers` when given, otherwise from
    a seeded hash of the full prompt.  In later debate rounds the mock
    answers the majority of the previous round when `follow_majority` is
    set, which makes convergence behavior easy to script in tests.
    """

    deterministic = True

    def __init__(self, seed=0, choices=("A", "B", "C", "D"), follow_majority=True,
                 initial_answers=None):
        self.seed = seed
        self.choices = tuple(choices)
        self.follow_majority = follow_majority
        self._initial = list(initial_answers) if initial_answers else None
        self._lock = threading.Lock()

    def _seeded_choice(self, prompt_key):
        digest = hashlib.sha256(f"{self.seed}|{prompt_key}".encode()).digest()
        return self.choices[int.from_bytes(digest[:8], "big") % len(self.choices)]

    def chat(self, messages, model, decoding):
        user = next((m["content"] for m in messages if m["role"] == "user"), "")
        system = next((m["content"] for m in messages if m["role"] == "system"), "")
        if self.follow_majority and "Other agents answered:" in user:
            block = user.split("Other agents answered:", 1)[1]
            prev = [extract_answer(line, "mc") for line in block.splitlines()]
            winner, _ = majority_answer(prev)
            if winner is not None:
                return f"Considering the discussion, the answer is ({winner})."
        if self._initial is not None:
            with self._lock:
                if self._initial:
                    letter = self._initial.pop(0)
                    return f"I think the answer is ({letter})."
        letter = self._seeded_choice(f"{system}|{user}|{model}")
        return f"I think the answer is ({letter})."


class ScriptedChatBackend:
    """Returns pre-scripted outputs in call order; raises when exhausted."""

    deterministic = True

    def __init__(self, outputs):
        self._outputs = list(outputs)
        self._lock = threading.Lock()

    def chat(self, messages, model, decoding):
        with self._lock:
            if not self._outputs:
                raise BackendError("scripted backend exhausted")
            out = self._outputs.pop(0)
        if isinstance(out, Exception):
            raise out
        return out


class FailingChatBackend:
    deterministic = True

    def chat(self, messages, model, decoding):
        raise BackendError("backend unavailable")


class MockEmbeddingBackend:
    """Deterministic unit-vector embeddings hashed from the text."""

    deterministic = True

    def __init__(self, dim=8, seed=0, max_batch=None):
        self.dim = dim
        self.seed = seed
        self.max_batch = max_batch

    def embed(self, texts, model=None):
        if self.max_batch is not None and len(texts) > self.max_batch:
            raise BackendError(f"batch of {len(texts)} exceeds limit {self.max_batch}")
        vectors = []
        for t in texts:
            digest = hashlib.sha256(f"{self.seed}|{t}".encode()).digest()
            rng_seed = int.from_bytes(digest[:8], "big")
            rng = np.random.Generator(np.random.Philox(key=rng_seed))
            v = rng.standard_normal(self.dim)
            vectors.append((v / np.linalg.norm(v)).tolist())
        return vectors


def _request_with_retries(session, url, payload, headers, max_retries, backoff, timeout):
    last = None
    for attempt in range(max_retries + 1):
        try:
            resp = session.post(url, json=payload, headers=headers, timeout=timeout)
            if resp.status_code >= 500:
                raise BackendError(f"server error {resp.status_code} from {url}")
            if resp.status_code >= 400:
                # client errors are not transient; fail immediately
                raise BackendError(f"request rejected ({resp.status_code}): {resp.text[:200]}")
            return resp.json()
        except BackendError as exc:
            last = exc
            if "rejected" in str(exc):
                raise
        except (requests.RequestException, ValueError) as exc:
            last = BackendError(str(exc))
        if attempt < max_retries:
            time.sleep(backoff * (2 ** attempt))
    raise last


class OpenAIChatBackend:
    """OpenAI-compatible /chat/completions client with retry and backoff."""

    deterministic = False

    def __init__(self, base_url, api_key=None, session=None, max_retries=3,
                 backoff=1.0, timeout=60.0):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.session = session or requests.Session()
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout

    def _headers(self):
        h = {"Content-Type": "application/json"}
        if self.api_key:
            h["Authorization"] = f"Bearer {self.api_key}"
        return h

    def chat(self, messages, model, decoding):
        payload = {
            "model": model,
            "messages": messages,
            "temperature": decoding.temperature,
            "top_p": decoding.top_p,
            "max_tokens": decoding.max_tokens,
        }
        data = _request_with_retries(
            self.session, f"{self.base_url}/chat/completions", payload,
            self._headers(), self.max_retries, self.backoff, self.timeout,
        )
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed chat response: {data}") from exc


class OpenAIEmbeddingBackend:
    """OpenAI-compatible /embeddings client."""

    deterministic = False

    def __init__(self, base_url, model, api_key=None, session=None, max_retries=3,
                 backoff=1.0, timeout=60.0, max_batch=128):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.session = session or requests.Session()
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout
        self.max_batch = max_batch

    def embed(self, texts, model=None):
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        data = _request_with_retries(
            self.session, f"{self.base_url}/embeddings",
            {"model": model or self.model, "input": list(texts)},
            headers, self.max_retries, self.backoff, self.timeout,
        )
        try:
            rows = sorted(data["data"], key=lambda d: d["index"])
            return [r["embedding"] for r in rows]
        except (KeyError, TypeError) as exc:
            raise BackendError(f"malformed embedding response: {data}") from exc


def fetch_embeddings(texts, backend, model=None):
    """Embed a batch, chunking transparently to the backend's batch limit."""
    texts = list(texts)
    if not texts:
        raise ValueError("texts must be nonempty")
    limit = getattr(backend, "max_batch", None) or len(texts)
    vectors = []
    for start in range(0, len(texts), limit):
        vectors.extend(backend.embed(texts[start:start + limit], model=model))
    if len(vectors) != len(texts):
        raise DimensionMismatch("backend returned wrong number of vectors")
    dims = {len(v) for v in vectors}
    if len(dims) != 1:
        raise DimensionMismatch(f"inconsistent embedding dimensions: {sorted(dims)}")
    return vectors


# ---------------------------------------------------------------------------
# transcripts and workflows


@dataclass
class Transcript:
    task_id: str
    question: str
    gold_answer: str
    workflow: str
    layer: str
    n_agents: int
    rounds: int
    calls: list
    final_answer: str
    tie: bool
    invalid: bool
    timestamp: str
    dataset: str = ""
    schema: int = SCHEMA_VERSION

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d.pop("schema", None)
        return cls(**d, schema=SCHEMA_VERSION)

    @property
    def call_budget(self):
        return self.n_agents * self.rounds


def _task_format(task):
    fmt = task.get("format")
    if fmt:
        return fmt
    return "mc" if task.get("choices") else "numeric"


def _question_text(task):
    q = task["question"]
    choices = task.get("choices")
    if choices:
        letters = [chr(ord("A") + i) for i in range(len(choices))]
        lines = [q, ""] + [f"({l}) {c}" for l, c in zip(letters, choices)]
        lines.append("")
        lines.append("State your final answer as a single letter in parentheses.")
        return "\n".join(lines)
    return q + "\n\nState your final answer as a number after 'Answer:'."


def _timestamp(backend):
    if getattr(backend, "deterministic", False):
        return FIXED_TIMESTAMP
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def _issue_round(configs, prompts, plan, backend, concurrency):
    """Run one round of calls concurrently; results ordered by agent index."""

    def one(i):
        cfg = configs[i]
        messages = []
        persona = plan.persona_text(cfg.persona_id)
        if persona:
            messages.append({"role": "system", "content": persona})
        messages.append({"role": "user", "content": prompts[i]})
        t0 = time.monotonic()
        try:
            raw = backend.chat(messages, cfg.model_id, cfg.decoding)
            err = None
        except Exception as exc:  # recorded, never raised: calls may fail independently
            raw, err = None, str(exc)
        latency = 0 if getattr(backend, "deterministic", False) else int(
            (time.monotonic() - t0) * 1000
        )
        return raw, err, latency

    with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
        return list(pool.map(one, range(len(configs))))


def run_vote(task, plan: DiversityPlan, n_agents, backend, concurrency=4, dataset=""):
    """Independent single-round generation plus majority aggregation.

    Calls share no context.  A transcript with more than half its calls
    failed is marked invalid and carries no final answer.
    """
    if n_agents < 1:
        raise ValueError("n_agents must be >= 1")
    configs = plan.configs(n_agents)
    fmt = _task_format(task)
    prompt = _question_text(task)
    results = _issue_round(configs, [prompt] * n_agents, plan, backend, concurrency)

    calls, answers, failures = [], [], 0
    for i, (raw, err, latency) in enumerate(results):
        ans = extract_answer(raw, fmt) if err is None else None
        calls.append(
            {
                "call_index": i,
                "agent_type_label": configs[i].type_label,
                "round": 1,
                "raw_output": raw,
                "extracted_answer": ans,
                "latency_ms": latency,
                "error": err,
            }
        )
        if err is None:
            answers.append(ans)
        else:
            failures += 1
    invalid = failures * 2 > n_agents
    final, tie = (None, False) if invalid else majority_answer(answers)
    return Transcript(
        task_id=str(task["id"]),
        question=task["question"],
        gold_answer=task.get("answer"),
        workflow="vote",
        layer=plan.layer,
        n_agents=n_agents,
        rounds=1,
        calls=calls,
        final_answer=final,
        tie=tie,
        invalid=invalid,
        timestamp=_timestamp(backend),
        dataset=dataset,
    )


def run_debate(task, plan: DiversityPlan, n_agents, rounds=4, backend=None,
               concurrency=4, dataset=""):
    """Multi-round debate: each later round sees all previous-round outputs.

    Rounds are strict barriers; calls within a round run concurrently.  The
    final answer is the majority over last-round extracted answers with the
    same tie-break as Vote.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    configs = plan.configs(n_agents)
    fmt = _task_format(task)
    base_prompt = _question_text(task)

    calls, failures = [], 0
    last_round_answers = []
    prev_outputs = None
    for r in range(1, rounds + 1):
        if prev_outputs is None:
            prompts = [base_prompt] * n_agents
        else:
            block = "\n".join(
                f"Agent {j + 1}: {out}" for j, out in enumerate(prev_outputs) if out is not None
            )
            prompts = [
                base_prompt
                + "\n\nOther agents answered:\n"
                + block
                + "\n\nReconsider and state your final answer."
            ] * n_agents
        results = _issue_round(configs, prompts, plan, backend, concurrency)
        prev_outputs = [raw for raw, _, _ in results]
        round_answers = []
        for i, (raw, err, latency) in enumerate(results):
            ans = extract_answer(raw, fmt) if err is None else None
            calls.append(
                {
                    "call_index": (r - 1) * n_agents + i,
                    "agent_type_label": configs[i].type_label,
                    "round": r,
                    "raw_output": raw,
                    "extracted_answer": ans,
                    "latency_ms": latency,
                    "error": err,
                }
            )
            if err is None:
                round_answers.append(ans)
            else:
                failures += 1
        last_round_answers = round_answers
    invalid = failures * 2 > n_agents * rounds
    final, tie = (None, False) if invalid else majority_answer(last_round_answers)
    return Transcript(
        task_id=str(task["id"]),
        question=task["question"],
        gold_answer=task.get("answer"),
        workflow="debate",
        layer=plan.layer,
        n_agents=n_agents,
        rounds=rounds,
        calls=calls,
        final_answer=final,
        tie=tie,
        invalid=invalid,
        timestamp=_timestamp(backend),
        dataset=dataset,
    )


# ---------------------------------------------------------------------------
# persistence


class TranscriptStore:
    """Append-only JSONL store of transcripts, one per line."""

    def __init__(self, path):
        self.path = path

    def append(self, transcript: Transcript):
        with open(self.path, "a") as fh:
            fh.write(json.dumps(transcript.to_dict(), sort_keys=True) + "\n")

    def __iter__(self):
        try:
            fh = open(self.path)
        except FileNotFoundError:
            return iter(())
        with fh:
            return iter([Transcript.from_dict(json.loads(line)) for line in fh if line.strip()])

    def task_ids(self):
        return {t.task_id for t in self}


def load_tasks_jsonl(path):
    """Tasks as {"id", "question", "choices"?, "answer"?} objects, one per line."""
    tasks = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                obj["id"], obj["question"]
            except (json.JSONDecodeError, KeyError) as exc:
                raise ValueError(f"malformed task at line {lineno}: {exc}") from exc
            tasks.append(obj)
    return tasks


def load_persona_catalog(path):
    with open(path) as fh:
        catalog = json.load(fh)
    if not isinstance(catalog, dict) or not all(
        isinstance(v, str) for v in catalog.values()
    ):
        raise ValueError("persona catalog must map persona ids to prompt strings")
    return catalog
