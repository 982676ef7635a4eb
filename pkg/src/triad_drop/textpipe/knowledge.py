"""Curated pedagogical knowledge base.

Ships as a versioned directory: a manifest plus one text file per passage,
with passage embeddings cached in a bundle beside them. The built-in
passages cover the course FAQs, study guides, exemplar forum threads and
policy notes that ground comment interpretation and alert rationales.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..bundle import load_bundle, save_bundle
from .embedding import EmbeddingProvider
from .retrieval import KnowledgePassage, VectorIndex, build_index

KB_VERSION = "kb-2024.2"

_DEFAULT_PASSAGES = [
    ("faq-001", "faq", "Peer study groups",
     "Feeling isolated or alone while studying at a distance is common and it is not a sign "
     "that you do not belong here. Peer study groups pair you with two or three learners in "
     "your module so nobody works lonely or unsupported. Mentors report the weekly calls are "
     "encouraging and most members say the group kept them motivated through difficult weeks. "
     "Ask your tutor for an invite to the mentorship cohort at any time."),
    ("faq-002", "faq", "Failed quiz and resit options",
     "A failed quiz can feel disappointing and many learners describe the first failing grade "
     "as a discouraging setback. It is rarely final: every module quiz offers one resit, and "
     "your best score counts. Review the worked answers, book a tutor slot if the material "
     "stays unclear, and attempt the resit within two weeks."),
    ("faq-003", "faq", "Resubmission portal problems",
     "When the resubmission portal is down or an upload fails, it is frustrating and stressful, "
     "especially close to a deadline. Do not panic: submissions delayed by a documented portal "
     "outage are never penalised. Email the module inbox with a screenshot and your draft "
     "attached, and the deadline is extended automatically."),
    ("faq-004", "faq", "Requesting a deadline extension",
     "Extensions are there to keep a heavy workload from becoming overwhelming. If deadlines "
     "pile up or personal circumstances interfere, request an extension through the portal "
     "before the due date. Most requests are approved within one working day, which learners "
     "find reassuring and helpful."),
    ("faq-005", "faq", "Where to ask content questions",
     "Post content questions in the module forum rather than emailing tutors directly. Tag the "
     "week and the topic in the subject line. Questions tagged this way are answered within "
     "one working day and stay searchable for other learners."),
    ("guide-001", "study-guide", "Time management for distance learners",
     "A realistic weekly plan beats a heroic one. Block two or three short study sessions per "
     "module and protect them like appointments. If you feel overloaded or swamped, cut the "
     "plan in half rather than abandoning it; steady progress is encouraging and sustainable. "
     "The time-management webinar walks through a full example plan."),
    ("guide-002", "study-guide", "Working through confusing material",
     "When a topic seems confusing or the notes are unclear, switch mode instead of rereading: "
     "attempt one exercise, watch the worked example, then write a two-line summary in your "
     "own words. If you are still stuck or lost after one session, post the exact step that "
     "puzzled you in the forum; precise questions get precise answers."),
    ("guide-003", "study-guide", "Preparing for module quizzes",
     "Quizzes reward spaced practice. Take the practice quiz twice: once open-book, once "
     "closed. Mark every question you hesitated on and revisit those topics before the graded "
     "attempt. Learners who follow this routine report the real quiz feels routine rather than "
     "stressful."),
    ("guide-004", "study-guide", "Getting value from feedback",
     "Feedback on essay drafts and lab reports is most useful within 48 hours of release. Read "
     "it once without defending your work, then list the two changes with the biggest mark "
     "impact. Bring that list to office hours; tutors find focused questions rewarding to "
     "answer."),
    ("forum-001", "forum-exemplar", "I thought I was the only one behind",
     "Last term I fell behind in week 4 and felt alone and honestly a bit invisible in the "
     "cohort. Posting about it was the turning point: three people replied the same evening, "
     "we set up a shared plan, and the workload stopped feeling crushing. If you feel "
     "disconnected, say so in the thread; the replies are encouraging."),
    ("forum-002", "forum-exemplar", "How I recovered from a failed module quiz",
     "I failed the module 2 quiz and was convinced the course was not for me. The resit system "
     "changed that: I booked a tutor call, redid the practice set, and passed the resit with a "
     "comfortable margin. One disappointing grade is a data point, not a verdict."),
    ("forum-003", "forum-exemplar", "Juggling a job and the final project",
     "Working full time while the final project deadline approached left me overwhelmed and "
     "exhausted. What worked: a fifteen-minute daily minimum, asking for a one-week extension "
     "early, and telling my study group exactly where I was stuck. Juggling gets easier when "
     "the plan is honest."),
    ("forum-004", "forum-exemplar", "Asking a precise question saved my week",
     "I spent two days stuck and confused on the statistics assignment, then posted the exact "
     "line where I got lost. A classmate spotted the issue in minutes. Lesson learned: vague "
     "frustration gets sympathy, precise questions get answers."),
    ("policy-001", "policy", "Attendance and engagement checkpoints",
     "Engagement is reviewed at weeks 3, 7 and 11. A learner with no submissions and no forum "
     "activity at a checkpoint is contacted by their tutor before any formal step. The contact "
     "is supportive by design: the goal is to find blockers early, not to penalise."),
    ("policy-002", "policy", "Support escalation pathway",
     "Tutors escalate in two steps. A wellbeing flag first triggers a peer-mentor email within "
     "48 hours; if the learner does not respond within seven days, a counsellor call is "
     "scheduled. Workload flags route to the time-management webinar, then one-to-one "
     "coaching. Confusion flags route to the FAQ and a tagged forum thread, then a live Q&A "
     "session."),
    ("policy-003", "policy", "Fee status and grace periods",
     "A learner whose tuition fees are not up to date keeps full platform access for a 30-day "
     "grace period. Financial-aid advisers can arrange instalment plans; debtor status alone "
     "never blocks access to assessments during an active term."),
]


@dataclass
class KnowledgeBase:
    passages: list
    index: VectorIndex
    version: str


def default_passages(provider: EmbeddingProvider) -> list:
    return [
        KnowledgePassage(id=pid, source=source, title=title, text=text,
                         embedding=provider.embed(f"{title}. {text}"))
        for pid, source, title, text in _DEFAULT_PASSAGES
    ]


def write_knowledge_base(directory: str | Path) -> Path:
    """Materialize the built-in passages as a versioned directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for pid, source, title, text in _DEFAULT_PASSAGES:
        filename = f"{pid}.txt"
        (directory / filename).write_text(text, encoding="utf-8")
        entries.append({"id": pid, "source": source, "title": title, "file": filename})
    manifest = {"version": KB_VERSION, "passages": entries}
    (directory / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
    )
    return directory


def load_knowledge_base(directory: str | Path, provider: EmbeddingProvider,
                        use_cache: bool = True) -> KnowledgeBase:
    """Load a knowledge-base directory and build (or reuse) its index cache."""
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    version = manifest["version"]

    cache_path = directory / "index.cache"
    cached = None
    if use_cache and cache_path.exists():
        meta, arrays = load_bundle(cache_path)
        if meta.get("kb_version") == version and meta.get("provider") == provider.name:
            cached = arrays["embeddings"]

    passages = []
    fresh = []
    for i, entry in enumerate(manifest["passages"]):
        text = (directory / entry["file"]).read_text(encoding="utf-8")
        if cached is not None:
            embedding = cached[i]
        else:
            embedding = provider.embed(f"{entry['title']}. {text}")
            fresh.append(embedding)
        passages.append(
            KnowledgePassage(id=entry["id"], source=entry["source"],
                             title=entry["title"], text=text, embedding=embedding)
        )

    index = build_index(passages)
    if use_cache and cached is None:
        # cached rows follow manifest order, not the index's id-sorted order
        save_bundle(cache_path, {"kb_version": version, "provider": provider.name},
                    {"embeddings": np.stack(fresh)})
    return KnowledgeBase(passages=index.passages, index=index, version=version)
