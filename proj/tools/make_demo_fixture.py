#!/usr/bin/env python3
"""Writes the offline demo corpus and its score fixture.

The corpus is five hand-written question threads. Every sentence belongs to
one perspective of its thread or is chit-chat. Scores are synthetic but
structured the way real model outputs are:

* embeddings: perspective direction + a shared "on-topic" direction + noise,
  L2-normalized; chit-chat from every thread sits near one shared small-talk
  direction on the off-topic side;
* relevance: high for perspective sentences, low for chit-chat;
* entailment: grows with embedding similarity; identical pairs score 0.98;
  chit-chat claims are never entailed by another sentence.

Outputs (under data/fixtures/ by default):
  corpus.jsonl      threads in the JSONL ingest format
  scores.json       fixture (version 1) keyed by FNV-1a hashes
  summaries.jsonl   reference bullet summaries for reward-eval

Usage: python3 tools/make_demo_fixture.py [out_dir]
"""

import json
import os
import random
import sys

import numpy as np

DIM = 16
SEED = 20211  # any fixed value; the files are committed

THREADS = [
    {
        "thread_id": "t1",
        "forum": "money",
        "title": "Should I get a secured credit card to build credit?",
        "question": "I am nineteen with no credit history and my bank suggested a secured card.",
        "tags": ["credit-card", "credit-score"],
        "perspectives": [
            [
                "A secured card is the easiest way to start a credit history from nothing.",
                "Put a small recurring bill on the secured card and pay it off every month.",
                "Paying the full statement balance on time is what actually builds your score.",
                "After a year of on time payments most banks upgrade a secured card to a normal one.",
                "Keep the utilization on the secured card below thirty percent of the limit.",
            ],
            [
                "Becoming an authorized user on a parent card can jump start your credit file.",
                "Ask a family member with good history to add you as an authorized user.",
                "The authorized user route works only if the primary holder pays on time.",
                "An authorized user account shows up on your report without you owning the debt.",
            ],
            [
                "A credit builder loan from a credit union is another solid option for beginners.",
                "With a credit builder loan the money sits in savings while you make payments.",
                "Credit unions often offer builder loans with very low fees for students.",
                "The builder loan adds an installment account which helps your credit mix.",
            ],
        ],
        "chitchat": [
            "Thanks for asking this question.",
            "Good luck with everything!",
            "I had the same problem years ago.",
            "Hope this helps you out.",
        ],
    },
    {
        "thread_id": "t2",
        "forum": "softwareengineering",
        "title": "Is it worth learning Rust if I already know C++?",
        "question": "I write C++ at work every day and wonder whether Rust would teach me anything new.",
        "tags": ["rust", "c++", "career"],
        "perspectives": [
            [
                "The borrow checker forces you to think about ownership in a way C++ never does.",
                "Memory safety bugs that haunt C++ code simply fail to compile in Rust.",
                "Learning Rust made my C++ better because I now reason about lifetimes explicitly.",
                "Data races are caught at compile time which is a huge win for concurrent code.",
                "Ownership rules in Rust turn many runtime crashes into compiler errors.",
            ],
            [
                "Cargo alone is a reason to try Rust since dependency management just works.",
                "The Rust tooling with cargo and clippy feels far more modern than CMake.",
                "Formatting and linting come built in so every Rust project looks the same.",
                "Adding a library in Rust takes one line in the cargo manifest.",
            ],
            [
                "The learning curve is steep and the first weeks fighting the compiler hurt.",
                "There are still far fewer Rust jobs than C++ jobs in most industries.",
                "Expect to spend a month before Rust feels productive for real projects.",
                "Job listings asking for Rust are growing but remain a small niche today.",
            ],
        ],
        "chitchat": [
            "Great question by the way.",
            "I am curious what others think about this.",
            "This comes up every few months here.",
            "Just my two cents on the matter.",
        ],
    },
    {
        "thread_id": "t3",
        "forum": "gardening",
        "title": "How do I keep basil alive indoors?",
        "question": "Every basil plant I buy from the grocery store dies within two weeks on my windowsill.",
        "tags": ["basil", "indoor", "herbs"],
        "perspectives": [
            [
                "Basil needs at least six hours of direct sun every single day.",
                "A south facing window is usually the only spot bright enough indoors.",
                "If your window is dim a cheap grow light will keep basil from getting leggy.",
                "Low light is the most common reason indoor basil slowly dies.",
                "Run a grow light for twelve hours a day during the winter months.",
            ],
            [
                "Water basil when the top inch of soil feels dry and never let it sit soggy.",
                "Overwatering rots the roots faster than anything else you could do.",
                "Use a pot with drainage holes so excess water can escape easily.",
                "Grocery store basil is often several plants crammed into one small pot of wet soil.",
            ],
            [
                "Pinch off the flower buds as soon as they appear to keep the leaves coming.",
                "Harvest from the top just above a pair of leaves so the plant branches out.",
                "Regular pruning makes basil bushy instead of tall and woody.",
                "Never strip more than a third of the leaves at one time.",
            ],
        ],
        "chitchat": [
            "Basil is my favorite herb too.",
            "Lol I kill every plant I touch.",
            "Welcome to the forum!",
            "Pesto season is the best.",
        ],
    },
    {
        "thread_id": "t4",
        "forum": "languagelearning",
        "title": "What is the best way to learn a new language as an adult?",
        "question": "I am thirty five and want to become conversational in Spanish within a year.",
        "tags": ["spanish", "adult-learning"],
        "perspectives": [
            [
                "Immersion beats everything else if you can manage to live abroad for a while.",
                "Surround yourself with the language through podcasts and television every day.",
                "Switching your phone and computer to Spanish gives you constant small exposure.",
                "Listening to native speech for hours trains your ear faster than any textbook.",
                "Watching shows with Spanish subtitles helped me more than my classes did.",
            ],
            [
                "Spaced repetition flashcards are the most efficient way to build vocabulary.",
                "Ten minutes of flashcard review every day adds up to thousands of words.",
                "Anki decks with audio let you learn pronunciation and vocabulary together.",
                "Consistency with spaced repetition matters more than long study sessions.",
            ],
            [
                "Talk to native speakers from the very first week even if it feels awkward.",
                "An online tutor for two hours a week forces you to actually speak.",
                "Speaking practice is where most adult learners fall behind.",
                "Language exchange partners are free and usually happy to help.",
            ],
        ],
        "chitchat": [
            "Buena suerte amigo!",
            "I am learning Italian myself right now.",
            "Thirty five is not old at all.",
            "Following this thread for ideas.",
        ],
    },
    {
        "thread_id": "t5",
        "forum": "softwareengineering",
        "title": "Tabs or spaces for indentation?",
        "question": "Our team keeps arguing about indentation in code review and we need to settle it.",
        "tags": ["coding-style", "formatting"],
        "perspectives": [
            [
                "Consistency within a codebase matters far more than which option you pick.",
                "Pick whatever the existing code uses and stop debating it in reviews.",
                "Write the decision into your team style guide so the argument never returns.",
                "Mixing tabs and spaces in one project is the only truly wrong answer.",
                "A shared convention saves reviewers from commenting on whitespace forever.",
            ],
            [
                "Tabs let every developer choose their own visual indentation width.",
                "Visually impaired developers often rely on tabs to set a comfortable width.",
                "Tabs are better for accessibility because the display width is adjustable.",
                "Screen reader users have said that tabs make navigation through code easier.",
            ],
            [
                "Let an automatic formatter decide and run it on every commit.",
                "Tools like clang format or prettier end the discussion completely.",
                "A formatter in continuous integration rejects badly indented code automatically.",
                "Configure the editor to format on save so nobody thinks about it again.",
            ],
        ],
        "chitchat": [
            "Here we go again.",
            "Obligatory reference to that famous sitcom scene.",
            "I will grab the popcorn for this one.",
            "Holy wars never end on this site.",
        ],
    },
]

ANSWERS_PER_THREAD = 3


def normalize(text):
    return " ".join(text.lower().split())


def text_hash(text):
    h = 0xCBF29CE484222325
    for b in normalize(text).encode("utf-8"):
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return f"{h:016x}"


def unit(v):
    return v / np.linalg.norm(v)


def build(out_dir):
    rng = np.random.default_rng(SEED)
    pyrng = random.Random(SEED)
    on_topic = np.zeros(DIM)
    on_topic[0] = 1.0
    small_talk = unit(np.concatenate([[0.0], rng.normal(size=DIM - 1)]))

    corpus, summaries = [], []
    fixture = {"version": 1, "dim": DIM, "embeddings": {}, "entailments": {}, "relevance": {}}

    for t in THREADS:
        # Orthogonal perspective directions in the non-topic subspace.
        raw = rng.normal(size=(len(t["perspectives"]), DIM - 1))
        q, _ = np.linalg.qr(raw.T)
        directions = [np.concatenate([[0.0], q[:, k]]) for k in range(len(t["perspectives"]))]

        labelled = []  # (text, perspective index or None)
        for k, sents in enumerate(t["perspectives"]):
            labelled += [(s, k) for s in sents]
        labelled += [(s, None) for s in t["chitchat"]]

        embeddings = {}
        for text, k in labelled:
            if k is None:
                base = small_talk - 0.5 * on_topic
            else:
                base = directions[k] + 0.35 * on_topic
            embeddings[text] = unit(base + rng.normal(scale=0.12, size=DIM))

        question = t["title"] + " " + t["question"]
        for text, k in labelled:
            rel = pyrng.uniform(0.7, 0.97) if k is not None else pyrng.uniform(0.03, 0.3)
            fixture["relevance"][text_hash(question) + "|" + text_hash(text)] = round(rel, 6)
            fixture["embeddings"][text_hash(text)] = [round(float(x), 8) for x in embeddings[text]]

        for p_text, _ in labelled:
            for c_text, c_label in labelled:
                if p_text == c_text:
                    prob = 0.98
                elif c_label is None:
                    prob = pyrng.uniform(0.01, 0.08)
                else:
                    cos = float(embeddings[p_text] @ embeddings[c_text])
                    prob = 0.04 + 0.9 * max(0.0, cos) ** 2 + pyrng.uniform(-0.03, 0.03)
                prob = min(1.0, max(0.0, prob))
                key = text_hash(p_text) + "|" + text_hash(c_text)
                fixture["entailments"][key] = round(prob, 6)

        # Deal sentences round-robin into answers after a fixed shuffle so each
        # answer mixes perspectives.
        order = list(range(len(labelled)))
        pyrng.shuffle(order)
        answers = [[] for _ in range(ANSWERS_PER_THREAD)]
        for pos, idx in enumerate(order):
            answers[pos % ANSWERS_PER_THREAD].append(labelled[idx][0])
        record = {
            "thread_id": t["thread_id"],
            "forum": t["forum"],
            "title": t["title"],
            "question": t["question"],
            "tags": t["tags"],
            "answers": [
                {"id": f"{t['thread_id']}a{i + 1}", "body": " ".join(a), "score": 3 - i}
                for i, a in enumerate(answers)
            ],
        }
        words = [len(a["body"].split()) for a in record["answers"]]
        total = sum(words)
        assert 100 < total < 1000 and 50 < total / len(words) < 300 and max(words) < 400, words
        corpus.append(record)
        summaries.append(
            {"thread_id": t["thread_id"], "summary": [sents[0] for sents in t["perspectives"]]}
        )

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "corpus.jsonl"), "w") as f:
        for r in corpus:
            f.write(json.dumps(r) + "\n")
    with open(os.path.join(out_dir, "scores.json"), "w") as f:
        json.dump(fixture, f, indent=1, sort_keys=True)
        f.write("\n")
    with open(os.path.join(out_dir, "summaries.jsonl"), "w") as f:
        for r in summaries:
            f.write(json.dumps(r) + "\n")


if __name__ == "__main__":
    build(sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "data", "fixtures"))
