#!/usr/bin/env python3
"""Regenerates fixtures/yelp-mini.

Reviews are stitched together from small sentence banks, and the replay
file holds a synthetic top-k for every (prompt, review) request the run
could make. Everything is driven by fixed seeds so the output is stable.

    python3 tools/make_yelp_mini.py [--out fixtures/yelp-mini]
"""

import argparse
import hashlib
import json
import math
import random
from pathlib import Path

MODEL = "text-davinci-002"
TOP_LOGPROBS = 5

PROMPTS = [
    ("c1-short", "C1", "short",
     "I just finished eating at a restaurant. Then I opened my Yelp app. I first gave a rating, and "
     "then justified it by the following review: {review} The review explains why I gave it a rating of"),
    ("c2-short", "C2", "short",
     "I just finished eating at a restaurant. Then I opened my Yelp app. I first wrote the following "
     "review: {review} Then I read my review and finally gave a rating of"),
    ("c3-short", "C3", "short",
     "I opened my Yelp app, and started reading reviews of a restaurant. I saw a user wrote this review: "
     "{review} I think this user gave a rating of"),
]

POSITIVE = """amazing awesome beautiful best cozy delicious excellent fantastic fresh friendly
generous good great happy lovely nice perfect pleasant recommend superb tasty wonderful
attentive fun clean crispy""".split()

NEGATIVE = """awful bad bland burnt cold dirty disappointing gross horrible mediocre overpriced
rude slow soggy stale terrible unfriendly worst greasy noisy salty lukewarm bitter sloppy""".split()

BANK = {
    "pos": [
        "The {p} staff made us feel welcome from the start.",
        "Every dish was {p} and the portions were {p}.",
        "I would {p2} this place to anyone who loves good food.",
        "Our server was {p} and the dessert was {p}.",
        "Honestly the {p} atmosphere alone is worth the trip.",
        "The pasta came out {p} and the bread was {p}.",
    ],
    "neg": [
        "The food arrived {n} and the service was {n}.",
        "Our waiter was {n} and the tables were {n}.",
        "Everything tasted {n}, and the bill felt {n}.",
        "I waited forever for a {n} burger.",
        "The fries were {n} and the soup was {n}.",
        "Sadly the whole night was {n} from start to finish.",
    ],
    "neutral": [
        "We came here on a Tuesday for dinner.",
        "Parking was easy to find on the street.",
        "They have a short menu with a few specials.",
        "The place was about half full when we arrived.",
        "I ordered the chicken and my friend had the salad.",
        "It is a small spot near the old train station.",
    ],
}

# (positive sentences, negative sentences) per gold label
MIX = {1: (0, 3), 2: (1, 2), 3: (1, 1), 4: (2, 1), 5: (3, 0)}

LABEL_WORDS = ["one", "two", "three", "four", "five"]

# Per-prompt model personality: how sharp, how noisy, and how much the
# prompt drags mass toward the middle rating.
STYLE = {
    "c1-short": {"sharp": 2.6, "noise": 0.45, "bias3": 0.9},
    "c2-short": {"sharp": 3.0, "noise": 0.35, "bias3": 0.5},
    "c3-short": {"sharp": 2.2, "noise": 0.55, "bias3": 1.2},
}


def review(rng, gold):
    n_pos, n_neg = MIX[gold]
    parts = [rng.choice(BANK["neutral"])]
    for _ in range(n_pos):
        s = rng.choice(BANK["pos"])
        parts.append(s.replace("{p2}", "recommend").replace("{p}", rng.choice(POSITIVE), 1)
                     .replace("{p}", rng.choice(POSITIVE)))
    for _ in range(n_neg):
        s = rng.choice(BANK["neg"])
        parts.append(s.replace("{n}", rng.choice(NEGATIVE), 1).replace("{n}", rng.choice(NEGATIVE)))
    body = parts[1:]
    rng.shuffle(body)
    parts = parts[:1] + body
    if rng.random() < 0.5:
        parts.append(rng.choice(BANK["neutral"]))
    return " ".join(parts)


def make_split(prefix, per_label, seed):
    rng = random.Random(seed)
    rows = []
    for gold in range(1, 6):
        for _ in range(per_label):
            rows.append({"id": "", "text": review(rng, gold), "label": gold})
    rng.shuffle(rows)
    for i, r in enumerate(rows):
        r["id"] = f"{prefix}-{i:03d}"
    return rows


def canonical(prompt_text):
    req = {"max_tokens": 1, "model_id": MODEL, "prompt_text": prompt_text,
           "temperature": 0.0, "top_logprobs": TOP_LOGPROBS}
    return json.dumps(req, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def digest(prompt_text):
    return hashlib.sha256(canonical(prompt_text).encode("utf-8")).hexdigest()


def topk_for(prompt_id, sample):
    key = hashlib.sha256(f"{prompt_id}|{sample['id']}".encode()).digest()
    rng = random.Random(int.from_bytes(key[:8], "big"))
    st = STYLE[prompt_id]
    gold = sample["label"]
    # Shared per-review misreading, so prompts can agree on a wrong label.
    shared = random.Random(sample["id"]).gauss(0.0, 0.6)
    center = gold + shared + rng.gauss(0.0, st["noise"])
    logits = []
    for label in range(1, 6):
        z = -st["sharp"] * abs(label - center) + rng.gauss(0.0, 0.3)
        if label == 3:
            z += st["bias3"]
        logits.append(z)
    m = max(logits)
    mass = [math.exp(z - m) for z in logits]
    total = sum(mass) / 0.9  # leave 10% for non-label tokens
    tokens = []
    for label in range(1, 6):
        p = mass[label - 1] / total
        split = 0.55 + 0.4 * rng.random()
        tokens.append((f" {label}", p * split))
        rest = p * (1.0 - split)
        if rng.random() < 0.5:
            tokens.append((f" {LABEL_WORDS[label - 1]}", rest))
        else:
            tokens.append((f"{label}", rest))
    for filler in (" stars", "\n", " the"):
        tokens.append((filler, 0.1 * rng.uniform(0.05, 0.45)))
    tokens.sort(key=lambda t: (-t[1], t[0]))
    # Record a little more than the request width; the backend truncates.
    return [{"token": t, "logprob": round(math.log(p), 6)} for t, p in tokens[:TOP_LOGPROBS + 2]]


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False, separators=(",", ":")) + "\n")


def toml_str(s):
    return json.dumps(s, ensure_ascii=False)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "fixtures" / "yelp-mini"))
    args = ap.parse_args()
    out = Path(args.out)
    (out / "lexicon").mkdir(parents=True, exist_ok=True)

    test = make_split("t", 6, 7001)
    train = make_split("c", 10, 7002)
    write_jsonl(out / "test.jsonl", test)
    write_jsonl(out / "train.jsonl", train)

    with open(out / "pack.toml", "w", encoding="utf-8", newline="\n") as f:
        f.write('name = "yelp-mini"\n')
        for pid, tag, variant, text in PROMPTS:
            f.write(f"\n[[prompt]]\nid = {toml_str(pid)}\ncausal_tag = {toml_str(tag)}\n"
                    f"variant_tag = {toml_str(variant)}\ntemplate = {toml_str(text)}\n")

    lines = []
    for pid, _, _, text in PROMPTS:
        for sample in train + test:
            prompt = text.replace("{review}", sample["text"])
            lines.append({"request_digest": digest(prompt), "topk": topk_for(pid, sample)})
    write_jsonl(out / "replay.jsonl", lines)

    for name, words in (("positive", POSITIVE), ("negative", NEGATIVE)):
        with open(out / "lexicon" / f"{name}.txt", "w", encoding="utf-8", newline="\n") as f:
            f.write(f"; {name} opinion words for the yelp-mini fixture\n;\n")
            for w in sorted(words):
                f.write(w + "\n")

    with open(out / "config.toml", "w", encoding="utf-8", newline="\n") as f:
        f.write(
            'dataset = "test.jsonl"\n'
            'calib_dataset = "train.jsonl"\n'
            'prompt_pack = "pack.toml"\n'
            'cache_dir = "cache"\n'
            'output_dir = "out"\n'
            "calib_size = 25\n"
            "test_size = 30\n"
            "seed = 42\n"
            'entropy_base = "bits"\n'
            "random_subset_size = 10\n"
            "decile_fraction = 0.1\n"
            "\n[backend]\n"
            'kind = "replay"\n'
            'fixture = "replay.jsonl"\n'
            f'model = "{MODEL}"\n'
            f"top_logprobs = {TOP_LOGPROBS}\n"
            "concurrency = 4\n"
            "\n[lexicon]\n"
            'positive = "lexicon/positive.txt"\n'
            'negative = "lexicon/negative.txt"\n'
        )


if __name__ == "__main__":
    main()
