#!/usr/bin/env python3
"""Regenerates data/demo: a small mock world for trying the lens tool offline.

Images are tiny PPM files; the mock backends key everything on the file name,
so the pixels only matter for unknown uploads (which get hashed).
"""
import json
import pathlib
import random

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data" / "demo"
CLASSES = ["dog", "cat", "bird", "horse", "sheep", "cow", "frog", "fish", "rabbit", "turtle"]
ATTRS = {
    "dog": ["floppy ears", "a wagging tail", "four legs"],
    "cat": ["pointed ears", "whiskers", "four legs"],
    "bird": ["feathers", "a beak", "two wings"],
    "horse": ["a long mane", "hooves", "four legs"],
    "sheep": ["woolly fleece", "hooves", "four legs"],
    "cow": ["black and white patches", "hooves", "four legs"],
    "frog": ["green skin", "long hind legs", "bulging eyes"],
    "fish": ["fins", "scales", "a tail fin"],
    "rabbit": ["long ears", "a fluffy tail", "whiskers"],
    "turtle": ["a shell", "scaly legs", "a small head"],
}
PLACES = ["on the grass", "in a field", "near a fence", "by the water", "in the garden", "under a tree"]


def ppm(path, seed):
    rng = random.Random(seed)
    w = h = 8
    pixels = bytes(rng.randrange(256) for _ in range(w * h * 3))
    path.write_bytes(b"P6\n8 8\n255\n" + pixels)


def jsonl(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))


def main():
    rng = random.Random(7)
    images = ROOT / "images"
    images.mkdir(parents=True, exist_ok=True)

    planted = {}
    pools = {}

    def add_image(name, label, seed):
        ppm(images / name, seed)
        planted[name] = "A photo of " + label
        places = rng.sample(PLACES, 3)
        pools[name] = [f"a {label} {places[0]}", f"an animal {places[1]}", f"a {label} {places[2]}",
                       "a blurry outdoor scene"]

    evals, support = [], []
    for i in range(10):
        label = CLASSES[i % len(CLASSES)]
        name = f"pets-{i:03d}.ppm"
        add_image(name, label, i)
        evals.append({"id": f"pets-{i:03d}", "image": f"images/{name}", "label": label})
    for i in range(20):
        label = CLASSES[(i * 3) % len(CLASSES)]
        name = f"support-{i:03d}.ppm"
        add_image(name, label, 100 + i)
        support.append({"id": f"support-{i:03d}", "image": f"images/{name}", "label": label,
                        "question": "What is the main object in the image?"})

    # the golden VQA example
    ppm(images / "bike.ppm", 999)
    pools["bike.ppm"] = ["a man riding a bicycle down a city street", "a cyclist wearing a blue helmet"]

    header = {"name": "toy-pets", "split": "test", "evaluation": "accuracy", "mode": "close",
              "task": "recognition", "answer_space": CLASSES}
    jsonl(ROOT / "pets-mini.jsonl", [header] + evals)
    jsonl(ROOT / "pets-support.jsonl", [dict(header, split="train")] + support)

    vqa = []
    for i, ex in enumerate(evals):
        vqa.append({"id": f"vqa-{i:03d}", "image": ex["image"], "question": "What animal is in the picture?",
                    "answers": [ex["label"]] * 10})
    jsonl(ROOT / "vqa-mini.jsonl",
          [{"name": "toy-vqa", "split": "val", "evaluation": "vqa-accuracy", "mode": "open", "task": "vqa"}] + vqa)

    (ROOT / "tags.txt").write_text("\n".join(CLASSES) + "\n")
    jsonl(ROOT / "sources.jsonl", [{"source": "toy-animals", "file": "tags.txt"},
                                   {"source": "extras", "classes": ["fence", "tree", "grass"]}])
    jsonl(ROOT / "tags.jsonl",
          [{"kind": "tags", "version": "1", "sources": ["toy-animals"]}] + [{"tag": c} for c in CLASSES])
    jsonl(ROOT / "attributes.jsonl",
          [{"kind": "attributes", "version": "1", "generator_identity": "hand-written"}] +
          [{"class": c, "descriptors": ATTRS[c]} for c in CLASSES])

    fixtures = {
        "encoder": {"dimension": 64, "noise": 0.6, "images": planted},
        "captioner": {"supports_sampling": True, "pools": pools},
        "llm": {"rule": "majority-token", "context_window": 512},
    }
    (ROOT / "fixtures.json").write_text(json.dumps(fixtures, indent=2) + "\n")

    backends = {"encoder": {"kind": "mock", "model_id": "mock-clip", "fixtures": "fixtures.json"},
                "captioner": {"kind": "mock", "model_id": "mock-blip", "fixtures": "fixtures.json"},
                "llm": {"kind": "mock", "model_id": "mock-flan", "fixtures": "fixtures.json"}}
    config = {
        "backends": backends,
        "vocabulary": {"tags": "tags.jsonl", "attributes": "attributes.jsonl"},
        "task": "recognition",
        "modules": {"preset": "recognition", "top_k_tags": 1, "top_k_attributes": 3},
        "seed": 0,
        "max_failure_rate": 0.2,
        "service": {"session_ttl_seconds": 1800, "support": "pets-support.jsonl"},
    }
    (ROOT / "config.json").write_text(json.dumps(config, indent=2) + "\n")
    vqa_config = {
        "backends": backends,
        "task": "vqa",
        "modules": {"enabled": ["captions"], "num_captions": 2, "caption_strategy": "beam", "caption_beams": 5},
        "seed": 0,
    }
    (ROOT / "config-vqa.json").write_text(json.dumps(vqa_config, indent=2) + "\n")

    grid = [
        {"name": "tags", "modules": {"enabled": ["tags"]}},
        {"name": "tags+attributes", "modules": {"enabled": ["tags", "attributes"]}},
        {"name": "tags+attributes+captions", "modules": {"enabled": ["tags", "attributes", "captions"],
                                                          "num_captions": 2, "caption_strategy": "beam"}},
    ]
    (ROOT / "grid.json").write_text(json.dumps(grid, indent=2) + "\n")


if __name__ == "__main__":
    main()
