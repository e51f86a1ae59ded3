#!/usr/bin/env python3
"""Generate the synthetic fixture catalog, its manifest, and the preference set.

Run from the repository root:

    python3 scripts/gen_fixtures.py

Outputs are written to fixtures/. The generator is seeded, so reruns are
byte-identical.
"""

import json
import random
from collections import Counter
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "fixtures"
SCHEMA = json.loads((ROOT / "crates/core/data/default_schema.json").read_text())

# archetype: list of (region, category, {attribute: value})
ARCHETYPES = {
    "party_dress": [
        ("full_body", "dress", {"dress_length": "mini", "full_body_pattern": "embellished", "full_body_sleeve": "sleeveless"}),
        ("footwear", "formal_shoes", {"shoe_color": "bright", "shoe_closure": "strapped"}),
    ],
    "party_blouse_skirt": [
        ("upper_body", "blouse", {"sleeve_length": "sleeveless", "neckline": "v_neck", "top_pattern": "printed"}),
        ("lower_body", "skirt", {"lower_length": "knee", "lower_fit": "skinny"}),
        ("footwear", "formal_shoes", {"shoe_color": "dark", "shoe_closure": "strapped"}),
    ],
    "party_jumpsuit": [
        ("full_body", "jumpsuit", {"full_body_pattern": "solid", "full_body_sleeve": "sleeved"}),
        ("outerwear", "blazer", {"outer_material": "synthetic", "outer_length": "hip"}),
        ("footwear", "formal_shoes", {"shoe_color": "dark", "shoe_closure": "slip_on"}),
    ],
    "party_edgy": [
        ("upper_body", "tank_top", {"sleeve_length": "sleeveless", "neckline": "crew", "top_pattern": "solid"}),
        ("lower_body", "jeans", {"lower_length": "full", "lower_fit": "skinny"}),
        ("outerwear", "jacket", {"outer_material": "leather", "outer_length": "cropped"}),
        ("footwear", "sneakers", {"shoe_color": "light", "shoe_closure": "laced"}),
    ],
    "smart_shirt": [
        ("upper_body", "shirt", {"sleeve_length": "long", "neckline": "collared", "top_pattern": "checked"}),
        ("lower_body", "chinos", {"lower_length": "full", "lower_fit": "straight"}),
        ("footwear", "formal_shoes", {"shoe_color": "dark", "shoe_closure": "laced"}),
    ],
    "street_tee": [
        ("upper_body", "t-shirt", {"sleeve_length": "short", "neckline": "crew", "top_pattern": "printed"}),
        ("lower_body", "jeans", {"lower_length": "full", "lower_fit": "skinny"}),
        ("outerwear", "jacket", {"outer_material": "leather", "outer_length": "hip"}),
        ("footwear", "sneakers", {"shoe_color": "light", "shoe_closure": "laced"}),
    ],
    "suit": [
        ("full_body", "suit", {"full_body_pattern": "solid"}),
        ("footwear", "formal_shoes", {"shoe_color": "dark", "shoe_closure": "laced"}),
    ],
    "office_blazer": [
        ("upper_body", "shirt", {"sleeve_length": "long", "neckline": "collared", "top_pattern": "solid"}),
        ("lower_body", "trousers", {"lower_length": "full", "lower_fit": "straight"}),
        ("outerwear", "blazer", {"outer_material": "wool", "outer_length": "hip"}),
        ("footwear", "formal_shoes", {"shoe_color": "dark", "shoe_closure": "laced"}),
    ],
    "office_sweater": [
        ("upper_body", "sweater", {"sleeve_length": "long", "neckline": "turtleneck", "top_pattern": "solid"}),
        ("lower_body", "chinos", {"lower_length": "ankle", "lower_fit": "straight"}),
        ("footwear", "formal_shoes", {"shoe_color": "light", "shoe_closure": "slip_on"}),
    ],
    "sport": [
        ("upper_body", "jersey", {"sleeve_length": "short", "neckline": "crew", "top_pattern": "striped"}),
        ("lower_body", "athletic_pants", {"lower_length": "full", "lower_fit": "loose"}),
        ("footwear", "sneakers", {"shoe_color": "bright", "shoe_closure": "laced"}),
    ],
    "travel": [
        ("upper_body", "t-shirt", {"sleeve_length": "short", "neckline": "crew", "top_pattern": "solid"}),
        ("lower_body", "shorts", {"lower_length": "shorts", "lower_fit": "loose"}),
        ("footwear", "sneakers", {"shoe_color": "light", "shoe_closure": "slip_on"}),
    ],
    "wedding_gown": [
        ("full_body", "dress", {"dress_length": "maxi", "full_body_pattern": "embellished", "full_body_sleeve": "sleeved"}),
        ("footwear", "formal_shoes", {"shoe_color": "light", "shoe_closure": "strapped"}),
    ],
    "winter_coat": [
        ("upper_body", "sweater", {"sleeve_length": "long", "neckline": "crew", "top_pattern": "checked"}),
        ("lower_body", "jeans", {"lower_length": "full", "lower_fit": "straight"}),
        ("outerwear", "coat", {"outer_material": "wool", "outer_length": "long"}),
        ("footwear", "sneakers", {"shoe_color": "dark", "shoe_closure": "laced"}),
    ],
}

# (gender, occasion) -> [(archetype, count)]
PLAN = [
    ("female", "Party", [("party_dress", 5), ("party_blouse_skirt", 5), ("party_jumpsuit", 5), ("party_edgy", 5)]),
    ("male", "Party", [("smart_shirt", 5), ("street_tee", 5), ("suit", 4)]),
    ("male", "Office", [("office_blazer", 2), ("office_sweater", 2)]),
    ("female", "Office", [("office_blazer", 2), ("office_sweater", 2)]),
    ("male", "Travel", [("travel", 1), ("winter_coat", 1)]),
    ("female", "Travel", [("travel", 2), ("winter_coat", 1)]),
    ("male", "Sports", [("sport", 3)]),
    ("female", "Sports", [("sport", 2)]),
    ("male", "Dating", [("street_tee", 1)]),
    ("female", "Dating", [("party_dress", 1), ("party_blouse_skirt", 1)]),
    ("male", "Wedding", [("suit", 2)]),
    ("female", "Wedding", [("wedding_gown", 2)]),
    ("female", "Prom", [("party_dress", 1)]),
]

ATTR_VALUES = {a["name"]: a["values"] for a in SCHEMA["attribute_types"]}
AGE_GROUPS = ["18-24", "25-34", "35-44"]


def perturb(rng, regions, max_changes):
    regions = [(r, c, dict(a)) for r, c, a in regions]
    slots = [(i, name) for i, (_, _, attrs) in enumerate(regions) for name in attrs]
    for i, name in rng.sample(slots, rng.randint(0, max_changes)):
        choices = [v for v in ATTR_VALUES[name] if v != regions[i][2][name]]
        regions[i][2][name] = rng.choice(choices)
    return regions


def region_docs(regions):
    return [{"region": r, "category": c, "attributes": a} for r, c, a in regions]


def main():
    rng = random.Random(7)
    records = []
    counter = 0
    for gender, occasion, parts in PLAN:
        for archetype, count in parts:
            for _ in range(count):
                counter += 1
                rid = f"{gender[0]}-{occasion.lower()}-{counter:03d}"
                rec = {
                    "record_id": rid,
                    "gender": gender,
                    "occasion": occasion,
                    "regions": region_docs(perturb(rng, ARCHETYPES[archetype], 1)),
                }
                if counter % 3:
                    rec["age_group"] = rng.choice(AGE_GROUPS)
                if counter % 4:
                    rec["image_ref"] = f"images/{rid}.jpg"
                records.append(rec)
    rng.shuffle(records)
    assert len(records) == 60

    manifest = Counter((r["gender"], r["occasion"]) for r in records)
    manifest_doc = {
        "records": len(records),
        "counts": [
            {"gender": g, "occasion": o, "count": manifest.get((g, o), 0)}
            for g in ("male", "female")
            for o in SCHEMA["occasions"]
        ],
    }

    # a user who mostly wears party dresses, sometimes a blouse and skirt
    images = []
    for i in range(10):
        archetype = "party_dress" if i < 7 else "party_blouse_skirt"
        images.append({"image_id": f"pref_{i:02d}", "regions": region_docs(perturb(rng, ARCHETYPES[archetype], 1))})
    sidecar = {"annotations": {}}
    for img in images:
        sidecar["annotations"][img["image_id"]] = [dict(r, confidence=0.9) for r in img["regions"]]

    OUT.mkdir(exist_ok=True)
    dump = lambda name, doc: (OUT / name).write_text(json.dumps(doc, indent=2) + "\n")
    dump("catalog.json", {"records": records})
    dump("manifest.json", manifest_doc)
    dump("preferences.json", {"images": images})
    dump("annotations.json", sidecar)


if __name__ == "__main__":
    main()
