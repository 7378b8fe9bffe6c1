"""Regenerates the checked-in fixture files.

    python3 generate.py

Writes a small Yelp-style dataset (hotels plus a few restaurants), a
12-record review file with one malformed line, and the expected stats
table of the filtered hotel corpus computed independently with numpy.
"""

import csv
import json
import os

import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
HOTEL_TAGS = ["Hotels", "Mountain Huts", "Residences", "Rest Stops",
              "Bed & Breakfast", "Hostels", "Resorts"]
MIN_REVIEWS = 5

POS = ["great", "excellent", "clean", "friendly", "comfortable", "lovely",
       "amazing", "helpful", "nice", "perfect"]
NEG = ["dirty", "rude", "terrible", "awful", "noisy", "bad", "horrible",
       "disappointing", "worst"]
NOUNS = ["room", "staff", "breakfast", "bed", "location", "pool", "lobby",
         "view", "service", "bathroom", "parking", "wifi", "elevator", "desk"]
FILLER = ["We stayed {n} nights in {m}.", "Booked through the website for a {t} trip.",
          "Check in took about {n} minutes.", "The {x} is close to the river and the old town."]
MONTHS = ["March", "April", "June", "August", "October", "December"]
TRIPS = ["business", "family", "weekend", "conference"]


def sentence(rng, stars):
    if rng.random() < 0.3:
        tmpl = FILLER[rng.integers(len(FILLER))]
        return tmpl.format(n=int(rng.integers(1, 9)), m=MONTHS[rng.integers(len(MONTHS))],
                           t=TRIPS[rng.integers(len(TRIPS))], x=NOUNS[rng.integers(len(NOUNS))])
    p_pos = (stars - 1) / 4 * 0.8 + 0.1
    adj = POS[rng.integers(len(POS))] if rng.random() < p_pos else NEG[rng.integers(len(NEG))]
    noun = NOUNS[rng.integers(len(NOUNS))]
    lead = "really " if rng.random() < 0.2 else ""
    return f"The {noun} was {lead}{adj}."


def build_dataset(rng):
    businesses = []
    for h in range(30):
        tags = ["Hotels & Travel", HOTEL_TAGS[h % len(HOTEL_TAGS)]]
        if h % 4 == 0:
            tags.append("Event Planning & Services")
        businesses.append({"business_id": f"hotel{h:02d}", "name": f"Hotel {h}",
                           "categories": ", ".join(tags)})
    for f in range(8):
        businesses.append({"business_id": f"food{f:02d}", "name": f"Diner {f}",
                           "categories": ["Restaurants", "Pizza" if f % 2 else "Thai"]})
    # tagged but never reviewed
    businesses.append({"business_id": "hotel_empty", "name": "Empty", "categories": "Hotels"})
    businesses.append({"business_id": "misc00", "name": "Gym", "categories": None})

    quality = {b["business_id"]: rng.normal(0, 0.8) for b in businesses}
    reviews = []
    rid = 0
    for u in range(40):
        bias = rng.normal(0, 0.7)
        verbosity = rng.uniform(0.5, 2.0)
        n_hotels = int(rng.integers(2, 15))
        hotels = rng.choice(30, size=n_hotels, replace=False)
        visits = [f"hotel{h:02d}" for h in sorted(hotels)]
        visits += [f"food{f:02d}" for f in rng.choice(8, size=int(rng.integers(0, 4)), replace=False)]
        if u % 9 == 0 and visits:
            visits.append(visits[0])  # a repeated stay
        for item in visits:
            stars = int(np.clip(np.rint(3.5 + bias + quality[item] + rng.normal(0, 0.7)), 1, 5))
            n_sent = max(1, int(rng.poisson(4 * verbosity)))
            text = " ".join(sentence(rng, stars) for _ in range(n_sent))
            words = len(text.split())
            lam = 0.04 * words * (1.5 if stars >= 4 else 0.7)
            useful = int(rng.poisson(lam))
            funny = int(rng.poisson(lam * 0.2))
            cool = int(rng.poisson(lam * 0.3))
            day = 1 + rid % 28
            reviews.append({
                "review_id": f"r{rid:04d}", "user_id": f"user{u:02d}", "business_id": item,
                "stars": float(stars), "useful": useful, "funny": funny, "cool": cool,
                "text": text, "date": f"2016-{1 + rid % 12:02d}-{day:02d}",
            })
            rid += 1
    return businesses, reviews


def filtered(businesses, reviews):
    tags = {t.lower() for t in HOTEL_TAGS}
    cats = {}
    for b in businesses:
        c = b["categories"]
        if isinstance(c, str):
            c = [t.strip() for t in c.split(",")]
        cats[b["business_id"]] = {t.lower() for t in (c or [])}
    kept = [r for r in reviews if cats.get(r["business_id"], set()) & tags]
    per_user = {}
    for r in kept:
        per_user[r["user_id"]] = per_user.get(r["user_id"], 0) + 1
    return [r for r in kept if per_user[r["user_id"]] >= MIN_REVIEWS]


def summary(name, values):
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return [name, 0, "", "", "", "", ""]
    std = f"{np.std(v, ddof=1):.6f}" if v.size >= 2 else ""
    return [name, v.size, f"{v.min():.6f}", f"{v.max():.6f}", f"{v.mean():.6f}", std,
            f"{np.median(v):.6f}"]


def group_std(reviews, key, value):
    groups = {}
    for r in reviews:
        groups.setdefault(r[key], []).append(value(r))
    return [np.std(g, ddof=1) for _, g in sorted(groups.items()) if len(g) >= 2]


def stats_rows(reviews):
    by_user, by_item = {}, {}
    for r in reviews:
        by_user[r["user_id"]] = by_user.get(r["user_id"], 0) + 1
        by_item[r["business_id"]] = by_item.get(r["business_id"], 0) + 1
    stars = lambda r: r["stars"]
    length = lambda r: len(r["text"].split())
    count = lambda name, n: [name, n, "", "", "", "", ""]
    return [
        count("Number of reviews", len(reviews)),
        count("Number of users", len(by_user)),
        count("Number of items", len(by_item)),
        summary("Number of reviews x user", list(by_user.values())),
        summary("Number of reviews x item", list(by_item.values())),
        summary("Number of helpfulness votes x review",
                [r["useful"] + r["funny"] + r["cool"] for r in reviews]),
        summary("Rating values", [stars(r) for r in reviews]),
        summary("Review length", [length(r) for r in reviews]),
        summary("STD of rating values x user", group_std(reviews, "user_id", stars)),
        summary("STD of rating values x item", group_std(reviews, "business_id", stars)),
        summary("STD of review length x user", group_std(reviews, "user_id", length)),
        summary("STD of review length x item", group_std(reviews, "business_id", length)),
    ]


def twelve_records(rng):
    lines = []
    for i in range(12):
        if i == 6:
            lines.append('{"review_id": "t06", "user_id": "a", "business_id": ')
            continue
        lines.append(json.dumps({
            "review_id": f"t{i:02d}", "user_id": f"u{i % 4}", "business_id": f"b{i % 3}",
            "stars": float(1 + i % 5), "useful": i % 3, "funny": 0, "cool": i % 2,
            "text": f"Review number {i} of a small hotel.", "date": "2017-01-01",
        }))
    return lines


def main():
    rng = np.random.default_rng(20190401)
    businesses, reviews = build_dataset(rng)
    with open(os.path.join(HERE, "yelp_business.jsonl"), "w") as f:
        for b in businesses:
            f.write(json.dumps(b) + "\n")
    with open(os.path.join(HERE, "yelp_reviews.jsonl"), "w") as f:
        for r in reviews:
            f.write(json.dumps(r) + "\n")
    with open(os.path.join(HERE, "reviews_12.jsonl"), "w") as f:
        f.write("\n".join(twelve_records(rng)) + "\n")
    with open(os.path.join(HERE, "stats_golden.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["variable", "count", "min", "max", "mean", "std", "median"])
        w.writerows(stats_rows(filtered(businesses, reviews)))


if __name__ == "__main__":
    main()
