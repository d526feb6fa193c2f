#!/usr/bin/env python3
"""Regenerates the synthetic demo sets. Every instance is invented; none is
drawn from TACT, Calendar Scheduling or QMSum.

usage: python3 generate.py   (writes qa.jsonl, planning.jsonl, summarization.jsonl)
"""
import json
import random

rng = random.Random(1729)

PEOPLE = ["Ana Lima", "Ben Costa", "Carla Reis", "Diogo Sa", "Eva Nunes", "Filipe Rocha", "Gloria Vaz",
          "Hugo Pinto", "Ines Melo", "Joao Faria", "Karina Luz", "Luis Matos"]
CITIES = ["Lisbon", "Porto", "Braga", "Faro", "Coimbra"]
TEAMS = ["billing", "search", "mobile", "data"]
FILLER = [
    "The building closes early on public holidays.",
    "Parking permits are renewed every January.",
    "A new coffee machine was installed on the third floor.",
    "The quarterly newsletter is sent by the communications office.",
    "Visitors must sign in at the front desk.",
    "The fire drill is scheduled twice a year.",
]


def qa_instance(i):
    staff = rng.sample(PEOPLE, 7)
    rows = []
    for p in staff:
        rows.append({"person": p, "city": rng.choice(CITIES), "team": rng.choice(TEAMS),
                     "join_year": rng.randint(2016, 2023)})
    sentences = []
    for r in rows:
        sentences.append(f"{r['person']} joined the {r['team']} team in {r['join_year']} and works from {r['city']}.")
        if rng.random() < 0.5:
            sentences.append(rng.choice(FILLER))
    kind = i % 3
    if kind == 0:
        city = rng.choice([r["city"] for r in rows])
        query = f"How many people work from {city}?"
        gold = str(sum(r["city"] == city for r in rows))
    elif kind == 1:
        team = rng.choice([r["team"] for r in rows])
        members = [r for r in rows if r["team"] == team]
        first = min(members, key=lambda r: (r["join_year"], staff.index(r["person"])))
        query = f"Who joined the {team} team first?"
        gold = first["person"]
    else:
        year = rng.choice([r["join_year"] for r in rows])
        query = f"Did anyone who joined in {year} work from Faro?"
        gold = "yes" if any(r["join_year"] == year and r["city"] == "Faro" for r in rows) else "no"
    task = {
        "id": f"syn-qa-{i + 1:02d}",
        "family": "qa",
        "query": query,
        "text": "Synthetic staff notes. " + " ".join(sentences),
        "golds": [gold],
        "gold_schema": [
            {"name": "person", "description": "staff member name", "kind": "text"},
            {"name": "team", "description": "team the person joined", "kind": "text"},
            {"name": "join_year", "description": "year the person joined", "kind": "number"},
            {"name": "city", "description": "city the person works from", "kind": "text"},
        ],
        "gold_table": {"slots": ["person", "team", "join_year", "city"],
                       "rows": [[r["person"], r["team"], str(r["join_year"]), r["city"]] for r in rows]},
    }
    return task


DAYS = ["Monday", "Tuesday", "Wednesday", "Thursday", "Friday"]


def fmt(minutes):
    return f"{minutes // 60}:{minutes % 60:02d}"


def planning_instance(i):
    people = rng.sample(PEOPLE, 3)
    day = rng.choice(DAYS)
    slot = rng.choice(range(9 * 60, 16 * 60 + 30, 30))
    lines = []
    for p in people:
        busy = []
        for start in range(9 * 60, 17 * 60, 30):
            if start == slot:
                continue
            if rng.random() < 0.55:
                busy.append(start)
        busy_text = ", ".join(f"{fmt(s)} to {fmt(s + 30)}" for s in busy) or "no meetings"
        lines.append(f"{p} has meetings on {day} during {busy_text};")
    # Make sure the slot is the only common free half hour.
    for start in range(9 * 60, 17 * 60, 30):
        if start == slot:
            continue
        if all(f"{fmt(start)} to {fmt(start + 30)}" not in l for l in lines):
            lines[0] = lines[0][:-1] + f", {fmt(start)} to {fmt(start + 30)};"
    text = (f"You need to schedule a meeting for {', '.join(people)} for half an hour between the work hours "
            f"of 9:00 to 17:00 on {day}.\nHere are the existing schedules for everyone during the day:\n"
            + "\n".join(lines))
    start, end = slot, slot + 30
    return {
        "id": f"syn-plan-{i + 1:02d}",
        "family": "planning",
        "query": (f"You need to schedule a meeting for {', '.join(people)} for half an hour on {day}. "
                  "Find a time that works for everyone's schedule and constraints."),
        "text": text,
        "golds": [f"{day}, {fmt(start)} - {fmt(end)}"],
    }


TOPICS = [
    ("the travel budget", "cut the travel budget by a fifth", "finance will circulate revised limits"),
    ("the office move", "move to the new office in March", "facilities will book the movers"),
    ("the release date", "delay the release by two weeks", "QA will rerun the regression suite"),
    ("hiring", "pause hiring until the summer", "managers will rank open roles"),
    ("the customer survey", "send the survey to all active customers", "support will draft the questions"),
    ("on-call rotation", "shorten on-call shifts to one week", "each team lead will publish a rota"),
]
SPEAKERS = ["Project Manager", "Marketing", "Industrial Designer", "User Interface", "Team Lead"]


def summarization_instance(i):
    topic, decision, action = TOPICS[i % len(TOPICS)]
    speakers = rng.sample(SPEAKERS, 3)
    turns = [
        f"{speakers[0]}: Okay, let's get started. Today we need to talk about {topic}.",
        f"{speakers[1]}: Um, I looked at the numbers and I think we have to change something.",
        f"{speakers[2]}: Right. {rng.choice(FILLER)}",
        f"{speakers[0]}: So my proposal is to {decision}.",
        f"{speakers[1]}: I'm not sure everyone will like that, but it makes sense.",
        f"{speakers[2]}: Agreed. We should {decision}.",
        f"{speakers[0]}: Good. Then {action}.",
        f"{speakers[1]}: Anything else? {rng.choice(FILLER)}",
        f"{speakers[0]}: No, that's it for today.",
    ]
    return {
        "id": f"syn-sum-{i + 1:02d}",
        "family": "summarization",
        "query": f"Summarize the discussion about {topic}.",
        "text": "\n".join(turns),
        "golds": [f"The group discussed {topic} and agreed to {decision}; {action}."],
    }


def write(name, items):
    with open(name, "w", encoding="utf-8") as f:
        for item in items:
            f.write(json.dumps(item) + "\n")


if __name__ == "__main__":
    write("qa.jsonl", [qa_instance(i) for i in range(12)])
    write("planning.jsonl", [planning_instance(i) for i in range(12)])
    write("summarization.jsonl", [summarization_instance(i) for i in range(12)])
