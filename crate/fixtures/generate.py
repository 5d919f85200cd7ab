"""Regenerates the synthetic project under fixtures/synthetic.

Everything here is made up: occupations get a handful of latent traits, the
descriptor scores are noisy functions of those traits on a native 1-5 scale,
and the panel and survey responses are drawn around them. Output is
deterministic for a given numpy version.

    python3 fixtures/generate.py
"""
import csv
import importlib.util
import math
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent
OUT = ROOT / "synthetic"
SEED = 20240511
DIM = 16

spec = importlib.util.spec_from_file_location(
    "hash_embed", ROOT.parent / "crates/core/tests/oracles/hash_embed.py"
)
hash_embed = importlib.util.module_from_spec(spec)
spec.loader.exec_module(hash_embed)

# (code, title, physical, cognitive, social, hazard, pace, primary industry)
OCCUPATIONS = [
    ("11-1021", "General and operations managers", 0.10, 0.80, 0.80, 0.10, 0.60, "finance"),
    ("13-2011", "Accountants and auditors", 0.05, 0.80, 0.40, 0.05, 0.50, "finance"),
    ("15-1252", "Software developers", 0.05, 0.95, 0.40, 0.05, 0.50, "finance"),
    ("17-2051", "Civil engineers", 0.30, 0.85, 0.50, 0.30, 0.50, "construction"),
    ("19-1029", "Biological scientists", 0.25, 0.90, 0.40, 0.20, 0.40, "health"),
    ("21-1021", "Child, family, and school social workers", 0.20, 0.60, 0.90, 0.20, 0.60, "public"),
    ("23-1011", "Lawyers", 0.05, 0.90, 0.70, 0.05, 0.70, "finance"),
    ("25-2021", "Elementary school teachers", 0.30, 0.60, 0.90, 0.10, 0.60, "public"),
    ("25-4022", "Librarians", 0.20, 0.60, 0.60, 0.05, 0.30, "public"),
    ("27-3031", "Public relations specialists", 0.05, 0.70, 0.85, 0.05, 0.60, "finance"),
    ("29-1141", "Registered nurses", 0.60, 0.70, 0.85, 0.50, 0.80, "health"),
    ("29-1215", "Family medicine physicians", 0.30, 0.95, 0.80, 0.30, 0.70, "health"),
    ("31-1131", "Nursing assistants", 0.75, 0.30, 0.70, 0.50, 0.70, "health"),
    ("33-2011", "Firefighters", 0.90, 0.40, 0.50, 0.95, 0.80, "public"),
    ("33-3051", "Police officers", 0.70, 0.50, 0.70, 0.80, 0.80, "public"),
    ("35-2014", "Cooks, restaurant", 0.80, 0.20, 0.30, 0.50, 0.90, "retail"),
    ("35-3031", "Waiters and waitresses", 0.70, 0.20, 0.80, 0.20, 0.85, "retail"),
    ("37-2011", "Janitors and cleaners", 0.85, 0.10, 0.20, 0.40, 0.50, "public"),
    ("39-9011", "Childcare workers", 0.60, 0.30, 0.80, 0.20, 0.60, "health"),
    ("41-2031", "Retail salespersons", 0.50, 0.30, 0.80, 0.10, 0.60, "retail"),
    ("41-3031", "Securities and financial services sales agents", 0.05, 0.75, 0.80, 0.05, 0.70, "finance"),
    ("43-4051", "Customer service representatives", 0.10, 0.40, 0.85, 0.05, 0.75, "retail"),
    ("43-6014", "Secretaries and administrative assistants", 0.10, 0.50, 0.60, 0.05, 0.50, "finance"),
    ("45-2092", "Farmworkers and laborers", 0.95, 0.10, 0.20, 0.70, 0.60, "manufacturing"),
    ("47-2031", "Carpenters", 0.90, 0.40, 0.30, 0.70, 0.60, "construction"),
    ("47-2111", "Electricians", 0.80, 0.60, 0.30, 0.80, 0.60, "construction"),
    ("49-3023", "Automotive service technicians", 0.80, 0.50, 0.30, 0.60, 0.60, "manufacturing"),
    ("51-4121", "Welders", 0.85, 0.35, 0.15, 0.85, 0.60, "manufacturing"),
    ("53-3032", "Heavy and tractor-trailer truck drivers", 0.60, 0.30, 0.20, 0.60, 0.80, "manufacturing"),
    ("53-7062", "Laborers and material movers", 0.95, 0.10, 0.20, 0.60, 0.70, "retail"),
]
INDUSTRIES = ["construction", "finance", "health", "manufacturing", "public", "retail"]

# descriptor id -> (text, loadings on (physical, cognitive, social, hazard, pace), intercept)
DESCRIPTORS = {
    "ability_cognitive": (
        "Abilities that influence the acquisition and application of knowledge in problem solving",
        (0.0, 0.9, 0.1, 0.0, 0.0), 0.0),
    "ability_physical": (
        "Abilities that influence strength, endurance, flexibility, balance and coordination",
        (0.9, -0.1, 0.0, 0.1, 0.0), 0.05),
    "ability_psychomotor": (
        "Abilities that influence the capacity to manipulate and control objects",
        (0.7, 0.1, 0.0, 0.1, 0.0), 0.05),
    "ability_sensory": (
        "Abilities that influence visual, auditory and speech perception",
        (0.3, 0.2, 0.2, 0.2, 0.0), 0.1),
    "activity_work_output": (
        "What physical activities are performed, what equipment and vehciles are operated/controlled, "
        "and what complex/technical activities are accomplished as job outputs?",
        (0.8, 0.1, 0.0, 0.0, 0.0), 0.05),
    "context_communication": (
        "Types and frequency of interactions with other people that are required as part of this job",
        (0.0, 0.2, 0.8, 0.0, 0.0), 0.0),
    "context_conflictual_contact": (
        "Amount of conflict that the workers will encounter as part of this job",
        (0.1, 0.0, 0.5, 0.3, 0.1), 0.0),
    "context_responsibility_for_others": (
        "Amount of responsibility the worker has for other workers as part of this job",
        (0.0, 0.5, 0.4, 0.1, 0.0), 0.0),
    "context_environmental_conditions": (
        "Description of extreme environmental conditions the worker will be placed in as past of this job",
        (0.5, -0.1, 0.0, 0.5, 0.0), 0.05),
    "context_job_hazards": (
        "Descriptions of types of hazardous conditions the worker could be exposted to as pasrt of this job",
        (0.2, 0.0, 0.0, 0.8, 0.0), 0.0),
    "context_pace_and_scheduling": (
        "Description of the role that time plays in the way the worker performs the tasks required by this job",
        (0.1, 0.0, 0.1, 0.0, 0.8), 0.0),
    "value_recognition": (
        "Occupations that satisfy thus work value offer advancement, potential for leadership, "
        "and are often considered prestigious",
        (-0.1, 0.8, 0.2, 0.0, 0.0), 0.05),
    "value_working_conditions": (
        "Occupations that satisfy this work value offer job security and good working conditions.",
        (-0.3, 0.4, 0.1, -0.4, 0.0), 0.5),
}

YEARS = [2002, 2006, 2010, 2014, 2018, 2022]
RELEASES_2020 = ["24.2", "24.3", "25.0", "25.1"]

# Illustrative weights only; real willingness-to-pay valuations are user input.
AMENITIES = [
    ("schedule_flexibility", 0.90, 0.60,
     "A flexible work schedule allows employees a level of autonomy to create their own schedules and find a "
     "work-life balance that works for them. A flexible schedule allows employees to plan, vary, and adapt the "
     "times they begin and end their workday and to have some control of the working hours."),
    ("telecommuting", 0.30, 0.20,
     "Telecommuting is the ability of an employee to complete work assignments from outside the traditional "
     "workplace by using telecommunications tools such as email, phone, chat, and video apps. Often this means "
     "working from home or at a location close to home, such as a coffee shop, library, or co-working space."),
    ("physical_job_demands", -1.00, -0.80,
     "Physical demands refer to the level and duration of physical exertion generally required to perform job "
     "tasks, such as sitting, standing, carrying, walking, climbing stairs, lifting, carrying, reaching, pushing, "
     "and pulling, and it also includes strength, flexibility, dexterity, vision, and endurance."),
    ("work_pace", -0.50, -0.30,
     "Work pace is the rate at which an employee completes tasks and duties at the job."),
    ("work_autonomy", 0.60, 0.40,
     "Work autonomy is the degree to which the job provides substantial independence and discretion to the "
     "individual in scheduling the work and in determining the procedures to be used in carrying it out. "
     "Autonomy at work thus refers to how much freedom employees have to do their jobs."),
    ("paid_time_off", 0.95, 0.30,
     "Paid time off (PTO) refers to the time that employees are paid for when they are not working. PTO includes "
     "paid vacation, sick time, holidays, and personal days."),
    ("teamwork", 0.50, 0.25,
     "Working in teams means working with a group of people to achieve a shared goal or outcome effectively, "
     "listening to other members of the team, working for the good of the group as a whole, and having a say and "
     "sharing responsibility."),
    ("job_training", 0.25, -0.20,
     "Job training means any type of instruction or a program for skill development and competence acquisition "
     "provided by the workplace. Job training provides opportunities to gain valuable new skills and enables "
     "career advancement."),
    ("meaningful_work", 0.20, -0.10,
     "Meaningful work refers to feeling morally, socially, personally, and spiritually significant and helps "
     "people feel a part of something larger than themselves, including being part of a community or society. "
     "Meaningful work contributes to the feeling of a purpose in life."),
]

SURVEY_DEFINITION = (
    "An age-friendly job appeals to older workers in particular. This will depend on a variety of "
    "characteristics including the following:\n"
    "(a) Should not involve intense or demanding physical work\n"
    "(b) Should not involve high stress levels, such as tight deadlines, performance assessment, etc.\n"
    "(c) Should encourage older workers to use their softer skills e.g., working in teams, dealing with "
    "interpersonal issues, etc.\n"
    "(d) Should offer the opportunity for flexible working including part-time and variable hours\n"
    "(e) Should offer autonomy and discretion rather than close management and supervision\n"
    "(f) Provide an environment that is inclusive and supportive of older workers and not one where older "
    "workers are vulnerable to discrimination and abuse"
)
CONTROL_TEXTS = {
    "CONTROL_ATTENTION": "Select as an answer 'four' for this question",
    "CONTROL_ATHLETE": "Professional athlete (e.g. competing in NFL, NBA, or NHL)",
}

AGE_BANDS = ["15-24", "25-49", "50-64", "65-74"]


def traits(o):
    return np.array(o[2:7])


def native_scores(rng, year, noise):
    """Descriptor scores on a 1-5 scale. Physical content drifts down and
    cognitive content up over time."""
    drift = (year - 2012) / 10.0
    out = {}
    for o in OCCUPATIONS:
        t = traits(o).copy()
        t[0] = np.clip(t[0] - 0.04 * drift, 0, 1)
        t[1] = np.clip(t[1] + 0.04 * drift, 0, 1)
        for d, (_, load, icpt) in DESCRIPTORS.items():
            x = icpt + float(np.dot(load, t)) + rng.normal(0, noise)
            out[(o[0], d)] = round(1.0 + 4.0 * float(np.clip(x, 0.0, 1.0)), 3)
    return out


def write_weights(path, scores):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["occupation_id", "descriptor_id", "weight"])
        for (o, d), v in scores.items():
            w.writerow([o, d, repr(v)])


def min_max(scores):
    """Per-descriptor min-max scaling, as applied at ingestion."""
    out = {}
    for d in DESCRIPTORS:
        vals = [scores[(o[0], d)] for o in OCCUPATIONS]
        lo, hi = min(vals), max(vals)
        for o in OCCUPATIONS:
            v = scores[(o[0], d)]
            out[(o[0], d)] = (v - lo) / (hi - lo) if hi > lo else 0.0
    return out


def afi_2020(releases):
    scaled = [min_max(r) for r in releases]
    descs = sorted(DESCRIPTORS)
    emb = {d: hash_embed.embed(DESCRIPTORS[d][0], DIM) for d in descs}
    target = [0.0] * DIM
    for name, wa, wr, text in AMENITIES:
        v = hash_embed.embed(text, DIM)
        w = (wa + wr) / 2.0
        target = [t + w * x for t, x in zip(target, v)]
    n0 = math.sqrt(sum(t * t for t in target))
    target = [t / n0 for t in target]
    afi = {}
    for o in OCCUPATIONS:
        x = [0.0] * DIM
        for d in descs:
            w = sum(s[(o[0], d)] for s in scaled) / len(scaled)
            x = [a + w * b for a, b in zip(x, emb[d])]
        n = math.sqrt(sum(a * a for a in x))
        afi[o[0]] = sum(a / n * b for a, b in zip(x, target))
    return afi


def deciles(afi):
    vals = sorted(afi.values())
    cuts = list(np.quantile(vals, [j / 10 for j in range(1, 10)], method="linear"))
    return {o: 1 + sum(c <= v for c in cuts) for o, v in afi.items()}


def write_panel(rng, path):
    rows = []
    base = {o[0]: float(rng.lognormal(11.5, 0.6)) for o in OCCUPATIONS}
    second = {}
    for o in OCCUPATIONS:
        others = [i for i in INDUSTRIES if i != o[7]]
        second[o[0]] = others[int(rng.integers(len(others)))]
    for year in (1990, 2020):
        for o in OCCUPATIONS:
            code, phys, cog, soc = o[0], o[2], o[3], o[4]
            growth = 1.0 if year == 1990 else 1.0 + 0.6 * cog - 0.3 * phys + float(rng.normal(0, 0.05))
            emp = base[code] * growth
            older = 0.22 + 0.12 * (1 - phys) + (0.06 if year == 2020 else 0.0) + float(rng.normal(0, 0.03))
            young = 0.10 + 0.10 * phys * (1 - cog)
            ages = [young, 1.0 - young - older, older * 0.78, older * 0.22]
            female = float(np.clip(0.15 + 0.6 * soc - 0.3 * phys + rng.normal(0, 0.05), 0.03, 0.95))
            college = float(np.clip(0.1 + 0.8 * cog - 0.1 * phys + (0.08 if year == 2020 else 0), 0.02, 0.97))
            wage_base = (9.0 + 28.0 * cog) * (1.0 if year == 1990 else 2.1)
            for a_i, band in enumerate(AGE_BANDS):
                for sex, s_share in (("female", female), ("male", 1 - female)):
                    for edu, e_share in (("college", college), ("no-college", 1 - college)):
                        for ind, i_share in ((o[7], 0.7), (second[code], 0.3)):
                            count = int(round(emp * ages[a_i] * s_share * e_share * i_share))
                            wage = wage_base * (1.45 if edu == "college" else 1.0) * (0.7 if band == "15-24" else 1.0)
                            wage *= 0.92 if sex == "female" else 1.0
                            wage = "" if rng.random() < 0.01 else "%.2f" % (wage * float(rng.normal(1, 0.03)))
                            rows.append([year, code, band, sex, edu, ind, count, wage])
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["year", "occupation_id", "age_band", "sex", "education", "industry", "count", "wage"])
        w.writerows(rows)


def write_responses(rng, path, dec):
    """290 participants pass both controls and give 2,627 scores (273 "do not
    know") on their 10 items; 30 more fail a control."""
    by_decile = {d: sorted(o for o, k in dec.items() if k == d) for d in range(1, 11)}
    assert all(len(v) == 3 for v in by_decile.values()), by_decile
    passing, failing = 290, 30
    total = passing + failing
    ids = ["p%03d" % (i + 1) for i in range(total)]
    fail_at = set(int(i) for i in rng.choice(total, failing, replace=False))
    dk_slots = set(int(i) for i in rng.choice(passing * 10, 273, replace=False))
    rows = []
    k = 0
    for i, pid in enumerate(ids):
        form = i % 3
        good = i not in fail_at
        for d in range(1, 11):
            occ = by_decile[d][form]
            score = int(np.clip(round(d + rng.normal(0, 1.6)), 1, 10))
            if good:
                s = "DK" if k in dk_slots else str(score)
                k += 1
            else:
                s = str(int(rng.integers(1, 11)))
            rows.append([pid, occ, s])
        if good:
            att, ath = "4", str(int(rng.integers(1, 5)))
        else:
            mode = int(rng.integers(4))
            att, ath = [("5", "2"), ("DK", "1"), ("4", "7"), ("3", "9")][mode]
        rows.append([pid, "CONTROL_ATTENTION", att])
        rows.append([pid, "CONTROL_ATHLETE", ath])
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["participant_id", "item_id", "score"])
        w.writerows(rows)


PROJECT = """\
[paths]
amenities = "amenities.toml"
panel = "panel.csv"
titles = "occupations.csv"
survey_text = "survey.toml"
responses = "responses.csv"
output = "out"

{catalogs}
[embedding]
provider = "builtin"
dim = {dim}

[index]
mode = "average"

[backcast]
target_year = 1990
band = "residual"
holdout = 1

[analysis]
t0 = 1990
t1 = 2020
anchor_year = 2020
variant = "midpoint"
histogram_bins = 20
top_k = 10
older_bands = ["50-64", "65-74"]
dimensions = ["education", "sex", "age"]

[analysis.age_map]
"50-64" = "50-74"
"65-74" = "50-74"

[[regression]]
label = "(1)"
year = 1990
dependent = "older_share"
regressors = ["afi"]
focus = "afi"

[[regression]]
label = "(2)"
year = 1990
dependent = "older_share"
regressors = ["afi", "female_share"]
focus = "afi"

[[regression]]
label = "(3)"
year = 1990
dependent = "older_share"
regressors = ["afi", "female_share", "graduate_share"]
focus = "afi"

[[regression]]
label = "(4)"
year = 1990
dependent = "older_share"
regressors = ["afi", "female_share", "graduate_share", "hourly_wage"]
focus = "afi"

[[regression]]
label = "(5)"
year = 1990
dependent = "older_share"
regressors = ["afi", "female_share", "graduate_share", "hourly_wage", "industry_construction", "industry_finance", "industry_health", "industry_manufacturing", "industry_retail"]
focus = "afi"

[regression_labels]
afi = "AFI"
female_share = "Share of females"
graduate_share = "Share of graduates"
hourly_wage = "Hourly wage"
industry_construction = "Share of construction industry"
industry_finance = "Share of finance industry"
industry_health = "Share of health industry"
industry_manufacturing = "Share of manufacturing industry"
industry_retail = "Share of retail industry"

[survey]
year = 2020
seed = {seed}
per_decile = 3
aggregate = "mean"
rho_mode = "occupation"
"""


def toml_str(s):
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def main():
    rng = np.random.default_rng(SEED)
    (OUT / "catalog").mkdir(parents=True, exist_ok=True)

    with open(OUT / "catalog/texts.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["descriptor_id", "text"])
        for d, (text, _, _) in DESCRIPTORS.items():
            w.writerow([d, text])
    with open(OUT / "occupations.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["occupation_id", "title"])
        for o in OCCUPATIONS:
            w.writerow([o[0], o[1]])

    entries = []
    for y in YEARS:
        write_weights(OUT / f"catalog/weights_{y}.csv", native_scores(rng, y, 0.03))
        entries.append((y, None, f"catalog/weights_{y}.csv"))
    central = native_scores(rng, 2020, 0.02)
    releases = []
    for r in RELEASES_2020:
        rel = {k: round(float(np.clip(v + rng.normal(0, 0.03), 1, 5)), 3) for k, v in central.items()}
        releases.append(rel)
        write_weights(OUT / f"catalog/weights_2020_{r}.csv", rel)
        entries.append((2020, r, f"catalog/weights_2020_{r}.csv"))
    entries.sort(key=lambda e: (e[0], e[1] or ""))

    blocks = []
    for y, r, path in entries:
        lines = ["[[catalog]]", f"year = {y}"]
        if r:
            lines.append(f'release = "{r}"')
        lines += [f'weights = "{path}"', 'texts = "catalog/texts.csv"', "native = true", ""]
        blocks.append("\n".join(lines))
    (OUT / "project.toml").write_text(PROJECT.format(catalogs="\n".join(blocks), dim=DIM, seed=SEED))

    lines = ["# Definitions of the nine job amenities. The weights are illustrative", "# placeholders, not estimates.", ""]
    for name, wa, wr, text in AMENITIES:
        lines += ["[[amenity]]", f"name = {toml_str(name)}", f"definition = {toml_str(text)}",
                  f"weight_absolute = {wa}", f"weight_relative = {wr}", ""]
    (OUT / "amenities.toml").write_text("\n".join(lines))

    lines = [f'definition = """\n{SURVEY_DEFINITION}"""', "", "[controls]"]
    lines += [f"{k} = {toml_str(v)}" for k, v in CONTROL_TEXTS.items()]
    (OUT / "survey.toml").write_text("\n".join(lines) + "\n")

    write_panel(rng, OUT / "panel.csv")
    afi = afi_2020(releases)
    write_responses(rng, OUT / "responses.csv", deciles(afi))

    with open(OUT / "expected_afi_2020.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["occupation_id", "afi"])
        for o, v in sorted(afi.items()):
            w.writerow([o, repr(v)])


if __name__ == "__main__":
    main()
