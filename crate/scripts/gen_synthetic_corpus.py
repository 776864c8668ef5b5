#!/usr/bin/env python3
"""Generate the bundled synthetic sig corpus.

Each record is built from structured fields: the sig text is assembled from
phrase choices and the gold MedicationStatement is built directly from the
same choices, with its own code mappings and duration arithmetic. Nothing here
reads the Rust tables, so the corpus checks the parser rather than mirroring it.

Usage: python3 scripts/gen_synthetic_corpus.py > crates/core/data/corpus/synthetic.jsonl
"""

import json
import random
import sys
from fractions import Fraction

SNOMED = "http://snomed.info/sct"
UCUM = "http://unitsofmeasure.org"
GTS = "http://terminology.hl7.org/CodeSystem/v3-GTSAbbreviation"

# code -> (frequency, period, periodUnit)
SCHEDULES = {
    "QD": (1, 1, "d"),
    "BID": (2, 1, "d"),
    "TID": (3, 1, "d"),
    "QID": (4, 1, "d"),
    "QOD": (1, 2, "d"),
    "AM": (1, 1, "d"),
    "BED": (1, 1, "d"),
    "Q4H": (1, 4, "h"),
    "Q6H": (1, 6, "h"),
    "Q8H": (1, 8, "h"),
    "Q12H": (1, 12, "h"),
    "WK": (1, 1, "wk"),
}
DAYS_PER_UNIT = {"h": Fraction(1, 24), "d": Fraction(1), "wk": Fraction(7)}

FREQUENCY_PHRASES = [
    ("Q4H", "Q4H"), ("q6h", "Q6H"), ("every 6 hours", "Q6H"), ("every 8 hours", "Q8H"),
    ("q12h", "Q12H"), ("daily", "QD"), ("once daily", "QD"), ("BID", "BID"),
    ("twice daily", "BID"), ("b.i.d.", "BID"), ("TID", "TID"), ("three times daily", "TID"),
    ("QID", "QID"), ("four times a day", "QID"), ("at bedtime", "BED"), ("qhs", "BED"),
    ("every other day", "QOD"), ("weekly", "WK"), ("every morning", "AM"),
]

ROUTES = {
    "PO": ("26643006", "Oral route"), "by mouth": ("26643006", "Oral route"),
    "orally": ("26643006", "Oral route"), "p.o.": ("26643006", "Oral route"),
    "sublingually": ("37839007", "Sublingual route"), "IV": ("47625008", "Intravenous route"),
    "IM": ("78421000", "Intramuscular route"), "subcut": ("34206005", "Subcutaneous route"),
    "topically": ("6064005", "Topical route"), "transdermally": ("45890007", "Transdermal route"),
    "inhaled": ("447694001", "Respiratory tract route"), "per rectum": ("37161004", "Rectal route"),
}

FORMS = {
    "tablet": ("385055001", "Tablet"), "Tablet": ("385055001", "Tablet"), "tab": ("385055001", "Tablet"),
    "capsule": ("385049006", "Capsule"), "cap": ("385049006", "Capsule"),
    "oral tablet": ("421026006", "Oral tablet"), "chewable tablet": ("66076007", "Chewable tablet"),
    "ER tablet": ("385060002", "Prolonged-release tablet"), "ODT": ("447079001", "Orodispersible tablet"),
    "patch": ("385114002", "Transdermal patch"), "suppository": ("385194003", "Suppository"),
    "inhaler": ("385203008", "Pressurised inhalation"), "injection": ("385219001", "Solution for injection"),
    "cream": ("385099005", "Cream"),
}

# unit as written -> (UCUM code, display)
UNITS = {
    "mg": ("mg", "milligram"), "mcg": ("ug", "microgram"), "g": ("g", "gram"), "%": ("%", "percent"),
    "mL": ("mL", "milliliter"), "units": ("[iU]", "international unit"),
    "tablet": ("{tablet}", "tablet"), "tablets": ("{tablet}", "tablet"), "tab": ("{tablet}", "tablet"),
    "tabs": ("{tablet}", "tablet"), "capsule": ("{capsule}", "capsule"), "capsules": ("{capsule}", "capsule"),
    "caps": ("{capsule}", "capsule"), "patch": ("{patch}", "patch"), "puffs": ("{puff}", "puff"),
    "suppository": ("{suppository}", "suppository"),
}

# Product lines: drug, strength choices, forms, routes, dose verb, dose units, reasons.
PRODUCTS = [
    ("clonazepam", ["0.5 mg", "1 mg"], ["Tablet", "tablet", "tab"], ["PO", "by mouth"], "take", ["tablet", "tablets"], ["anxiety", "headache"]),
    ("lisinopril", ["10 mg", "20 mg"], ["tablet", "tab"], ["PO", "orally"], "take", ["tablet", "tablets"], ["hypertension", "high blood pressure"]),
    ("amoxicillin", ["500 mg", "250mg"], ["capsule", "cap"], ["PO", "p.o."], "take", ["capsule", "caps"], ["infection", "sinusitis"]),
    ("metformin", ["500 mg", "1000 mg"], ["tablet", "ER tablet"], ["PO", "by mouth"], "take", ["tablet", "tabs"], ["diabetes"]),
    ("ibuprofen", ["200 mg", "400 mg"], ["tablet", "chewable tablet"], ["PO", "orally"], "take", ["tablets", "tab"], ["pain", "fever"]),
    ("ondansetron", ["4 mg", "8 mg"], ["ODT", "tablet"], ["PO", "sublingually"], "take", ["tablet"], ["nausea"]),
    ("cephalexin", ["500 mg"], ["capsule"], ["PO"], "take", ["capsule", "capsules"], ["cellulitis", "infection"]),
    ("oxycodone", ["5 mg", "10 mg"], ["tablet", "oral tablet"], ["PO", "by mouth"], "take", ["tablet", "tablets"], ["pain", "severe pain"]),
    ("nicotine", ["21 mg", "14 mg"], ["patch"], ["transdermally", "topically"], "apply", ["patch"], ["smoking cessation"]),
    ("albuterol", ["90 mcg"], ["inhaler"], ["inhaled"], "inhale", ["puffs"], ["wheezing", "shortness of breath"]),
    ("acetaminophen", ["650 mg"], ["suppository"], ["per rectum"], "insert", ["suppository"], ["fever"]),
    ("enoxaparin", ["40 mg"], ["injection"], ["subcut"], "inject", [], ["clot prevention"]),
    ("ceftriaxone", ["1 g"], ["injection"], ["IV", "IM"], "give", [], ["pneumonia"]),
    ("hydrocortisone", ["1%"], ["cream"], ["topically"], "apply", [], ["rash", "itching"]),
    ("sertraline", ["50 mg", "100 mg"], ["tablet"], ["PO"], "take", ["tablet", "tabs"], ["depression"]),
]

# Records pinned to two reference cases: the fully coded clonazepam sig and
# "TID, dispense 30" implying ten days.
PINNED = {
    0: {"shape": 0, "strength": "0.5 mg", "form": "Tablet", "route": "PO", "frequency": ("Q4H", "Q4H"), "reason": "headache"},
    6: {"shape": 5, "strength": "500 mg", "form": "capsule", "route": "PO", "frequency": ("TID", "TID"), "reason": None},
}


def concept(text, system, code, display):
    return {"text": text, "coding": [{"system": system, "code": code, "display": display}]}


def quantity(value, unit_written):
    code, display = UNITS[unit_written]
    return {"value": value, "unit": display, "system": UCUM, "code": code}


def number(value):
    value = Fraction(value)
    return int(value) if value.denominator == 1 else float(value)


def split_strength(strength):
    # "0.5 mg" -> ("0.5", "mg"); "250mg" -> ("250", "mg"); "1%" -> ("1", "%")
    digits = ""
    for ch in strength:
        if ch.isdigit() or ch == ".":
            digits += ch
        else:
            break
    return digits, strength[len(digits):].strip()


def daily_events(code):
    frequency, period, unit = SCHEDULES[code]
    return Fraction(frequency) / (Fraction(period) * DAYS_PER_UNIT[unit])


def is_count(unit_written):
    return UNITS[unit_written][0].startswith("{")


def record(index, rng):
    drug, strengths, forms, routes, verb, dose_units, reasons = PRODUCTS[index % len(PRODUCTS)]
    variant = index // len(PRODUCTS)
    strength = rng.choice(strengths)
    form = rng.choice(forms)
    route = rng.choice(routes)
    freq_text, freq_code = rng.choice(FREQUENCY_PHRASES)
    reason = rng.choice(reasons) if rng.random() < 0.7 else None

    # Shape of the sig: 0 plain schedule, 1 dose + dispense, 2 dose + explicit
    # duration, 3 dose range as needed, 4 as needed only, 5 dispense without dose.
    shape = (index + variant) % 5
    if not dose_units and shape in (1, 2, 3):
        shape = 0
    if index in PINNED:
        pinned = PINNED[index]
        shape, strength, form, route, reason = pinned["shape"], pinned["strength"], pinned["form"], pinned["route"], pinned["reason"]
        freq_text, freq_code = pinned["frequency"]

    parts = [drug, strength, form]
    dose = None  # ("single", value, unit) | ("range", low, high, unit)
    as_needed = False
    prn_only = False
    dispense = None  # (value, unit or None)
    explicit = None  # (value, unit)

    if shape == 0:
        parts += [route, freq_text]
        if reason:
            parts += ["for", reason]
    elif shape == 1:
        unit = rng.choice(dose_units)
        count = 1 if unit in ("tablet", "capsule", "tab", "patch", "suppository") else 2
        dose = ("single", count, unit)
        dispense_unit = rng.choice([unit, None])
        per_day = daily_events(freq_code) * count
        days = rng.choice([5, 7, 10, 14, 30])
        total = per_day * days
        if total.denominator != 1:
            total = Fraction(30)
        dispense = (int(total), dispense_unit)
        parts += [verb, str(count), unit, route, freq_text]
        if reason:
            parts += ["for", reason]
        parts[-1] += ","
        parts += ["dispense", str(int(total))] + ([dispense_unit] if dispense_unit else [])
    elif shape == 2:
        unit = rng.choice(dose_units)
        count = 1 if unit in ("tablet", "capsule", "tab", "patch", "suppository") else 2
        dose = ("single", count, unit)
        length, length_unit, length_text = rng.choice([
            (10, "d", "x10 days"), (7, "d", "for 7 days"), (2, "wk", "x 2 weeks"), (5, "d", "x 5 days"),
        ])
        explicit = (length, length_unit)
        parts += [str(count), unit, route, freq_text, length_text]
        if reason:
            parts += ["for", reason]
    elif shape == 3:
        unit = rng.choice([u for u in dose_units if u.endswith("s")] or dose_units)
        low, high = 1, 2
        dose = ("range", low, high, unit)
        sep = rng.choice(["-", " to "])
        as_needed = True
        prn_text = rng.choice(["as needed", "PRN"])
        parts += [verb, f"{low}{sep}{high}", unit, route, freq_text, prn_text]
        if reason:
            parts += ["for", reason]
    elif shape == 5:
        dispense_unit = rng.choice(dose_units)
        total = daily_events(freq_code) * 10
        dispense = (int(total), dispense_unit)
        parts += [route, freq_text + ",", "dispense", str(int(total)), dispense_unit]
    else:
        as_needed = True
        prn_only = True
        parts += [route, "as needed"]
        if reason:
            parts += ["for", reason]
        if rng.random() < 0.5:
            parts[-1] += ","
            dispense = (rng.choice([10, 20, 30]), None)
            parts += ["dispense", str(dispense[0])]

    text = " ".join(parts)

    # Gold resource, built from the choices above.
    value, unit_written = split_strength(strength)
    medication = {"code": {"text": f"{drug} {strength} {form}"}}
    form_code, form_display = FORMS[form]
    medication["doseForm"] = concept(form, SNOMED, form_code, form_display)
    medication["totalVolume"] = quantity(number(Fraction(value)), unit_written)

    dosage = {}
    route_code, route_display = ROUTES[route]
    dosage["route"] = concept(route, SNOMED, route_code, route_display)
    if prn_only:
        dosage["timing"] = {"code": {"coding": [{"system": GTS, "code": "PRN", "display": "PRN"}]}}
    else:
        frequency, period, period_unit = SCHEDULES[freq_code]
        repeat = {"frequency": frequency, "period": period, "periodUnit": period_unit}
        if explicit:
            repeat["duration"], repeat["durationUnit"] = explicit
        elif dispense and not as_needed:
            per_admin = None
            dispense_unit = dispense[1]
            if dose is None:
                if dispense_unit is None or is_count(dispense_unit):
                    per_admin = Fraction(1)
            elif dose[0] == "single":
                _, count, unit = dose
                same = dispense_unit is not None and UNITS[dispense_unit][0] == UNITS[unit][0]
                if same or (dispense_unit is None and is_count(unit)):
                    per_admin = Fraction(count)
            if per_admin is not None:
                days = Fraction(dispense[0]) / (daily_events(freq_code) * per_admin)
                repeat["duration"], repeat["durationUnit"] = number(days), "d"
        dosage["timing"] = {
            "repeat": repeat,
            "code": {"coding": [{"system": GTS, "code": freq_code, "display": freq_code}]},
        }
    if dose and dose[0] == "single":
        dosage["doseAndRate"] = [{"doseQuantity": quantity(dose[1], dose[2])}]
    elif dose:
        dosage["doseAndRate"] = [{"doseRange": {"low": quantity(dose[1], dose[3]), "high": quantity(dose[2], dose[3])}}]

    gold = {"resourceType": "MedicationStatement", "status": "recorded", "medication": medication}
    if reason:
        gold["reason"] = [{"concept": {"text": reason}}]
    gold["dosage"] = [dosage]
    gold["note"] = [{"text": text}]
    return {"id": f"syn-{index + 1:03d}", "text": text, "gold": gold}


def main():
    rng = random.Random(20240917)
    for i in range(50):
        sys.stdout.write(json.dumps(record(i, rng), ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
