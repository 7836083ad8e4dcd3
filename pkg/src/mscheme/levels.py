"""Spectroscopic level records, unit conversions and level-table validation.

All energies are wavenumbers (cm^-1) above X(v=0, J=0). Wavelengths are
vacuum wavelengths in nm; no air-index correction is applied anywhere.
"""
from __future__ import annotations

import csv
import json
import re
import statistics
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

from .errors import DomainError

X_GROUND = "X_ground"
COUPLED_0U = "coupled_0u_plus"
STATES = (X_GROUND, COUPLED_0U)

CSV_HEADER = (
    "state",
    "v",
    "J",
    "character",
    "energy_cm",
    "exc_wavelength_nm",
    "deexc_wavelength_nm",
    "observed",
)

#: wavemeter (0.011) plus reference-level (0.001) uncertainty, cm^-1
DEEXCITATION_TOLERANCE_CM = 0.012
#: accepted window for J=1/J=3 rotational splittings, cm^-1
SPLITTING_WINDOW_CM = (0.085, 0.115)
#: maximum allowed spread of the derived X(v=73, J=2) term value, cm^-1
OFFSET_CONSISTENCY_CM = 0.02

_CHARACTER_RE = re.compile(r"^\s*([Ab])\s*\(\s*(\d+)\s*\)\s*$")


@dataclass(frozen=True)
class SpectroscopicLevel:
    electronic_state: str
    v: int
    J: int
    character: Optional[str] = None
    progression_index: Optional[int] = None
    energy_cm: Optional[float] = None
    energy_uncertainty_cm: float = 0.0
    observed: bool = True
    exc_wavelength_nm: Optional[float] = None
    deexc_wavelength_nm: Optional[float] = None

    def __post_init__(self):
        if self.electronic_state not in STATES:
            raise DomainError(f"unknown electronic state {self.electronic_state!r}")
        if self.J < 0:
            raise DomainError(f"J must be >= 0, got {self.J}")
        if self.character is not None and self.character not in ("A", "b"):
            raise DomainError(f"character must be 'A' or 'b', got {self.character!r}")
        if self.energy_cm is not None and self.energy_cm < 0:
            raise DomainError(f"energy below X(v=0,J=0): {self.energy_cm}")
        if self.electronic_state == X_GROUND and self.v == 0 and self.J == 0:
            if self.energy_cm not in (None, 0.0):
                raise DomainError("X(v=0,J=0) is the energy origin")
        # parity rule holds for measured levels; calculated (*) rows are listed with J=0
        if self.observed:
            if self.electronic_state == X_GROUND and self.J % 2:
                raise DomainError(f"X-state level with odd J={self.J}")
            if self.electronic_state == COUPLED_0U and self.J % 2 == 0:
                raise DomainError(f"observed 0u+ level with even J={self.J}")

    @property
    def key(self):
        return (self.electronic_state, self.v, self.J)

    @property
    def label(self):
        char = "" if self.character is None else f" {self.character}({self.progression_index})"
        return f"{self.electronic_state} v={self.v} J={self.J}{char}"


@dataclass(frozen=True)
class TransitionRecord:
    lower: SpectroscopicLevel
    upper: SpectroscopicLevel
    wavelength_nm: float
    wavelength_uncertainty_nm: float = 0.002

    def __post_init__(self):
        if self.wavelength_nm <= 0:
            raise DomainError(f"wavelength must be positive, got {self.wavelength_nm}")
        lo, up = self.lower.energy_cm, self.upper.energy_cm
        if lo is not None and up is not None and not up > lo:
            raise DomainError(f"upper level {self.upper.label} not above lower {self.lower.label}")

    @property
    def kind(self):
        """'excitation' (from X v=73) or 'deexcitation' (to X v=0, J=0)."""
        return "deexcitation" if self.lower.v == 0 and self.lower.J == 0 else "excitation"


@dataclass(frozen=True)
class LevelTable:
    levels: tuple
    transitions: tuple
    reference_offset_cm: float
    offset_spread_cm: float = 0.0

    def __post_init__(self):
        if not self.reference_offset_cm > 0:
            raise DomainError("reference_offset_cm must be positive")
        keys = {lvl.key for lvl in self.levels}
        for tr in self.transitions:
            if tr.lower.key not in keys or tr.upper.key not in keys:
                raise DomainError(
                    f"transition {tr.lower.label} -> {tr.upper.label} refers to a level not in the table"
                )

    def find(self, state, v, J):
        for lvl in self.levels:
            if lvl.key == (state, v, J):
                return lvl
        raise KeyError((state, v, J))

    def excited(self, observed_only=False):
        return [
            lvl
            for lvl in self.levels
            if lvl.electronic_state == COUPLED_0U and (lvl.observed or not observed_only)
        ]


@dataclass
class ValidationReport:
    entries: list = field(default_factory=list)

    def add(self, check, row, residual, passed):
        self.entries.append(
            {"check": check, "row": row, "residual": float(residual), "pass": bool(passed)}
        )

    @property
    def failures(self):
        return [e for e in self.entries if not e["pass"]]

    @property
    def ok(self):
        return not self.failures

    def to_json(self, indent=2):
        return json.dumps(self.entries, indent=indent)

    def __len__(self):
        return len(self.entries)


def wavelength_to_wavenumber(lambda_nm):
    """Vacuum wavelength in nm to wavenumber in cm^-1."""
    if not lambda_nm > 0:
        raise DomainError(f"wavelength must be positive, got {lambda_nm}")
    return 1e7 / lambda_nm


def wavenumber_to_wavelength(nu_cm):
    """Wavenumber in cm^-1 to vacuum wavelength in nm."""
    if not nu_cm > 0:
        raise DomainError(f"wavenumber must be positive, got {nu_cm}")
    return 1e7 / nu_cm


def energy_from_excitation(lambda_exc_nm, lower_energy_cm):
    """Upper-level energy reached from a lower level of known energy."""
    return lower_energy_cm + wavelength_to_wavenumber(lambda_exc_nm)


def rotational_constant(E_J1, E_J3):
    """Rigid-rotor constant from the J=1 and J=3 members of one vibrational level.

    J(J+1) is 2 and 12, so B = (E_J3 - E_J1) / 10.
    """
    if not E_J3 > E_J1:
        raise DomainError(f"expected E(J=3) > E(J=1), got {E_J3} <= {E_J1}")
    return (E_J3 - E_J1) / 10.0


def _opt_float(text):
    text = text.strip()
    if text == "" or text.lower() in ("n. m.", "n.m.", "nan"):
        return None
    return float(text)


def _parse_character(text):
    text = text.strip()
    if not text:
        return None, None
    m = _CHARACTER_RE.match(text)
    if m is None:
        raise DomainError(f"cannot parse character {text!r}; expected e.g. 'A(7)' or 'b(52)'")
    return m.group(1), int(m.group(2))


def derive_reference_offset(rows):
    """Median of (E - 1e7/lambda_exc) over rows that carry both numbers.

    Returns ``(offset, spread)`` where spread is max - min of the per-row values.
    """
    offsets = [
        row["energy_cm"] - 1e7 / row["exc_wavelength_nm"]
        for row in rows
        if row["energy_cm"] is not None and row["exc_wavelength_nm"] is not None and row["observed"]
    ]
    if not offsets:
        raise DomainError("no observed row has both an energy and an excitation wavelength")
    return statistics.median(offsets), max(offsets) - min(offsets)


def read_table_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise DomainError(f"{path}: header must be {','.join(CSV_HEADER)}")
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            try:
                char, prog = _parse_character(raw["character"])
                rows.append(
                    {
                        "state": raw["state"].strip(),
                        "v": int(raw["v"]),
                        "J": int(raw["J"]),
                        "character": char,
                        "progression_index": prog,
                        "energy_cm": _opt_float(raw["energy_cm"]),
                        "exc_wavelength_nm": _opt_float(raw["exc_wavelength_nm"]),
                        "deexc_wavelength_nm": _opt_float(raw["deexc_wavelength_nm"]),
                        "observed": raw["observed"].strip() not in ("0", "false", "False", ""),
                    }
                )
            except (ValueError, TypeError) as exc:
                raise DomainError(f"{path}:{lineno}: {exc}") from exc
    return rows


def build_table(rows):
    """Assemble a LevelTable from parsed CSV rows.

    The X(v=73, J=2) energy may be left empty; it is then filled from the
    derived reference offset.
    """
    offset, spread = derive_reference_offset(rows)
    levels = []
    for row in rows:
        energy = row["energy_cm"]
        if row["state"] == X_GROUND and energy is None:
            if (row["v"], row["J"]) == (73, 2):
                energy = offset
        uncertainty = 0.0
        if row["state"] == COUPLED_0U and row["observed"]:
            uncertainty = 0.011 + 0.001
        levels.append(
            SpectroscopicLevel(
                electronic_state=row["state"],
                v=row["v"],
                J=row["J"],
                character=row["character"],
                progression_index=row["progression_index"],
                energy_cm=energy,
                energy_uncertainty_cm=uncertainty,
                observed=row["observed"],
                exc_wavelength_nm=row["exc_wavelength_nm"],
                deexc_wavelength_nm=row["deexc_wavelength_nm"],
            )
        )

    by_key = {lvl.key: lvl for lvl in levels}
    ref = by_key.get((X_GROUND, 73, 2))
    if ref is None:
        ref = SpectroscopicLevel(X_GROUND, 73, 2, energy_cm=offset)
        levels.append(ref)
    ground = by_key.get((X_GROUND, 0, 0))
    if ground is None:
        ground = SpectroscopicLevel(X_GROUND, 0, 0, energy_cm=0.0)
        levels.append(ground)

    transitions = []
    for lvl in levels:
        if lvl.electronic_state != COUPLED_0U:
            continue
        if lvl.exc_wavelength_nm is not None:
            transitions.append(TransitionRecord(ref, lvl, lvl.exc_wavelength_nm))
        if lvl.deexc_wavelength_nm is not None:
            transitions.append(TransitionRecord(ground, lvl, lvl.deexc_wavelength_nm))
    return LevelTable(tuple(levels), tuple(transitions), offset, spread)


def load_table(path=None):
    """Load a level-table CSV; defaults to the shipped Cs2 level dataset."""
    if path is None:
        ref = resources.files("mscheme").joinpath("data/cs2_levels.csv")
        with resources.as_file(ref) as p:
            return build_table(read_table_rows(p))
    return build_table(read_table_rows(Path(path)))


def validate_table(table):
    """Self-consistency checks of a level table.

    * de-excitation rows: ``|1e7/lambda - E| <= 0.012`` cm^-1
    * J=1/J=3 pairs of one v': splitting inside ``SPLITTING_WINDOW_CM``
    * derived X(v=73,J=2) term value: spread across rows <= 0.02 cm^-1

    Failures are recorded in the report, never raised.
    """
    report = ValidationReport()
    if not table.transitions:
        return report

    for tr in table.transitions:
        if tr.kind != "deexcitation" or not tr.upper.observed:
            continue
        residual = wavelength_to_wavenumber(tr.wavelength_nm) - tr.upper.energy_cm
        report.add(
            "deexcitation_energy",
            f"v'={tr.upper.v} J={tr.upper.J}",
            residual,
            abs(residual) <= DEEXCITATION_TOLERANCE_CM,
        )

    pairs = {}
    for lvl in table.excited(observed_only=True):
        if lvl.J in (1, 3) and lvl.energy_cm is not None:
            pairs.setdefault(lvl.v, {})[lvl.J] = lvl.energy_cm
    lo, hi = SPLITTING_WINDOW_CM
    for v in sorted(pairs):
        pair = pairs[v]
        if 1 in pair and 3 in pair:
            split = pair[3] - pair[1]
            report.add("rotational_splitting", f"v'={v}", split, lo <= split <= hi)

    report.add(
        "reference_offset_spread",
        "X v=73 J=2",
        table.offset_spread_cm,
        table.offset_spread_cm <= OFFSET_CONSISTENCY_CM,
    )
    return report


def rotational_constants(table):
    """B for every v' that has both J=1 and J=3 observed, keyed by v'."""
    pairs = {}
    for lvl in table.excited(observed_only=True):
        pairs.setdefault(lvl.v, {})[lvl.J] = lvl.energy_cm
    return {
        v: rotational_constant(p[1], p[3]) for v, p in sorted(pairs.items()) if 1 in p and 3 in p
    }


def perturb_level(table, state, v, J, delta_cm):
    """Copy of ``table`` with one level's energy shifted; used for fault injection."""
    target = table.find(state, v, J)
    moved = replace(target, energy_cm=target.energy_cm + delta_cm)
    levels = tuple(moved if lvl.key == target.key else lvl for lvl in table.levels)
    transitions = tuple(
        replace(
            tr,
            lower=moved if tr.lower.key == target.key else tr.lower,
            upper=moved if tr.upper.key == target.key else tr.upper,
        )
        for tr in table.transitions
    )
    return replace(table, levels=levels, transitions=transitions)


def write_table_csv(table, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for lvl in table.levels:
            char = "" if lvl.character is None else f"{lvl.character}({lvl.progression_index})"

            def fmt(x):
                return "" if x is None else repr(float(x))

            energy = lvl.energy_cm
            if lvl.key == (X_GROUND, 73, 2):
                energy = None
            writer.writerow(
                [
                    lvl.electronic_state,
                    lvl.v,
                    lvl.J,
                    char,
                    fmt(energy),
                    fmt(lvl.exc_wavelength_nm),
                    fmt(lvl.deexc_wavelength_nm),
                    int(lvl.observed),
                ]
            )
