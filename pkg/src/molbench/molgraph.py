"""Attributed molecular graphs: SMILES parsing, canonical output, graph primitives.

The supported SMILES subset covers organic-subset atoms, bracket atoms with
isotope/charge/H-count, bond symbols ``- = # :``, aromatic lowercase atoms,
branches, ring closures (digits and ``%nn``), and dot-separated components.
Stereo markers (``/ \\ @ @@``) are accepted and discarded with a one-time
warning. Aromaticity is kept exactly as written: no kekulization and no
aromaticity perception, so inputs are expected to use aromatic SMILES
consistently (RDKit-style canonical output satisfies this).
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Sequence

import numpy as np

UNREACHABLE = -1

PERIODIC_TABLE = frozenset(
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co "
    "Ni Cu Zn Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb "
    "Te I Xe Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re "
    "Os Ir Pt Au Hg Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es "
    "Fm Md No Lr Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl Mc Lv Ts Og".split()
)

ORGANIC_SUBSET = frozenset({"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"})

# Lowercase aromatic symbols: bare tokens outside brackets, plus se/as inside.
_AROMATIC_BARE = {"b": "B", "c": "C", "n": "N", "o": "O", "p": "P", "s": "S"}
_AROMATIC_BRACKET = dict(_AROMATIC_BARE, se="Se", **{"as": "As"})
AROMATIC_ELEMENTS = frozenset(_AROMATIC_BRACKET.values())

# Standard valences used to fill implicit hydrogens on organic-subset atoms.
_VALENCES = {
    "B": (3,),
    "C": (4,),
    "N": (3, 5),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}


class BondOrder(IntEnum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4


# Twice the valence contribution per bond, so aromatic accounting stays integral.
_TWICE_ORDER = {
    BondOrder.SINGLE: 2,
    BondOrder.DOUBLE: 4,
    BondOrder.TRIPLE: 6,
    BondOrder.AROMATIC: 3,
}

_BOND_CHARS = {
    "-": BondOrder.SINGLE,
    "=": BondOrder.DOUBLE,
    "#": BondOrder.TRIPLE,
    ":": BondOrder.AROMATIC,
}


class SmilesParseError(ValueError):
    """Malformed SMILES input; carries the zero-based offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (position {position})")
        self.position = position


class StereoDiscardedWarning(UserWarning):
    """Stereochemical markers were present and dropped."""


@dataclass(frozen=True)
class Atom:
    element: str
    formal_charge: int = 0
    isotope: int | None = None
    explicit_h_count: int = 0
    aromatic: bool = False
    index: int = 0

    def invariant(self) -> tuple:
        """Canonicalization seed tuple, independent of the index."""
        return (
            self.element,
            self.formal_charge,
            self.isotope if self.isotope is not None else 0,
            self.explicit_h_count,
            self.aromatic,
        )


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: BondOrder = BondOrder.SINGLE

    def __post_init__(self):
        if self.a > self.b:
            lo, hi = self.b, self.a
            object.__setattr__(self, "a", lo)
            object.__setattr__(self, "b", hi)
        object.__setattr__(self, "order", BondOrder(self.order))

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.a, self.b)


def _normalized_bond(a: int, b: int, order: BondOrder) -> Bond:
    return Bond(a, b, BondOrder(order))


@dataclass(frozen=True)
class Molecule:
    """Immutable attributed graph. May be disconnected (salts, mixtures)."""

    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    source_smiles: str | None = None

    def __post_init__(self):
        atoms = tuple(self.atoms)
        bonds = tuple(self.bonds)  # Bond normalizes endpoint order itself
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "bonds", bonds)
        n = len(atoms)
        if n == 0:
            raise ValueError("molecule must have at least one atom")
        for i, atom in enumerate(atoms):
            if atom.index != i:
                raise ValueError(f"atom index {atom.index} at position {i} is not dense")
            if atom.element not in PERIODIC_TABLE:
                raise ValueError(f"unknown element {atom.element!r}")
            if atom.aromatic and atom.element not in AROMATIC_ELEMENTS:
                raise ValueError(f"element {atom.element!r} cannot carry an aromatic flag")
            if atom.explicit_h_count < 0:
                raise ValueError("negative hydrogen count")
            if atom.isotope is not None and atom.isotope < 0:
                raise ValueError("negative isotope")
        seen: set[tuple[int, int]] = set()
        adj: list[list[tuple[int, BondOrder]]] = [[] for _ in range(n)]
        for bond in bonds:
            if bond.a == bond.b:
                raise ValueError("self-loop bond")
            if not (0 <= bond.a < n and 0 <= bond.b < n):
                raise ValueError("bond endpoint out of range")
            key = (bond.a, bond.b)
            if key in seen:
                raise ValueError(f"duplicate bond between atoms {bond.a} and {bond.b}")
            seen.add(key)
            adj[bond.a].append((bond.b, bond.order))
            adj[bond.b].append((bond.a, bond.order))
        neighbors = tuple(tuple(sorted(nbrs)) for nbrs in adj)
        object.__setattr__(self, "_neighbors", neighbors)
        object.__setattr__(self, "_order_by_pair", {(b.a, b.b): b.order for b in bonds})

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def n_bonds(self) -> int:
        return len(self.bonds)

    def neighbors(self, i: int) -> tuple[tuple[int, BondOrder], ...]:
        return self._neighbors[i]

    def degree(self, i: int) -> int:
        return len(self._neighbors[i])

    def bond_order(self, i: int, j: int) -> BondOrder | None:
        if i > j:
            i, j = j, i
        return self._order_by_pair.get((i, j))

    def twice_bond_sum(self, i: int) -> int:
        return sum(_TWICE_ORDER[order] for _, order in self._neighbors[i])


def implied_h_count(element: str, aromatic: bool, twice_bond_sum: int) -> int:
    """Hydrogens implied by standard valences for a given bond-order total.

    Aromatic atoms use their lowest valence (an aromatic bond counts 1.5), so
    e.g. thiophene sulfur and furan oxygen get zero hydrogens while benzene
    carbons get one. Non-aromatic atoms take the smallest valence covering the
    bond total; totals beyond the largest valence imply zero hydrogens.
    """
    valences = _VALENCES.get(element)
    if valences is None:
        return 0
    if aromatic:
        return max(0, (2 * valences[0] - twice_bond_sum) // 2)
    for valence in valences:
        if 2 * valence >= twice_bond_sum:
            return (2 * valence - twice_bond_sum) // 2
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _is_ascii_digit(ch: str) -> bool:
    # str.isdigit admits unicode digits like superscripts; SMILES does not
    return "0" <= ch <= "9"


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.atoms: list[dict] = []
        self.bond_orders: dict[tuple[int, int], BondOrder] = {}
        self.prev: int | None = None
        self.pending: BondOrder | None = None
        self.branch_stack: list[tuple[int | None, int, int]] = []
        self.ring_open: dict[int, tuple[int, BondOrder | None, int]] = {}
        self.stereo_seen = False

    def fail(self, message: str, position: int | None = None):
        raise SmilesParseError(message, self.pos if position is None else position)

    def add_atom(self, spec: dict):
        idx = len(self.atoms)
        self.atoms.append(spec)
        if self.prev is not None:
            order = self.pending
            if order is None:
                order = (
                    BondOrder.AROMATIC
                    if spec["aromatic"] and self.atoms[self.prev]["aromatic"]
                    else BondOrder.SINGLE
                )
            self.add_bond(self.prev, idx, order)
        elif self.pending is not None:
            self.fail("bond symbol is not followed by an atom in the same component")
        self.pending = None
        self.prev = idx
        if self.branch_stack:
            anchor, count, opos = self.branch_stack[-1]
            self.branch_stack[-1] = (anchor, count + 1, opos)

    def add_bond(self, i: int, j: int, order: BondOrder):
        key = (i, j) if i < j else (j, i)
        if key in self.bond_orders:
            self.fail(f"duplicate bond between atoms {key[0]} and {key[1]}")
        self.bond_orders[key] = order

    def close_ring(self, num: int):
        if self.prev is None:
            self.fail("ring closure digit before any atom")
        if num in self.ring_open:
            other, other_order, _ = self.ring_open.pop(num)
            if other == self.prev:
                self.fail(f"ring closure {num} bonds an atom to itself")
            order = self.pending
            if order is None:
                order = other_order
            elif other_order is not None and other_order != order:
                self.fail(f"conflicting bond orders on ring closure {num}")
            if order is None:
                order = (
                    BondOrder.AROMATIC
                    if self.atoms[other]["aromatic"] and self.atoms[self.prev]["aromatic"]
                    else BondOrder.SINGLE
                )
            self.add_bond(other, self.prev, order)
        else:
            self.ring_open[num] = (self.prev, self.pending, self.pos)
        self.pending = None

    def note_stereo(self):
        if not self.stereo_seen:
            warnings.warn(
                "stereochemistry markers are not supported and were discarded",
                StereoDiscardedWarning,
                stacklevel=4,
            )
            self.stereo_seen = True

    def parse_bracket(self):
        start = self.pos
        end = self.text.find("]", start + 1)
        if end < 0:
            self.fail("unterminated bracket atom", start)
        inner = self.text[start + 1 : end]
        i = 0

        def sub_fail(message, offset):
            self.fail(message, start + 1 + offset)

        isotope = None
        digits = ""
        while i < len(inner) and _is_ascii_digit(inner[i]):
            digits += inner[i]
            i += 1
        if digits:
            isotope = int(digits)
        if i >= len(inner):
            sub_fail("bracket atom has no element symbol", i)
        aromatic = False
        if inner[i : i + 2] in ("se", "as"):
            element = _AROMATIC_BRACKET[inner[i : i + 2]]
            aromatic = True
            i += 2
        elif inner[i] in _AROMATIC_BRACKET:
            element = _AROMATIC_BRACKET[inner[i]]
            aromatic = True
            i += 1
        elif inner[i].isupper():
            element = inner[i]
            i += 1
            if i < len(inner) and inner[i].islower():
                element += inner[i]
                i += 1
            if element not in PERIODIC_TABLE:
                sub_fail(f"unknown element {element!r}", i - len(element))
        else:
            sub_fail(f"unexpected character {inner[i]!r} in bracket atom", i)
        while i < len(inner) and inner[i] == "@":
            self.note_stereo()
            i += 1
        h_count = 0
        if i < len(inner) and inner[i] == "H":
            i += 1
            digits = ""
            while i < len(inner) and _is_ascii_digit(inner[i]):
                digits += inner[i]
                i += 1
            h_count = int(digits) if digits else 1
        charge = 0
        if i < len(inner) and inner[i] in "+-":
            sign_char = inner[i]
            sign = 1 if sign_char == "+" else -1
            i += 1
            digits = ""
            while i < len(inner) and _is_ascii_digit(inner[i]):
                digits += inner[i]
                i += 1
            if digits:
                charge = sign * int(digits)
            else:
                charge = sign
                while i < len(inner) and inner[i] == sign_char:
                    charge += sign
                    i += 1
        if i < len(inner) and inner[i] == ":":
            # Atom class: parsed and discarded, it carries no graph information.
            i += 1
            if i >= len(inner) or not _is_ascii_digit(inner[i]):
                sub_fail("atom class marker ':' needs digits", i)
            while i < len(inner) and _is_ascii_digit(inner[i]):
                i += 1
        if i != len(inner):
            sub_fail(f"unexpected character {inner[i]!r} in bracket atom", i)
        self.add_atom(
            {
                "element": element,
                "charge": charge,
                "isotope": isotope,
                "h": h_count,
                "aromatic": aromatic,
                "bracket": True,
            }
        )
        self.pos = end + 1

    def parse(self) -> Molecule:
        text = self.text
        if not text:
            self.fail("empty SMILES input", 0)
        while self.pos < len(text):
            ch = text[self.pos]
            if ch == "[":
                self.parse_bracket()
                continue
            if text[self.pos : self.pos + 2] in ("Cl", "Br"):
                self.add_atom(
                    {
                        "element": text[self.pos : self.pos + 2],
                        "charge": 0,
                        "isotope": None,
                        "h": 0,
                        "aromatic": False,
                        "bracket": False,
                    }
                )
                self.pos += 2
                continue
            if ch in "BCNOPSFI":
                self.add_atom(
                    {
                        "element": ch,
                        "charge": 0,
                        "isotope": None,
                        "h": 0,
                        "aromatic": False,
                        "bracket": False,
                    }
                )
                self.pos += 1
                continue
            if ch in _AROMATIC_BARE:
                self.add_atom(
                    {
                        "element": _AROMATIC_BARE[ch],
                        "charge": 0,
                        "isotope": None,
                        "h": 0,
                        "aromatic": True,
                        "bracket": False,
                    }
                )
                self.pos += 1
                continue
            if _is_ascii_digit(ch):
                self.close_ring(int(ch))
                self.pos += 1
                continue
            if ch == "%":
                digits = text[self.pos + 1 : self.pos + 3]
                if len(digits) != 2 or not all(_is_ascii_digit(d) for d in digits):
                    self.fail("'%' ring closure needs two digits")
                self.close_ring(int(digits))
                self.pos += 3
                continue
            if ch in _BOND_CHARS:
                if self.pending is not None:
                    self.fail("two bond symbols in a row")
                self.pending = _BOND_CHARS[ch]
                self.pos += 1
                continue
            if ch in "/\\":
                # Directional single bond; direction is stereo and is dropped.
                self.note_stereo()
                if self.pending is not None:
                    self.fail("two bond symbols in a row")
                self.pending = BondOrder.SINGLE
                self.pos += 1
                continue
            if ch == "(":
                if self.prev is None:
                    self.fail("branch opened before any atom")
                if self.pending is not None:
                    self.fail("bond symbol before '('")
                self.branch_stack.append((self.prev, 0, self.pos))
                self.pos += 1
                continue
            if ch == ")":
                if not self.branch_stack:
                    self.fail("unmatched ')'")
                if self.pending is not None:
                    self.fail("dangling bond symbol before ')'")
                anchor, count, opos = self.branch_stack.pop()
                if count == 0:
                    self.fail("empty branch", opos)
                self.prev = anchor
                self.pos += 1
                continue
            if ch == ".":
                if self.pending is not None:
                    self.fail("bond symbol before '.'")
                if self.prev is None:
                    self.fail("'.' must follow an atom")
                self.prev = None
                self.pos += 1
                continue
            self.fail(f"unexpected character {ch!r}")
        if self.pending is not None:
            self.fail("dangling bond symbol at end of input", len(text) - 1)
        if self.branch_stack:
            self.fail("unclosed branch", self.branch_stack[-1][2])
        if self.ring_open:
            num, (_, _, pos) = min(self.ring_open.items(), key=lambda kv: kv[1][2])
            self.fail(f"unmatched ring closure {num}", pos)

        bonds = tuple(
            _normalized_bond(a, b, order) for (a, b), order in self.bond_orders.items()
        )
        twice = [0] * len(self.atoms)
        for bond in bonds:
            twice[bond.a] += _TWICE_ORDER[bond.order]
            twice[bond.b] += _TWICE_ORDER[bond.order]
        atoms = []
        for i, spec in enumerate(self.atoms):
            if spec["bracket"]:
                h = spec["h"]
            else:
                h = implied_h_count(spec["element"], spec["aromatic"], twice[i])
            atoms.append(
                Atom(
                    element=spec["element"],
                    formal_charge=spec["charge"],
                    isotope=spec["isotope"],
                    explicit_h_count=h,
                    aromatic=spec["aromatic"],
                    index=i,
                )
            )
        return Molecule(atoms=tuple(atoms), bonds=bonds, source_smiles=self.text)


def parse_smiles(text: str) -> Molecule:
    """Parse a SMILES string into a :class:`Molecule`.

    Raises :class:`SmilesParseError` with the offending position for any
    malformed input; never crashes on arbitrary byte strings.
    """
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Canonicalization
# ---------------------------------------------------------------------------


def _dense_ranks(keys: dict[int, tuple]) -> dict[int, int]:
    order = {key: rank for rank, key in enumerate(sorted(set(keys.values())))}
    return {atom: order[key] for atom, key in keys.items()}


def _refine(mol: Molecule, ranks: dict[int, int]) -> dict[int, int]:
    atoms = list(ranks)
    n_cells = len(set(ranks.values()))
    while True:
        keys = {
            a: (
                ranks[a],
                tuple(sorted((int(order), ranks[j]) for j, order in mol.neighbors(a) if j in ranks)),
            )
            for a in atoms
        }
        new_ranks = _dense_ranks(keys)
        new_cells = len(set(new_ranks.values()))
        if new_cells == n_cells:
            return new_ranks
        ranks, n_cells = new_ranks, new_cells


def canonical_ranks(mol: Molecule, atom_ids: Sequence[int] | None = None) -> dict[int, int]:
    """Order-independent atom ranks via iterative neighborhood refinement.

    Ties after stabilization are broken by individualizing one member of the
    lowest-ranked tied cell and re-refining. Members of a stable cell are
    treated as equivalent, which holds for refinement-identifiable graphs
    (all realistic molecules).
    """
    if atom_ids is None:
        atom_ids = range(mol.n_atoms)
    invariants = {
        i: mol.atoms[i].invariant() + (mol.degree(i),) for i in atom_ids
    }
    ranks = _refine(mol, _dense_ranks(invariants))
    n = len(invariants)
    while len(set(ranks.values())) < n:
        by_rank: dict[int, list[int]] = {}
        for atom, rank in ranks.items():
            by_rank.setdefault(rank, []).append(atom)
        tied_rank = min(r for r, members in by_rank.items() if len(members) > 1)
        chosen = min(by_rank[tied_rank])
        keys = {a: (ranks[a], 0 if a == chosen else 1) for a in ranks}
        ranks = _refine(mol, _dense_ranks(keys))
    return ranks


def _bare_ok(mol: Molecule, i: int) -> bool:
    atom = mol.atoms[i]
    if atom.element not in ORGANIC_SUBSET:
        return False
    if atom.formal_charge != 0 or atom.isotope is not None:
        return False
    if atom.aromatic and atom.element not in _AROMATIC_BARE.values():
        return False
    implied = implied_h_count(atom.element, atom.aromatic, mol.twice_bond_sum(i))
    return implied == atom.explicit_h_count


def _atom_token(mol: Molecule, i: int) -> str:
    atom = mol.atoms[i]
    symbol = atom.element.lower() if atom.aromatic else atom.element
    if _bare_ok(mol, i):
        return symbol
    parts = ["["]
    if atom.isotope is not None:
        parts.append(str(atom.isotope))
    parts.append(symbol)
    if atom.explicit_h_count == 1:
        parts.append("H")
    elif atom.explicit_h_count > 1:
        parts.append(f"H{atom.explicit_h_count}")
    charge = atom.formal_charge
    if charge == 1:
        parts.append("+")
    elif charge == -1:
        parts.append("-")
    elif charge > 1:
        parts.append(f"+{charge}")
    elif charge < -1:
        parts.append(f"-{-charge}")
    parts.append("]")
    return "".join(parts)


def _bond_symbol(order: BondOrder, both_aromatic: bool) -> str:
    if order == BondOrder.SINGLE:
        return "-" if both_aromatic else ""
    if order == BondOrder.AROMATIC:
        return "" if both_aromatic else ":"
    if order == BondOrder.DOUBLE:
        return "="
    return "#"


def _ring_digit(marker: int) -> str:
    if marker > 99:
        raise ValueError("more than 99 ring closures in one component")
    return str(marker) if marker < 10 else f"%{marker:02d}"


def _component_string(mol: Molecule, atom_ids: list[int]) -> str:
    ranks = canonical_ranks(mol, atom_ids)
    start = min(atom_ids, key=lambda a: ranks[a])

    children: dict[int, list[int]] = {a: [] for a in atom_ids}
    ring_at: dict[int, list[tuple[int, int, bool]]] = {a: [] for a in atom_ids}
    visited = {start}
    used_edges: set[tuple[int, int]] = set()
    ring_edges: list[tuple[int, int]] = []
    stack = [(start, iter(sorted((j for j, _ in mol.neighbors(start)), key=lambda j: ranks[j])))]
    while stack:
        u, it = stack[-1]
        v = next(it, None)
        if v is None:
            stack.pop()
            continue
        edge = (u, v) if u < v else (v, u)
        if edge in used_edges:
            continue
        used_edges.add(edge)
        if v in visited:
            ring_edges.append((v, u))  # v was visited earlier (ancestor)
        else:
            visited.add(v)
            children[u].append(v)
            stack.append((v, iter(sorted((j for j, _ in mol.neighbors(v)), key=lambda j: ranks[j]))))
    for marker, (opener, closer) in enumerate(ring_edges, start=1):
        ring_at[opener].append((marker, closer, True))
        ring_at[closer].append((marker, opener, False))

    def emit(u: int) -> str:
        parts = [_atom_token(mol, u)]
        for marker, other, opens in sorted(ring_at[u]):
            order = mol.bond_order(u, other)
            if opens:
                both = mol.atoms[u].aromatic and mol.atoms[other].aromatic
                parts.append(_bond_symbol(order, both))
            parts.append(_ring_digit(marker))
        kids = children[u]
        for pos, child in enumerate(kids):
            order = mol.bond_order(u, child)
            both = mol.atoms[u].aromatic and mol.atoms[child].aromatic
            sym = _bond_symbol(order, both)
            if pos < len(kids) - 1:
                parts.append(f"({sym}{emit(child)})")
            else:
                parts.append(sym + emit(child))
        return "".join(parts)

    return emit(start)


def _component_atom_lists(mol: Molecule) -> list[list[int]]:
    seen = [False] * mol.n_atoms
    components = []
    for root in range(mol.n_atoms):
        if seen[root]:
            continue
        queue = deque([root])
        seen[root] = True
        atoms = []
        while queue:
            u = queue.popleft()
            atoms.append(u)
            for v, _ in mol.neighbors(u):
                if not seen[v]:
                    seen[v] = True
                    queue.append(v)
        components.append(sorted(atoms))
    return components


def write_canonical_smiles(mol: Molecule) -> str:
    """Canonical SMILES: identical for every atom-index permutation of a graph.

    Components are emitted largest first, ties by the component string itself,
    so dot-separated component order never matters.
    """
    pieces = [
        (-len(atom_ids), _component_string(mol, atom_ids))
        for atom_ids in _component_atom_lists(mol)
    ]
    pieces.sort()
    return ".".join(s for _, s in pieces)


def canonical_smiles(text: str) -> str:
    """Parse then write: the structural dedup key for a SMILES string."""
    return write_canonical_smiles(parse_smiles(text))


# ---------------------------------------------------------------------------
# Graph primitives
# ---------------------------------------------------------------------------


def topological_distance_matrix(mol: Molecule) -> np.ndarray:
    """Minimum bond counts between all atom pairs; ``UNREACHABLE`` across components."""
    n = mol.n_atoms
    dist = np.full((n, n), UNREACHABLE, dtype=np.int32)
    for src in range(n):
        dist[src, src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for v, _ in mol.neighbors(u):
                if dist[src, v] == UNREACHABLE:
                    dist[src, v] = dist[src, u] + 1
                    queue.append(v)
    return dist


def ring_flags(mol: Molecule) -> tuple[np.ndarray, np.ndarray]:
    """Per-atom and per-bond membership in at least one cycle (bridge detection)."""
    n = mol.n_atoms
    bond_index = {(b.a, b.b): k for k, b in enumerate(mol.bonds)}
    disc = [-1] * n
    low = [0] * n
    is_bridge = np.zeros(mol.n_bonds, dtype=bool)
    timer = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        stack: list[tuple[int, int, Iterable]] = [(root, -1, iter(mol.neighbors(root)))]
        disc[root] = low[root] = timer
        timer += 1
        parent_edge = {root: -1}
        while stack:
            u, parent, it = stack[-1]
            advanced = False
            for v, _ in it:
                edge_id = bond_index[(u, v) if u < v else (v, u)]
                if edge_id == parent_edge[u]:
                    continue
                if disc[v] == -1:
                    disc[v] = low[v] = timer
                    timer += 1
                    parent_edge[v] = edge_id
                    stack.append((v, u, iter(mol.neighbors(v))))
                    advanced = True
                    break
                low[u] = min(low[u], disc[v])
            if not advanced:
                stack.pop()
                if parent != -1:
                    low[parent] = min(low[parent], low[u])
                    if low[u] > disc[parent]:
                        is_bridge[parent_edge[u]] = True
    bond_in_ring = ~is_bridge
    atom_in_ring = np.zeros(n, dtype=bool)
    for k, bond in enumerate(mol.bonds):
        if bond_in_ring[k]:
            atom_in_ring[bond.a] = True
            atom_in_ring[bond.b] = True
    return atom_in_ring, bond_in_ring


def subgraph(mol: Molecule, atom_ids: Sequence[int]) -> Molecule:
    """Induced subgraph with atoms reindexed densely in the given order."""
    remap = {old: new for new, old in enumerate(atom_ids)}
    atoms = tuple(
        Atom(
            element=mol.atoms[old].element,
            formal_charge=mol.atoms[old].formal_charge,
            isotope=mol.atoms[old].isotope,
            explicit_h_count=mol.atoms[old].explicit_h_count,
            aromatic=mol.atoms[old].aromatic,
            index=new,
        )
        for new, old in enumerate(atom_ids)
    )
    bonds = tuple(
        _normalized_bond(remap[b.a], remap[b.b], b.order)
        for b in mol.bonds
        if b.a in remap and b.b in remap
    )
    return Molecule(atoms=atoms, bonds=bonds, source_smiles=None)


def connected_components(mol: Molecule) -> list[Molecule]:
    """Maximal connected fragments, largest first, ties by canonical SMILES."""
    fragments = [subgraph(mol, atom_ids) for atom_ids in _component_atom_lists(mol)]
    return sorted(fragments, key=lambda f: (-f.n_atoms, write_canonical_smiles(f)))


def permute_atoms(mol: Molecule, perm: Sequence[int]) -> Molecule:
    """Relabel atoms so old index ``i`` becomes ``perm[i]``; same graph."""
    n = mol.n_atoms
    if sorted(perm) != list(range(n)):
        raise ValueError("perm must be a permutation of 0..n-1")
    atoms: list[Atom | None] = [None] * n
    for old, atom in enumerate(mol.atoms):
        atoms[perm[old]] = Atom(
            element=atom.element,
            formal_charge=atom.formal_charge,
            isotope=atom.isotope,
            explicit_h_count=atom.explicit_h_count,
            aromatic=atom.aromatic,
            index=perm[old],
        )
    bonds = tuple(_normalized_bond(perm[b.a], perm[b.b], b.order) for b in mol.bonds)
    return Molecule(atoms=tuple(atoms), bonds=bonds, source_smiles=mol.source_smiles)
