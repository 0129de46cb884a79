"""JSON game-definition files for classical and quantum games.

Both kinds share one envelope: ``{"kind": "classical" | "quantum", ...}``.
Diagnostics point at the line and column of the offending JSON value.

Quantum files::

    {"kind": "quantum", "players": 3, "qudits": [2, 2, 2],
     "initial_state": {"ghz_like": {"gamma": 1.0}},      # or {"amplitudes": [[re, im], ...]}
     "operators": ["basis_shift", ...],                  # one entry per qudit
     "classes": ["", "0@1", "1@1", ...],
     "player_fn": {"": 1, "0@1": 3, ...},
     "payoffs": {"0@1,0@3": [3, 3, 1], ...}}

An operator entry is ``"basis_shift"``, a list of named members, or
``{"family": "eisert", "members": [...]}``. A member is one of
``{"name": "V1", "basis_shift": 1, "phases": [...]}``,
``{"name": "C", "eisert": [theta, phi]}`` or
``{"name": "H", "matrix": [[[re, im], ...], ...]}``.

Classical files::

    {"kind": "classical", "players": 2,
     "histories": [[], ["a0"], ["a0", "b0"], ...],
     "player_fn": {"": 1, "a0": 2, ...},                 # "c" marks chance
     "chance": {"x": {"l": 0.5, "r": 0.5}},              # optional
     "info_sets": {"1": [[""]], "2": [["a0", "a1"]]},
     "payoffs": {"a0,b0": [3, 3], ...}}

History keys join action labels with commas; the root is ``""``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import classical, qgame
from .classical import CHANCE, ExtensiveGame, GameForm, history_key, parse_history_key
from .eisert import eisert_operator
from .errors import GameError, GammaOutOfRange, GameReferenceError, GameSyntaxError, SchemaError
from .qgame import OperatorSet, OutcomeClass, QuantumExtensiveGame, QuantumGameForm, QStrategyProfile
from .qstate import QuditLayout, Unitary, basis_shift_operator, build_state, ghz_like_state

Path_ = tuple  # JSON path: keys and list indices from the document root

GAMES_DIR = Path(__file__).parent / "games"


# source locations ----------------------------------------------------------

_WS = " \t\r\n"


def _skip_ws(text: str, pos: int) -> int:
    while pos < len(text) and text[pos] in _WS:
        pos += 1
    return pos


def _skip_value(text: str, pos: int) -> int:
    """Offset just past the JSON value starting at ``pos`` (input already valid)."""
    ch = text[pos]
    if ch == '"':
        return json.decoder.scanstring(text, pos + 1)[1]
    if ch in "[{":
        depth = 0
        while True:
            ch = text[pos]
            if ch == '"':
                pos = json.decoder.scanstring(text, pos + 1)[1]
                continue
            if ch in "[{":
                depth += 1
            elif ch in "]}":
                depth -= 1
                if depth == 0:
                    return pos + 1
            pos += 1
    while pos < len(text) and text[pos] not in ",]}" + _WS:
        pos += 1
    return pos


def _child_offset(text: str, pos: int, step) -> int | None:
    """Offset of member ``step`` (key or index) of the container at ``pos``."""
    opener = text[pos]
    pos = _skip_ws(text, pos + 1)
    index = 0
    while pos < len(text) and text[pos] not in "]}":
        if opener == "{":
            key, end = json.decoder.scanstring(text, pos + 1)
            key_pos = pos
            pos = _skip_ws(text, _skip_ws(text, end) + 1)  # past ':'
            if key == step:
                return key_pos
        elif index == step:
            return pos
        pos = _skip_ws(text, _skip_value(text, pos))
        if pos < len(text) and text[pos] == ",":
            pos = _skip_ws(text, pos + 1)
        index += 1
    return None


def _value_offset(text: str, path: Path_) -> int:
    """Offset of the value at ``path``; an object member resolves to its key."""
    pos = _skip_ws(text, 0)
    for depth, step in enumerate(path):
        if pos >= len(text) or text[pos] not in "[{":
            break
        child = _child_offset(text, pos, step)
        if child is None:
            break
        if text[pos] == "{" and depth < len(path) - 1:
            end = json.decoder.scanstring(text, child + 1)[1]
            pos = _skip_ws(text, _skip_ws(text, end) + 1)
        else:
            pos = child
    return pos


def _line_col(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


# documents -----------------------------------------------------------------

@dataclass
class GameDocument:
    kind: str
    data: dict
    text: str = field(default="", repr=False, compare=False)
    source: str = field(default="<string>", compare=False)

    def locate(self, *path) -> tuple[int, int]:
        """(line, column) of the value at ``path``, or of its nearest parent."""
        if not self.text:
            return (0, 0)
        return _line_col(self.text, _value_offset(self.text, tuple(path)))

    def error(self, cls, message: str, *path) -> GameError:
        line, col = self.locate(*path)
        return cls(
            f"{self.source}:{line}:{col}: {message}",
            file=self.source,
            line=line,
            column=col,
        )

    def has_gamma(self) -> bool:
        return self.kind == "quantum" and "ghz_like" in self.data.get("initial_state", {})

    def build(self, gamma: float | None = None):
        if self.kind == "classical":
            return _build_classical(self)
        return _build_quantum(self, gamma)


def parse_game(text: str, source: str = "<string>") -> GameDocument:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GameSyntaxError(
            f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}",
            file=source,
            line=exc.lineno,
            column=exc.colno,
            expected="a JSON value",
        ) from None
    doc = GameDocument(kind="", data=data, text=text, source=source)
    if not isinstance(data, dict):
        raise doc.error(SchemaError, "top level must be a JSON object")
    kind = data.get("kind")
    if kind not in ("classical", "quantum"):
        raise doc.error(SchemaError, "field 'kind' must be 'classical' or 'quantum'", "kind")
    doc.kind = kind
    # resolve everything now so that parse errors surface at load time
    doc.build()
    return doc


def load_game(path: str | Path) -> GameDocument:
    path = Path(path)
    return parse_game(path.read_text(encoding="utf-8"), source=str(path))


def bundled_path(name: str) -> Path:
    return GAMES_DIR / name


def load_bundled(name: str) -> GameDocument:
    return load_game(bundled_path(name))


def serialize(doc: GameDocument) -> str:
    return json.dumps(doc.data, indent=2, ensure_ascii=False) + "\n"


# field access helpers --------------------------------------------------------

def _require(doc: GameDocument, obj: dict, key: str, kind, *path):
    if key not in obj:
        raise doc.error(SchemaError, f"missing required field '{key}'", *path)
    value = obj[key]
    if not isinstance(value, kind) or (isinstance(value, bool) and kind is not bool):
        raise doc.error(SchemaError, f"field '{key}' has the wrong type", *path, key)
    return value


def _number(doc: GameDocument, value, *path) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise doc.error(SchemaError, "expected a number", *path)
    return float(value)


def _complex(doc: GameDocument, value, *path) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, list) and len(value) == 2:
        return complex(_number(doc, value[0], *path, 0), _number(doc, value[1], *path, 1))
    raise doc.error(SchemaError, "expected a number or a [re, im] pair", *path)


def _payoff_vector(doc: GameDocument, value, n: int, *path) -> list[float]:
    if not isinstance(value, list) or len(value) != n:
        raise doc.error(SchemaError, f"payoff must be a list of {n} numbers", *path)
    return [_number(doc, x, *path, k) for k, x in enumerate(value)]


def _player(doc: GameDocument, value, n: int, *path, allow_chance=False):
    if allow_chance and value == CHANCE:
        return CHANCE
    if isinstance(value, bool) or not isinstance(value, int) or not 1 <= value <= n:
        raise doc.error(GameReferenceError, f"unknown player {value!r}", *path)
    return value


# quantum -------------------------------------------------------------------

def _operator_member(doc: GameDocument, entry, dim: int, *path) -> Unitary:
    if not isinstance(entry, dict):
        raise doc.error(SchemaError, "operator member must be an object", *path)
    name = _require(doc, entry, "name", str, *path)
    try:
        if "basis_shift" in entry:
            t = entry["basis_shift"]
            phases = entry.get("phases")
            op = basis_shift_operator(dim, t, phases)
        elif "eisert" in entry:
            theta, phi = (_number(doc, x, *path, "eisert", k) for k, x in enumerate(entry["eisert"]))
            op = eisert_operator(theta, phi)
        elif "matrix" in entry:
            rows = entry["matrix"]
            m = np.array(
                [[_complex(doc, x, *path, "matrix", r, c) for c, x in enumerate(row)] for r, row in enumerate(rows)]
            )
            op = Unitary(m)
        else:
            raise doc.error(SchemaError, "operator member needs 'basis_shift', 'eisert' or 'matrix'", *path)
    except GameError as exc:
        if exc.details.get("line"):
            raise
        raise doc.error(SchemaError, f"operator {name!r}: {exc.message}", *path) from None
    except (TypeError, ValueError) as exc:
        raise doc.error(SchemaError, f"operator {name!r}: {exc}", *path) from None
    if op.dim != dim:
        raise doc.error(SchemaError, f"operator {name!r} has dim {op.dim}, qudit has dim {dim}", *path)
    return Unitary(op.matrix, name=name)


def _operator_set(doc: GameDocument, entry, dim: int, *path) -> OperatorSet:
    if entry == "basis_shift":
        return OperatorSet.basis_shifts(dim)
    family = None
    members = entry
    if isinstance(entry, dict):
        family = entry.get("family")
        if family not in (None, "eisert"):
            raise doc.error(SchemaError, f"unknown operator family {family!r}", *path, "family")
        if family == "eisert" and dim != 2:
            raise doc.error(SchemaError, "the eisert family needs a qubit", *path, "family")
        members = entry.get("members", [])
        path = path + ("members",)
    if not isinstance(members, list):
        raise doc.error(SchemaError, "operators entry must be 'basis_shift', a list or an object", *path)
    ops = [_operator_member(doc, m, dim, *path, k) for k, m in enumerate(members)]
    names = [op.name for op in ops]
    for k, name in enumerate(names):
        if names.index(name) != k:
            raise doc.error(SchemaError, f"duplicate operator name {name!r}", *path, k)
    return OperatorSet(dim, tuple(ops), family=family)


def _initial_state(doc: GameDocument, layout: QuditLayout, gamma: float | None):
    spec = _require(doc, doc.data, "initial_state", dict)
    if "ghz_like" in spec:
        params = spec["ghz_like"]
        if not isinstance(params, dict) or "gamma" not in params:
            raise doc.error(SchemaError, "ghz_like needs a 'gamma' field", "initial_state", "ghz_like")
        g = _number(doc, params["gamma"], "initial_state", "ghz_like", "gamma") if gamma is None else gamma
        try:
            return ghz_like_state(layout, g)
        except GammaOutOfRange:
            if gamma is not None:
                raise  # a caller-supplied override, not a file problem
            raise doc.error(SchemaError, f"gamma={g} is outside [0, pi]", "initial_state", "ghz_like", "gamma") from None
        except GameError as exc:
            raise doc.error(SchemaError, exc.message, "initial_state", "ghz_like") from None
    if "amplitudes" in spec:
        if gamma is not None:
            raise doc.error(SchemaError, "gamma override needs a ghz_like initial state", "initial_state")
        amps = spec["amplitudes"]
        if not isinstance(amps, list):
            raise doc.error(SchemaError, "amplitudes must be a list", "initial_state", "amplitudes")
        values = [_complex(doc, a, "initial_state", "amplitudes", k) for k, a in enumerate(amps)]
        try:
            return build_state(layout, values)
        except GameError as exc:
            raise doc.error(SchemaError, exc.message, "initial_state", "amplitudes") from None
    raise doc.error(SchemaError, "initial_state needs 'ghz_like' or 'amplitudes'", "initial_state")


def _class(doc: GameDocument, key, *path) -> OutcomeClass:
    if not isinstance(key, str):
        raise doc.error(SchemaError, "class keys must be strings like '0@1,1@2'", *path)
    try:
        return OutcomeClass.parse(key)
    except ValueError as exc:
        raise doc.error(SchemaError, str(exc), *path) from None


def _build_quantum(doc: GameDocument, gamma: float | None) -> QuantumExtensiveGame:
    data = doc.data
    n = _require(doc, data, "players", int)
    if n < 1:
        raise doc.error(SchemaError, "players must be positive", "players")
    dims = _require(doc, data, "qudits", list)
    if not dims or any(isinstance(d, bool) or not isinstance(d, int) or d < 2 for d in dims):
        raise doc.error(SchemaError, "qudits must be a non-empty list of integers >= 2", "qudits")
    layout = QuditLayout(tuple(dims))
    state = _initial_state(doc, layout, gamma)

    ops_spec = _require(doc, data, "operators", list)
    if len(ops_spec) != len(dims):
        raise doc.error(SchemaError, f"need one operators entry per qudit ({len(dims)})", "operators")
    op_sets = [_operator_set(doc, e, d, "operators", k) for k, (e, d) in enumerate(zip(ops_spec, dims))]

    class_list = _require(doc, data, "classes", list)
    classes = {}
    for k, key in enumerate(class_list):
        c = _class(doc, key, "classes", k)
        if c in classes:
            raise doc.error(SchemaError, f"class {c} is listed twice", "classes", k)
        classes[c] = k
    problems = qgame.validate_classes(classes, layout)
    if problems:
        raise doc.error(SchemaError, problems[0], "classes", _blame(problems[0], classes))

    player_fn = {}
    for key, p in _require(doc, data, "player_fn", dict).items():
        c = _class(doc, key, "player_fn", key)
        if c not in classes:
            raise doc.error(GameReferenceError, f"player_fn names unknown class {c}", "player_fn", key)
        player_fn[c] = _player(doc, p, n, "player_fn", key)

    payoffs = {}
    for key, u in _require(doc, data, "payoffs", dict).items():
        c = _class(doc, key, "payoffs", key)
        if c not in classes:
            missing = [s for s in _siblings(c, layout) if s not in classes]
            hint = f"; missing sibling {missing[0]}" if missing else ""
            raise doc.error(GameReferenceError, f"payoffs name unknown class {c}{hint}", "payoffs", key)
        payoffs[c] = _payoff_vector(doc, u, n, "payoffs", key)

    form = QuantumGameForm(n, state, op_sets, frozenset(classes), player_fn)
    game = QuantumExtensiveGame(form, payoffs)
    problems = qgame.validate_qgame(game)
    if problems:
        raise doc.error(SchemaError, problems[0], *_blame_path(problems[0]))
    return game


def _siblings(c: OutcomeClass, layout: QuditLayout):
    out = []
    for k in range(1, len(c) + 1):
        j = c.steps[k - 1][0]
        if 1 <= j <= layout.num_qudits:
            out.extend(c.prefix(k - 1).extend(j, nu) for nu in range(layout.dims[j - 1]))
    return out


_CLASS_IN_MESSAGE = re.compile(r"\[([^\]]*)\]")


def _blame(message: str, classes: dict):
    """Index of the first class named in ``message`` that is listed in the file."""
    for m in _CLASS_IN_MESSAGE.finditer(message):
        key = "" if m.group(1) == "∅" else m.group(1)
        c = OutcomeClass.parse(key)
        if c in classes:
            return classes[c]
    return 0


def _blame_path(message: str) -> tuple:
    if message.startswith("player function"):
        return ("player_fn",)
    if "payoff" in message:
        return ("payoffs",)
    if "operator set" in message:
        return ("operators",)
    if "qudits" in message or "players" in message:
        return ("players",)
    return ()


# classical -----------------------------------------------------------------

def _build_classical(doc: GameDocument) -> ExtensiveGame:
    data = doc.data
    n = _require(doc, data, "players", int)
    if n < 1:
        raise doc.error(SchemaError, "players must be positive", "players")
    histories = set()
    for k, h in enumerate(_require(doc, data, "histories", list)):
        if not isinstance(h, list) or not all(isinstance(a, str) and a and "," not in a for a in h):
            raise doc.error(SchemaError, "a history is a list of non-empty action labels without commas", "histories", k)
        if tuple(h) in histories:
            raise doc.error(SchemaError, f"history ({history_key(tuple(h))}) is listed twice", "histories", k)
        histories.add(tuple(h))

    def hist(key, *path):
        if not isinstance(key, str):
            raise doc.error(SchemaError, "history keys must be strings", *path)
        h = parse_history_key(key)
        if h not in histories:
            raise doc.error(GameReferenceError, f"unknown history ({key})", *path)
        return h

    player_fn = {
        hist(key, "player_fn", key): _player(doc, p, n, "player_fn", key, allow_chance=True)
        for key, p in _require(doc, data, "player_fn", dict).items()
    }
    chance = {}
    for key, dist in data.get("chance", {}).items():
        h = hist(key, "chance", key)
        if not isinstance(dist, dict):
            raise doc.error(SchemaError, "a chance distribution maps actions to probabilities", "chance", key)
        chance[h] = {a: _number(doc, p, "chance", key, a) for a, p in dist.items()}
    info = {}
    for player_key, sets in _require(doc, data, "info_sets", dict).items():
        try:
            i = int(player_key)
        except ValueError:
            raise doc.error(GameReferenceError, f"unknown player {player_key!r}", "info_sets", player_key) from None
        _player(doc, i, n, "info_sets", player_key)
        if not isinstance(sets, list):
            raise doc.error(SchemaError, "information sets must be a list of lists", "info_sets", player_key)
        info[i] = [
            frozenset(hist(key, "info_sets", player_key, k, r) for r, key in enumerate(s))
            for k, s in enumerate(sets)
        ]
    utilities = {
        hist(key, "payoffs", key): _payoff_vector(doc, u, n, "payoffs", key)
        for key, u in _require(doc, data, "payoffs", dict).items()
    }
    game = ExtensiveGame(GameForm(n, frozenset(histories), player_fn, info, chance), utilities)
    problems = classical.validate_game(game)
    if problems:
        raise doc.error(SchemaError, problems[0], *_blame_path(problems[0]))
    return game


# games back to documents -----------------------------------------------------

def _num(x: float):
    x = float(x)
    return int(x) if x.is_integer() and abs(x) < 2**53 else x


def _pair(z: complex):
    return [_num(z.real), _num(z.imag)]


def document_from_quantum(game: QuantumExtensiveGame, gamma: float | None = None) -> GameDocument:
    """Describe ``game`` as a document. With ``gamma`` the initial state is
    written in the GHZ-like form (caller asserts it is one)."""
    form = game.form
    if gamma is not None:
        initial = {"ghz_like": {"gamma": gamma}}
    else:
        initial = {"amplitudes": [_pair(a) for a in form.initial_state.amplitudes]}
    operators = []
    for ops in form.operator_sets:
        members = [
            {"name": op.name, "matrix": [[_pair(x) for x in row] for row in op.matrix]}
            for op in ops.members
        ]
        operators.append({"family": ops.family, "members": members} if ops.family else members)
    data = {
        "kind": "quantum",
        "players": form.num_players,
        "qudits": list(form.layout.dims),
        "initial_state": initial,
        "operators": operators,
        "classes": [c.key() for c in form.ordered_classes()],
        "player_fn": {c.key(): p for c, p in sorted(form.player_fn.items())},
        "payoffs": {c.key(): [_num(x) for x in u] for c, u in sorted(game.payoffs.items())},
    }
    return GameDocument("quantum", data)


def document_from_classical(game: ExtensiveGame) -> GameDocument:
    form = game.form
    order = form.ordered_histories()
    data = {
        "kind": "classical",
        "players": form.num_players,
        "histories": [list(h) for h in order],
        "player_fn": {history_key(h): form.player_fn[h] for h in order if h in form.player_fn},
        "info_sets": {
            str(i): [[history_key(h) for h in sorted(s, key=lambda h: (len(h), h))] for s in sets]
            for i, sets in sorted(form.info_sets.items())
        },
        "payoffs": {history_key(h): [_num(x) for x in game.utilities[h]] for h in order if h in game.utilities},
    }
    if form.chance_fn:
        data["chance"] = {history_key(h): dict(d) for h, d in form.chance_fn.items()}
    return GameDocument("classical", data)


# profiles ------------------------------------------------------------------

_PROFILE_ITEM = re.compile(r"^\s*(\d+)(?:/(\d+))?\s*:\s*(.+?)\s*$")


def _split_profile(spec: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in spec:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p for p in parts if p.strip()]


def parse_profile(game: QuantumExtensiveGame, spec: str) -> QStrategyProfile:
    """``"1:V0,2:V1"`` or, for players with several information sets,
    ``"3/1:V0,3/2:V1"`` (sets numbered from 1 in qudit order). A bare
    ``"i:name"`` for a multi-set player applies to all of its sets."""
    sets = qgame.information_sets(game.form)
    choices = {}
    for item in _split_profile(spec):
        m = _PROFILE_ITEM.match(item)
        if not m:
            raise GameSyntaxError(f"bad profile item {item!r}; expected 'player:operator'", expected="player[/set]:operator")
        player, which, name = int(m.group(1)), m.group(2), m.group(3)
        if player not in sets:
            raise GameReferenceError(f"profile names unknown player {player}")
        targets = sets[player]
        if which is not None:
            k = int(which)
            if not 1 <= k <= len(targets):
                raise GameReferenceError(f"player {player} has no information set {k}")
            targets = [targets[k - 1]]
        for s in targets:
            ops = game.form.operator_sets[s.qudit - 1]
            try:
                choices[s.key] = ops.get(name)
            except KeyError:
                raise GameReferenceError(
                    f"unknown operator {name!r} for qudit {s.qudit}; known: {', '.join(ops.names)}"
                ) from None
            except GameError as exc:
                raise GameReferenceError(f"operator {name!r}: {exc.message}") from None
    return QStrategyProfile(choices)


def parse_payoff_table(text: str, source: str = "<string>") -> list[list[float]]:
    """Four payoff vectors Δ00, Δ01, Δ10, Δ11 for the static scheme.

    Accepts ``{"payoffs": {"00": [..], "01": [..], "10": [..], "11": [..]}}``
    or a bare list of four vectors.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GameSyntaxError(
            f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}", file=source, line=exc.lineno, column=exc.colno
        ) from None
    doc = GameDocument("payoffs", data if isinstance(data, dict) else {}, text, source)
    table = data.get("payoffs", data) if isinstance(data, dict) else data
    if isinstance(table, dict):
        rows = []
        for key in ("00", "01", "10", "11"):
            if key not in table:
                raise doc.error(SchemaError, f"missing payoff entry '{key}'", "payoffs")
            rows.append(_payoff_vector(doc, table[key], len(table[key]) if isinstance(table[key], list) else 2, "payoffs", key))
    elif isinstance(table, list) and len(table) == 4:
        rows = [_payoff_vector(doc, r, len(r) if isinstance(r, list) else 2, "payoffs", k) for k, r in enumerate(table)]
    else:
        raise doc.error(SchemaError, "expected four payoff vectors")
    if len({len(r) for r in rows}) != 1:
        raise doc.error(SchemaError, "payoff vectors differ in length", "payoffs")
    return rows
