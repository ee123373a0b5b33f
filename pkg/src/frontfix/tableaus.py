"""Registry of explicit embedded Runge-Kutta 5(4) pairs.

Coefficients follow the original publications:

* ``DP`` -- Dormand & Prince (1980), RK5(4)7M, FSAL.
* ``CK`` -- Cash & Karp (1990), RK5(4)6.
* ``BS`` -- Bogacki & Shampine (1996), RK5(4)8, FSAL.
* ``ST`` -- Tsitouras (2011), RK5(4)7, FSAL.  This is the classical pair
  underlying the Simos-Tsitouras fitted modifications, used here with zero
  fitting frequency.
* ``PP`` -- Papakostas & Papageorgiou (1996).  Registered but its
  coefficients are not bundled; requesting it raises :class:`TableauError`.

Every tableau is checked against the order conditions when it is built.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction as F
from functools import lru_cache

import numpy as np

from .errors import TableauError

PAIR_IDS = ("DP", "CK", "BS", "ST", "PP")
UNAVAILABLE = {"PP": "Papakostas-Papageorgiou coefficients are not bundled with this package"}


@dataclass(frozen=True)
class ButcherPair:
    id: str
    name: str
    a: np.ndarray  # strictly lower triangular, s x s
    c: np.ndarray
    b5: np.ndarray
    b4: np.ndarray
    fsal: bool

    @property
    def stages(self) -> int:
        return len(self.c)

    @property
    def b_err(self) -> np.ndarray:
        """``b5 - b4``; the local error estimate is ``k * sum(b_err_j R_j)``."""
        return self.b5 - self.b4


def order_conditions(a: np.ndarray, b: np.ndarray, order: int) -> list[tuple[str, float, float]]:
    """``(label, value, exact)`` for every rooted-tree condition up to ``order``."""
    c = a.sum(axis=1)
    Ac = a @ c
    conds = [("b", b.sum(), 1.0)]
    if order >= 2:
        conds.append(("bc", b @ c, 1 / 2))
    if order >= 3:
        conds += [("bc2", b @ c**2, 1 / 3), ("bAc", b @ Ac, 1 / 6)]
    if order >= 4:
        conds += [
            ("bc3", b @ c**3, 1 / 4),
            ("bcAc", b @ (c * Ac), 1 / 8),
            ("bAc2", b @ (a @ c**2), 1 / 12),
            ("bAAc", b @ (a @ Ac), 1 / 24),
        ]
    if order >= 5:
        conds += [
            ("bc4", b @ c**4, 1 / 5),
            ("bc2Ac", b @ (c**2 * Ac), 1 / 10),
            ("bcAc2", b @ (c * (a @ c**2)), 1 / 15),
            ("bcAAc", b @ (c * (a @ Ac)), 1 / 30),
            ("bAcAc", b @ (Ac * Ac), 1 / 20),
            ("bAc3", b @ (a @ c**3), 1 / 20),
            ("bAcAc'", b @ (a @ (c * Ac)), 1 / 40),
            ("bAAc2", b @ (a @ (a @ c**2)), 1 / 60),
            ("bAAAc", b @ (a @ (a @ Ac)), 1 / 120),
        ]
    return conds


def validate(pair: ButcherPair, tol: float = 1e-12) -> None:
    a = pair.a
    if np.any(np.triu(a) != 0):
        raise TableauError(f"{pair.id}: stage matrix is not strictly lower triangular")
    if np.max(np.abs(a.sum(axis=1) - pair.c)) > 1e-13:
        raise TableauError(f"{pair.id}: row sums of a differ from c")
    for b, order in ((pair.b5, 5), (pair.b4, 4)):
        if abs(b.sum() - 1.0) > 1e-13:
            raise TableauError(f"{pair.id}: weights do not sum to 1")
        for label, value, exact in order_conditions(a, b, order):
            if abs(value - exact) > tol:
                raise TableauError(f"{pair.id}: order condition {label} off by {value - exact:.3e}")
    if pair.fsal and (pair.b5[-1] != 0.0 or np.any(pair.a[-1] != pair.b5)):
        raise TableauError(f"{pair.id}: FSAL pair must have a[-1] == b5 and b5[-1] == 0")


def _build(id_, name, rows, b5, b4, fsal, c=None):
    s = len(b5)
    a = np.zeros((s, s))
    for i, row in enumerate(rows):
        a[i, : len(row)] = [float(x) for x in row]
    c = a.sum(axis=1) if c is None else np.array([float(x) for x in c])
    return ButcherPair(id_, name, a, c, np.array([float(x) for x in b5]), np.array([float(x) for x in b4]), fsal)


def _dormand_prince():
    b5 = [F(35, 384), 0, F(500, 1113), F(125, 192), F(-2187, 6784), F(11, 84), 0]
    rows = [
        [],
        [F(1, 5)],
        [F(3, 40), F(9, 40)],
        [F(44, 45), F(-56, 15), F(32, 9)],
        [F(19372, 6561), F(-25360, 2187), F(64448, 6561), F(-212, 729)],
        [F(9017, 3168), F(-355, 33), F(46732, 5247), F(49, 176), F(-5103, 18656)],
        b5[:6],
    ]
    b4 = [F(5179, 57600), 0, F(7571, 16695), F(393, 640), F(-92097, 339200), F(187, 2100), F(1, 40)]
    c = [0, F(1, 5), F(3, 10), F(4, 5), F(8, 9), 1, 1]
    return _build("DP", "Dormand-Prince 5(4)7M", rows, b5, b4, True, c)


def _cash_karp():
    rows = [
        [],
        [F(1, 5)],
        [F(3, 40), F(9, 40)],
        [F(3, 10), F(-9, 10), F(6, 5)],
        [F(-11, 54), F(5, 2), F(-70, 27), F(35, 27)],
        [F(1631, 55296), F(175, 512), F(575, 13824), F(44275, 110592), F(253, 4096)],
    ]
    b5 = [F(37, 378), 0, F(250, 621), F(125, 594), 0, F(512, 1771)]
    b4 = [F(2825, 27648), 0, F(18575, 48384), F(13525, 55296), F(277, 14336), F(1, 4)]
    c = [0, F(1, 5), F(3, 10), F(3, 5), 1, F(7, 8)]
    return _build("CK", "Cash-Karp 5(4)6", rows, b5, b4, False, c)


def _bogacki_shampine():
    b5 = [F(587, 8064), 0, F(4440339, 15491840), F(24353, 124800), F(387, 44800), F(2152, 5985), F(7267, 94080), 0]
    rows = [
        [],
        [F(1, 6)],
        [F(2, 27), F(4, 27)],
        [F(183, 1372), F(-162, 343), F(1053, 1372)],
        [F(68, 297), F(-4, 11), F(42, 143), F(1960, 3861)],
        [F(597, 22528), F(81, 352), F(63099, 585728), F(58653, 366080), F(4617, 20480)],
        [F(174197, 959244), F(-30942, 79937), F(8152137, 19744439), F(666106, 1039181), F(-29421, 29068), F(482048, 414219)],
        b5[:7],
    ]
    b4 = [
        F(2479, 34992), 0, F(123, 416), F(612941, 3411720), F(43, 1440),
        F(2272, 6561), F(79937, 1113912), F(3293, 556956),
    ]
    c = [0, F(1, 6), F(2, 9), F(3, 7), F(2, 3), F(3, 4), 1, 1]
    return _build("BS", "Bogacki-Shampine 5(4)8", rows, b5, b4, True, c)


def _tsitouras():
    rows = [
        [],
        [0.161],
        [-0.008480655492356988544426874250230774675121177393430391537369234245294192976164141156943,
         0.3354806554923569885444268742502307746751211773934303915373692342452941929761641411569],
        [2.897153057105493432130432594192938764924887287701866490314866693455023795137503079289,
         -6.359448489975074843148159912383825625952700647415626703305928850207288721235210244366,
         4.362295432869581411017727318190886861027813359713760212991062156752264926097707165077],
        [5.325864828439256604428877920840511317836476253097040101202360397727981648835607691791,
         -11.74888356406282787774717033978577296188744178259862899288666928009020615663593781589,
         7.495539342889836208304604784564358155658679161518186721010132816213648793440552049753,
         -0.09249506636175524925650207933207191611349983406029535244034750452930469056411389539635],
        [5.861455442946420028659251486982647890394337666164814434818157239052507339770711679748,
         -12.92096931784710929170611868178335939541780751955743459166312250439928519268343184452,
         8.159367898576158643180400794539253485181918321135053305748355423955009222648673734986,
         -0.07158497328140099722453054252582973869127213147363544882721139659546372402303777878835,
         -0.02826905039406838290900305721271224146717633626879770007617876201276764571291579142206],
    ]
    b5 = [0.09646076681806522951816731316512876333711995238157997181903319145764851595234062815396,
          0.01,
          0.4798896504144995747752495322905965199130404621990332488332634944254542060153074523509,
          1.379008574103741893192274821856872770756462643091360525934940067397245698027561293331,
          -3.290069515436080679901047585711363850115683290894936158531296799594813811049925401677,
          2.324710524099773982415355918398765796109060233222962411944060046314465391054716027841,
          0.0]
    rows.append(b5[:6])
    b4 = [0.09468075576583945807478876255758922856117527357724631226139574065785592789071067303271,
          0.009183565540343253096776363936645313759813746240984095238905939532922955247253608687270,
          0.4877705284247615707855642599631228241516691959761363774365216240304071651579571959813,
          1.234297566930478985655109673884237654035539930748192848315425833500484878378061439761,
          -2.707712349983525454881109975059321670689605166938197378763992255714444407154902012702,
          1.866628418170587035753719399566211498666255505244122593996591602841258328965767580089,
          1 / 66]
    return _build("ST", "Tsitouras 5(4)7", rows, b5, b4, True)


_BUILDERS = {"DP": _dormand_prince, "CK": _cash_karp, "BS": _bogacki_shampine, "ST": _tsitouras}


@lru_cache(maxsize=None)
def tableau(pair_id: str) -> ButcherPair:
    """Validated tableau for ``pair_id`` (case-insensitive)."""
    key = pair_id.upper()
    if key in UNAVAILABLE:
        raise TableauError(f"{key}: {UNAVAILABLE[key]}")
    if key not in _BUILDERS:
        raise TableauError(f"unknown pair {pair_id!r}; known pairs are {', '.join(PAIR_IDS)}")
    pair = _BUILDERS[key]()
    validate(pair)
    return pair


def available_pairs() -> list[str]:
    return [p for p in PAIR_IDS if p not in UNAVAILABLE]


# Classical fourth-order method, used for the fixed-step convergence runs.
RK4_A = np.array([[0, 0, 0, 0], [0.5, 0, 0, 0], [0, 0.5, 0, 0], [0, 0, 1.0, 0]])
RK4_B = np.array([1 / 6, 1 / 3, 1 / 3, 1 / 6])
RK4_C = np.array([0, 0.5, 0.5, 1.0])
