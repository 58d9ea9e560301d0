"""chasekit: a chase engine for regular theories.

Text-first bindings over the C++ core. All functions speak the same grammars
as the `chasekit` CLI: theory files (`rel R/2`, `axiom t: ...`), structure
files (`carrier: a b`, `rel R: (a,b)`), formulas
(`exists y. P(x) & R(x,y)`) and sequents (`P(x) |-[x] exists y. R(x,y)`).
"""

try:  # wheel layout: the extension lives inside the package
    from chasekit._chasekit import (
        ChasekitError,
        ChasekitParseError,
        __version__,
        abstract_constants,
        chase,
        check,
        diagram,
        eliminate_equality,
        eliminate_functions,
        entails,
        evaluate,
        normalize_theory,
        witness,
    )
except ImportError:  # build-tree layout: extension on PYTHONPATH
    from _chasekit import (
        ChasekitError,
        ChasekitParseError,
        __version__,
        abstract_constants,
        chase,
        check,
        diagram,
        eliminate_equality,
        eliminate_functions,
        entails,
        evaluate,
        normalize_theory,
        witness,
    )

__all__ = [
    "ChasekitError",
    "ChasekitParseError",
    "__version__",
    "abstract_constants",
    "chase",
    "check",
    "diagram",
    "eliminate_equality",
    "eliminate_functions",
    "entails",
    "evaluate",
    "normalize_theory",
    "witness",
]
