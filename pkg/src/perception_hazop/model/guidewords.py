"""HAZOP guidewords.

``Guideword`` is the operative set used for perception analysis. The classical
process-industry set is kept as ``ClassicalGuideword`` for reference only;
``Before`` and ``After`` have no counterpart in the operative set because the
order in which scene elements are identified does not change the world model.
"""

from __future__ import annotations

import enum


class Guideword(enum.Enum):
    """Perception guidewords, in declaration (table) order."""

    NoOrNot = ("No or Not", "Failure to identify a relevant element of the scene (false negative)")
    More = ("More", "Identifying more elements in the scene than are relevant (multiple false positives)")
    Less = ("Less", "Identifying fewer elements in the scene than are relevant (multiple false negatives)")
    AsWellAs = ("As well as", "Identifying element in the scene that is not there (false positive)")
    PartOf = ("Part of", "Failing to identify element in the scene that is there (false negative)")
    OtherThanInstead = (
        "Other than/Instead",
        "Incorrect classification, e.g. static object rather than pedestrian",
    )
    Reverse = (
        "Reverse",
        "Change of sign in a scalar or vector value, e.g. pedestrian is moving towards "
        "rather than away from ego vehicle",
    )
    Early = (
        "Early",
        "Object identified earlier than necessary for safe behaviour, perhaps triggering "
        "unnecessary response",
    )
    Late = ("Late", "Object identified later than necessary for safe behaviour")
    Intermittent = (
        "Intermittent",
        "Element of scene present in some images, but not in others, or classification "
        "changes from image to image",
    )

    def __init__(self, label, interpretation):
        self.label = label
        self.interpretation = interpretation

    @property
    def order(self) -> int:
        return _ORDER[self]

    @classmethod
    def parse(cls, text: str) -> "Guideword":
        """Accept the member name (``NoOrNot``) or the display label (``No or Not``)."""
        if isinstance(text, Guideword):
            return text
        key = _normalise(text)
        try:
            return _LOOKUP[key]
        except KeyError:
            raise ValueError(f"unknown guideword {text!r}") from None

    def __str__(self):
        return self.name


_ORDER = {g: i for i, g in enumerate(Guideword)}
_LOOKUP = {}


def _normalise(text: str) -> str:
    return "".join(ch for ch in str(text).lower() if ch.isalnum())


for _g in Guideword:
    _LOOKUP[_normalise(_g.name)] = _g
    _LOOKUP[_normalise(_g.label)] = _g


class ClassicalGuideword(enum.Enum):
    NoOrNot = ("No or Not", "Complete negation of the design intent")
    More = ("More", "Quantitative increase")
    Less = ("Less", "Quantitative decrease")
    AsWellAs = ("As well as", "Qualitative modification/increase")
    PartOf = ("Part of", "Qualitative modification/decrease")
    Reverse = ("Reverse", "Logical opposite of the design intent")
    OtherThanInstead = ("Other than/Instead", "Complete substitution")
    Early = ("Early", "Relative to clock time")
    Late = ("Late", "Relative to clock time")
    Before = ("Before", "Relating to order or sequence")
    After = ("After", "Relating to order or sequence")

    def __init__(self, label, meaning):
        self.label = label
        self.meaning = meaning
