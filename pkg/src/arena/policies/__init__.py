"""Policy registry.

A policy identifier is either a built-in name (``mixture``, ``combat``,
``reckless``, ``ruthless``, ``coward``, ``idle``), ``cmd:<command line>`` for an
external process speaking the line protocol, or a path to a submission file
(``.json`` with a ``policy`` or ``command`` key, or an executable script).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from .base import IdlePolicy, Policy
from .external import SubprocessPolicy
from .scripted import CombatPolicy, CowardPolicy, MixturePolicy, RecklessPolicy, RuthlessPolicy

BUILTINS: dict[str, type[Policy]] = {
    cls.name: cls
    for cls in (MixturePolicy, CombatPolicy, RecklessPolicy, RuthlessPolicy, CowardPolicy, IdlePolicy)
}

STAGE1 = ("mixture", "combat")
STAGE2 = ("reckless", "ruthless", "coward")


class PolicyLoadError(RuntimeError):
    pass


def resolve_policy(ident: str) -> Policy:
    if ident in BUILTINS:
        return BUILTINS[ident]()
    if ident.startswith("cmd:"):
        return SubprocessPolicy(ident[4:])
    path = Path(ident)
    if path.is_file():
        if path.suffix == ".json":
            try:
                spec = json.loads(path.read_text())
            except ValueError as err:
                raise PolicyLoadError(f"{path}: {err}") from err
            if "policy" in spec:
                return resolve_policy(spec["policy"])
            if "command" in spec:
                return SubprocessPolicy(spec["command"], name=path.stem)
            raise PolicyLoadError(f"{path}: needs a 'policy' or 'command' key")
        if path.suffix == ".py":
            return SubprocessPolicy([sys.executable, str(path)], name=path.stem)
        return SubprocessPolicy([str(path)], name=path.stem)
    raise PolicyLoadError(f"unknown policy {ident!r}")


__all__ = [
    "BUILTINS", "STAGE1", "STAGE2", "Policy", "PolicyLoadError", "SubprocessPolicy",
    "MixturePolicy", "CombatPolicy", "RecklessPolicy", "RuthlessPolicy", "CowardPolicy", "IdlePolicy",
    "resolve_policy",
]
