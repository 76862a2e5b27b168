"""Python access to the deskcloud control plane core."""

import json

from . import _core

__all__ = ["ControlPlane", "DeskcloudError", "run_scenario"]


class DeskcloudError(RuntimeError):
    """Domain error raised by the control plane; `code` is the error name."""

    def __init__(self, code, message):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


_core._set_error_type(DeskcloudError)


def _text(value):
    if value is None:
        return ""
    return value if isinstance(value, str) else json.dumps(value)


class ControlPlane:
    def __init__(self, config=None, bootstrap=True):
        cfg = {k: str(v).lower() if isinstance(v, bool) else str(v) for k, v in (config or {}).items()}
        self._cp = _core.ControlPlane(cfg, bootstrap)

    def submit(self, name, payload=None, token=""):
        return json.loads(self._cp.submit(name, _text(payload), token))

    def submit_system(self, name, payload=None):
        return json.loads(self._cp.submit_system(name, _text(payload)))

    def login(self, username, password):
        return json.loads(self._cp.login(username, password))

    def query(self, what, params=None, token=""):
        return json.loads(self._cp.query(what, _text(params), token))

    def digest(self):
        return self._cp.digest()

    def journal_length(self):
        return self._cp.journal_length()

    def state(self):
        return json.loads(self._cp.state_json())

    def violations(self):
        return json.loads(self._cp.violations())

    def replay_digest(self):
        """Digest of a fresh plane rebuilt from this plane's journal."""
        return self._cp.replay_copy()


def run_scenario(scenario, seed=None):
    return json.loads(_core.run_scenario(_text(scenario), seed))
