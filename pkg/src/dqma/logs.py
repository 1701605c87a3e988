"""Line-delimited JSON logging."""

from __future__ import annotations

import json
import logging
import sys

# attributes every LogRecord has; anything else came in through ``extra``
_STANDARD = set(vars(logging.makeLogRecord({}))) | {"message", "asctime"}


class JsonLineFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        out = {
            "ts": round(record.created, 3),
            "level": record.levelname,
            "logger": record.name,
            "msg": record.getMessage(),
        }
        for k, v in vars(record).items():
            if k not in _STANDARD:
                out[k] = v
        if record.exc_info:
            out["exc"] = self.formatException(record.exc_info)
        return json.dumps(out, default=_default)


def _default(obj):
    try:
        return obj.tolist()
    except AttributeError:
        return str(obj)


def setup_logging(path=None, level: str | int = "INFO") -> logging.Handler:
    """Send the package logger to ``path`` (or stderr) as one JSON object per line."""
    handler = logging.FileHandler(path, mode="w") if path else logging.StreamHandler(sys.stderr)
    handler.setFormatter(JsonLineFormatter())
    logger = logging.getLogger("dqma")
    for h in list(logger.handlers):
        logger.removeHandler(h)
        h.close()
    logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False
    return handler
