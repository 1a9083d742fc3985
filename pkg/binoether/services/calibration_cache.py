"""
Calibration cache
Convention calibration runs once per key and is shared by every experiment
"""

import hashlib
import json
import logging
import threading
import time
from typing import Any, Callable, Dict, Optional

from binoether.config import settings
from binoether.core.exterior import Calibration, RecurrenceVariant, calibrate_conventions
from binoether.core.toda import toda_calibration_hooks

logger = logging.getLogger(__name__)


class CalibrationCache:
    """In-memory, lock-guarded store of calibrations"""

    def __init__(self):
        self._cache: Dict[str, Dict[str, Any]] = {}
        self._lock = threading.Lock()
        self._hits = 0
        self._misses = 0

    @staticmethod
    def _generate_key(**params: Any) -> str:
        key_str = json.dumps(params, sort_keys=True, default=str)
        return hashlib.sha256(key_str.encode()).hexdigest()[:16]

    def get(self, **params: Any) -> Optional[Calibration]:
        key = self._generate_key(**params)
        with self._lock:
            entry = self._cache.get(key)
        if entry is None:
            logger.debug(f"Calibration cache MISS for key: {key}")
            return None
        logger.debug(f"Calibration cache HIT for key: {key}")
        return entry["data"]

    def set(self, calibration: Calibration, **params: Any) -> None:
        key = self._generate_key(**params)
        with self._lock:
            self._cache[key] = {"data": calibration, "timestamp": time.time(), "params": params}
        logger.info(f"Cached calibration for key: {key} ({params})")

    def get_or_compute(self, compute: Callable[[], Calibration], **params: Any) -> Calibration:
        """Compute under the lock so concurrent callers share one calibration"""
        key = self._generate_key(**params)
        with self._lock:
            entry = self._cache.get(key)
            if entry is not None:
                self._hits += 1
                return entry["data"]
            self._misses += 1
            calibration = compute()
            self._cache[key] = {"data": calibration, "timestamp": time.time(), "params": params}
        logger.info(f"Cached calibration for key: {key} ({params})")
        return calibration

    def toda(
        self,
        n: Optional[int] = None,
        states: Optional[int] = None,
        seed: int = 0,
        variant: RecurrenceVariant = RecurrenceVariant.TODA,
    ) -> Calibration:
        """Toda convention calibration, computed on first use"""
        n = settings.CALIBRATION_N if n is None else n
        states = settings.CALIBRATION_STATES if states is None else states
        variant = RecurrenceVariant(variant)
        return self.get_or_compute(
            lambda: calibrate_conventions(toda_calibration_hooks(), n=n, states=states, seed=seed, variant=variant),
            model="toda",
            n=n,
            states=states,
            seed=seed,
            variant=variant.value,
        )

    def clear(self):
        with self._lock:
            count = len(self._cache)
            self._cache.clear()
            self._hits = self._misses = 0
        logger.info(f"Calibration cache cleared: {count} entries removed")

    def stats(self) -> Dict[str, Any]:
        now = time.time()
        with self._lock:
            entries = [
                {"key": key, "age_seconds": int(now - entry["timestamp"]), "params": entry["params"]}
                for key, entry in self._cache.items()
            ]
            return {
                "total_entries": len(entries),
                "hits": self._hits,
                "misses": self._misses,
                "entries": entries,
            }


_calibration_cache: Optional[CalibrationCache] = None
_singleton_lock = threading.Lock()


def get_calibration_cache() -> CalibrationCache:
    """Get singleton calibration cache"""
    global _calibration_cache
    with _singleton_lock:
        if _calibration_cache is None:
            _calibration_cache = CalibrationCache()
        return _calibration_cache
