"""
Experiment orchestrator
Runs several experiments concurrently and merges their reports
"""

import asyncio
import logging
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Dict, List, Optional

from binoether import __version__
from binoether.config import settings
from binoether.errors import BinoetherError
from binoether.models import CheckResult, ExperimentConfig, Report
from binoether.services.experiment_service import run_experiment

logger = logging.getLogger(__name__)


class TaskStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class Task:
    """One experiment scheduled by the orchestrator"""
    task_id: str
    config: ExperimentConfig
    label: str = ""
    status: TaskStatus = TaskStatus.PENDING
    report: Optional[Report] = None
    error: Optional[str] = None
    exit_code: int = 0


class ExperimentOrchestrator:
    """
    Runs experiments on worker threads, at most `max_concurrent` at a time

    Experiments are independent; each gets its own RNG from its config seed,
    so the merged report does not depend on scheduling order.
    """

    def __init__(self, max_concurrent: Optional[int] = None, tighten: float = 1.0):
        self.max_concurrent = max_concurrent or settings.THREADS
        self.tighten = tighten
        self.tasks: Dict[str, Task] = {}
        logger.info(f"🎭 Orchestrator ready ({self.max_concurrent} concurrent experiments)")

    def submit(self, config: ExperimentConfig, label: Optional[str] = None) -> Task:
        """label names the task in the combined report; defaults to the model"""
        task_id = f"{config.model}_{len(self.tasks)}"
        task = Task(task_id=task_id, config=config, label=label or config.model)
        self.tasks[task_id] = task
        logger.info(f"📝 Task submitted: {task_id}")
        return task

    async def _execute(self, task: Task, semaphore: asyncio.Semaphore) -> Task:
        async with semaphore:
            task.status = TaskStatus.RUNNING
            logger.info(f"🚀 Running {task.task_id}")
            try:
                task.report = await asyncio.to_thread(run_experiment, task.config, self.tighten)
                task.exit_code = task.report.exit_code
                task.status = TaskStatus.COMPLETED
            except BinoetherError as e:
                task.error = f"{type(e).__name__}: {e}"
                task.exit_code = e.exit_code
                task.status = TaskStatus.FAILED
                logger.error(f"❌ {task.task_id} failed: {task.error}")
        return task

    async def run_all(self) -> List[Task]:
        semaphore = asyncio.Semaphore(self.max_concurrent)
        pending = [t for t in self.tasks.values() if t.status is TaskStatus.PENDING]
        return list(await asyncio.gather(*(self._execute(t, semaphore) for t in pending)))

    def combined_report(self) -> Report:
        """Merge every task into one report; the exit code is the worst of all tasks"""
        combined = Report(config={"experiments": {}})
        for task in sorted(self.tasks.values(), key=lambda t: t.task_id):
            name = task.label
            combined.config["experiments"][name] = task.config.model_dump(mode="json")
            if task.report is None:
                combined.add(CheckResult(
                    name=f"{name}.run",
                    value=float(task.exit_code),
                    tolerance=0.0,
                    passed=False,
                    provenance=task.error or "experiment did not run",
                ))
                continue
            report = task.report
            cal = report.calibration
            if cal.toda is not None:
                combined.calibration.toda = cal.toda
            combined.calibration.bracket_scales.update(cal.bracket_scales)
            combined.calibration.normalizations.update(cal.normalizations)
            for key, rows in report.series.items():
                combined.series[f"{name}.{key}"] = rows
            model = task.config.model
            combined.checks.extend(
                c if name == model else c.model_copy(update={"name": name + c.name[len(model):]})
                for c in report.checks
            )
            combined.metadata[name] = {k: v for k, v in report.metadata.items() if k != "timing"}
            combined.metadata.setdefault("timing", {})[name] = report.metadata.get("timing", {})

        codes = [t.exit_code for t in self.tasks.values()]
        combined.exit_code = max(codes, default=0)
        combined.metadata["version"] = __version__
        combined.metadata.setdefault("timing", {})["finished_at"] = datetime.now(timezone.utc).isoformat()
        return combined


async def verify_all(configs: List[ExperimentConfig], tighten: float = 1.0) -> Report:
    orchestrator = ExperimentOrchestrator(tighten=tighten)
    counts = Counter(c.model for c in configs)
    for config in configs:
        label = f"{config.model}_n{config.n}" if counts[config.model] > 1 else None
        orchestrator.submit(config, label)
    await orchestrator.run_all()
    report = orchestrator.combined_report()
    glyph = "✅" if report.exit_code == 0 else "❌"
    logger.info(f"{glyph} verify-all finished: {len(report.checks) - len(report.failed)}/{len(report.checks)} checks passed")
    return report
