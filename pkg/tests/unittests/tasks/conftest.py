import pytest

from faraday_sim import tasks
from faraday_sim.runner import SimulationRunner
from faraday_sim.tasks.base import collect_tasks

pytest.register_assert_rewrite("tests.unittests.tasks.utils")


@pytest.fixture(scope="session", autouse=True)
def _collect_tasks():
    collect_tasks(tasks)


@pytest.fixture
def run_task(make_config, tmp_path):
    """Run a task type on a definition dict and return what the task returns."""

    def run(task_type, definition, *args, **kwargs):
        runner = SimulationRunner(make_config(definition), tmp_path, task_type, workers=2)
        return runner.run_task(task_type, *args, **kwargs)

    return run
