import importlib
import inspect
import itertools
import pkgutil
import time
from enum import Enum
from typing import TYPE_CHECKING, Any, Dict, Optional, Type

import structlog

from faraday_sim.exceptions import UnknownTaskTypeError

if TYPE_CHECKING:
    from faraday_sim.runner import SimulationRunner

log = structlog.get_logger(__name__)

NAME_TO_TASK: Dict[str, Type["Task"]] = {}


class TaskState(Enum):
    INITIALIZED = "initialized"
    RUNNING = "running"
    FINISHED = "finished"
    ERRORED = "errored"


_TASK_IDS = itertools.count(1)


class Task:
    """A unit of work of one CLI invocation: a simulation, a scan or a single scan point.

    Tasks report their state changes to the runner, log their start and runtime
    and keep the exception that ended them.
    """

    _name: str

    def __init__(
        self, runner: "SimulationRunner", config: Any, parent: Optional["Task"] = None
    ) -> None:
        self.id = str(next(_TASK_IDS))
        self._runner = runner
        self._config = config
        self._parent = parent
        self.exception: Optional[BaseException] = None
        self.state = TaskState.INITIALIZED

    def __call__(self, *args, **kwargs):
        log.info("Starting task", task=repr(self), id=self.id)
        self.state = TaskState.RUNNING
        start_time = time.monotonic()
        try:
            return_val = self._run(*args, **kwargs)
        except BaseException as ex:
            log.debug("Task errored", task=repr(self), id=self.id, error=str(ex))
            self.exception = ex
            self.state = TaskState.ERRORED
            raise

        runtime = time.monotonic() - start_time
        log.info("Task successful", id=self.id, task=repr(self), runtime=runtime)
        self.state = TaskState.FINISHED
        return return_val

    def _run(self, *args, **kwargs):  # pylint: disable=unused-argument,no-self-use
        raise NotImplementedError

    def __repr__(self):
        return f"<{self.__class__.__name__}{self._str_details}>"

    @property
    def _str_details(self):
        return ""

    @property
    def state(self):
        return self._state

    @state.setter
    def state(self, new_state):
        self._state = new_state
        self._runner.task_state_changed(self, self._state)


def get_task_class_for_type(task_type: str) -> Type[Task]:
    task_class = NAME_TO_TASK.get(task_type)
    if not task_class:
        raise UnknownTaskTypeError(f'Task type "{task_type}" is unknown.')
    return task_class


def register_task(task_name, task):
    NAME_TO_TASK[task_name] = task


def collect_tasks(module):
    # If module is a package, discover inner packages / submodules
    for sub_module in pkgutil.iter_modules(path=module.__path__):
        _, sub_module_name, _ = sub_module
        sub_module_name = module.__name__ + "." + sub_module_name
        submodule = importlib.import_module(sub_module_name)
        collect_tasks_from_submodule(submodule)


def collect_tasks_from_submodule(submodule):
    for _, member in inspect.getmembers(submodule, inspect.isclass):
        base_classes = inspect.getmro(member)
        if Task in base_classes and hasattr(member, "_name"):
            register_task(member._name, member)
