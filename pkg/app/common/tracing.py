import contextlib
import contextvars
import logging
import uuid

logger = logging.getLogger(__name__)

ctx_run_id: contextvars.ContextVar[str] = contextvars.ContextVar("run_id")
ctx_command: contextvars.ContextVar[str] = contextvars.ContextVar("command")
ctx_replicate: contextvars.ContextVar[int] = contextvars.ContextVar("replicate")


# Every CLI invocation gets a run id so the log lines of one run, including
# those emitted from Monte Carlo worker threads, can be followed together.
@contextlib.contextmanager
def run_context(command: str, run_id: str | None = None):
    run_token = ctx_run_id.set(run_id or uuid.uuid4().hex)
    command_token = ctx_command.set(command)
    try:
        yield ctx_run_id.get()
    finally:
        ctx_command.reset(command_token)
        ctx_run_id.reset(run_token)


@contextlib.contextmanager
def replicate_context(replicate: int):
    token = ctx_replicate.set(replicate)
    try:
        yield
    finally:
        ctx_replicate.reset(token)
