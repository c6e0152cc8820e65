import contextvars
import threading

from app.common.tracing import (
    ctx_command,
    ctx_replicate,
    ctx_run_id,
    replicate_context,
    run_context,
)


def test_run_context_generates_and_resets_run_id():
    with run_context("mc") as run_id:
        assert len(run_id) == 32
        assert ctx_run_id.get() == run_id
        assert ctx_command.get() == "mc"

    assert ctx_run_id.get(None) is None
    assert ctx_command.get(None) is None


def test_run_context_keeps_given_run_id():
    with run_context("simulate", run_id="fixed") as run_id:
        assert run_id == "fixed"


def test_replicate_context_nests_and_resets():
    with replicate_context(3):
        with replicate_context(4):
            assert ctx_replicate.get() == 4
        assert ctx_replicate.get() == 3
    assert ctx_replicate.get(None) is None


def test_copied_context_carries_run_id_into_threads():
    seen = {}

    def worker():
        seen["run_id"] = ctx_run_id.get(None)

    with run_context("mc", run_id="shared"):
        context = contextvars.copy_context()
        thread = threading.Thread(target=context.run, args=(worker,))
        thread.start()
        thread.join()

    assert seen["run_id"] == "shared"
