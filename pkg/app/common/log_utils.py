import logging

from app.common.tracing import ctx_command, ctx_replicate, ctx_run_id


# Adds run context as additional ECS fields to the logger.
class ExtraFieldsFilter(logging.Filter):
    def filter(self, record):
        run_id = ctx_run_id.get("")
        command = ctx_command.get(None)
        replicate = ctx_replicate.get(None)

        if run_id:
            record.run = {"id": run_id}

        labels = {}
        if command:
            labels["command"] = command
        if replicate is not None:
            labels["replicate"] = replicate
        if labels:
            record.labels = labels
        return True
