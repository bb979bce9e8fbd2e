from .train import IterationEvent, TrainFinishEvent, TrainStartEvent


@TrainStartEvent.add_handler
def _(event: TrainStartEvent) -> None:
    trainer = event.trainer
    trainer.logger.info(
        f"start training {trainer.model.task} on {trainer.spec.kind} "
        f"for {event.iterations} iterations ({trainer.replicas} replicas)"
    )


@IterationEvent.add_handler
def _(event: IterationEvent) -> None:
    trainer = event.trainer
    every = trainer.log_every
    if every <= 0 or (event.iteration + 1) % every:
        return
    trainer.logger.info(
        f"iter {event.iteration + 1}: loss {event.loss:.4f}, "
        f"moving average {trainer.history.moving_average(every):.4f}"
    )


@TrainFinishEvent.add_handler
def _(event: TrainFinishEvent) -> None:
    trainer = event.trainer
    trainer.logger.info(
        f"training finished after {len(trainer.history)} iterations in {event.elapsed:.1f}s"
    )
