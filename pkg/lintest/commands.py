import argparse
import json
import logging
import sys
from fractions import Fraction
from typing import Any, Optional, TextIO, Type, TypeVar

from pydantic import BaseModel, ValidationError

from lintest import config
from lintest.models.cube import NoiseSpec, SectionPolicy
from lintest.models.game import ExplicitGame, RepetitionParams
from lintest.models.longcode import AliceQuestion, BobQuestion
from lintest.schemas.common import encode_label
from lintest.schemas.game import BCSSchema, GameSchema, LCSSchema
from lintest.schemas.report import RoundTranscript, TestParamsSchema, ValueEstimate
from lintest.schemas.strategy import StrategySchema
from lintest.services.fixtures import fixture
from lintest.services.games import bcs_game, lcs_game
from lintest.services.image_service import ImageService
from lintest.services.longcode import RandomTestStrategy, UniformAnswerStrategy, exact_test_value
from lintest.services.pipeline import (
    PipelineParams, compile_pipeline, completeness_for, payload_size, question_payload
)
from lintest.services.soundness import soundness_audit
from lintest.services.suites import load_suite_config, run_suite
from lintest.services.transforms import ensure_nonempty_answers, project, repeat
from lintest.services.value import classical_value, monte_carlo_value, seesaw_sync
from lintest.utils.exceptions import SuiteFailure, UsageError

logger = logging.getLogger(__name__)

Schema = TypeVar("Schema", bound=BaseModel)


def read_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}")
    except json.JSONDecodeError as e:
        raise UsageError({"file": path, "line": e.lineno, "column": e.colno, "message": e.msg})


def load(schema: Type[Schema], path: str) -> Schema:
    try:
        return schema.model_validate(read_json(path))
    except ValidationError as e:
        raise UsageError({
            "file": path,
            "errors": [{"loc": [str(p) for p in err["loc"]], "message": err["msg"]} for err in e.errors()],
        })


def emit(payload: Any, out: Optional[str]) -> None:
    text = payload if isinstance(payload, str) else json.dumps(payload, sort_keys=True, indent=2)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        logger.info("wrote %s", out)
    else:
        sys.stdout.write(text + "\n")


def _game(path: str) -> ExplicitGame:
    return load(GameSchema, path).to_game()


def _pipeline_params(args: argparse.Namespace) -> PipelineParams:
    return PipelineParams(
        epsilon=NoiseSpec.parse(args.epsilon),
        u=args.u,
        h=args.h,
        repetition=RepetitionParams(args.u, args.rep_C, args.rep_c),
        delta=args.delta,
        seed=args.seed,
        section_policy=SectionPolicy(args.policy),
        paper_mode=args.paper_mode,
    )


def cmd_fixture(args: argparse.Namespace) -> None:
    fx = fixture(args.name)
    document = {
        "name": fx.name,
        "game": GameSchema.from_game(fx.game).model_dump(mode="json"),
        "strategies": {
            name: StrategySchema.from_strategy(s).model_dump(mode="json") for name, s in fx.strategies.items()
        },
        "reference": fx.reference,
        "extras": {name: GameSchema.from_game(g).model_dump(mode="json") for name, g in fx.extras.items()},
    }
    if fx.lcs is not None:
        document["lcs"] = LCSSchema.from_lcs(fx.lcs).model_dump(mode="json")
    emit(document, args.out)


def cmd_build(args: argparse.Namespace) -> None:
    if args.kind == "bcs":
        schema = load(BCSSchema, args.input)
        game = bcs_game(schema.to_bcs(), schema.to_pairs())
    else:
        lcs = load(LCSSchema, args.input).to_lcs()
        weights = {label: Fraction(1, len(lcs.bcs.labels)) for label in lcs.bcs.labels}
        game = lcs_game(lcs, weights, symmetric=args.symmetric)
    emit(GameSchema.from_game(game).model_dump(mode="json"), args.out)


TRANSFORM_PASSES = ("nonempty", "project", "repeat")


def cmd_transform(args: argparse.Namespace) -> None:
    game = _game(args.input)
    for name in [p.strip() for p in args.passes.split(",") if p.strip()]:
        if name == "nonempty":
            game = ensure_nonempty_answers(game, symmetric=args.symmetric)
        elif name == "project":
            game = project(game)
        elif name == "repeat":
            game = repeat(game, args.u)
            if not isinstance(game, ExplicitGame):
                raise UsageError(f"{args.u}-fold repetition is too large to write out")
        else:
            raise UsageError(f"unknown pass {name!r}; choose from {list(TRANSFORM_PASSES)}")
        logger.info("applied pass %s: %d questions", name, len(game.questions))
    emit(GameSchema.from_game(game).model_dump(mode="json"), args.out)


def cmd_compile(args: argparse.Namespace) -> None:
    params = _pipeline_params(args)
    compiled = compile_pipeline(_game(args.input), params)
    test = TestParamsSchema(
        epsilon=str(params.epsilon),
        u=params.u,
        section_policy=params.section_policy.value,
        seed=params.seed,
        bcs=BCSSchema.from_bcs(compiled.bcs, compiled.dist),
    )
    emit({
        "version": config.VERSION,
        "params": params.describe(),
        "passes": list(compiled.passes),
        "test": test.model_dump(mode="json"),
        "payload_bytes": payload_size(compiled, seed=params.seed),
    }, args.out)


class TranscriptWriter:
    """JSON-lines transcript of Monte Carlo rounds."""

    def __init__(self, fh: TextIO, seed: int):
        self.fh = fh
        self.seed = seed

    @staticmethod
    def _question(q) -> Any:
        if isinstance(q, AliceQuestion):
            return question_payload(q)
        if isinstance(q, BobQuestion):
            return {"slot": q.slot, "query": q.query.key, "contexts": encode_label(q.contexts)}
        return encode_label(q)

    def __call__(self, index, x, y, a, b, won) -> None:
        record = RoundTranscript(
            index=index,
            seed=[self.seed, index],
            alice_q=self._question(x),
            bob_q=self._question(y),
            answers=[encode_label(a), encode_label(b)],
            verdict=won,
        )
        self.fh.write(json.dumps(record.model_dump(mode="json"), sort_keys=True) + "\n")


def _strategy(path: Optional[str]):
    return load(StrategySchema, path).to_strategy() if path else None


def _monte_carlo(game, strategy, args: argparse.Namespace) -> ValueEstimate:
    if not args.transcript:
        return monte_carlo_value(game, strategy, args.samples, args.seed)
    with open(args.transcript, "w", encoding="utf-8") as fh:
        return monte_carlo_value(game, strategy, args.samples, args.seed, on_round=TranscriptWriter(fh, args.seed))


def cmd_estimate(args: argparse.Namespace) -> None:
    game = _game(args.input)
    strategy = _strategy(args.strategy)
    if args.method == "classical":
        emit(classical_value(game).model_dump(mode="json"), args.out)
        return
    if args.method == "seesaw":
        found, estimate = seesaw_sync(game, args.dim, args.iterations, args.seed, args.restarts)
        emit({
            "estimate": estimate.model_dump(mode="json"),
            "strategy": StrategySchema.from_strategy(found).model_dump(mode="json"),
        }, args.out)
        return

    if args.epsilon is None:
        if strategy is None:
            raise UsageError("Monte Carlo on a plain game needs --strategy")
        emit(_monte_carlo(game, strategy, args).model_dump(mode="json"), args.out)
        return

    compiled = compile_pipeline(game, _pipeline_params(args))
    if strategy is not None:
        provers = completeness_for(compiled, strategy)
    elif args.exact:
        provers = RandomTestStrategy(args.dim, args.seed)
    else:
        provers = UniformAnswerStrategy()
    if args.exact:
        exact = exact_test_value(compiled.test_params, provers)
        estimate = ValueEstimate(point=exact.full, samples=exact.rounds, method="exact")
    else:
        estimate = _monte_carlo(compiled.game, provers, args)
    emit(estimate.model_dump(mode="json"), args.out)


def cmd_audit(args: argparse.Namespace) -> None:
    params = _pipeline_params(args)
    compiled = compile_pipeline(_game(args.input), params)
    strategy = _strategy(args.strategy)
    provers = completeness_for(compiled, strategy) if strategy else RandomTestStrategy(args.dim, args.seed)
    test_value = None
    if not args.exact:
        test_value = monte_carlo_value(compiled.game, provers, args.samples, args.seed)
    report = soundness_audit(provers, compiled.test_params, params.delta, test_value)
    emit({
        "version": config.VERSION,
        "params": params.describe(),
        "audit": report.model_dump(mode="json"),
    }, args.out)


def cmd_verify(args: argparse.Namespace) -> None:
    report = run_suite(load_suite_config(args.config))
    if not args.no_timestamp:
        report = report.stamp()
    emit(report.dumps(include_timestamp=not args.no_timestamp), args.out)
    if args.image:
        ImageService().generate_summary_image(report, args.image)
    if not report.passed:
        raise SuiteFailure(report.failed)
