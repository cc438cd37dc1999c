"""
LitSynth CLI

사용법:
    litsynth bench --variant ldsa --T 256,512,1024,2048,4096 --c 31
    litsynth gradcheck --seed 0 --out grad.json
    litsynth params --config encoder.json
    litsynth sweep-c --c 15,31 --config encoder.json
    litsynth overfit --config tiny.json --steps 2000
    litsynth init --config tiny.json --seed 0 --out ckpt/
    litsynth forward --weights ckpt/ --features feats.csv
"""

import sys
import json
import logging
import argparse

import numpy as np

from .core.numerics import (
    ShapeError, CapacityError, SequenceLengthError, ConfigError,
    Rng, CSV_FORMAT, save_matrix_csv, load_matrix_csv,
)
from .core.attention import Variant
from .core.encoder import (
    EncoderConfig, FRONTEND_CHANNELS, load_config, reference_config, tiny_config,
    count_params, init_encoder_params, encoder_forward,
)
from .core.checkpoint import save_encoder, load_encoder
from .experiments.benchmark import (
    InsufficientDataError, BenchConfig, bench_runtime, fit_loglog_slope,
    sweep_context_width, write_bench_csv, write_sweep_csv, MIN_FIT_POINTS,
)
from .experiments.gradcheck import grad_check_suite, reports_to_json
from .experiments.training import (
    TrainConfig, LabelRule, gen_toy_task, train_overfit, write_metrics_csv,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_ACCEPTANCE = 3

NUMERIC_ERRORS = (ShapeError, CapacityError, SequenceLengthError, ConfigError,
                  InsufficientDataError)


class AcceptanceError(Exception):
    """합격 기준 미달 (종료 코드 3)"""


class CliArgumentParser(argparse.ArgumentParser):
    """인자 오류 시 종료 코드 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"오류: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _int_list(text: str) -> list:
    try:
        values = [int(v) for v in text.replace(' ', '').split(',') if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"정수 목록이 아님: {text}")
    if not values:
        raise argparse.ArgumentTypeError("빈 목록")
    return values


def _emit(text: str, out):
    """--out 파일 또는 stdout"""
    if out:
        with open(out, 'w', encoding='utf-8') as f:
            f.write(text)
        print(f"저장됨: {out}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def _dumps(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + '\n'


def _config(args, preset) -> EncoderConfig:
    if args.config:
        return load_config(args.config)
    return preset(args.variant).validate()


# =============================================================================
# 서브커맨드
# =============================================================================

def cmd_bench(args) -> None:
    config = BenchConfig(d=args.d, h=args.h, c=args.c, t_max=args.t_max,
                         reps=args.reps, seed=args.seed, full_block=args.full_block)
    records = bench_runtime(args.variant, args.T, config)
    if args.out:
        write_bench_csv(records, args.out)
        print(f"저장됨: {args.out}", file=sys.stderr)
    else:
        write_bench_csv(records, sys.stdout)

    if len({r.T for r in records}) < MIN_FIT_POINTS and args.expect_slope is None:
        return
    fit = fit_loglog_slope(records)
    print(f"slope={fit.slope:.4f} intercept={fit.intercept:.4f} r2={fit.r2:.4f}",
          file=sys.stderr)
    if args.expect_slope is not None:
        low, high = args.expect_slope
        if not low <= fit.slope <= high:
            raise AcceptanceError(f"기울기 {fit.slope:.4f}가 [{low}, {high}] 범위 밖")


def cmd_gradcheck(args) -> None:
    reports = grad_check_suite(seed=args.seed)
    _emit(reports_to_json(reports) + '\n', args.out)
    failed = [r for r in reports if not r.passed]
    if failed:
        names = ', '.join(f"{r.check}:{r.block}" for r in failed)
        raise AcceptanceError(f"기울기 검사 실패 {len(failed)}개: {names}")


def cmd_params(args) -> None:
    config = _config(args, reference_config)
    table = count_params(config, frontend_channels=args.frontend_channels)
    data = table.to_dict()
    data['config'] = config.to_dict()
    _emit(_dumps(data), args.out)


def cmd_sweep_c(args) -> None:
    if args.config:
        enc = load_config(args.config)
        bench = BenchConfig(d=enc.d, h=enc.h, conv_kernel=enc.conv_kernel,
                            reps=args.reps, seed=args.seed)
    else:
        bench = BenchConfig(d=args.d, h=args.h, reps=args.reps, seed=args.seed)
    rows = sweep_context_width(args.c, bench, T=args.T)
    write_sweep_csv(rows, args.out or sys.stdout)
    if args.out:
        print(f"저장됨: {args.out}", file=sys.stderr)


def cmd_overfit(args) -> None:
    config = _config(args, tiny_config)
    dataset = gen_toy_task(args.seed, args.n_utts, args.T, config.feat_dim,
                           args.n_classes, LabelRule(args.rule))
    train_config = TrainConfig(steps=args.steps, warmup=args.warmup, scale=args.scale,
                               seed=args.seed, frontend_channels=args.frontend_channels)
    metrics = train_overfit(config, dataset, train_config=train_config)
    if args.metrics:
        write_metrics_csv(metrics, args.metrics)
    report = metrics.to_dict()
    report.update(variant=config.variant.value, frames=dataset.n_frames,
                  seed=args.seed, min_accuracy=args.min_accuracy)
    _emit(_dumps(report), args.out)
    if not metrics.ok:
        raise AcceptanceError(f"학습 발산: step {metrics.diverged_at}")
    if metrics.final_accuracy < args.min_accuracy:
        raise AcceptanceError(
            f"정확도 {metrics.final_accuracy:.4f} < {args.min_accuracy}"
        )


def cmd_init(args) -> None:
    config = _config(args, tiny_config)
    params = init_encoder_params(config, Rng(args.seed),
                                 frontend_channels=args.frontend_channels)
    manifest = save_encoder(config, params, args.out)
    print(f"저장됨: {manifest}", file=sys.stderr)


def cmd_forward(args) -> None:
    config, params = load_encoder(args.weights)
    if args.config:
        expected = load_config(args.config)
        if expected.to_dict() != config.to_dict():
            raise ConfigError(f"--config와 checkpoint 설정이 다름: {args.weights}")
    features = load_matrix_csv(args.features)
    out = encoder_forward(features, config, params)
    if args.out:
        save_matrix_csv(args.out, out)
        print(f"저장됨: {args.out}", file=sys.stderr)
    else:
        np.savetxt(sys.stdout, out, fmt=CSV_FORMAT, delimiter=',')


# =============================================================================
# 인자 파서
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = CliArgumentParser(
        prog='litsynth',
        description='LitSynth - 합성 어텐션 인코더 검증 / 벤치마크',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog='''
어텐션 변형:
  sa, dsa, ldsa, ha

종료 코드:
  0 성공, 1 사용법 오류, 2 수치/용량/형태 오류, 3 합격 기준 미달

예시:
  litsynth bench --variant sa --T 256,512,1024,2048 --expect-slope 1.7 2.3
  litsynth gradcheck --out grad.json
  litsynth params --variant ha
'''
    )
    parser.add_argument('--verbose', '-v', action='store_true', help='DEBUG 로그 출력')
    variants = [v.value for v in Variant]
    sub = parser.add_subparsers(dest='command', metavar='command', parser_class=CliArgumentParser)
    sub.required = True

    p = sub.add_parser('bench', help='어텐션 층 실행 시간 / log-log 기울기')
    p.add_argument('--variant', choices=variants, required=True)
    p.add_argument('--T', type=_int_list, required=True, help='길이 목록 (쉼표 구분)')
    p.add_argument('--c', type=int, default=31, help='context width')
    p.add_argument('--d', type=int, default=320)
    p.add_argument('--h', type=int, default=4)
    p.add_argument('--t-max', type=int, default=None, help='DSA 최대 길이 (기본: T 최댓값)')
    p.add_argument('--reps', type=int, default=5)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--full-block', action='store_true', help='인코더 블록 전체 측정')
    p.add_argument('--expect-slope', type=float, nargs=2, metavar=('MIN', 'MAX'),
                   help='기울기가 범위 밖이면 종료 코드 3')
    p.add_argument('--out', '-o', help='CSV 출력 파일')
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser('gradcheck', help='해석적 기울기 vs 중앙 차분')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--out', '-o', help='JSON 출력 파일')
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser('params', help='파라미터 수 보고')
    p.add_argument('--config', help='EncoderConfig JSON (없으면 기준 설정)')
    p.add_argument('--variant', choices=variants, default='ldsa')
    p.add_argument('--frontend-channels', type=int, default=FRONTEND_CHANNELS)
    p.add_argument('--out', '-o', help='JSON 출력 파일')
    p.set_defaults(func=cmd_params)

    p = sub.add_parser('sweep-c', help='context width별 파라미터 수 / 실행 시간')
    p.add_argument('--c', type=_int_list, required=True, help='c 목록 (홀수)')
    p.add_argument('--config', help='EncoderConfig JSON (d, h)')
    p.add_argument('--d', type=int, default=320)
    p.add_argument('--h', type=int, default=4)
    p.add_argument('--T', type=int, default=1024)
    p.add_argument('--reps', type=int, default=9)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--out', '-o', help='CSV 출력 파일')
    p.set_defaults(func=cmd_sweep_c)

    p = sub.add_parser('overfit', help='합성 과제 과적합 학습')
    p.add_argument('--config', help='EncoderConfig JSON (없으면 소형 설정)')
    p.add_argument('--variant', choices=variants, default='ldsa')
    p.add_argument('--steps', type=int, default=2000)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--warmup', type=int, default=400)
    p.add_argument('--scale', type=float, default=1.0)
    p.add_argument('--n-utts', type=int, default=8)
    p.add_argument('--T', type=int, default=103, help='발화 길이 (입력 프레임)')
    p.add_argument('--n-classes', type=int, default=2)
    p.add_argument('--rule', choices=[r.value for r in LabelRule], default='window')
    p.add_argument('--frontend-channels', type=int, default=FRONTEND_CHANNELS)
    p.add_argument('--min-accuracy', type=float, default=0.95)
    p.add_argument('--metrics', help='스텝별 CSV 출력 파일')
    p.add_argument('--out', '-o', help='JSON 보고서 출력 파일')
    p.set_defaults(func=cmd_overfit)

    p = sub.add_parser('init', help='난수 초기화 인코더 checkpoint 생성')
    p.add_argument('--config', help='EncoderConfig JSON (없으면 소형 설정)')
    p.add_argument('--variant', choices=variants, default='ldsa')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--frontend-channels', type=int, default=FRONTEND_CHANNELS)
    p.add_argument('--out', '-o', required=True, help='checkpoint 디렉토리')
    p.set_defaults(func=cmd_init)

    p = sub.add_parser('forward', help='CSV 특징에 인코더 적용')
    p.add_argument('--config', help='checkpoint 설정과 일치해야 하는 EncoderConfig JSON')
    p.add_argument('--weights', required=True, help='checkpoint 디렉토리')
    p.add_argument('--features', required=True, help='특징 CSV (T x feat_dim)')
    p.add_argument('--out', '-o', help='CSV 출력 파일')
    p.set_defaults(func=cmd_forward)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(levelname)s %(name)s: %(message)s',
        stream=sys.stderr,
    )
    try:
        args.func(args)
    except AcceptanceError as e:
        print(f"오류: {e}", file=sys.stderr)
        return EXIT_ACCEPTANCE
    except NUMERIC_ERRORS as e:
        print(f"오류: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, KeyError, json.JSONDecodeError) as e:
        print(f"오류: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:
        print(f"오류: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
