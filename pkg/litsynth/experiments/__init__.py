"""
litsynth Experiments - 기울기 검사, 과적합 학습, 복잡도 벤치마크
"""
from .training import (
    noam_lr, NoamSchedule, AdamState, adam_step,
    LabelRule, ToyDataset, label_frames, gen_toy_task,
    ClassifierParams, ModelParams, cross_entropy, init_model, classify, evaluate,
    loss_and_grads, TrainConfig, StepRecord, TrainMetrics, train_overfit,
    write_metrics_csv, read_metrics_csv,
)
from .gradcheck import (
    GradReport, check_gradients, check_attention_layer, check_encoder,
    grad_check_suite, reports_to_json, write_reports,
)
from .benchmark import (
    InsufficientDataError, BenchConfig, BenchRecord, SlopeFit, SweepRow,
    time_callable, bench_runtime, fit_loglog_slope, sweep_context_width,
    write_bench_csv, read_bench_csv, write_sweep_csv, read_sweep_csv,
)

__all__ = [
    # Training
    'noam_lr', 'NoamSchedule', 'AdamState', 'adam_step',
    'LabelRule', 'ToyDataset', 'label_frames', 'gen_toy_task',
    'ClassifierParams', 'ModelParams', 'cross_entropy', 'init_model', 'classify',
    'evaluate', 'loss_and_grads', 'TrainConfig', 'StepRecord', 'TrainMetrics',
    'train_overfit', 'write_metrics_csv', 'read_metrics_csv',
    # Gradient check
    'GradReport', 'check_gradients', 'check_attention_layer', 'check_encoder',
    'grad_check_suite', 'reports_to_json', 'write_reports',
    # Benchmark
    'InsufficientDataError', 'BenchConfig', 'BenchRecord', 'SlopeFit', 'SweepRow',
    'time_callable', 'bench_runtime', 'fit_loglog_slope', 'sweep_context_width',
    'write_bench_csv', 'read_bench_csv', 'write_sweep_csv', 'read_sweep_csv',
]
