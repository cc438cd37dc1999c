"""
LitSynth - Local Dense Synthesizer Attention 인코더

음성 인식 인코더용 어텐션 변형을 numpy로 구현한 라이브러리
- SA (dot-product self-attention), DSA (dense synthesizer), LDSA (local dense
  synthesizer), HA (SA + LDSA 하이브리드) 어텐션 층
- Conformer 스타일 인코더 블록, 2단 stride-2 합성곱 frontend
- 모든 구성 요소의 수동 backward, 중앙 차분 기울기 검사
- 파라미터 수 계산, log-log 복잡도 벤치마크, 합성 과제 과적합 학습

사용법:
    from litsynth import Rng, tiny_config, init_encoder_params, encoder_forward

    config = tiny_config('ldsa')
    params = init_encoder_params(config, Rng(0))
    out = encoder_forward(features, config, params)   # (T', d)

    # 파라미터 수
    from litsynth import count_params
    table = count_params(config)
    print(table.weight_total)

    # 복잡도 벤치마크
    from litsynth import bench_runtime, fit_loglog_slope
    fit = fit_loglog_slope(bench_runtime('ldsa', [256, 512, 1024, 2048]))
"""
from .core import (
    Matrix, Rng, ShapeError, CapacityError, SequenceLengthError, ConfigError,
    matmul, row_softmax, layer_norm, xavier_uniform_init,
    central_diff_grad, relative_error, save_matrix_csv, load_matrix_csv,
    named_arrays, tree_map, zeros_like,
    Variant, SaParams, DsaParams, LdsaParams, AttentionOutput,
    init_attention_params, sdpa_head, multihead_sa, dsa_weights, multihead_dsa,
    ldsa_weights, ldsa_forward, band_expand, attention_forward, attention_backward,
    EncoderConfig, EncoderParams, BlockParams, ParamTable,
    load_config, save_config, reference_config, tiny_config,
    init_block_params, init_encoder_params,
    ffn_forward, conv_module_forward, sublayer, encoder_block_forward,
    conv_frontend, frontend_output_length, sinusoidal_encoding,
    encoder_forward, encoder_backward, count_params, count_attention_params,
    save_attention_params, load_attention_params, save_encoder, load_encoder,
)
from .experiments import (
    noam_lr, AdamState, adam_step, gen_toy_task, TrainConfig, TrainMetrics, train_overfit,
    GradReport, check_gradients, grad_check_suite,
    InsufficientDataError, BenchConfig, BenchRecord, SlopeFit,
    bench_runtime, fit_loglog_slope, sweep_context_width,
    write_bench_csv, read_bench_csv,
)

__version__ = '0.1.0'
__all__ = [
    # 오류
    'ShapeError', 'CapacityError', 'SequenceLengthError', 'ConfigError',
    'InsufficientDataError',
    # Numerics
    'Matrix', 'Rng', 'matmul', 'row_softmax', 'layer_norm', 'xavier_uniform_init',
    'central_diff_grad', 'relative_error', 'save_matrix_csv', 'load_matrix_csv',
    'named_arrays', 'tree_map', 'zeros_like',
    # Attention
    'Variant', 'SaParams', 'DsaParams', 'LdsaParams', 'AttentionOutput',
    'init_attention_params', 'sdpa_head', 'multihead_sa', 'dsa_weights',
    'multihead_dsa', 'ldsa_weights', 'ldsa_forward', 'band_expand',
    'attention_forward', 'attention_backward',
    # Encoder
    'EncoderConfig', 'EncoderParams', 'BlockParams', 'ParamTable',
    'load_config', 'save_config', 'reference_config', 'tiny_config',
    'init_block_params', 'init_encoder_params',
    'ffn_forward', 'conv_module_forward', 'sublayer', 'encoder_block_forward',
    'conv_frontend', 'frontend_output_length', 'sinusoidal_encoding',
    'encoder_forward', 'encoder_backward', 'count_params', 'count_attention_params',
    # Checkpoint
    'save_attention_params', 'load_attention_params', 'save_encoder', 'load_encoder',
    # Training
    'noam_lr', 'AdamState', 'adam_step', 'gen_toy_task', 'TrainConfig',
    'TrainMetrics', 'train_overfit',
    # Gradient check
    'GradReport', 'check_gradients', 'grad_check_suite',
    # Benchmark
    'BenchConfig', 'BenchRecord', 'SlopeFit', 'bench_runtime', 'fit_loglog_slope',
    'sweep_context_width', 'write_bench_csv', 'read_bench_csv',
]
