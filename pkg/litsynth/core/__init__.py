"""
litsynth Core Module
"""
from .numerics import (
    Matrix, Rng, ShapeError, CapacityError, SequenceLengthError, ConfigError,
    as_matrix, matmul, row_softmax, relu, sigmoid, layer_norm, layer_norm_backward,
    xavier_uniform_init, central_diff_grad, relative_error,
    save_matrix_csv, load_matrix_csv,
)
from .params import named_arrays, tree_map, zeros_like, copy_tree, count_arrays
from .attention import (
    Variant, SaParams, DsaParams, LdsaParams, AttentionOutput,
    init_sa_params, init_dsa_params, init_ldsa_params, init_attention_params,
    sdpa_head, multihead_sa, dsa_weights, multihead_dsa,
    ldsa_weights, ldsa_forward, band_expand, local_aggregate,
    attention_forward, attention_backward, variant_of,
)
from .encoder import (
    EncoderConfig, LayerNormParams, FfnParams, ConvModuleParams, FrontendParams,
    BlockParams, EncoderParams, ParamEntry, ParamTable,
    load_config, save_config, reference_config, tiny_config,
    init_ffn_params, init_conv_module_params, init_frontend_params,
    init_block_params, init_encoder_params,
    ffn_forward, ffn_backward, conv_module_forward, conv_module_backward,
    depthwise_conv1d, swish, sublayer, sublayer_backward,
    encoder_block_forward, encoder_block_backward,
    conv_frontend, conv_frontend_backward, frontend_output_length, frontend_window,
    sinusoidal_encoding, encoder_forward, encoder_backward,
    count_params, count_attention_params,
)
from .checkpoint import (
    save_attention_params, load_attention_params, save_encoder, load_encoder,
)

__all__ = [
    # Numerics
    'Matrix', 'Rng', 'ShapeError', 'CapacityError', 'SequenceLengthError', 'ConfigError',
    'as_matrix', 'matmul', 'row_softmax', 'relu', 'sigmoid',
    'layer_norm', 'layer_norm_backward', 'xavier_uniform_init',
    'central_diff_grad', 'relative_error', 'save_matrix_csv', 'load_matrix_csv',
    # Params
    'named_arrays', 'tree_map', 'zeros_like', 'copy_tree', 'count_arrays',
    # Attention
    'Variant', 'SaParams', 'DsaParams', 'LdsaParams', 'AttentionOutput',
    'init_sa_params', 'init_dsa_params', 'init_ldsa_params', 'init_attention_params',
    'sdpa_head', 'multihead_sa', 'dsa_weights', 'multihead_dsa',
    'ldsa_weights', 'ldsa_forward', 'band_expand', 'local_aggregate',
    'attention_forward', 'attention_backward', 'variant_of',
    # Encoder
    'EncoderConfig', 'LayerNormParams', 'FfnParams', 'ConvModuleParams', 'FrontendParams',
    'BlockParams', 'EncoderParams', 'ParamEntry', 'ParamTable',
    'load_config', 'save_config', 'reference_config', 'tiny_config',
    'init_ffn_params', 'init_conv_module_params', 'init_frontend_params',
    'init_block_params', 'init_encoder_params',
    'ffn_forward', 'ffn_backward', 'conv_module_forward', 'conv_module_backward',
    'depthwise_conv1d', 'swish', 'sublayer', 'sublayer_backward',
    'encoder_block_forward', 'encoder_block_backward',
    'conv_frontend', 'conv_frontend_backward', 'frontend_output_length', 'frontend_window',
    'sinusoidal_encoding', 'encoder_forward', 'encoder_backward',
    'count_params', 'count_attention_params',
    # Checkpoint
    'save_attention_params', 'load_attention_params', 'save_encoder', 'load_encoder',
]
