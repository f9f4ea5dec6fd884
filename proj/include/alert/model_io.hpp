#pragma once

#include "alert/alert_state.hpp"
#include "alert/head.hpp"
#include "alert/weights_io.hpp"

namespace alert {

// Canonical tensor names: fg.layer{i}.{weight,bias,scale,shift}, pos.table,
// head.layer{i}.{ln1,qkv,attn_out,ln2,ff1,ff2}.{weight,bias}, head.cls_token,
// head.final_norm.{weight,bias}, head.classifier.{weight,bias}.

MlpWeights load_mlp_weights(const WeightArchive& archive, const MlpConfig& cfg);
PositionalTable load_positional(const WeightArchive& archive, const GridConfig& grid,
                                uint32_t channels);
HeadWeights load_head_weights(const WeightArchive& archive, const HeadConfig& cfg);

void store_mlp_weights(WeightArchive& archive, const MlpWeights& weights);
void store_positional(WeightArchive& archive, const PositionalTable& table);
void store_head_weights(WeightArchive& archive, const HeadConfig& cfg,
                        const HeadWeights& weights);

/// Deterministic random initialization, uniform in +-1/sqrt(fan_in); used by
/// the CLI `init` subcommand and anywhere tests need untrained weights.
MlpWeights make_random_mlp_weights(const MlpConfig& cfg, uint64_t seed);
PositionalTable make_random_positional(const GridConfig& grid, uint32_t channels, uint64_t seed);
HeadWeights make_random_head_weights(const HeadConfig& cfg, uint64_t seed);

/// Debug dump of the asynchronous state as archive tensors state.values,
/// state.last_win, state.counts (all f32 per the archive format).
WeightArchive dump_state(const TokenState& state);

} // namespace alert
