/* Copyright 2026 The SpikeQuant Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <json.hpp>

#include "spikequant/accounting.hpp"
#include "spikequant/harness.hpp"
#include "spikequant/neuron.hpp"
#include "spikequant/quant.hpp"
#include "spikequant/saliency.hpp"

namespace spikequant {

// JSON report serialization (nlohmann keys are emitted sorted, so dumps are
// deterministic).

nlohmann::json to_json(const OpsReport& r);
nlohmann::json to_json(const ChannelPlan& p);
nlohmann::json to_json(const SaliencyReport& r);
nlohmann::json to_json(const PipelineResult& r);
nlohmann::json to_json(const TokenQuantParams& p);

/// Sidecar metadata for a spike train stored as an int32 SPKT file with
/// dims [tokens, channels*steps].
nlohmann::json train_sidecar(const SpikeTrain& s, const ChannelPlan& plan);
SpikeTrain train_from_sidecar(const IntMat& codes, const nlohmann::json& sidecar,
                              ChannelPlan& plan_out);

}  // namespace spikequant
