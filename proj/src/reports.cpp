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
#include "spikequant/reports.hpp"

#include <stdexcept>

namespace spikequant {

namespace {

const char* metric_name(SaliencyMetric m) {
    switch (m) {
        case SaliencyMetric::ActivationGradient:
            return "activation-gradient";
        case SaliencyMetric::WeightHessian:
            return "weight-hessian";
        case SaliencyMetric::Random:
            return "random";
    }
    return "unknown";
}

const char* form_name(SpikeForm f) {
    switch (f) {
        case SpikeForm::Merged:
            return "merged";
        case SpikeForm::ExpandedBinary:
            return "expanded-binary";
        case SpikeForm::ExpandedTernary:
            return "expanded-ternary";
    }
    return "unknown";
}

SpikeForm form_from_name(const std::string& name) {
    if (name == "merged") return SpikeForm::Merged;
    if (name == "expanded-binary") return SpikeForm::ExpandedBinary;
    if (name == "expanded-ternary") return SpikeForm::ExpandedTernary;
    throw std::invalid_argument("unknown spike train form: " + name);
}

}  // namespace

nlohmann::json to_json(const OpsReport& r) {
    return nlohmann::json{
        {"macs", r.macs},
        {"bits_weight", r.bits_weight},
        {"bits_act", r.bits_act},
        {"ace", r.ace},
        {"ace_ratio_vs_fp16", r.ace_ratio_vs_fp16},
        {"sparse_ace", r.sparse_ace},
        {"sparsity", r.sparsity},
        {"equal_steps", r.equal_steps},
        {"code_bits_total", r.code_bits_total},
    };
}

nlohmann::json to_json(const ChannelPlan& p) {
    return nlohmann::json{
        {"channels", p.channels},
        {"salient_steps", p.salient_steps},
        {"base_steps", p.base_steps},
        {"levels", p.levels},
        {"salient_set", p.salient_set},
        {"salient_ratio", p.salient_ratio()},
        {"granularity", p.granularity == PlanGranularity::Structured
                            ? "structured"
                            : "unstructured"},
    };
}

nlohmann::json to_json(const SaliencyReport& r) {
    return nlohmann::json{
        {"metric", metric_name(r.metric)}, {"ratio", r.ratio},
        {"per_channel", r.per_channel},   {"rank", r.rank},
        {"selected", r.selected},
    };
}

nlohmann::json to_json(const PipelineResult& r) {
    return nlohmann::json{
        {"layerwise_error", r.layerwise_error},
        {"ops", to_json(r.ops)},
        {"plan", to_json(r.plan)},
        {"saliency", to_json(r.saliency)},
    };
}

nlohmann::json to_json(const TokenQuantParams& p) {
    return nlohmann::json{
        {"v_th_unit", p.v_th_unit},
        {"zero_point", p.zero_point},
        {"step_delta", p.step_delta},
        {"levels_per_step", p.levels_per_step},
        {"steps", p.steps},
    };
}

nlohmann::json train_sidecar(const SpikeTrain& s, const ChannelPlan& plan) {
    nlohmann::json params = nlohmann::json::array();
    for (const TokenQuantParams& p : s.params) {
        params.push_back(to_json(p));
    }
    return nlohmann::json{
        {"format", "spiketrain-v1"},
        {"form", form_name(s.form)},
        {"tokens", s.tokens},
        {"channels", s.channels},
        {"steps", s.steps},
        {"params", params},
        {"plan", to_json(plan)},
    };
}

SpikeTrain train_from_sidecar(const IntMat& codes, const nlohmann::json& sidecar,
                              ChannelPlan& plan_out) {
    if (sidecar.value("format", "") != "spiketrain-v1") {
        throw std::invalid_argument("sidecar: unknown format");
    }
    SpikeTrain s;
    s.tokens = sidecar.at("tokens").get<std::size_t>();
    s.channels = sidecar.at("channels").get<std::size_t>();
    s.steps = sidecar.at("steps").get<std::size_t>();
    s.form = form_from_name(sidecar.at("form").get<std::string>());
    if (codes.rows != s.tokens || codes.cols != s.channels * s.steps) {
        throw std::invalid_argument(
            "sidecar: code matrix dims do not match tokens x channels*steps");
    }
    s.codes = codes.data;
    for (const auto& pj : sidecar.at("params")) {
        TokenQuantParams p;
        p.v_th_unit = pj.at("v_th_unit").get<double>();
        p.zero_point = pj.at("zero_point").get<double>();
        p.step_delta = pj.at("step_delta").get<double>();
        p.levels_per_step = pj.at("levels_per_step").get<int>();
        p.steps = pj.at("steps").get<int>();
        s.params.push_back(p);
    }
    if (s.params.size() != s.tokens) {
        throw std::invalid_argument("sidecar: params length != tokens");
    }

    const auto& pj = sidecar.at("plan");
    ChannelPlan plan;
    plan.channels = pj.at("channels").get<std::size_t>();
    plan.salient_steps = pj.at("salient_steps").get<int>();
    plan.base_steps = pj.at("base_steps").get<int>();
    plan.levels = pj.at("levels").get<int>();
    plan.salient_set = pj.at("salient_set").get<std::vector<std::size_t>>();
    plan.granularity = pj.value("granularity", "structured") == std::string("unstructured")
                           ? PlanGranularity::Unstructured
                           : PlanGranularity::Structured;
    plan.validate();
    plan_out = plan;
    return s;
}

}  // namespace spikequant
