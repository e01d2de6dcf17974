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
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spikequant/accounting.hpp"
#include "spikequant/harness.hpp"
#include "spikequant/kernels.hpp"
#include "spikequant/neuron.hpp"
#include "spikequant/quant.hpp"
#include "spikequant/rng.hpp"
#include "spikequant/saliency.hpp"
#include "spikequant/spkt_io.hpp"

namespace py = pybind11;
using namespace spikequant;

namespace {

Tensor2D tensor_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) {
        throw std::invalid_argument("expected a 2-D array");
    }
    Tensor2D t(static_cast<std::size_t>(arr.shape(0)),
               static_cast<std::size_t>(arr.shape(1)));
    std::copy(arr.data(), arr.data() + t.size(), t.data.begin());
    return t;
}

py::array_t<double> tensor_to_numpy(const Tensor2D& t) {
    py::array_t<double> arr({t.rows, t.cols});
    std::copy(t.data.begin(), t.data.end(), arr.mutable_data());
    return arr;
}

IntMat intmat_from_numpy(const py::array_t<std::int32_t, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) {
        throw std::invalid_argument("expected a 2-D array");
    }
    IntMat m(static_cast<std::size_t>(arr.shape(0)),
             static_cast<std::size_t>(arr.shape(1)));
    std::copy(arr.data(), arr.data() + m.size(), m.data.begin());
    return m;
}

py::array_t<std::int32_t> intmat_to_numpy(const IntMat& m) {
    py::array_t<std::int32_t> arr({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), arr.mutable_data());
    return arr;
}

py::array_t<std::int32_t> train_codes_numpy(const SpikeTrain& s) {
    py::array_t<std::int32_t> arr({s.tokens, s.channels, s.steps});
    std::copy(s.codes.begin(), s.codes.end(), arr.mutable_data());
    return arr;
}

ChannelPlan build_plan(std::size_t channels, int salient_steps, int levels,
                       const std::vector<std::size_t>& salient_set) {
    ChannelPlan plan;
    plan.channels = channels;
    plan.salient_steps = salient_steps;
    plan.levels = levels;
    plan.salient_set = salient_set;
    std::sort(plan.salient_set.begin(), plan.salient_set.end());
    plan.validate();
    return plan;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Saliency-aware spiking quantization: GIF encoders, channel "
              "saliency, bit-serial and event-driven kernels, cost metrics.";

    py::register_exception<SpktError>(m, "SpktError");
    py::register_exception<NumericalError>(m, "NumericalError");

    // --- core -------------------------------------------------------------
    py::class_<Rng>(m, "Rng")
        .def(py::init<std::uint64_t>(), py::arg("seed"))
        .def("next_u64", &Rng::next_u64)
        .def("next_unit", &Rng::next_unit)
        .def("next_below", &Rng::next_below, py::arg("bound"));

    m.def(
        "rng_normal",
        [](std::uint64_t seed, std::size_t rows, std::size_t cols, double mean,
           double stddev) {
            Rng rng(seed);
            return tensor_to_numpy(rng_normal(rng, rows, cols, mean, stddev));
        },
        py::arg("seed"), py::arg("rows"), py::arg("cols"), py::arg("mean") = 0.0,
        py::arg("stddev") = 1.0);

    m.def("tensor_read",
          [](const std::string& path) { return tensor_to_numpy(tensor_read(path)); },
          py::arg("path"));
    m.def("tensor_write",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& arr,
             const std::string& path) { tensor_write(tensor_from_numpy(arr), path); },
          py::arg("tensor"), py::arg("path"));

    // --- neuron -----------------------------------------------------------
    py::class_<TokenQuantParams>(m, "TokenQuantParams")
        .def_readonly("v_th_unit", &TokenQuantParams::v_th_unit)
        .def_readonly("zero_point", &TokenQuantParams::zero_point)
        .def_readonly("step_delta", &TokenQuantParams::step_delta)
        .def_readonly("levels_per_step", &TokenQuantParams::levels_per_step)
        .def_readonly("steps", &TokenQuantParams::steps);

    py::enum_<SpikeForm>(m, "SpikeForm")
        .value("MERGED", SpikeForm::Merged)
        .value("EXPANDED_BINARY", SpikeForm::ExpandedBinary)
        .value("EXPANDED_TERNARY", SpikeForm::ExpandedTernary);

    py::class_<SpikeTrain>(m, "SpikeTrain")
        .def_readonly("tokens", &SpikeTrain::tokens)
        .def_readonly("channels", &SpikeTrain::channels)
        .def_readonly("steps", &SpikeTrain::steps)
        .def_readonly("form", &SpikeTrain::form)
        .def_property_readonly("params",
                               [](const SpikeTrain& s) { return s.params; })
        .def_property_readonly("codes", &train_codes_numpy)
        .def("code_sum", &SpikeTrain::code_sum, py::arg("token"), py::arg("channel"));

    m.def(
        "compute_token_params",
        [](const std::vector<double>& token, int steps, int levels) {
            return compute_token_params(token, steps, levels);
        },
        py::arg("token"), py::arg("steps"), py::arg("levels"));
    m.def(
        "gif_encode",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
           int steps, int levels) { return gif_encode(tensor_from_numpy(x), steps, levels); },
        py::arg("x"), py::arg("steps"), py::arg("levels"));
    m.def("gif_decode",
          [](const SpikeTrain& s) { return tensor_to_numpy(gif_decode(s)); },
          py::arg("train"));
    m.def("expand_train", &expand_train, py::arg("train"));
    m.def("merge_train", &merge_train, py::arg("train"), py::arg("levels"));
    m.def(
        "ternary_encode",
        [](const std::vector<double>& w, const std::vector<int>& steps,
           double absmax) {
            TernaryEncoding enc = ternary_encode(w, steps, absmax);
            return py::make_tuple(enc.train, enc.deltas);
        },
        py::arg("weights"), py::arg("steps_per_element"), py::arg("group_absmax"));

    // --- quant ------------------------------------------------------------
    py::enum_<RoundingMode>(m, "RoundingMode")
        .value("FLOOR", RoundingMode::Floor)
        .value("NEAREST", RoundingMode::Nearest);
    py::enum_<QuantGranularity>(m, "QuantGranularity")
        .value("PER_TOKEN", QuantGranularity::PerToken)
        .value("PER_CHANNEL", QuantGranularity::PerChannel)
        .value("PER_GROUP", QuantGranularity::PerGroup);

    py::class_<QuantizedTensor>(m, "QuantizedTensor")
        .def_readonly("rows", &QuantizedTensor::rows)
        .def_readonly("cols", &QuantizedTensor::cols)
        .def_readonly("bits", &QuantizedTensor::bits)
        .def_readonly("levels", &QuantizedTensor::levels)
        .def_readonly("symmetric", &QuantizedTensor::symmetric)
        .def_readonly("scale", &QuantizedTensor::scale)
        .def_readonly("zero_point", &QuantizedTensor::zero_point)
        .def_property_readonly(
            "codes", [](const QuantizedTensor& q) { return intmat_to_numpy(q.codes); });

    py::class_<ChannelPlan>(m, "ChannelPlan")
        .def(py::init(&build_plan), py::arg("channels"), py::arg("salient_steps"),
             py::arg("levels"), py::arg("salient_set") = std::vector<std::size_t>{})
        .def_readonly("channels", &ChannelPlan::channels)
        .def_readonly("salient_steps", &ChannelPlan::salient_steps)
        .def_readonly("levels", &ChannelPlan::levels)
        .def_readonly("salient_set", &ChannelPlan::salient_set)
        .def_property_readonly("salient_ratio", &ChannelPlan::salient_ratio);

    m.def(
        "uniform_quantize",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
           int bits, QuantGranularity mode, RoundingMode rounding) {
            return uniform_quantize(tensor_from_numpy(x), bits, mode, rounding);
        },
        py::arg("x"), py::arg("bits"), py::arg("mode") = QuantGranularity::PerToken,
        py::arg("rounding") = RoundingMode::Floor);
    m.def(
        "uniform_quantize_levels",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
           long levels, QuantGranularity mode, RoundingMode rounding) {
            return uniform_quantize_levels(tensor_from_numpy(x), levels, mode, rounding);
        },
        py::arg("x"), py::arg("levels"), py::arg("mode") = QuantGranularity::PerToken,
        py::arg("rounding") = RoundingMode::Floor);
    m.def(
        "group_quantize_symmetric",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& w,
           int bits, std::size_t group_size) {
            return group_quantize_symmetric(tensor_from_numpy(w), bits, group_size);
        },
        py::arg("w"), py::arg("bits"), py::arg("group_size") = 128);
    m.def("dequantize",
          [](const QuantizedTensor& q) { return tensor_to_numpy(dequantize(q)); },
          py::arg("quantized"));
    m.def(
        "mixed_step_quantize",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
           const ChannelPlan& plan) {
            return mixed_step_quantize(tensor_from_numpy(x), plan);
        },
        py::arg("x"), py::arg("plan"));
    m.def(
        "mixed_step_dequantize",
        [](const SpikeTrain& s, const ChannelPlan& plan) {
            return tensor_to_numpy(mixed_step_dequantize(s, plan));
        },
        py::arg("train"), py::arg("plan"));

    // --- saliency ----------------------------------------------------------
    py::enum_<SaliencyMetric>(m, "SaliencyMetric")
        .value("ACTIVATION_GRADIENT", SaliencyMetric::ActivationGradient)
        .value("WEIGHT_HESSIAN", SaliencyMetric::WeightHessian)
        .value("RANDOM", SaliencyMetric::Random);

    py::class_<SaliencyReport>(m, "SaliencyReport")
        .def_readonly("metric", &SaliencyReport::metric)
        .def_readonly("per_channel", &SaliencyReport::per_channel)
        .def_readonly("rank", &SaliencyReport::rank)
        .def_readonly("selected", &SaliencyReport::selected)
        .def_readonly("ratio", &SaliencyReport::ratio);

    py::class_<HessianMatrix>(m, "HessianMatrix")
        .def_readonly("dim", &HessianMatrix::dim)
        .def_readonly("damping", &HessianMatrix::damping)
        .def_property_readonly("values", [](const HessianMatrix& h) {
            py::array_t<double> arr({h.dim, h.dim});
            std::copy(h.values.begin(), h.values.end(), arr.mutable_data());
            return arr;
        });

    m.def(
        "activation_saliency",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& w) {
            return tensor_to_numpy(
                activation_saliency(tensor_from_numpy(x), tensor_from_numpy(w)));
        },
        py::arg("x"), py::arg("w"));
    m.def(
        "hessian",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
           double damping_frac) { return hessian(tensor_from_numpy(x), damping_frac); },
        py::arg("x"), py::arg("damping_frac") = 0.01);
    m.def(
        "weight_saliency",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& w,
           const HessianMatrix& h) {
            return tensor_to_numpy(weight_saliency(tensor_from_numpy(w), h));
        },
        py::arg("w"), py::arg("hessian"));
    m.def(
        "aggregate_per_channel",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& s,
           bool rows_are_channels) {
            return aggregate_per_channel(tensor_from_numpy(s),
                                         rows_are_channels ? ChannelAxis::Rows
                                                           : ChannelAxis::Cols);
        },
        py::arg("saliency"), py::arg("rows_are_channels") = true);
    m.def("select_salient", &select_salient, py::arg("scores"), py::arg("ratio"));
    m.def(
        "random_plan",
        [](std::size_t channels, double ratio, std::uint64_t seed) {
            Rng rng(seed);
            return random_plan(channels, ratio, rng);
        },
        py::arg("channels"), py::arg("ratio"), py::arg("seed"));

    // --- kernels ------------------------------------------------------------
    py::class_<GemmResult>(m, "GemmResult")
        .def_readonly("rows", &GemmResult::rows)
        .def_readonly("cols", &GemmResult::cols)
        .def_readonly("accumulated_events", &GemmResult::accumulated_events)
        .def_property_readonly("values", [](const GemmResult& r) -> py::object {
            if (!r.ints.empty()) {
                py::array_t<std::int64_t> arr({r.rows, r.cols});
                std::copy(r.ints.begin(), r.ints.end(), arr.mutable_data());
                return arr;
            }
            py::array_t<double> arr({r.rows, r.cols});
            std::copy(r.reals.begin(), r.reals.end(), arr.mutable_data());
            return arr;
        });

    m.def(
        "bitserial_gemm",
        [](const py::array_t<std::int32_t, py::array::c_style | py::array::forcecast>& a,
           int a_bits,
           const py::array_t<std::int32_t, py::array::c_style | py::array::forcecast>& w,
           int w_bits) {
            return bitserial_gemm(pack_bitplanes(intmat_from_numpy(a), a_bits),
                                  pack_bitplanes(intmat_from_numpy(w), w_bits));
        },
        py::arg("a_codes"), py::arg("a_bits"), py::arg("w_codes"), py::arg("w_bits"));
    m.def(
        "mixed_step_gemm",
        [](const SpikeTrain& x, const QuantizedTensor& wq, const ChannelPlan& plan,
           bool bitserial) {
            return tensor_to_numpy(
                mixed_step_gemm(x, wq, plan,
                                bitserial ? MixedGemmBackend::BitSerial
                                          : MixedGemmBackend::Naive));
        },
        py::arg("train"), py::arg("wq"), py::arg("plan"), py::arg("bitserial") = false);
    m.def(
        "event_driven_gemm",
        [](const SpikeTrain& x,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& w,
           const ChannelPlan& plan) {
            return event_driven_gemm(x, tensor_from_numpy(w), plan);
        },
        py::arg("train"), py::arg("w"), py::arg("plan"));
    m.def(
        "reference_gemm",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
            return tensor_to_numpy(
                reference_gemm(tensor_from_numpy(a), tensor_from_numpy(b)));
        },
        py::arg("a"), py::arg("b"));

    // --- accounting ---------------------------------------------------------
    py::class_<OpsReport>(m, "OpsReport")
        .def_readonly("macs", &OpsReport::macs)
        .def_readonly("bits_weight", &OpsReport::bits_weight)
        .def_readonly("bits_act", &OpsReport::bits_act)
        .def_readonly("ace", &OpsReport::ace)
        .def_readonly("ace_ratio_vs_fp16", &OpsReport::ace_ratio_vs_fp16)
        .def_readonly("sparse_ace", &OpsReport::sparse_ace)
        .def_readonly("sparsity", &OpsReport::sparsity)
        .def_readonly("equal_steps", &OpsReport::equal_steps)
        .def_readonly("code_bits_total", &OpsReport::code_bits_total);

    m.def("ace", &ace, py::arg("macs"), py::arg("bits_weight"), py::arg("bits_act"));
    m.def("mixed_ace_ratio", &mixed_ace_ratio, py::arg("plan"),
          py::arg("bits_per_step"), py::arg("other_side_bits"), py::arg("fp_bits") = 16.0);
    m.def("train_sparsity", &train_sparsity, py::arg("expanded"));
    m.def("sparse_ace", &sparse_ace, py::arg("expanded"), py::arg("weight_bits"),
          py::arg("output_width"));
    m.def(
        "equal_steps",
        [](const std::vector<double>& fractions, const std::vector<int>& steps) {
            return equal_steps(fractions, steps);
        },
        py::arg("fractions"), py::arg("steps"));

    py::enum_<CodeScheme>(m, "CodeScheme")
        .value("IF", CodeScheme::If)
        .value("GIF", CodeScheme::Gif)
        .value("QUANT", CodeScheme::Quant)
        .value("MIXED", CodeScheme::Mixed);
    m.def("code_length", &code_length, py::arg("scheme"), py::arg("T"),
          py::arg("L") = 2.0, py::arg("ratio") = 0.0);

    // --- harness ------------------------------------------------------------
    py::class_<SyntheticSpec>(m, "SyntheticSpec")
        .def(py::init([](std::size_t tokens, std::size_t channels, double outlier_ratio,
                         double outlier_scale, std::uint64_t seed) {
                 return SyntheticSpec{tokens, channels, outlier_ratio, outlier_scale,
                                      seed};
             }),
             py::arg("tokens") = 512, py::arg("channels") = 256,
             py::arg("outlier_ratio") = 0.1, py::arg("outlier_scale") = 10.0,
             py::arg("seed") = 2)
        .def_readwrite("tokens", &SyntheticSpec::tokens)
        .def_readwrite("channels", &SyntheticSpec::channels)
        .def_readwrite("outlier_ratio", &SyntheticSpec::outlier_ratio)
        .def_readwrite("outlier_scale", &SyntheticSpec::outlier_scale)
        .def_readwrite("seed", &SyntheticSpec::seed);

    py::class_<PipelineResult>(m, "PipelineResult")
        .def_readonly("layerwise_error", &PipelineResult::layerwise_error)
        .def_readonly("ops", &PipelineResult::ops)
        .def_readonly("plan", &PipelineResult::plan)
        .def_readonly("saliency", &PipelineResult::saliency);

    py::enum_<Selector>(m, "Selector")
        .value("OBSPIKING", Selector::ObSpiking)
        .value("RANDOM", Selector::Random);
    py::enum_<WeightMethod>(m, "WeightMethod")
        .value("RTN", WeightMethod::Rtn)
        .value("GPTQ", WeightMethod::Gptq);

    m.def("synth_activations",
          [](const SyntheticSpec& spec) { return tensor_to_numpy(synth_activations(spec)); },
          py::arg("spec"));
    m.def(
        "synth_weights",
        [](const SyntheticSpec& spec, std::size_t out_rows) {
            return tensor_to_numpy(synth_weights(spec, out_rows));
        },
        py::arg("spec"), py::arg("out_rows"));
    m.def("synth_outlier_channels", &synth_outlier_channels, py::arg("spec"));
    m.def(
        "layerwise_error",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& w,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& wq,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& xq) {
            return layerwise_error(tensor_from_numpy(w), tensor_from_numpy(x),
                                   tensor_from_numpy(wq), tensor_from_numpy(xq));
        },
        py::arg("w"), py::arg("x"), py::arg("wq"), py::arg("xq"));
    m.def(
        "run_activation_pipeline",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& w,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
           double ratio, int t_prime, int levels, Selector selector,
           std::uint64_t seed) {
            return run_activation_pipeline(tensor_from_numpy(w), tensor_from_numpy(x),
                                           ratio, t_prime, levels, selector, seed);
        },
        py::arg("w"), py::arg("x"), py::arg("ratio"), py::arg("t_prime"),
        py::arg("levels"), py::arg("selector") = Selector::ObSpiking,
        py::arg("seed") = 0);
    m.def(
        "run_weight_pipeline",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& w,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
           double ratio, int t_prime, int levels, Selector selector,
           WeightMethod method, std::uint64_t seed) {
            return run_weight_pipeline(tensor_from_numpy(w), tensor_from_numpy(x),
                                       ratio, t_prime, levels, selector, method, seed);
        },
        py::arg("w"), py::arg("x_calib"), py::arg("ratio"), py::arg("t_prime"),
        py::arg("levels"), py::arg("selector") = Selector::ObSpiking,
        py::arg("method") = WeightMethod::Rtn, py::arg("seed") = 0);
    m.def(
        "run_ternary_pipeline",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& w,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
           const std::array<double, 3>& mix) {
            return run_ternary_pipeline(tensor_from_numpy(w), tensor_from_numpy(x), mix);
        },
        py::arg("w"), py::arg("x_calib"), py::arg("mix"));
    m.def(
        "attention_demo",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& q,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& k,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& v,
           double ratio, int t_prime, int levels) {
            return tensor_to_numpy(attention_demo(tensor_from_numpy(q),
                                                  tensor_from_numpy(k),
                                                  tensor_from_numpy(v), ratio,
                                                  t_prime, levels));
        },
        py::arg("q"), py::arg("k"), py::arg("v"), py::arg("ratio"),
        py::arg("t_prime"), py::arg("levels"));
    m.def(
        "attention_reference",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& q,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& k,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& v) {
            return tensor_to_numpy(attention_reference(
                tensor_from_numpy(q), tensor_from_numpy(k), tensor_from_numpy(v)));
        },
        py::arg("q"), py::arg("k"), py::arg("v"));
}
