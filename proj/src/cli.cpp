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
#include "spikequant/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "spikequant/accounting.hpp"
#include "spikequant/harness.hpp"
#include "spikequant/kernels.hpp"
#include "spikequant/neuron.hpp"
#include "spikequant/quant.hpp"
#include "spikequant/reports.hpp"
#include "spikequant/saliency.hpp"
#include "spikequant/spkt_io.hpp"

namespace spikequant {

namespace {

using nlohmann::json;

std::string fmt_g12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

json load_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) {
        throw SpktError(SpktErrorKind::Io, path + ": cannot open for reading");
    }
    return json::parse(f);  // throws json::parse_error on corrupt input
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) {
        throw SpktError(SpktErrorKind::Io, path + ": cannot open for writing");
    }
    f << text;
    if (!f) {
        throw SpktError(SpktErrorKind::Io, path + ": write failed");
    }
}

/// Parsed and validated PlanConfig (see README for the schema). Unknown keys
/// are rejected; violations report the JSON pointer of the offending key.
struct PlanConfig {
    double ratio = 0.0;
    int t_prime = 1;
    int levels = 2;
    std::string selector = "obspiking";
    std::uint64_t seed = 0;
    std::string granularity = "structured";
    bool has_ternary_mix = false;
    std::array<double, 3> ternary_mix{1.0, 0.0, 0.0};
};

[[noreturn]] void schema_error(const std::string& pointer, const std::string& what) {
    throw std::invalid_argument("plan config: " + pointer + ": " + what);
}

PlanConfig parse_plan_config(const json& j) {
    static const std::array<const char*, 7> known = {
        "ratio", "t_prime", "levels", "selector", "seed", "granularity",
        "ternary_mix"};
    if (!j.is_object()) {
        schema_error("/", "expected an object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
            schema_error("/" + it.key(), "unknown key");
        }
    }
    PlanConfig cfg;
    if (!j.contains("ratio") || !j["ratio"].is_number()) {
        schema_error("/ratio", "expected a number");
    }
    cfg.ratio = j["ratio"].get<double>();
    if (cfg.ratio < 0.0 || cfg.ratio > 1.0) {
        schema_error("/ratio", "must lie in [0, 1]");
    }
    if (!j.contains("t_prime") || !j["t_prime"].is_number_integer()) {
        schema_error("/t_prime", "expected an integer");
    }
    cfg.t_prime = j["t_prime"].get<int>();
    if (cfg.t_prime < 1 || cfg.t_prime > 64) {
        schema_error("/t_prime", "must lie in [1, 64]");
    }
    if (!j.contains("levels") || !j["levels"].is_number_integer()) {
        schema_error("/levels", "expected an integer");
    }
    cfg.levels = j["levels"].get<int>();
    if (cfg.levels < 2 || cfg.levels > 256) {
        schema_error("/levels", "must lie in [2, 256]");
    }
    if (!j.contains("selector") || !j["selector"].is_string()) {
        schema_error("/selector", "expected a string");
    }
    cfg.selector = j["selector"].get<std::string>();
    if (cfg.selector != "obspiking" && cfg.selector != "random") {
        schema_error("/selector", "must be \"obspiking\" or \"random\"");
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer()) {
            schema_error("/seed", "expected an integer");
        }
        cfg.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("granularity")) {
        if (!j["granularity"].is_string()) {
            schema_error("/granularity", "expected a string");
        }
        cfg.granularity = j["granularity"].get<std::string>();
        if (cfg.granularity != "structured" && cfg.granularity != "unstructured") {
            schema_error("/granularity", "must be \"structured\" or \"unstructured\"");
        }
    }
    if (j.contains("ternary_mix")) {
        if (!j["ternary_mix"].is_array() || j["ternary_mix"].size() != 3) {
            schema_error("/ternary_mix", "expected an array of three fractions");
        }
        for (std::size_t i = 0; i < 3; ++i) {
            if (!j["ternary_mix"][i].is_number()) {
                schema_error("/ternary_mix/" + std::to_string(i), "expected a number");
            }
            cfg.ternary_mix[i] = j["ternary_mix"][i].get<double>();
        }
        cfg.has_ternary_mix = true;
    }
    return cfg;
}

SyntheticSpec parse_synth_spec(const json& j) {
    static const std::array<const char*, 5> known = {
        "tokens", "channels", "outlier_ratio", "outlier_scale", "seed"};
    if (!j.is_object()) {
        throw std::invalid_argument("synth spec: /: expected an object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
            throw std::invalid_argument("synth spec: /" + it.key() + ": unknown key");
        }
    }
    SyntheticSpec spec;
    spec.tokens = j.value("tokens", spec.tokens);
    spec.channels = j.value("channels", spec.channels);
    spec.outlier_ratio = j.value("outlier_ratio", spec.outlier_ratio);
    spec.outlier_scale = j.value("outlier_scale", spec.outlier_scale);
    spec.seed = j.value("seed", spec.seed);
    if (spec.tokens == 0 || spec.channels == 0 || spec.outlier_ratio < 0.0 ||
        spec.outlier_ratio > 1.0 || spec.outlier_scale < 1.0) {
        throw std::invalid_argument("synth spec: invalid field values");
    }
    return spec;
}

std::vector<double> mean_square_per_channel(const Tensor2D& x) {
    std::vector<double> scores(x.cols, 0.0);
    for (std::size_t t = 0; t < x.rows; ++t) {
        for (std::size_t c = 0; c < x.cols; ++c) {
            scores[c] += x.at(t, c) * x.at(t, c);
        }
    }
    for (double& s : scores) {
        s /= static_cast<double>(x.rows ? x.rows : 1);
    }
    return scores;
}

IntMat train_codes_matrix(const SpikeTrain& s) {
    IntMat m(s.tokens, s.channels * s.steps);
    m.data = s.codes;  // (token, channel, step) row-major == tokens x (channels*steps)
    return m;
}

// ---------------------------------------------------------------------------
// saliency subcommand

struct SaliencyArgs {
    std::string weights, acts, mode, out;
    double damping = 0.01;
    double ratio = 0.1;
};

int cmd_saliency(const SaliencyArgs& a, std::ostream&) {
    const Tensor2D x = tensor_read(a.acts);
    SaliencyReport report;
    if (a.mode == "activation") {
        std::vector<double> scores;
        if (a.weights.empty()) {
            scores = mean_square_per_channel(x);  // identity-weight surrogate
        } else {
            const Tensor2D w = tensor_read(a.weights);
            const Tensor2D s = activation_saliency(x.transposed(), w);
            scores = aggregate_per_channel(s, ChannelAxis::Rows);
        }
        report = select_salient(scores, a.ratio);
        report.metric = SaliencyMetric::ActivationGradient;
    } else {  // weight
        if (a.weights.empty()) {
            throw std::invalid_argument("saliency: --weights is required for --mode weight");
        }
        const Tensor2D w = tensor_read(a.weights);
        const HessianMatrix h = hessian(x.transposed(), a.damping);
        const Tensor2D s = weight_saliency(w, h);
        report = select_salient(aggregate_per_channel(s, ChannelAxis::Cols), a.ratio);
        report.metric = SaliencyMetric::WeightHessian;
    }
    std::ostringstream csv;
    write_saliency_csv(report, csv);
    write_text_file(a.out, csv.str());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// quantize subcommand

struct QuantizeArgs {
    std::string acts, plan, out, report, weights;
};

int cmd_quantize(const QuantizeArgs& a, std::ostream&) {
    const Tensor2D x = tensor_read(a.acts);
    const PlanConfig cfg = parse_plan_config(load_json_file(a.plan));

    SaliencyReport rep;
    if (cfg.selector == "random") {
        Rng rng(cfg.seed);
        rep = random_plan(x.cols, cfg.ratio, rng);
    } else if (!a.weights.empty()) {
        const Tensor2D w = tensor_read(a.weights);
        const Tensor2D s = activation_saliency(x.transposed(), w);
        rep = select_salient(aggregate_per_channel(s, ChannelAxis::Rows), cfg.ratio);
    } else {
        rep = select_salient(mean_square_per_channel(x), cfg.ratio);
    }

    ChannelPlan plan;
    plan.channels = x.cols;
    plan.salient_steps = cfg.t_prime;
    plan.levels = cfg.levels;
    plan.salient_set = rep.selected;
    plan.validate();

    const SpikeTrain train = mixed_step_quantize(x, plan);
    int_matrix_write(train_codes_matrix(train), a.out);
    write_text_file(a.out + ".json", train_sidecar(train, plan).dump(2) + "\n");

    const double bits = std::log2(static_cast<double>(cfg.levels));
    const double bits_act = bits * (1.0 + plan.salient_ratio() * (cfg.t_prime - 1));
    OpsReport ops;
    ops.macs = x.rows * x.cols;  // MACs per downstream output column
    ops.bits_weight = bits;      // symmetric partner assumed for the ratio
    ops.bits_act = bits_act;
    ops.ace = ace(ops.macs, ops.bits_weight, ops.bits_act);
    ops.ace_ratio_vs_fp16 = mixed_ace_ratio(plan, bits, bits, 16.0);
    const SpikeTrain expanded = expand_train(train);
    ops.sparsity = train_sparsity(expanded);
    ops.sparse_ace = sparse_ace(expanded, bits, 1);
    ops.equal_steps = 1.0 + plan.salient_ratio() * (cfg.t_prime - 1);
    ops.code_bits_total =
        static_cast<double>(x.rows) * static_cast<double>(x.cols) * bits_act;
    write_text_file(a.report, to_json(ops).dump(2) + "\n");
    return kExitOk;
}

// ---------------------------------------------------------------------------
// matmul subcommand

struct MatmulArgs {
    std::string x, w, backend, out, ops;
    int wbits = 4;
};

int cmd_matmul(const MatmulArgs& a, std::ostream&) {
    const IntMat codes = int_matrix_read(a.x);
    const json sidecar = load_json_file(a.x + ".json");
    ChannelPlan plan;
    const SpikeTrain train = train_from_sidecar(codes, sidecar, plan);
    const Tensor2D w = tensor_read(a.w);
    if (w.cols != train.channels) {
        throw std::invalid_argument(
            "matmul: weight columns must match train channels");
    }
    const QuantizedTensor wq = group_quantize_symmetric(w, a.wbits, 128);

    Tensor2D y;
    std::uint64_t events = 0;
    if (a.backend == "bitserial") {
        y = mixed_step_gemm(train, wq, plan, MixedGemmBackend::BitSerial);
    } else if (a.backend == "reference") {
        y = reference_gemm(mixed_step_dequantize(train, plan),
                           dequantize(wq).transposed());
    } else {  // event
        const SpikeTrain expanded = expand_train(train);
        GemmResult res = event_driven_gemm(expanded, dequantize(wq), plan);
        y = Tensor2D(res.rows, res.cols, std::move(res.reals));
        events = res.accumulated_events;
    }
    tensor_write(y, a.out);

    const double bits = std::log2(static_cast<double>(plan.levels));
    const double bits_act = bits * (1.0 + plan.salient_ratio() * (plan.salient_steps - 1));
    OpsReport ops;
    ops.macs = train.tokens * train.channels * w.rows;
    ops.bits_weight = a.wbits;
    ops.bits_act = bits_act;
    ops.ace = ace(ops.macs, ops.bits_weight, ops.bits_act);
    ops.ace_ratio_vs_fp16 = mixed_ace_ratio(plan, bits, a.wbits, 16.0);
    const SpikeTrain expanded = expand_train(train);
    ops.sparsity = train_sparsity(expanded);
    ops.sparse_ace = sparse_ace(expanded, a.wbits, w.rows);
    ops.equal_steps = 1.0 + plan.salient_ratio() * (plan.salient_steps - 1);
    ops.code_bits_total = static_cast<double>(train.tokens) *
                          static_cast<double>(train.channels) * bits_act;
    json oj = to_json(ops);
    oj["accumulated_events"] = events;
    oj["backend"] = a.backend;
    write_text_file(a.ops, oj.dump(2) + "\n");
    return kExitOk;
}

// ---------------------------------------------------------------------------
// demo subcommand

struct DemoArgs {
    std::string spec, out;
    int seeds = 20;
    double ratio = 0.1;
    int t_prime = 2;
    int levels = 16;
    int threads = 1;
};

struct DemoRow {
    std::uint64_t seed = 0;
    double act_obs = 0, act_rand = 0, wt_obs = 0, wt_rand = 0;
};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 0) {
        return 0.0;
    }
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_demo(const DemoArgs& a, std::ostream&) {
    SyntheticSpec base;
    if (!a.spec.empty()) {
        base = parse_synth_spec(load_json_file(a.spec));
    }
    if (a.seeds < 1) {
        throw std::invalid_argument("demo: --seeds must be >= 1");
    }

    std::vector<DemoRow> rows(static_cast<std::size_t>(a.seeds));
    auto run_seed = [&](std::size_t i) {
        SyntheticSpec spec = base;
        spec.seed = base.seed + i;
        const Tensor2D x = synth_activations(spec);
        const Tensor2D w = synth_weights(spec, spec.channels);
        const std::uint64_t rand_seed = spec.seed ^ 0x632BE59BD9B4E019ULL;
        DemoRow row;
        row.seed = spec.seed;
        row.act_obs = run_activation_pipeline(w, x, a.ratio, a.t_prime, a.levels,
                                              Selector::ObSpiking, 0)
                          .layerwise_error;
        row.act_rand = run_activation_pipeline(w, x, a.ratio, a.t_prime, a.levels,
                                               Selector::Random, rand_seed)
                           .layerwise_error;
        row.wt_obs = run_weight_pipeline(w, x, a.ratio, a.t_prime, a.levels,
                                         Selector::ObSpiking, WeightMethod::Rtn, 0)
                         .layerwise_error;
        row.wt_rand = run_weight_pipeline(w, x, a.ratio, a.t_prime, a.levels,
                                          Selector::Random, WeightMethod::Rtn,
                                          rand_seed)
                          .layerwise_error;
        rows[i] = row;
    };

    const int nthreads = std::max(1, a.threads);
    if (nthreads == 1) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            run_seed(i);
        }
    } else {
        // Static round-robin partition; each seed is independent, so the
        // result is identical for any thread count.
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(nthreads));
        for (int tid = 0; tid < nthreads; ++tid) {
            pool.emplace_back([&, tid] {
                for (std::size_t i = static_cast<std::size_t>(tid); i < rows.size();
                     i += static_cast<std::size_t>(nthreads)) {
                    run_seed(i);
                }
            });
        }
        for (auto& th : pool) {
            th.join();
        }
    }

    std::ostringstream csv;
    csv << "seed,act_err_obspiking,act_err_random,weight_err_obspiking,weight_err_random\n";
    std::vector<double> ao, ar, wo, wr;
    for (const DemoRow& r : rows) {
        csv << r.seed << ',' << fmt_g12(r.act_obs) << ',' << fmt_g12(r.act_rand)
            << ',' << fmt_g12(r.wt_obs) << ',' << fmt_g12(r.wt_rand) << '\n';
        ao.push_back(r.act_obs);
        ar.push_back(r.act_rand);
        wo.push_back(r.wt_obs);
        wr.push_back(r.wt_rand);
    }
    csv << "median," << fmt_g12(median(ao)) << ',' << fmt_g12(median(ar)) << ','
        << fmt_g12(median(wo)) << ',' << fmt_g12(median(wr)) << '\n';
    write_text_file(a.out, csv.str());
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
    CLI::App app{"saliency-aware spiking quantization toolkit"};
    app.require_subcommand(1);

    SaliencyArgs sal;
    auto* sal_cmd = app.add_subcommand(
        "saliency", "Per-channel saliency scores and selection, written as CSV");
    sal_cmd->add_option("--weights", sal.weights, "weight tensor (out x channels, SPKT)");
    sal_cmd->add_option("--acts", sal.acts, "activation tensor (tokens x channels, SPKT)")
        ->required();
    sal_cmd->add_option("--mode", sal.mode, "activation | weight")
        ->required()
        ->check(CLI::IsMember({"activation", "weight"}));
    sal_cmd->add_option("--damping", sal.damping, "Hessian damping fraction");
    sal_cmd->add_option("--ratio", sal.ratio, "salient channel ratio");
    sal_cmd->add_option("--out", sal.out, "output CSV path")->required();

    QuantizeArgs qa;
    auto* q_cmd = app.add_subcommand(
        "quantize", "Mixed-step spiking quantization of activations");
    q_cmd->add_option("--acts", qa.acts, "activation tensor (SPKT)")->required();
    q_cmd->add_option("--plan", qa.plan, "plan config JSON")->required();
    q_cmd->add_option("--weights", qa.weights,
                      "optional weights for gradient-based channel ranking");
    q_cmd->add_option("--out", qa.out, "output spike codes (int32 SPKT + .json sidecar)")
        ->required();
    q_cmd->add_option("--report", qa.report, "ops report JSON path")->required();

    MatmulArgs ma;
    auto* m_cmd = app.add_subcommand("matmul", "Quantized matmul backends");
    m_cmd->add_option("--x", ma.x, "spike codes from quantize (SPKT)")->required();
    m_cmd->add_option("--w", ma.w, "weight tensor (out x channels, SPKT)")->required();
    m_cmd->add_option("--backend", ma.backend, "bitserial | event | reference")
        ->required()
        ->check(CLI::IsMember({"bitserial", "event", "reference"}));
    m_cmd->add_option("--wbits", ma.wbits, "weight bits (symmetric per-group)")
        ->check(CLI::Range(2, 8));
    m_cmd->add_option("--out", ma.out, "result tensor path")->required();
    m_cmd->add_option("--ops", ma.ops, "ops report JSON path")->required();

    DemoArgs da;
    auto* d_cmd = app.add_subcommand(
        "demo", "Paired saliency-vs-random experiment on synthetic data");
    d_cmd->add_option("--spec", da.spec, "synthetic data spec JSON (defaults used if omitted)");
    d_cmd->add_option("--seeds", da.seeds, "number of paired seeds")->required();
    d_cmd->add_option("--ratio", da.ratio, "salient channel ratio");
    d_cmd->add_option("--steps", da.t_prime, "T' for salient channels");
    d_cmd->add_option("--levels", da.levels, "levels per merged step");
    d_cmd->add_option("--threads", da.threads, "worker threads for the seed sweep");
    d_cmd->add_option("--out", da.out, "per-seed CSV with a median summary row")
        ->required();

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("spikequant");
    for (const std::string& s : args) {
        argv.push_back(s.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (sal_cmd->parsed()) {
            return cmd_saliency(sal, out);
        }
        if (q_cmd->parsed()) {
            return cmd_quantize(qa, out);
        }
        if (m_cmd->parsed()) {
            return cmd_matmul(ma, out);
        }
        return cmd_demo(da, out);
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const SpktError& e) {
        err << e.what() << "\n";
        return kExitUsage;
    } catch (const nlohmann::json::exception& e) {
        err << "invalid JSON input: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        err << e.what() << "\n";
        return kExitUsage;
    } catch (const std::out_of_range& e) {
        err << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitNumerical;
    }
}

}  // namespace spikequant
