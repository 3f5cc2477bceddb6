// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_CLI_COMMANDS_HPP_
#define DOCLAB_CLI_COMMANDS_HPP_

#include <fcntl.h>
#include <unistd.h>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "doclab/cli/config.hpp"
#include "doclab/grpo/grpo.hpp"
#include "doclab/harness/report.hpp"
#include "doclab/policy/checkpoint.hpp"
#include "doclab/sft/sft.hpp"
#include "doclab/synthdocs/targets.hpp"

namespace doclab::cli {

namespace fs = std::filesystem;
using Real = float;

// ---------------------------------------------------------------------------
// Run directory plumbing: advisory lock, config snapshot, manifest, FAILED
// marker. Every command writes only inside its own output directory.
// ---------------------------------------------------------------------------

class RunDir {
public:
    RunDir(const std::string& path, const std::string& command, const KvConfig& cfg)
        : dir_(path), command_(command), config_text_(cfg.serialize()) {
        fs::create_directories(dir_);
        lock_fd_ = ::open((dir_ / "lock").c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (lock_fd_ < 0)
            throw UsageError("run directory is locked by another writer: " + dir_.string());
        // Reproducibility snapshot before any work happens.
        write_file((dir_ / "run_config.ini").string(), config_text_);
    }

    ~RunDir() {
        if (lock_fd_ >= 0) {
            ::close(lock_fd_);
            std::error_code ec;
            fs::remove(dir_ / "lock", ec);
        }
        if (!finished_) {
            try {
                write_file((dir_ / "FAILED").string(), "run did not complete\n");
            } catch (...) {
            }
        }
    }

    const fs::path& dir() const { return dir_; }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    void add_input(const std::string& label, const std::string& file) {
        inputs_[label] = {{"path", file}, {"sha256", file_sha256(file)}};
    }
    void add_output(const std::string& name) { outputs_.push_back(name); }

    // Writes the manifest and clears the failure marker path.
    void finish(uint64_t seed) {
        nlohmann::json m;
        m["command"] = command_;
        m["seed"] = seed;
        m["config_sha256"] = Sha256::hex_of(config_text_);
        m["config_text"] = config_text_;
        m["inputs"] = inputs_;
        nlohmann::json outs = nlohmann::json::object();
        for (const auto& name : outputs_) outs[name] = file_sha256(path(name));
        m["outputs"] = outs;
        write_file(path("manifest.json"), m.dump(2) + "\n");
        finished_ = true;
    }

private:
    fs::path dir_;
    std::string command_;
    std::string config_text_;
    nlohmann::json inputs_ = nlohmann::json::object();
    std::vector<std::string> outputs_;
    int lock_fd_ = -1;
    bool finished_ = false;
};

// Command-line overrides for values that also live in the config file.
struct Overrides {
    std::optional<uint64_t> seed;
    std::optional<std::string> init_checkpoint;
    std::optional<std::string> reasoning;       // on | off
    std::optional<std::string> prompt_classes;  // all | train10 | heldout6
};

namespace detail {

inline uint64_t run_seed(const KvConfig& cfg, const Overrides& ov, const char* section) {
    if (ov.seed) return *ov.seed;
    return cfg.get_u64(section, "seed", cfg.get_u64("run", "seed", 1));
}

// Run-level model defaults: the desk-scale configuration every shipped
// experiment uses. The PolicyConfig type keeps the larger reference
// defaults; runs are sized to finish on a laptop CPU in minutes.
inline policy::PolicyConfig model_config(const KvConfig& cfg, int vocab_size) {
    policy::PolicyConfig pc;
    pc.vocab_size = vocab_size;
    pc.context_len = cfg.get_int("model", "context_len", 160);
    pc.d_model = cfg.get_int("model", "d_model", 48);
    pc.n_layers = cfg.get_int("model", "n_layers", 2);
    pc.n_heads = cfg.get_int("model", "n_heads", 2);
    pc.ff_mult = cfg.get_int("model", "ff_mult", 4);
    pc.lora_rank = cfg.get_int("model", "lora_rank", 8);
    pc.lora_alpha = cfg.get_double("model", "lora_alpha", 16.0);
    pc.validate();
    return pc;
}

inline synth::GenConfig gen_config(const KvConfig& cfg, uint64_t seed) {
    synth::GenConfig gc;
    gc.seed = seed;
    gc.train_per_class = cfg.get_int("gen", "train_per_class", 100);
    gc.test_per_class = cfg.get_int("gen", "test_per_class", 40);
    gc.doc_len = cfg.get_int("gen", "doc_len", 16);
    gc.signal_fraction = cfg.get_double("gen", "signal_fraction", 0.72);
    gc.ood_signal_fraction = cfg.get_double("gen", "ood_signal_fraction", 0.45);
    gc.ood_confusion_fraction = cfg.get_double("gen", "ood_confusion_fraction", 0.25);
    gc.name_weight = cfg.get_double("gen", "name_weight", 0.5);
    gc.annotation_noise = cfg.get_double("gen", "annotation_noise", 0.0);
    gc.validate();
    return gc;
}

struct LoadedData {
    synth::Dataset dataset;
    text::Vocab vocab;
    std::string dataset_path;
    std::string vocab_path;
};

inline LoadedData load_data(const KvConfig& cfg) {
    LoadedData d;
    d.dataset_path = cfg.require("paths", "dataset");
    d.vocab_path = cfg.require("paths", "vocab");
    d.dataset = synth::load_dataset(d.dataset_path);
    d.vocab = text::Vocab::load(d.vocab_path);
    return d;
}

// Classes present in a sample set, in canonical (Table) order.
inline std::vector<std::string> present_classes(const synth::Dataset& samples) {
    std::set<std::string> labels;
    for (const auto& s : samples) labels.insert(s.label);
    std::vector<std::string> out;
    for (const auto& name : synth::all_class_names())
        if (labels.count(name)) out.push_back(name);
    return out;
}

inline sft::SftConfig sft_config(const KvConfig& cfg, const char* section, uint64_t seed) {
    const bool is_pretrain = std::string(section) == "pretrain";
    sft::SftConfig sc;
    sc.epochs = cfg.get_int(section, "epochs", is_pretrain ? 3 : 5);
    sc.batch_size = cfg.get_int(section, "batch_size", is_pretrain ? 16 : 8);
    sc.learning_rate = cfg.get_double(section, "learning_rate", is_pretrain ? 3e-3 : 5e-3);
    sc.lr_final_fraction = cfg.get_double(section, "lr_final_fraction", 0.1);
    sc.seed = seed;
    sc.shuffle = cfg.get_bool(section, "shuffle", true);
    sc.validate();
    return sc;
}

// Run-level GRPO defaults. These are the tuned desk-scale values; the
// GrpoConfig type itself defaults to the plainer reference settings.
inline grpo::GrpoConfig grpo_config(const KvConfig& cfg, uint64_t seed) {
    grpo::GrpoConfig gc;
    gc.group_size = cfg.get_int("grpo", "group_size", 8);
    gc.clip_eps = cfg.get_double("grpo", "clip_eps", 0.2);
    gc.kl_beta = cfg.get_double("grpo", "kl_beta", 0.4);
    gc.temperature = cfg.get_double("grpo", "temperature", 1.0);
    gc.max_new = cfg.get_int("grpo", "max_new", 26);
    gc.steps = cfg.get_int("grpo", "steps", 400);
    gc.prompts_per_step = cfg.get_int("grpo", "prompts_per_step", 4);
    gc.learning_rate = cfg.get_double("grpo", "learning_rate", 3e-3);
    gc.seed = seed;
    gc.validate();
    return gc;
}

// Loads a checkpoint, resolving adapter-only archives through
// [paths] base_checkpoint.
inline policy::LoadedCheckpoint<Real> load_model_checkpoint(const KvConfig& cfg,
                                                            const std::string& path) {
    auto peek = policy::load_checkpoint<Real>(path);
    if (peek.kind == "adapters")
        return policy::load_adapter_checkpoint<Real>(path, cfg.require("paths", "base_checkpoint"));
    return peek;
}

inline synth::TrainSetSpec select_train_set(const synth::ScenarioPlan& plan,
                                            const KvConfig& cfg) {
    const std::string wanted = cfg.get("train", "set", plan.train_sets[0].name);
    for (const auto& t : plan.train_sets)
        if (t.name == wanted) return t;
    throw UsageError("scenario has no train set named '" + wanted + "'");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands. Each returns the paths of its primary artifacts.
// ---------------------------------------------------------------------------

struct CmdResult {
    std::string out_dir;
    std::map<std::string, std::string> artifacts;
};

inline CmdResult cmd_gen(const KvConfig& cfg, const std::string& out, const Overrides& ov = {}) {
    const uint64_t seed = detail::run_seed(cfg, ov, "gen");
    RunDir run(out, "gen", cfg);
    const auto gc = detail::gen_config(cfg, seed);
    const auto dataset = synth::generate(gc);
    synth::save_dataset(dataset, run.path("dataset.jsonl"));
    const auto vocab = synth::build_vocab();
    vocab.save(run.path("vocab.json"));
    write_file(run.path("gen_manifest.json"),
               synth::generation_manifest(gc, run.path("dataset.jsonl")).dump(2) + "\n");
    run.add_output("dataset.jsonl");
    run.add_output("vocab.json");
    run.add_output("gen_manifest.json");
    run.finish(seed);
    return {out,
            {{"dataset", out + "/dataset.jsonl"}, {"vocab", out + "/vocab.json"}}};
}

inline CmdResult cmd_pretrain(const KvConfig& cfg, const std::string& out,
                              const Overrides& ov = {}) {
    const uint64_t seed = detail::run_seed(cfg, ov, "pretrain");
    RunDir run(out, "pretrain", cfg);
    auto data = detail::load_data(cfg);
    run.add_input("dataset", data.dataset_path);
    run.add_input("vocab", data.vocab_path);

    const auto pc = detail::model_config(cfg, data.vocab.size());
    policy::Model<Real> model(pc);
    auto store = model.init_params(seed);
    const size_t examples =
        static_cast<size_t>(cfg.get_int("pretrain", "examples", 4800));
    auto targets = synth::make_pretrain_targets(data.dataset, data.vocab, seed, examples);
    auto log = sft::pretrain_base(model, targets, detail::sft_config(cfg, "pretrain", seed), store);

    policy::save_checkpoint(store, pc, run.path("base.ckpt"));
    write_file(run.path("pretrain_log.csv"), log.to_csv());
    run.add_output("base.ckpt");
    run.add_output("pretrain_log.csv");
    run.finish(seed);
    return {out, {{"checkpoint", out + "/base.ckpt"}}};
}

inline CmdResult cmd_train_sft(const KvConfig& cfg, const std::string& out,
                               const Overrides& ov = {}) {
    const uint64_t seed = detail::run_seed(cfg, ov, "sft");
    RunDir run(out, "train-sft", cfg);
    auto data = detail::load_data(cfg);
    const std::string init_path =
        ov.init_checkpoint ? *ov.init_checkpoint : cfg.require("paths", "init_checkpoint");
    run.add_input("dataset", data.dataset_path);
    run.add_input("vocab", data.vocab_path);
    run.add_input("init_checkpoint", init_path);

    auto loaded = detail::load_model_checkpoint(cfg, init_path);
    policy::Model<Real> model(loaded.config);
    auto& store = loaded.store;
    store.freeze_all();
    if (!store.has_adapters()) model.inject_adapters(store, seed);

    const auto scenario = cfg.get("train", "scenario", "unseen-classes");
    auto plan = synth::scenario_split(data.dataset, scenario);
    const auto train_set = detail::select_train_set(plan, cfg);
    const auto classes = detail::present_classes(train_set.samples);
    auto targets = synth::make_sft_targets(train_set.samples, classes, data.vocab);

    auto log = sft::train(model, targets, detail::sft_config(cfg, "sft", seed), store);

    policy::save_checkpoint(store, loaded.config, run.path("model.ckpt"));
    policy::save_checkpoint(store, loaded.config, run.path("adapters.ckpt"), "adapters",
                            file_sha256(init_path));
    write_file(run.path("train_log.csv"), log.to_csv());
    run.add_output("model.ckpt");
    run.add_output("adapters.ckpt");
    run.add_output("train_log.csv");
    run.finish(seed);
    return {out, {{"checkpoint", out + "/model.ckpt"}}};
}

inline CmdResult cmd_train_rl(const KvConfig& cfg, const std::string& out,
                              const Overrides& ov = {}) {
    const uint64_t seed = detail::run_seed(cfg, ov, "grpo");
    RunDir run(out, "train-rl", cfg);
    auto data = detail::load_data(cfg);
    const std::string init_path =
        ov.init_checkpoint ? *ov.init_checkpoint : cfg.require("paths", "init_checkpoint");
    run.add_input("dataset", data.dataset_path);
    run.add_input("vocab", data.vocab_path);
    run.add_input("init_checkpoint", init_path);

    auto loaded = detail::load_model_checkpoint(cfg, init_path);
    policy::Model<Real> model(loaded.config);
    auto& store = loaded.store;
    store.freeze_all();
    if (!store.has_adapters()) model.inject_adapters(store, seed);

    const auto scenario = cfg.get("train", "scenario", "unseen-classes");
    auto plan = synth::scenario_split(data.dataset, scenario);
    const auto train_set = detail::select_train_set(plan, cfg);
    const auto classes = detail::present_classes(train_set.samples);
    std::vector<grpo::PromptExample> examples;
    for (const auto& s : train_set.samples) {
        grpo::PromptExample ex;
        ex.prompt = text::build_prompt(synth::prompt_spec_for(s, classes), data.vocab);
        ex.gold_label = text::normalize(s.label);
        examples.push_back(std::move(ex));
    }

    auto gcfg = detail::grpo_config(cfg, seed);
    const bool trace = cfg.get_bool("grpo", "trace", false);
    // Optional early stop on a greedy-decoding probe over held-in samples.
    const double stop_acc = cfg.get_double("grpo", "early_stop_accuracy", 0.0);
    const int stop_every = cfg.get_int("grpo", "early_stop_every", 20);
    const int stop_samples = cfg.get_int("grpo", "early_stop_samples", 200);
    synth::EvalSetSpec probe;
    std::string probe_variant;
    if (stop_acc > 0.0) {
        if (plan.eval_sets.empty()) throw UsageError("scenario offers no probe eval set");
        probe = plan.eval_sets[0];
        if (static_cast<int>(probe.samples.size()) > stop_samples)
            probe.samples.resize(static_cast<size_t>(stop_samples));
        probe_variant = classes == synth::train_class_names() ? "train10" : "all16";
    }

    std::string trace_blob;
    grpo::StepObserver observer = [&](int step, const grpo::GrpoLogRow&,
                                      const std::vector<grpo::GroupBatch>& batches) {
        if (trace) {
            for (const auto& b : batches) {
                for (const auto& r : b.rollouts) {
                    nlohmann::json j;
                    j["step"] = step;
                    j["gold"] = b.gold_label;
                    j["response"] = data.vocab.decode(r.response);
                    j["reward_total"] = r.reward.total;
                    j["reward_format"] = r.reward.format;
                    j["advantage"] = r.advantage;
                    trace_blob += j.dump() + "\n";
                }
            }
        }
        if (stop_acc > 0.0 && step % stop_every == 0) {
            harness::GridRequest probe_grid;
            probe_grid.variants = {probe_variant};
            probe_grid.reasoning_modes = {"on"};
            probe_grid.decode.max_new = gcfg.max_new;
            auto m = harness::evaluate(model, store, {probe}, probe_grid, data.vocab, "probe", "");
            if (m.cells[0].accuracy >= stop_acc) return false;
        }
        return true;
    };
    auto log = grpo::train(model, examples, gcfg, store, data.vocab, observer);

    policy::save_checkpoint(store, loaded.config, run.path("model.ckpt"));
    policy::save_checkpoint(store, loaded.config, run.path("adapters.ckpt"), "adapters",
                            file_sha256(init_path));
    write_file(run.path("train_log.csv"), log.to_csv());
    run.add_output("model.ckpt");
    run.add_output("adapters.ckpt");
    run.add_output("train_log.csv");
    if (trace) {
        write_file(run.path("trace.jsonl"), trace_blob);
        run.add_output("trace.jsonl");
    }
    run.finish(seed);
    return {out, {{"checkpoint", out + "/model.ckpt"}}};
}

// Batch scorer: JSONL in ({"response": [words...], "gold": label}), JSONL
// out (the reward breakdown). Words are scored against an ephemeral
// vocabulary built from the input, so no model artifacts are needed.
inline CmdResult cmd_score(const KvConfig& cfg, const std::string& in_path,
                           const std::string& out, const Overrides& ov = {}) {
    const uint64_t seed = detail::run_seed(cfg, ov, "score");
    RunDir run(out, "score", cfg);
    run.add_input("scores_in", in_path);

    std::set<std::string> words;
    std::vector<std::pair<std::vector<std::string>, std::string>> rows;
    for (const auto& line : read_lines(in_path)) {
        auto j = nlohmann::json::parse(line);
        auto resp = j.at("response").get<std::vector<std::string>>();
        for (const auto& w : resp) {
            const auto& specials = text::special_words();
            if (std::find(specials.begin(), specials.end(), w) == specials.end())
                for (const auto& piece : text::split_words(w)) words.insert(piece);
        }
        for (const auto& piece : text::split_words(j.at("gold").get<std::string>()))
            words.insert(piece);
        rows.emplace_back(resp, j.at("gold").get<std::string>());
    }
    const auto vocab = text::Vocab::build(words);

    std::string out_blob;
    for (const auto& [resp_words, gold] : rows) {
        std::vector<int> tokens;
        for (const auto& w : resp_words) tokens.push_back(vocab.id(w));
        const auto breakdown = rewards::score_response(tokens, gold, vocab);
        out_blob += "{\"classification\": " + format_fixed(breakdown.classification, 1) +
                    ", \"format\": " + format_fixed(breakdown.format, 1) +
                    ", \"total\": " + format_fixed(breakdown.total, 1) + "}\n";
    }
    write_file(run.path("scores.jsonl"), out_blob);
    run.add_output("scores.jsonl");
    run.finish(seed);
    return {out, {{"scores", out + "/scores.jsonl"}}};
}

inline CmdResult cmd_eval(const KvConfig& cfg, const std::string& out, const Overrides& ov = {}) {
    const uint64_t seed = detail::run_seed(cfg, ov, "eval");
    RunDir run(out, "eval", cfg);
    auto data = detail::load_data(cfg);
    const std::string ckpt_path =
        ov.init_checkpoint ? *ov.init_checkpoint : cfg.require("paths", "checkpoint");
    run.add_input("dataset", data.dataset_path);
    run.add_input("vocab", data.vocab_path);
    run.add_input("checkpoint", ckpt_path);

    auto loaded = detail::load_model_checkpoint(cfg, ckpt_path);
    policy::Model<Real> model(loaded.config);

    const auto scenario = cfg.get("eval", "scenario", "unseen-classes");
    auto plan = synth::scenario_split(data.dataset, scenario);

    harness::GridRequest grid;
    std::string variants = cfg.get("eval", "variants", "all16,train10,heldout6");
    if (ov.prompt_classes) {
        if (*ov.prompt_classes == "all") variants = "all16";
        else variants = *ov.prompt_classes;
    }
    std::istringstream vs(variants);
    std::string v;
    while (std::getline(vs, v, ',')) grid.variants.push_back(v);
    std::string modes = cfg.get("eval", "reasoning", "on");
    if (ov.reasoning) modes = *ov.reasoning;
    std::istringstream ms(modes);
    while (std::getline(ms, v, ',')) grid.reasoning_modes.push_back(v);
    grid.decode.max_new = cfg.get_int("eval", "max_new", 28);

    std::vector<harness::PredictionRecord> predictions;
    auto matrix = harness::evaluate(model, loaded.store, plan.eval_sets, grid, data.vocab,
                                    cfg.get("eval", "model_id", ckpt_path),
                                    file_sha256(ckpt_path), &predictions);

    write_file(run.path("matrix.csv"), harness::matrix_to_csv(matrix));
    write_file(run.path("matrix.json"), harness::matrix_to_json(matrix).dump(2) + "\n");
    write_file(run.path("report.md"), harness::matrix_to_markdown(matrix, scenario));
    write_file(run.path("predictions.jsonl"), harness::predictions_to_jsonl(predictions));
    for (const char* f : {"matrix.csv", "matrix.json", "report.md", "predictions.jsonl"})
        run.add_output(f);
    run.finish(seed);
    return {out, {{"matrix", out + "/matrix.csv"}}};
}

// Split-id naming convention for OOD marking when a matrix comes from disk.
inline int infer_ood_flag(const std::string& split_id) {
    if (split_id.find("ood") != std::string::npos ||
        split_id.find("heldout") != std::string::npos)
        return 1;
    if (split_id.find("-id") != std::string::npos ||
        split_id.find("train10") != std::string::npos)
        return 0;
    return -1;
}

inline CmdResult cmd_compare(const KvConfig& cfg, const std::string& matrix_a,
                             const std::string& matrix_b, const std::string& out,
                             const Overrides& ov = {}) {
    const uint64_t seed = detail::run_seed(cfg, ov, "compare");
    RunDir run(out, "compare", cfg);
    run.add_input("matrix_a", matrix_a);
    run.add_input("matrix_b", matrix_b);
    auto a = harness::matrix_from_csv(read_file(matrix_a));
    auto b = harness::matrix_from_csv(read_file(matrix_b));
    for (auto* m : {&a, &b})
        for (auto& c : m->cells) c.ood_flag = infer_ood_flag(c.split_id);
    const auto rep = harness::compare(a, b);
    write_file(run.path("delta.csv"), harness::delta_to_csv(rep));
    run.add_output("delta.csv");
    run.finish(seed);
    return {out, {{"delta", out + "/delta.csv"}}};
}

// End-to-end pipeline for one scenario: generate data, pretrain the base,
// fine-tune with SFT and with GRPO, evaluate both on the scenario grid and
// emit their delta. The reasoning ablation evaluates the RL model with
// reasoning on and off instead of comparing trainers.
inline CmdResult cmd_scenario(const KvConfig& cfg_in, const std::string& scenario,
                              const std::string& out, const Overrides& ov = {}) {
    KvConfig cfg = cfg_in;
    const uint64_t seed = detail::run_seed(cfg, ov, "run");
    RunDir run(out, "scenario " + scenario, cfg);
    // Validate the name before any heavy work.
    if (scenario != "ood-style" && scenario != "unseen-classes" && scenario != "modality" &&
        scenario != "reasoning-ablation")
        throw UsageError("unknown scenario: '" + scenario + "'");

    cfg.set("train", "scenario",
            scenario == "reasoning-ablation" ? "unseen-classes" : scenario);
    cfg.set("eval", "scenario", scenario);

    Overrides sub = ov;
    sub.seed = seed;

    auto gen = cmd_gen(cfg, out + "/data", sub);
    cfg.set("paths", "dataset", gen.artifacts.at("dataset"));
    cfg.set("paths", "vocab", gen.artifacts.at("vocab"));
    auto base = cmd_pretrain(cfg, out + "/base", sub);
    cfg.set("paths", "init_checkpoint", base.artifacts.at("checkpoint"));

    const auto plan = synth::scenario_split(synth::load_dataset(gen.artifacts.at("dataset")),
                                            cfg.get("train", "scenario", scenario));

    CmdResult result;
    result.out_dir = out;
    for (const auto& train_set : plan.train_sets) {
        KvConfig tcfg = cfg;
        tcfg.set("train", "set", train_set.name);
        const std::string suffix =
            plan.train_sets.size() > 1 ? "-" + train_set.name : std::string();

        if (scenario == "reasoning-ablation") {
            auto rl = cmd_train_rl(tcfg, out + "/rl" + suffix, sub);
            KvConfig ecfg = tcfg;
            ecfg.set("paths", "checkpoint", rl.artifacts.at("checkpoint"));
            ecfg.set("eval", "reasoning", "on,off");
            ecfg.set("eval", "model_id", "rl" + suffix);
            auto ev = cmd_eval(ecfg, out + "/eval-rl" + suffix, sub);
            result.artifacts["rl_matrix" + suffix] = ev.artifacts.at("matrix");
            continue;
        }

        auto sft_run = cmd_train_sft(tcfg, out + "/sft" + suffix, sub);
        auto rl_run = cmd_train_rl(tcfg, out + "/rl" + suffix, sub);

        KvConfig ecfg = tcfg;
        ecfg.set("eval", "model_id", "sft" + suffix);
        ecfg.set("paths", "checkpoint", sft_run.artifacts.at("checkpoint"));
        auto ev_sft = cmd_eval(ecfg, out + "/eval-sft" + suffix, sub);
        ecfg.set("eval", "model_id", "rl" + suffix);
        ecfg.set("paths", "checkpoint", rl_run.artifacts.at("checkpoint"));
        auto ev_rl = cmd_eval(ecfg, out + "/eval-rl" + suffix, sub);
        auto delta = cmd_compare(cfg, ev_sft.artifacts.at("matrix"), ev_rl.artifacts.at("matrix"),
                                 out + "/delta" + suffix, sub);
        result.artifacts["sft_matrix" + suffix] = ev_sft.artifacts.at("matrix");
        result.artifacts["rl_matrix" + suffix] = ev_rl.artifacts.at("matrix");
        result.artifacts["delta" + suffix] = delta.artifacts.at("delta");
    }
    run.finish(seed);
    return result;
}

}  // namespace doclab::cli

#endif  // DOCLAB_CLI_COMMANDS_HPP_
