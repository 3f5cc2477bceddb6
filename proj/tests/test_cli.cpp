// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "doclab/cli/commands.hpp"

using namespace doclab;
namespace fs = std::filesystem;

namespace {

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / name) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    std::string path(const std::string& p) const { return (dir / p).string(); }
};

// Tiny configuration: everything runs in seconds.
cli::KvConfig tiny_config() {
    return cli::KvConfig::parse(R"(
[run]
seed = 3

[gen]
train_per_class = 2
test_per_class = 2

[model]
context_len = 128
d_model = 16
n_layers = 1
n_heads = 2
ff_mult = 2
lora_rank = 2
lora_alpha = 4

[pretrain]
examples = 24
epochs = 1
batch_size = 8

[sft]
epochs = 1
batch_size = 8

[grpo]
steps = 2
prompts_per_step = 1
group_size = 2
max_new = 8

[eval]
max_new = 8
variants = train10,heldout6
)");
}

}  // namespace

TEST_CASE("config parse, defaults, serialization, errors") {
    auto cfg = cli::KvConfig::parse("[a]\nx = 1\ny = hello world  # comment\n\nz=2.5\n");
    CHECK(cfg.get_int("a", "x", 0) == 1);
    CHECK(cfg.get("a", "y", "") == "hello world");
    CHECK(cfg.get_double("a", "z", 0) == 2.5);
    CHECK(cfg.get_int("a", "missing", 7) == 7);
    CHECK_THROWS_AS(cfg.require("a", "missing"), doclab::UsageError);
    CHECK_THROWS_AS(cli::KvConfig::parse("no equals sign here"), doclab::UsageError);
    CHECK_THROWS_AS(cli::KvConfig::parse("[unterminated"), doclab::UsageError);

    // Deterministic round trip.
    auto text = cfg.serialize();
    CHECK(cli::KvConfig::parse(text).serialize() == text);
}

TEST_CASE("cmd_gen writes dataset, vocab and manifest; content is seed-determined") {
    Scratch scratch("doclab_cli_gen");
    auto cfg = tiny_config();
    auto r1 = cli::cmd_gen(cfg, scratch.path("g1"));
    CHECK(fs::exists(r1.artifacts.at("dataset")));
    CHECK(fs::exists(r1.artifacts.at("vocab")));
    CHECK(fs::exists(scratch.path("g1/manifest.json")));
    CHECK(fs::exists(scratch.path("g1/run_config.ini")));
    CHECK_FALSE(fs::exists(scratch.path("g1/FAILED")));
    CHECK_FALSE(fs::exists(scratch.path("g1/lock")));

    auto r2 = cli::cmd_gen(cfg, scratch.path("g2"));
    CHECK(read_file(r1.artifacts.at("dataset")) == read_file(r2.artifacts.at("dataset")));

    cli::Overrides ov;
    ov.seed = 99;
    auto r3 = cli::cmd_gen(cfg, scratch.path("g3"), ov);
    CHECK(read_file(r1.artifacts.at("dataset")) != read_file(r3.artifacts.at("dataset")));
}

TEST_CASE("score command reproduces the golden rubric fixture byte for byte") {
    Scratch scratch("doclab_cli_score");
    auto cfg = tiny_config();
    const std::string fixture = std::string(DOCLAB_TEST_DATA_DIR) + "/score_fixture.jsonl";
    const std::string golden = std::string(DOCLAB_TEST_DATA_DIR) + "/score_golden.jsonl";
    auto r = cli::cmd_score(cfg, fixture, scratch.path("score"));
    CHECK(read_file(r.artifacts.at("scores")) == read_file(golden));
}

TEST_CASE("full pipeline: gen, pretrain, sft, rl, eval, compare") {
    Scratch scratch("doclab_cli_pipe");
    auto cfg = tiny_config();
    auto gen = cli::cmd_gen(cfg, scratch.path("data"));
    cfg.set("paths", "dataset", gen.artifacts.at("dataset"));
    cfg.set("paths", "vocab", gen.artifacts.at("vocab"));

    auto base = cli::cmd_pretrain(cfg, scratch.path("base"));
    CHECK(fs::exists(base.artifacts.at("checkpoint")));
    CHECK(fs::exists(scratch.path("base/pretrain_log.csv")));

    cfg.set("paths", "init_checkpoint", base.artifacts.at("checkpoint"));
    auto sft_run = cli::cmd_train_sft(cfg, scratch.path("sft"));
    CHECK(fs::exists(sft_run.artifacts.at("checkpoint")));
    CHECK(fs::exists(scratch.path("sft/adapters.ckpt")));
    CHECK(fs::exists(scratch.path("sft/train_log.csv")));

    auto rl_run = cli::cmd_train_rl(cfg, scratch.path("rl"));
    CHECK(fs::exists(rl_run.artifacts.at("checkpoint")));

    // Adapter-only checkpoints resolve against the recorded base.
    cfg.set("paths", "base_checkpoint", base.artifacts.at("checkpoint"));
    auto stacked =
        policy::load_adapter_checkpoint<float>(scratch.path("sft/adapters.ckpt"),
                                               base.artifacts.at("checkpoint"));
    CHECK(stacked.store.has_adapters());

    cfg.set("paths", "checkpoint", sft_run.artifacts.at("checkpoint"));
    auto ev_sft = cli::cmd_eval(cfg, scratch.path("eval-sft"));
    CHECK(fs::exists(ev_sft.artifacts.at("matrix")));
    CHECK(fs::exists(scratch.path("eval-sft/predictions.jsonl")));
    CHECK(fs::exists(scratch.path("eval-sft/report.md")));

    cfg.set("paths", "checkpoint", rl_run.artifacts.at("checkpoint"));
    auto ev_rl = cli::cmd_eval(cfg, scratch.path("eval-rl"));

    auto delta = cli::cmd_compare(cfg, ev_sft.artifacts.at("matrix"),
                                  ev_rl.artifacts.at("matrix"), scratch.path("delta"));
    CHECK(fs::exists(delta.artifacts.at("delta")));

    // --reasoning off flows into the evaluation grid.
    cli::Overrides ov;
    ov.reasoning = "off";
    auto ev_off = cli::cmd_eval(cfg, scratch.path("eval-off"), ov);
    auto matrix = harness::matrix_from_csv(read_file(ev_off.artifacts.at("matrix")));
    for (const auto& c : matrix.cells) CHECK(c.reasoning_mode == "off");

    // train-rl with steps = 0: the checkpoint is the initialization (base
    // weights untouched, adapter B still zero).
    auto cfg0 = cfg;
    cfg0.set("grpo", "steps", "0");
    auto rl0 = cli::cmd_train_rl(cfg0, scratch.path("rl0"));
    auto init = policy::load_checkpoint<float>(base.artifacts.at("checkpoint"));
    auto after = policy::load_checkpoint<float>(rl0.artifacts.at("checkpoint"));
    for (const auto& name : init.store.names())
        CHECK(after.store.weight(name)->data == init.store.weight(name)->data);
    for (const auto& name : after.store.names()) {
        const auto& e = after.store.entry(name);
        if (!e.adapter) continue;
        for (float v : e.adapter->B->data) CHECK(v == 0.f);
    }
}

TEST_CASE("run directory is locked against a second writer") {
    Scratch scratch("doclab_cli_lock");
    auto cfg = tiny_config();
    cli::RunDir run(scratch.path("r"), "demo", cfg);
    CHECK_THROWS_AS(cli::RunDir(scratch.path("r"), "demo", cfg), doclab::UsageError);
}

TEST_CASE("failed runs leave a FAILED marker") {
    Scratch scratch("doclab_cli_fail");
    auto cfg = tiny_config();  // no [paths]: pretrain must fail
    CHECK_THROWS_AS(cli::cmd_pretrain(cfg, scratch.path("r")), doclab::UsageError);
    CHECK(fs::exists(scratch.path("r/FAILED")));
    CHECK_FALSE(fs::exists(scratch.path("r/lock")));
}

TEST_CASE("unknown scenario is rejected before any work") {
    Scratch scratch("doclab_cli_scn");
    auto cfg = tiny_config();
    CHECK_THROWS_AS(cli::cmd_scenario(cfg, "bogus", scratch.path("s")), doclab::UsageError);
}

TEST_CASE("reruns from the manifest reproduce metric files byte-identically") {
    Scratch scratch("doclab_cli_rerun");
    auto cfg = tiny_config();
    auto gen = cli::cmd_gen(cfg, scratch.path("data"));
    cfg.set("paths", "dataset", gen.artifacts.at("dataset"));
    cfg.set("paths", "vocab", gen.artifacts.at("vocab"));
    auto base = cli::cmd_pretrain(cfg, scratch.path("base"));
    cfg.set("paths", "init_checkpoint", base.artifacts.at("checkpoint"));
    auto sft1 = cli::cmd_train_sft(cfg, scratch.path("sft1"));

    // Reconstruct the run configuration from the manifest alone.
    auto manifest = nlohmann::json::parse(read_file(scratch.path("sft1/manifest.json")));
    auto cfg2 = cli::KvConfig::parse(manifest.at("config_text").get<std::string>());
    cli::Overrides ov;
    ov.seed = manifest.at("seed").get<uint64_t>();
    auto sft2 = cli::cmd_train_sft(cfg2, scratch.path("sft2"), ov);

    CHECK(read_file(scratch.path("sft1/train_log.csv")) ==
          read_file(scratch.path("sft2/train_log.csv")));
    CHECK(read_file(scratch.path("sft1/model.ckpt")) ==
          read_file(scratch.path("sft2/model.ckpt")));
}
