// SPDX-License-Identifier: Apache-2.0
//
// doclab: a desk-scale laboratory contrasting supervised fine-tuning with
// rule-based reinforcement learning (GRPO over verifiable rewards) on a
// synthetic document-classification task.

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "doclab/cli/commands.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::string seed_text;
    std::string init_checkpoint;
    std::string reasoning;
    std::string prompt_classes;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "run configuration file (key = value sections)");
    cmd->add_option("--out", args.out_dir, "output directory for this run")->required();
    cmd->add_option("--seed", args.seed_text, "master seed (overrides the config)");
    cmd->add_option("--init-checkpoint", args.init_checkpoint,
                    "checkpoint to start from (overrides [paths] in the config)");
    cmd->add_option("--reasoning", args.reasoning, "reasoning mode for evaluation: on or off")
        ->check(CLI::IsMember({"on", "off", "on,off"}));
    cmd->add_option("--prompt-classes", args.prompt_classes,
                    "prompt class list for evaluation: all, train10 or heldout6")
        ->check(CLI::IsMember({"all", "train10", "heldout6"}));
}

doclab::cli::KvConfig load_config(const CommonArgs& args) {
    if (args.config_path.empty()) return {};
    return doclab::cli::KvConfig::load(args.config_path);
}

doclab::cli::Overrides overrides_of(const CommonArgs& args) {
    doclab::cli::Overrides ov;
    if (!args.seed_text.empty()) ov.seed = std::stoull(args.seed_text);
    if (!args.init_checkpoint.empty()) ov.init_checkpoint = args.init_checkpoint;
    if (!args.reasoning.empty()) ov.reasoning = args.reasoning;
    if (!args.prompt_classes.empty()) ov.prompt_classes = args.prompt_classes;
    return ov;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "doclab: SFT vs rule-based RL (GRPO) on synthetic document classification"};
    app.require_subcommand(1);

    CommonArgs gen_args, pre_args, sft_args, rl_args, score_args, eval_args, cmp_args, scn_args;
    std::string score_in, cmp_a, cmp_b, scenario_name;

    auto* gen = app.add_subcommand("gen", "generate the synthetic dataset and vocabulary");
    add_common(gen, gen_args);

    auto* pre =
        app.add_subcommand("pretrain", "pretrain the base model (the fine-tuning start point)");
    add_common(pre, pre_args);

    auto* sft = app.add_subcommand("train-sft", "supervised fine-tuning of adapters");
    add_common(sft, sft_args);

    auto* rl =
        app.add_subcommand("train-rl", "GRPO fine-tuning of adapters with verifiable rewards");
    add_common(rl, rl_args);

    auto* score = app.add_subcommand("score", "score response JSONL against the reward rubric");
    score->add_option("input", score_in, "JSONL of {response: [words], gold: label}")->required();
    add_common(score, score_args);

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint over the scenario grid");
    add_common(eval, eval_args);

    auto* cmp = app.add_subcommand("compare", "compare two evaluation matrices");
    cmp->add_option("matrix_a", cmp_a, "baseline matrix.csv")->required();
    cmp->add_option("matrix_b", cmp_b, "candidate matrix.csv")->required();
    add_common(cmp, cmp_args);

    auto* scn = app.add_subcommand(
        "scenario", "run one full experiment pipeline: gen, pretrain, train both, evaluate");
    scn->add_option("name", scenario_name,
                    "ood-style | unseen-classes | modality | reasoning-ablation")
        ->required();
    add_common(scn, scn_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            doclab::cli::cmd_gen(load_config(gen_args), gen_args.out_dir, overrides_of(gen_args));
        else if (pre->parsed())
            doclab::cli::cmd_pretrain(load_config(pre_args), pre_args.out_dir,
                                      overrides_of(pre_args));
        else if (sft->parsed())
            doclab::cli::cmd_train_sft(load_config(sft_args), sft_args.out_dir,
                                       overrides_of(sft_args));
        else if (rl->parsed())
            doclab::cli::cmd_train_rl(load_config(rl_args), rl_args.out_dir,
                                      overrides_of(rl_args));
        else if (score->parsed())
            doclab::cli::cmd_score(load_config(score_args), score_in, score_args.out_dir,
                                   overrides_of(score_args));
        else if (eval->parsed())
            doclab::cli::cmd_eval(load_config(eval_args), eval_args.out_dir,
                                  overrides_of(eval_args));
        else if (cmp->parsed())
            doclab::cli::cmd_compare(load_config(cmp_args), cmp_a, cmp_b, cmp_args.out_dir,
                                     overrides_of(cmp_args));
        else if (scn->parsed())
            doclab::cli::cmd_scenario(load_config(scn_args), scenario_name, scn_args.out_dir,
                                      overrides_of(scn_args));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
