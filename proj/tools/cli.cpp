#include "mvmae/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "mvmae/config.hpp"
#include "mvmae/data/labels.hpp"
#include "mvmae/data/manifest.hpp"
#include "mvmae/data/split.hpp"
#include "mvmae/data/synthetic.hpp"
#include "mvmae/errors.hpp"
#include "mvmae/eval/metrics.hpp"
#include "mvmae/text/vocabulary.hpp"
#include "mvmae/train/checkpoint.hpp"
#include "mvmae/train/trainer.hpp"

#ifndef MVMAE_VERSION
#define MVMAE_VERSION "unknown"
#endif

namespace mvmae {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string command;
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string checkpoint;
    std::string mode;
    std::optional<std::size_t> subset_size;
    std::string views = "all";
    std::string manifest;
    std::string mapping;
    std::string scores;
    std::size_t count = 0;
    std::optional<std::size_t> image_side;
    std::size_t datasets = 1;
    std::vector<std::string> argv;
};

ExperimentConfig resolve_config(const Options& o) {
    ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    if (o.seed) cfg.train.seed = *o.seed;
    if (!o.mode.empty()) cfg.train.mode = parse_mode(o.mode);
    if (o.subset_size) cfg.train.subset_size = *o.subset_size;
    cfg.validate();
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

// Written before any work starts.
void write_run_manifest(const Options& o, const std::optional<ExperimentConfig>& cfg) {
    fs::create_directories(o.out);
    nlohmann::ordered_json j;
    j["command"] = o.command;
    j["config"] = o.config.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(o.config);
    if (cfg) {
        char hash[17];
        std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(cfg->hash()));
        j["config_hash"] = hash;
        j["seed"] = cfg->train.seed;
    } else {
        j["seed"] = o.seed ? nlohmann::ordered_json(*o.seed) : nlohmann::ordered_json(nullptr);
    }
    j["out"] = o.out;
    j["version"] = MVMAE_VERSION;
    j["argv"] = o.argv;
    write_text(fs::path(o.out) / "run.json", j.dump(2) + "\n");
}

std::string run_dir_name(const ExperimentConfig& cfg) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "run_%016llx_s%llu", static_cast<unsigned long long>(cfg.hash()),
                  static_cast<unsigned long long>(cfg.train.seed));
    return buf;
}

struct Splits {
    std::vector<data::Study> train, val, test;
};

// A prepared directory carries splits/ next to its manifest; otherwise the
// configured split is applied on the fly.
Splits load_splits(const Options& o, const ExperimentConfig& cfg) {
    if (o.manifest.empty()) throw UsageError(o.command + " needs --manifest");
    std::optional<data::LabelSpace> mapping;
    if (!o.mapping.empty()) mapping = data::LabelSpace::load_csv(o.mapping);
    data::ManifestOptions mo;
    mo.image_side = cfg.backbone.image_side;
    mo.mapping = mapping ? &*mapping : nullptr;
    const auto studies = data::load_manifest(o.manifest, mo);
    if (studies.empty()) throw ValidationError(o.manifest + ": no studies");
    const fs::path split_dir = fs::path(o.manifest).parent_path() / "splits";
    Splits s;
    if (fs::exists(split_dir / "train.txt")) {
        std::map<std::string, const data::Study*> by_id;
        for (const auto& st : studies) by_id[st.study_id] = &st;
        auto take = [&](const std::string& name, std::vector<data::Study>& dst) {
            const fs::path p = split_dir / (name + ".txt");
            if (!fs::exists(p)) return;
            for (const auto& id : data::read_split_file(p)) {
                auto it = by_id.find(id);
                if (it == by_id.end()) throw ValidationError(p.string() + ": unknown study id '" + id + "'");
                dst.push_back(*it->second);
            }
        };
        take("train", s.train);
        take("val", s.val);
        take("test", s.test);
    } else {
        const auto idx = data::split_studies(studies, cfg.split);
        s.train = data::select(studies, idx.train);
        s.val = data::select(studies, idx.val);
        s.test = data::select(studies, idx.test);
    }
    return s;
}

int cmd_synth(const Options& o) {
    if (o.count == 0) throw UsageError("synth needs --count > 0");
    const ExperimentConfig cfg = resolve_config(o);
    write_run_manifest(o, cfg);
    data::SyntheticConfig sc;
    sc.image_side = o.image_side.value_or(cfg.backbone.image_side);
    sc.datasets = o.datasets;
    const auto studies = data::generate_synthetic_studies(o.count, sc, o.seed.value_or(0));
    data::write_dataset(o.out, studies);
    std::cout << "wrote " << studies.size() << " studies to " << (fs::path(o.out) / "manifest.tsv").string() << "\n";
    return 0;
}

int cmd_prepare(const Options& o) {
    if (o.manifest.empty()) throw UsageError("prepare needs --manifest");
    const ExperimentConfig cfg = resolve_config(o);
    write_run_manifest(o, cfg);
    std::optional<data::LabelSpace> mapping;
    if (!o.mapping.empty()) mapping = data::LabelSpace::load_csv(o.mapping);
    data::ManifestOptions mo;
    mo.image_side = cfg.backbone.image_side;
    mo.mapping = mapping ? &*mapping : nullptr;
    const auto studies = data::load_manifest(o.manifest, mo);
    if (studies.empty()) throw ValidationError(o.manifest + ": no studies");
    data::write_dataset(o.out, studies);
    const auto idx = data::split_studies(studies, cfg.split);
    const fs::path dir = fs::path(o.out) / "splits";
    fs::create_directories(dir);
    data::write_split_file(dir / "train.txt", studies, idx.train);
    data::write_split_file(dir / "val.txt", studies, idx.val);
    data::write_split_file(dir / "test.txt", studies, idx.test);
    std::cout << "prepared " << studies.size() << " studies: " << idx.train.size() << " train, " << idx.val.size()
              << " val, " << idx.test.size() << " test\n";
    return 0;
}

int cmd_pretrain(const Options& o) {
    ExperimentConfig cfg = resolve_config(o);
    if (o.mode.empty() && !is_pretrain(cfg.train.mode)) cfg.train.mode = TrainMode::pretrain_mvmae;
    if (!is_pretrain(cfg.train.mode)) {
        throw UsageError("pretrain takes pretrain_mvmae or pretrain_mvmae_v2t, not " +
                         std::string(mode_name(cfg.train.mode)));
    }
    write_run_manifest(o, cfg);
    const Splits s = load_splits(o, cfg);
    if (s.train.empty()) throw ValidationError("no training studies");
    std::optional<text::Vocabulary> vocab;
    if (cfg.train.mode == TrainMode::pretrain_mvmae_v2t) {
        std::vector<std::string> corpus;
        for (const auto& st : s.train) {
            if (st.report) corpus.push_back(*st.report);
        }
        vocab = text::Vocabulary::build(corpus, cfg.vocab_min_count);
        vocab->save(fs::path(o.out) / "vocab.txt");
    }
    const auto studies = train::pretrain_view(s.train, vocab ? &*vocab : nullptr, cfg.text.max_len);
    train::PretrainOptions opt;
    opt.run_dir = fs::path(o.out) / run_dir_name(cfg);
    std::optional<train::Checkpoint> resume;
    if (!o.checkpoint.empty()) {
        resume = train::load_checkpoint(o.checkpoint);
        opt.resume = &*resume;
    }
    const std::size_t every = std::max<std::size_t>(1, cfg.train.steps / 10);
    opt.on_step = [&](std::size_t step, const objectives::LossBundle& b) {
        if ((step + 1) % every == 0) std::cout << objectives::loss_json_line(step, b) << "\n";
    };
    const auto r = train::pretrain(studies, cfg, vocab ? &*vocab : nullptr, opt);
    train::save_checkpoint(fs::path(o.out) / "encoder.ck", r.checkpoint);
    std::cout << "encoder checkpoint: " << (fs::path(o.out) / "encoder.ck").string() << "\n";
    return 0;
}

int cmd_train(const Options& o) {
    ExperimentConfig cfg = resolve_config(o);
    if (o.mode.empty() && is_pretrain(cfg.train.mode)) cfg.train.mode = TrainMode::linear_probe;
    if (is_pretrain(cfg.train.mode)) {
        throw UsageError("train takes supervised, linear_probe or finetune, not " +
                         std::string(mode_name(cfg.train.mode)));
    }
    if (cfg.train.mode != TrainMode::supervised && o.checkpoint.empty()) {
        throw UsageError("mode " + std::string(mode_name(cfg.train.mode)) + " needs --checkpoint");
    }
    write_run_manifest(o, cfg);
    const Splits s = load_splits(o, cfg);
    std::optional<train::Checkpoint> encoder;
    if (!o.checkpoint.empty()) encoder = train::load_checkpoint(o.checkpoint);
    train::ClassifierOptions opt;
    opt.run_dir = fs::path(o.out) / run_dir_name(cfg);
    fs::create_directories(opt.run_dir);
    std::ofstream log(opt.run_dir / "loss.jsonl");
    opt.on_step = [&](std::size_t step, double loss) {
        nlohmann::ordered_json j;
        j["step"] = step;
        j["bce"] = loss;
        log << j.dump() << "\n";
    };
    const auto r = train::train_classifier(s.train, s.val, cfg, encoder ? &*encoder : nullptr, opt);
    train::save_checkpoint(fs::path(o.out) / "classifier.ck", r.checkpoint);
    std::cout << "selected step " << r.selected_step;
    if (r.selected_val_auroc) std::cout << ", validation macro AUROC " << *r.selected_val_auroc;
    std::cout << "\nclassifier checkpoint: " << (fs::path(o.out) / "classifier.ck").string() << "\n";
    return 0;
}

eval::ViewSelection parse_views(const std::string& v) {
    if (v == "1") return eval::ViewSelection::first;
    if (v == "2") return eval::ViewSelection::first_two;
    if (v == "all") return eval::ViewSelection::all;
    throw UsageError("--views takes 1, 2 or all, not '" + v + "'");
}

int cmd_eval(const Options& o) {
    const eval::ViewSelection sel = parse_views(o.views);
    if (o.scores.empty() == o.checkpoint.empty()) throw UsageError("eval takes exactly one of --scores or --checkpoint");
    const ExperimentConfig cfg = resolve_config(o);
    write_run_manifest(o, cfg);
    std::vector<eval::StudyScores> scores;
    if (!o.scores.empty()) {
        scores = eval::read_score_dump(o.scores);
    } else {
        const auto ck = train::load_checkpoint(o.checkpoint);
        ExperimentConfig data_cfg = cfg;
        data_cfg.backbone = train::checkpoint_config(ck).backbone;
        const Splits s = load_splits(o, data_cfg);
        std::vector<data::Study> labeled;
        for (const auto& st : s.test) {
            if (st.labels) labeled.push_back(st);
        }
        if (labeled.empty()) throw ValidationError("no labeled test studies");
        scores = train::predict(ck, labeled, cfg.train.threads);
        eval::write_score_dump(fs::path(o.out) / "scores.csv", scores);
    }
    if (scores.empty()) throw ValidationError("no scored studies");
    for (const auto& st : scores) {
        for (const auto& v : st.views) {
            for (double p : v) {
                if (!(p >= 0.0 && p <= 1.0)) throw NumericalError("score outside [0, 1] for study " + st.study_id);
            }
        }
    }
    auto reports = eval::compute_reports(scores, sel, cfg.eval.threshold, cfg.eval.prefer_frontal);
    for (auto& r : reports) r.meta["views"] = o.views;
    write_text(fs::path(o.out) / "metrics.json", eval::report_json(reports));
    write_text(fs::path(o.out) / "metrics.csv", eval::report_csv(reports));
    for (const auto& r : reports) {
        std::cout << r.dataset_tag << ": " << r.n_studies << " studies, macro AUROC ";
        if (r.macro_auroc) {
            std::cout << *r.macro_auroc;
        } else {
            std::cout << "undefined";
        }
        std::cout << ", Brier " << r.macro_brier << "\n";
    }
    return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
    Options o;
    for (int i = 0; i < argc; ++i) o.argv.emplace_back(argv[i]);
    CLI::App app{"Multi-view masked autoencoder pretraining and evaluation", "mvmae"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--config", o.config, "Experiment config file (key = value lines)");
    app.add_option("--seed", o.seed, "Seed (overrides train.seed; generation seed for synth)");

    auto with_out = [&](CLI::App* sub) { sub->add_option("--out", o.out, "Output directory")->required(); };
    auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-view dataset");
    with_out(synth);
    synth->add_option("--count", o.count, "Number of studies")->required();
    synth->add_option("--image-side", o.image_side, "Image side in pixels (default backbone.image_side)");
    synth->add_option("--datasets", o.datasets, "Number of dataset tags")->check(CLI::PositiveNumber);

    auto* prepare = app.add_subcommand("prepare", "Preprocess a manifest and write splits");
    with_out(prepare);
    prepare->add_option("--manifest", o.manifest, "Input manifest (TSV)")->required();
    prepare->add_option("--mapping", o.mapping, "Source label to category CSV");

    auto* pretrain = app.add_subcommand("pretrain", "Self-supervised pretraining");
    with_out(pretrain);
    pretrain->add_option("--manifest", o.manifest, "Dataset manifest")->required();
    pretrain->add_option("--mode", o.mode, "pretrain_mvmae or pretrain_mvmae_v2t");
    pretrain->add_option("--checkpoint", o.checkpoint, "Resume from this checkpoint");
    pretrain->add_option("--mapping", o.mapping, "Source label to category CSV");

    auto* train = app.add_subcommand("train", "Train a 14-label classifier");
    with_out(train);
    train->add_option("--manifest", o.manifest, "Dataset manifest")->required();
    train->add_option("--mode", o.mode, "supervised, linear_probe or finetune");
    train->add_option("--checkpoint", o.checkpoint, "Encoder checkpoint");
    train->add_option("--subset-size", o.subset_size, "Labeled studies to train on");
    train->add_option("--mapping", o.mapping, "Source label to category CSV");

    auto* evaluate = app.add_subcommand("eval", "Score a classifier or a score dump");
    with_out(evaluate);
    evaluate->add_option("--checkpoint", o.checkpoint, "Classifier checkpoint");
    evaluate->add_option("--manifest", o.manifest, "Dataset manifest (with --checkpoint)");
    evaluate->add_option("--scores", o.scores, "Score dump CSV");
    evaluate->add_option("--views", o.views, "1, 2 or all");
    evaluate->add_option("--mapping", o.mapping, "Source label to category CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    o.command = app.get_subcommands().front()->get_name();
    try {
        if (o.command == "synth") return cmd_synth(o);
        if (o.command == "prepare") return cmd_prepare(o);
        if (o.command == "pretrain") return cmd_pretrain(o);
        if (o.command == "train") return cmd_train(o);
        return cmd_eval(o);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace mvmae
