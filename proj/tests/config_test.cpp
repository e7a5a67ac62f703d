#include <gtest/gtest.h>

#include <string>

#include "mvmae/config.hpp"
#include "mvmae/errors.hpp"
#include "test_util.hpp"

namespace mvmae {
namespace {

TEST(Config, DefaultsValidateAndDumpEveryKey) {
    const ExperimentConfig c;
    EXPECT_NO_THROW(c.validate());
    const std::string dump = c.dump();
    for (const auto& k : ExperimentConfig::keys()) {
        if (k == "backbone.preset") continue;
        EXPECT_NE(dump.find(k + " = "), std::string::npos) << k;
    }
}

TEST(Config, DumpParsesBackToSameHash) {
    ExperimentConfig c;
    c.train.lr = 3e-3;
    c.train.subset_size = 50;
    c.objective.rec.normalized_target = true;
    c.backbone.mask_ratio = 0.75;
    const ExperimentConfig back = parse_config(c.dump());
    EXPECT_EQ(back.dump(), c.dump());
    EXPECT_EQ(back.hash(), c.hash());
    EXPECT_EQ(back.train.subset_size, std::optional<std::size_t>(50));
}

TEST(Config, ParsesCommentsBlanksAndPresetFirst) {
    const auto c = parse_config(
        "# comment\n"
        "\n"
        "backbone.mask_ratio = 0.5   # trailing\n"
        "train.mode = linear_probe\n"
        "backbone.preset = vit-micro\n"
        "augment.enabled = false\n");
    EXPECT_EQ(c.backbone.mask_ratio, 0.5);
    EXPECT_EQ(c.train.mode, TrainMode::linear_probe);
    EXPECT_FALSE(c.train.augment.enabled);
}

TEST(Config, HashTracksEveryChange) {
    ExperimentConfig a, b;
    EXPECT_EQ(a.hash(), b.hash());
    b.train.seed = 1;
    EXPECT_NE(a.hash(), b.hash());
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
}

TEST(Config, UnknownKeyIsNamed) {
    try {
        parse_config("train.lr = 0.1\ntrain.learning_rate = 0.1\n");
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("train.learning_rate"), std::string::npos);
    }
}

TEST(Config, BadValuesAndSyntax) {
    EXPECT_THROW(parse_config("train.steps = -3\n"), ValidationError);
    EXPECT_THROW(parse_config("train.lr = fast\n"), ValidationError);
    EXPECT_THROW(parse_config("augment.enabled = maybe\n"), ValidationError);
    EXPECT_THROW(parse_config("train.mode = distill\n"), ValidationError);
    EXPECT_THROW(parse_config("backbone.mask_ratio = 1.0\n"), ValidationError);
    EXPECT_THROW(parse_config("train.lr = 0\n"), ValidationError);
    EXPECT_THROW(parse_config("no equals sign\n"), ParseError);
    EXPECT_THROW(parse_config("backbone.preset = vit-huge\n"), ValidationError);
}

TEST(Config, ModeNamesRoundTrip) {
    for (auto m : {TrainMode::pretrain_mvmae, TrainMode::pretrain_mvmae_v2t, TrainMode::supervised,
                   TrainMode::linear_probe, TrainMode::finetune}) {
        EXPECT_EQ(parse_mode(mode_name(m)), m);
    }
    EXPECT_THROW(parse_mode("probe"), UsageError);
    EXPECT_TRUE(is_pretrain(TrainMode::pretrain_mvmae_v2t));
    EXPECT_FALSE(is_pretrain(TrainMode::finetune));
}

TEST(Config, TextHeadOnlyForReportMode) {
    ExperimentConfig c;
    EXPECT_FALSE(c.model_config().text.has_value());
    c.train.mode = TrainMode::pretrain_mvmae_v2t;
    EXPECT_TRUE(c.model_config().text.has_value());
}

TEST(Config, LoadFromFile) {
    mvmae::testing::TempDir dir("cfg");
    mvmae::testing::write_file(dir / "a.cfg", "train.steps = 7\n");
    EXPECT_EQ(load_config(dir / "a.cfg").train.steps, 7u);
    EXPECT_THROW(load_config(dir / "missing.cfg"), IoError);
}

}  // namespace
}  // namespace mvmae
