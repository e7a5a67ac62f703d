// Acceptance checks AC1-AC11. Prints one PASS/FAIL line per criterion;
// progress goes to stderr. Pass criterion ids (e.g. "AC3 AC7") to run a
// subset. Exit status is nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mvmae/autodiff/gradcheck.hpp"
#include "mvmae/autodiff/ops.hpp"
#include "mvmae/cli.hpp"
#include "mvmae/config.hpp"
#include "mvmae/data/synthetic.hpp"
#include "mvmae/eval/experiments.hpp"
#include "mvmae/eval/metrics.hpp"
#include "mvmae/model/mvmae.hpp"
#include "mvmae/objectives/losses.hpp"
#include "mvmae/text/decoder.hpp"
#include "mvmae/text/vocabulary.hpp"
#include "mvmae/train/checkpoint.hpp"
#include "mvmae/train/trainer.hpp"
#include "oracles.hpp"
#include "primitive_cases.hpp"
#include "test_util.hpp"

using namespace mvmae;
using ad::Var;
using model::MaskSpec;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Collects the first failure and a short note for the result line.
struct Check {
    bool ok = true;
    std::string failure;
    std::vector<std::string> notes;

    void expect(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            failure = what;
        }
    }
    void note(const std::string& s) { notes.push_back(s); }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

Tensor random_tensor(Rng& rng, Shape shape) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.normal();
    return t;
}

oracle::Matrix to_matrix(const Tensor& t) {
    oracle::Matrix m(t.shape[0], std::vector<double>(t.shape[1]));
    for (std::size_t r = 0; r < t.shape[0]; ++r) {
        for (std::size_t c = 0; c < t.shape[1]; ++c) m[r][c] = t.at(r, c);
    }
    return m;
}

MaskSpec random_mask(Rng& rng, std::size_t tokens) {
    const std::size_t m = 1 + rng.below(tokens - 1);
    return model::sample_mask(tokens, (static_cast<double>(m) + 0.5) / static_cast<double>(tokens), rng);
}

MaskSpec fixed_mask(std::size_t total, double alpha, std::vector<std::size_t> visible) {
    MaskSpec m;
    m.alpha = alpha;
    m.total = total;
    m.visible = std::move(visible);
    for (std::size_t t = 0; t < total; ++t) {
        if (!std::binary_search(m.visible.begin(), m.visible.end(), t)) m.masked.push_back(t);
    }
    return m;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

data::Image random_image(Rng& rng, std::size_t side) {
    data::Image img(side, side);
    for (double& v : img.pixels) v = rng.uniform();
    return img;
}

// ---------------------------------------------------------------- AC1

Check ac1() {
    Check c;
    const auto t0 = Clock::now();
    const auto cases = ad::primitive_cases(2024);
    double worst = 0.0;
    for (const auto& k : cases) {
        const auto r = ad::grad_check(k.f, k.point, {.epsilon = 1e-5, .tolerance = 1e-3});
        worst = std::max(worst, r.max_rel_error);
        c.expect(r.passed, k.name + " rel error " + fmt("%.3g", r.max_rel_error));
    }
    c.note(std::to_string(cases.size()) + " primitive cases, worst " + fmt("%.2g", worst));

    // Full report-supervised loss on vit-micro: two views, an 8-token report.
    model::ModelConfig cfg;
    const std::vector<std::string> corpus{"heart size normal lungs clear no pleural effusion"};
    const auto vocab = text::Vocabulary::build(corpus);
    cfg.text = text::TextDecoderConfig{.vocab_size = vocab.size()};
    model::ParameterStore store;
    Rng init(1);
    model::init_model(store, cfg, init);
    const auto report = text::tokenize(corpus[0], vocab, 8);
    c.expect(report.size() == 8, "report has " + std::to_string(report.size()) + " tokens");
    Rng rng(2);
    const std::vector<Tensor> patches{model::patchify(random_image(rng, 32), 8),
                                      model::patchify(random_image(rng, 32), 8)};
    const std::vector<data::ProjectionFamily> fams{data::ProjectionFamily::frontal, data::ProjectionFamily::lateral};
    const std::optional<std::vector<std::size_t>> rep = report;
    std::vector<Tensor> point;
    for (const auto& p : store.params()) point.push_back(p.value);
    auto f = [&](std::span<const Var> leaves) {
        model::Binding p(store, std::vector<Var>(leaves.begin(), leaves.end()));
        Rng mask_rng(3);
        const auto t = model::study_forward(p, cfg, patches, fams, rep, mask_rng);
        return ad::add(ad::add(t.rec, t.align), t.ce);
    };
    const auto r = ad::grad_check(f, point, {.epsilon = 1e-5, .tolerance = 1e-3, .max_probes_per_input = 16});
    c.expect(r.passed, "full loss rel error " + fmt("%.3g", r.max_rel_error) + " at input " +
                           std::string(store.params()[r.worst_input].name));
    c.note("full loss " + std::to_string(r.probes) + " probes, worst " + fmt("%.2g", r.max_rel_error));
    const double secs = seconds_since(t0);
    c.expect(secs < 60.0, "took " + fmt("%.1f", secs) + " s");
    return c;
}

// ---------------------------------------------------------------- AC2

Check ac2() {
    Check c;
    Rng rng(7);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.below(3), t = 2 + rng.below(4), p = 1 + rng.below(4);
        const MaskSpec mask = random_mask(rng, t);
        std::vector<Tensor> x;
        std::vector<Var> rec;
        std::vector<oracle::Matrix> xo, ro;
        for (std::size_t v = 0; v < n; ++v) {
            x.push_back(random_tensor(rng, {t, p}));
            const Tensor r = random_tensor(rng, {t, p});
            rec.push_back(Var::constant(r));
            xo.push_back(to_matrix(x.back()));
            ro.push_back(to_matrix(r));
        }
        const double e = rel_err(objectives::loss_rec(x, rec, mask).item(),
                                 oracle::loss_rec(xo, ro, mask.masked, mask.alpha));
        worst = std::max(worst, e);
        c.expect(e <= 1e-10, "loss_rec trial " + std::to_string(trial));
    }
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.below(3), t = 2 + rng.below(4), d = 1 + rng.below(4);
        const MaskSpec mask = random_mask(rng, t);
        const bool cls = rng.bernoulli(0.5);
        std::vector<Var> z;
        std::vector<oracle::Matrix> zo;
        for (std::size_t v = 0; v < n; ++v) {
            const Tensor e = random_tensor(rng, {1 + mask.visible.size(), d});
            z.push_back(Var::constant(e));
            zo.push_back(to_matrix(e));
        }
        const double e = rel_err(objectives::loss_align(z, mask, cls).item(), oracle::loss_align(zo, mask.alpha, cls));
        worst = std::max(worst, e);
        c.expect(e <= 1e-10, "loss_align trial " + std::to_string(trial));
    }
    // loss_ce: decoder logits from the library, cross-entropy from the oracle.
    text::TextDecoderConfig tc{.layers = 1, .heads = 2, .dim = 8, .max_len = 8, .vocab_size = 11};
    model::ParameterStore store;
    Rng init(8);
    text::init_text_decoder(store, tc, 6, init, 0.5);
    model::Binding p = model::Binding::frozen(store);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t views = 1 + rng.below(3), len = 1 + rng.below(tc.max_len);
        std::vector<std::size_t> report(len);
        for (auto& tok : report) tok = rng.below(tc.vocab_size);
        std::vector<Var> mem;
        double want = 0.0;
        for (std::size_t v = 0; v < views; ++v) {
            mem.push_back(Var::constant(random_tensor(rng, {1 + rng.below(4), 6})));
            const Tensor logits = text::decode_logits(p, tc, text::shifted_prefix(report), mem.back()).tensor();
            want += oracle::sequence_ce(to_matrix(logits), report);
        }
        want /= static_cast<double>(views);
        const double e = rel_err(text::loss_ce(p, tc, mem, report).item(), want);
        worst = std::max(worst, e);
        c.expect(e <= 1e-10, "loss_ce trial " + std::to_string(trial));
    }
    c.note("300 random instances, worst rel " + fmt("%.2g", worst));

    // Hand cases.
    const MaskSpec m1 = fixed_mask(2, 0.5, {0});
    Tensor xhat({2, 4}, 1.0);
    for (std::size_t k = 0; k < 4; ++k) xhat.at(1, k) = 1.5;
    const std::vector<Tensor> x1{Tensor({2, 4}, 1.0)};
    c.expect(objectives::loss_rec(x1, std::vector<Var>{Var::constant(xhat)}, m1).item() == 2.0, "loss_rec hand case");
    const std::vector<Var> z{Var::constant(Tensor({2, 2}, {9.0, 9.0, 0.0, 0.0})),
                             Var::constant(Tensor({2, 2}, {1.0, 1.0, 2.0, 2.0}))};
    c.expect(objectives::loss_align(z, m1, false).item() == 8.0, "L_align = 8 hand case");
    const Var uniform = Var::constant(Tensor({3, 10}, 0.25));
    c.expect(std::abs(text::sequence_ce(uniform, std::vector<std::size_t>{1, 5, 9}).item() - std::log(10.0)) <= 1e-14,
             "ce = ln 10");
    return c;
}

// ---------------------------------------------------------------- AC3

Check ac3() {
    Check c;
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t t = 2 + rng.below(8), p = 1 + rng.below(5), n = 1 + rng.below(3);
        const MaskSpec mask = random_mask(rng, t);
        std::vector<Tensor> x, r;
        for (std::size_t v = 0; v < n; ++v) {
            x.push_back(random_tensor(rng, {t, p}));
            r.push_back(random_tensor(rng, {t, p}));
        }
        auto value = [&] {
            std::vector<Var> rec;
            for (const auto& k : r) rec.push_back(Var::constant(k));
            return objectives::loss_rec(x, rec, mask).item();
        };
        const double base = value();
        for (auto& k : r) {
            for (std::size_t vis : mask.visible) {
                for (std::size_t q = 0; q < p; ++q) k.at(vis, q) += rng.normal(0.0, 100.0);
            }
        }
        c.expect(value() - base == 0.0, "trial " + std::to_string(trial) + " changed by " + fmt("%g", value() - base));
    }
    c.note("100 trials, change exactly 0");
    return c;
}

// ---------------------------------------------------------------- AC4

Check ac4() {
    Check c;
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const MaskSpec mask = random_mask(rng, 6);
        const Tensor e = random_tensor(rng, {1 + mask.visible.size(), 5});
        const std::vector<Var> same{Var::constant(e), Var::constant(e), Var::constant(e)};
        c.expect(objectives::loss_align(same, mask).item() == 0.0, "identical encodings");
        const std::vector<Var> one{Var::constant(e)};
        c.expect(objectives::loss_align(one, mask).item() == 0.0, "single view");

        const Tensor d = random_tensor(rng, e.shape);
        auto at_scale = [&](double k) {
            Tensor moved = e;
            for (std::size_t i = 0; i < moved.data.size(); ++i) moved.data[i] += k * d.data[i];
            const std::vector<Var> z{Var::constant(e), Var::constant(moved)};
            return objectives::loss_align(z, mask).item();
        };
        const double base = at_scale(1.0);
        for (double k : {2.0, 10.0}) {
            c.expect(rel_err(at_scale(k), k * k * base) <= 1e-9, "scaling by " + fmt("%g", k));
        }
    }
    c.note("zero cases exact; c in {2, 10} scale by c^2 within 1e-9");
    return c;
}

// ---------------------------------------------------------------- AC5

Check ac5() {
    Check c;
    const objectives::LossWeights w{.beta_target = 0.8, .anneal_steps = 120};
    c.expect(objectives::beta_at(w, 0) == 0.0, "beta_at(0)");
    c.expect(objectives::beta_at(w, 120) == 0.8, "beta_at(anneal_steps)");
    c.expect(std::abs(objectives::beta_at(w, 60) - 0.4) <= 1e-12, "midpoint");
    c.expect(std::abs(objectives::beta_at(w, 30) - 0.2) <= 1e-12, "quarter point");

    data::SyntheticConfig sc;
    const auto raw = data::generate_synthetic_studies(32, sc, 5);
    const auto studies = train::pretrain_view(raw, nullptr, 0);
    ExperimentConfig zero;
    zero.train.steps = 30;
    zero.train.batch_size = 8;
    zero.train.augment.enabled = false;
    zero.train.beta_target = 0.0;
    ExperimentConfig off = zero;
    off.train.beta_target = 1.0;
    off.objective.align_enabled = false;
    const auto a = train::pretrain(studies, zero).checkpoint;
    const auto b = train::pretrain(studies, off).checkpoint;
    std::size_t differing = 0;
    for (std::size_t i = 0; i < a.params.size(); ++i) {
        const auto& x = a.params.params()[i].value.data;
        const auto& y = b.params.params()[i].value.data;
        if (std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) != 0) ++differing;
    }
    c.expect(differing == 0, std::to_string(differing) + " parameter tensors differ");
    c.note("beta 0 vs alignment removed: " + std::to_string(a.params.size()) + " tensors bit-identical after 30 steps");
    return c;
}

// ---------------------------------------------------------------- AC6

Check ac6() {
    Check c;
    text::TextDecoderConfig tc{.layers = 2, .heads = 2, .dim = 16, .max_len = 12, .vocab_size = 20};
    model::ParameterStore store;
    Rng init(4);
    text::init_text_decoder(store, tc, 24, init, 0.5);
    model::Binding p = model::Binding::frozen(store);
    Rng rng(5);
    const Var memory = Var::constant(random_tensor(rng, {6, 24}));
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t len = 2 + rng.below(tc.max_len - 1);
        std::vector<std::size_t> prefix(len);
        for (auto& t : prefix) t = rng.below(tc.vocab_size);
        const std::size_t k = rng.below(len - 1);
        auto mutated = prefix;
        for (std::size_t j = k + 1; j < len; ++j) mutated[j] = (mutated[j] + 1 + rng.below(tc.vocab_size - 1)) % tc.vocab_size;
        const Tensor a = text::decode_logits(p, tc, prefix, memory).tensor();
        const Tensor b = text::decode_logits(p, tc, mutated, memory).tensor();
        bool same = true;
        for (std::size_t i = 0; i <= k; ++i) {
            for (std::size_t v = 0; v < tc.vocab_size; ++v) same = same && a.at(i, v) == b.at(i, v);
        }
        c.expect(same, "prefix trial " + std::to_string(trial));
        bool later_moved = false;
        for (std::size_t v = 0; v < tc.vocab_size; ++v) later_moved = later_moved || a.at(len - 1, v) != b.at(len - 1, v);
        c.expect(later_moved, "mutation had no effect at the last position, trial " + std::to_string(trial));
    }
    c.note("50 prefixes, logits at positions <= k exactly unchanged");
    return c;
}

// ---------------------------------------------------------------- AC7

Check ac7() {
    Check c;
    Rng rng(13);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.below(199);
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = trial % 2 ? std::round(rng.uniform() * 10.0) / 10.0 : rng.uniform();
            y[i] = rng.bernoulli(0.4) ? 1 : 0;
        }
        y[0] = 0;
        y[1] = 1;
        const std::vector<std::uint8_t> yb(y.begin(), y.end());
        const double e = std::abs(*eval::auroc(s, yb) - oracle::auroc(s, y));
        worst = std::max(worst, e);
        c.expect(e <= 1e-12, "auroc trial " + std::to_string(trial));
    }
    const std::vector<double> s4{0.1, 0.4, 0.35, 0.8};
    c.expect(*eval::auroc(s4, std::vector<std::uint8_t>{0, 0, 1, 1}) == 0.75, "auroc hand case 0.75");
    c.expect(std::abs(eval::brier(std::vector<double>{0.9, 0.2}, std::vector<std::uint8_t>{1, 0}) - 0.025) < 1e-15,
             "brier 0.025");
    c.expect(eval::brier(std::vector<double>{0.5, 0.5, 0.5}, std::vector<std::uint8_t>{1, 0, 0}) == 0.25, "brier 0.25");
    c.expect(*eval::f1(std::vector<double>{0.9, 0.8, 0.2, 0.1}, std::vector<std::uint8_t>{1, 0, 1, 0}) == 0.5,
             "f1 0.5");
    c.expect(*eval::f1(std::vector<double>{0.1, 0.2}, std::vector<std::uint8_t>{1, 0}) == 0.0, "f1 0");
    c.expect(*eval::f1(std::vector<double>{0.9, 0.1}, std::vector<std::uint8_t>{1, 0}) == 1.0, "f1 1");

    std::vector<double> s(150);
    std::vector<std::uint8_t> y(150);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = rng.uniform();
        y[i] = rng.bernoulli(0.3);
    }
    y[0] = 1;
    y[1] = 0;
    const double base = *eval::auroc(s, y);
    for (int m = 0; m < 20; ++m) {
        const double a = 0.1 + 5.0 * rng.uniform(), b = rng.normal(), k = 1.0 + static_cast<double>(rng.below(4));
        std::vector<double> t(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            switch (m % 4) {
                case 0: t[i] = a * s[i] + b; break;
                case 1: t[i] = std::exp(a * s[i]); break;
                case 2: t[i] = std::pow(s[i], k) + b; break;
                default: t[i] = 1.0 / (1.0 + std::exp(-a * (s[i] - 0.5))); break;
            }
        }
        c.expect(*eval::auroc(t, y) == base, "monotone map " + std::to_string(m));
    }
    c.note("200 oracle instances (worst " + fmt("%.1g", worst) + "), 20 monotone maps");
    return c;
}

// ---------------------------------------------------------------- AC8 / AC9

constexpr std::size_t kPretrainStudies = 512, kValStudies = 64, kTestStudies = 192;
constexpr std::uint64_t kSeeds[] = {0, 1, 2};

struct SeedRun {
    std::vector<data::Study> train, val, test;
    ExperimentConfig cfg;
    train::Checkpoint encoder;
    std::vector<objectives::LossBundle> log;
};

ExperimentConfig efficacy_config(std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.backbone.mask_ratio = 0.75;
    cfg.objective.rec.normalized_target = true;
    cfg.train.steps = 4500;
    cfg.train.lr = 3e-3;
    cfg.train.augment.enabled = false;
    cfg.train.seed = seed;
    return cfg;
}

ExperimentConfig probe_config(const ExperimentConfig& base, std::size_t eval_every) {
    ExperimentConfig c = base;
    c.train.mode = TrainMode::linear_probe;
    c.train.steps = 400;
    c.train.lr = 1e-2;
    c.train.warmup_steps = 10;
    c.train.batch_size = 32;
    c.train.adam.weight_decay = 0.0;
    c.train.eval_every = eval_every;
    return c;
}

ExperimentConfig supervised_config(const ExperimentConfig& base) {
    ExperimentConfig c = base;
    c.train.mode = TrainMode::supervised;
    c.train.steps = 600;
    c.train.lr = 1e-3;
    c.train.warmup_steps = 30;
    c.train.eval_every = 100;
    return c;
}

const std::vector<SeedRun>& seed_runs() {
    static std::vector<SeedRun> runs = [] {
        std::vector<SeedRun> out;
        for (std::uint64_t seed : kSeeds) {
            SeedRun r;
            const auto all =
                data::generate_synthetic_studies(kPretrainStudies + kValStudies + kTestStudies, {}, seed);
            r.train.assign(all.begin(), all.begin() + kPretrainStudies);
            r.val.assign(all.begin() + kPretrainStudies, all.begin() + kPretrainStudies + kValStudies);
            r.test.assign(all.begin() + kPretrainStudies + kValStudies, all.end());
            r.cfg = efficacy_config(seed);
            std::cerr << "  pretraining seed " << seed << " (" << r.cfg.train.steps << " steps)\n";
            auto result = train::pretrain(train::pretrain_view(r.train, nullptr, 0), r.cfg);
            r.encoder = std::move(result.checkpoint);
            r.log = std::move(result.log);
            out.push_back(std::move(r));
        }
        return out;
    }();
    return runs;
}

double test_auroc(const train::Checkpoint& classifier, const std::vector<data::Study>& test) {
    return eval::compute_report(train::predict(classifier, test), "test").macro_auroc.value_or(0.0);
}

struct Trend {
    std::size_t blocks = 0;
    std::size_t strict_increases = 0;
    double worst_z = -1e300;
    double first = 0.0, last = 0.0;
};

// Means of consecutive 100-step blocks; an increase counts against the
// trend only when it exceeds two standard errors of the difference.
Trend loss_trend(const std::vector<objectives::LossBundle>& log) {
    constexpr std::size_t kBlock = 100;
    Trend t;
    double prev_mean = 0.0, prev_var = 0.0;
    for (std::size_t b = 0; b + kBlock <= log.size(); b += kBlock) {
        double m = 0.0, q = 0.0;
        for (std::size_t j = b; j < b + kBlock; ++j) m += log[j].total;
        m /= kBlock;
        for (std::size_t j = b; j < b + kBlock; ++j) q += (log[j].total - m) * (log[j].total - m);
        const double var = q / (kBlock - 1) / kBlock;
        if (t.blocks == 0) {
            t.first = m;
        } else {
            if (m > prev_mean) ++t.strict_increases;
            t.worst_z = std::max(t.worst_z, (m - prev_mean) / std::sqrt(var + prev_var));
        }
        t.last = m;
        prev_mean = m;
        prev_var = var;
        ++t.blocks;
    }
    return t;
}

Check ac8() {
    Check c;
    const auto t0 = Clock::now();
    const auto& runs = seed_runs();
    std::vector<double> gaps;
    for (const auto& r : runs) {
        const auto pc = probe_config(r.cfg, 0);
        const double mvmae = test_auroc(train::train_classifier(r.train, r.val, pc, &r.encoder).checkpoint, r.test);
        const auto random = train::fresh_encoder(r.cfg, r.cfg.train.seed + 99);
        const double base = test_auroc(train::train_classifier(r.train, r.val, pc, &random).checkpoint, r.test);
        gaps.push_back(mvmae - base);
        c.expect(mvmae - base >= 0.05, "seed " + std::to_string(r.cfg.train.seed) + " gap " + fmt("%.4f", mvmae - base));
        const Trend t = loss_trend(r.log);
        c.expect(t.worst_z <= 2.0, "seed " + std::to_string(r.cfg.train.seed) + " block increase z " + fmt("%.2f", t.worst_z));
        c.expect(t.last < t.first, "seed " + std::to_string(r.cfg.train.seed) + " loss did not fall");
        c.note("seed " + std::to_string(r.cfg.train.seed) + ": probe " + fmt("%.4f", mvmae) + " vs random " +
               fmt("%.4f", base) + ", blocks " + std::to_string(t.blocks) + " strict rises " +
               std::to_string(t.strict_increases) + " worst z " + fmt("%.2f", t.worst_z));
    }
    const double secs = seconds_since(t0);
    c.expect(secs < 900.0, "took " + fmt("%.0f", secs) + " s");
    c.note("min gap " + fmt("%.4f", *std::min_element(gaps.begin(), gaps.end())) + ", " + fmt("%.0f", secs) + " s");
    return c;
}

Check ac9() {
    Check c;
    const std::vector<std::size_t> sizes{50, 100, 200, 500};
    std::map<std::size_t, std::vector<double>> probe, sup;
    for (const auto& r : seed_runs()) {
        std::cerr << "  label efficiency seed " << r.cfg.train.seed << "\n";
        const auto p = eval::label_efficiency(r.train, r.val, r.test, probe_config(r.cfg, 50), &r.encoder, sizes);
        const auto s = eval::label_efficiency(r.train, r.val, r.test, supervised_config(r.cfg), nullptr, sizes);
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            probe[sizes[i]].push_back(p[i].macro_auroc.value_or(0.0));
            sup[sizes[i]].push_back(s[i].macro_auroc.value_or(0.0));
        }
    }
    std::string table;
    for (auto n : sizes) {
        const auto ps = eval::summarize(probe[n]), ss = eval::summarize(sup[n]);
        table += " n=" + std::to_string(n) + " probe " + fmt("%.3f", ps.mean) + "+-" + fmt("%.3f", ps.sd) +
                 " sup " + fmt("%.3f", ss.mean) + "+-" + fmt("%.3f", ss.sd) + ";";
    }
    const double probe50 = eval::summarize(probe[50]).mean, sup200 = eval::summarize(sup[200]).mean;
    c.expect(probe50 >= sup200, "probe@50 " + fmt("%.4f", probe50) + " < supervised@200 " + fmt("%.4f", sup200));
    c.note(table.substr(1, table.size() - 2));
    return c;
}

// ---------------------------------------------------------------- AC10

Check ac10() {
    Check c;
    data::SyntheticConfig sc;
    sc.p_one_view = 0.1;
    const auto train_set = data::generate_synthetic_studies(64, sc, 21);
    const auto val_set = data::generate_synthetic_studies(32, sc, 22);
    const auto test_set = data::generate_synthetic_studies(96, sc, 23);
    ExperimentConfig cfg;
    cfg.train.mode = TrainMode::linear_probe;
    cfg.train.steps = 40;
    cfg.train.augment.enabled = false;
    const auto encoder = train::fresh_encoder(cfg, 5);
    const auto clf = train::train_classifier(train_set, val_set, cfg, &encoder).checkpoint;
    const auto rows = eval::two_view_ablation(clf, clf, test_set);
    for (const auto& r : rows) {
        c.expect(r.delta.has_value() && *r.delta == 0.0, "delta for " + r.dataset + " views " + std::to_string(r.views));
    }
    const auto scores = train::predict(clf, eval::two_view_studies(test_set));
    std::size_t checked = 0;
    for (const auto& s : scores) {
        for (auto sel : {eval::ViewSelection::first_two, eval::ViewSelection::all}) {
            const auto fused = s.select(sel);
            for (std::size_t k = 0; k < data::kNumLabels; ++k) {
                const double lo = std::min(s.views[0][k], s.views[1][k]);
                const double hi = std::max(s.views[0][k], s.views[1][k]);
                c.expect(fused[k] >= lo && fused[k] <= hi, "fused score outside view bounds for " + s.study_id);
                ++checked;
            }
        }
        c.expect(s.select(eval::ViewSelection::first) == s.views[0], "single-view selection fused views");
    }
    c.note(std::to_string(scores.size()) + " two-view studies, " + std::to_string(rows.size()) +
           " delta rows exactly 0, " + std::to_string(checked) + " fused bounds held");
    return c;
}

// ---------------------------------------------------------------- AC11

int run_tool(const std::vector<std::string>& args) {
    std::vector<std::string> owned{"mvmae"};
    owned.insert(owned.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : owned) argv.push_back(a.data());
    std::ostringstream sink;
    auto* old = std::cout.rdbuf(sink.rdbuf());
    const int rc = run_cli(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(old);
    return rc;
}

Check ac11() {
    Check c;
    mvmae::testing::TempDir dir("acceptance");
    data::SyntheticConfig sc;
    const auto raw = data::generate_synthetic_studies(24, sc, 31);
    ExperimentConfig cfg;
    cfg.train.steps = 5;
    cfg.train.augment.enabled = false;
    const auto ck = train::pretrain(train::pretrain_view(raw, nullptr, 0), cfg).checkpoint;
    train::save_checkpoint(dir / "enc.ck", ck);
    const auto back = train::load_checkpoint(dir / "enc.ck");
    const model::ModelConfig mc = cfg.model_config();
    bool same = true;
    for (const auto& s : raw) {
        std::vector<Tensor> patches;
        std::vector<data::ProjectionFamily> fams;
        for (const auto& v : s.views) {
            patches.push_back(model::patchify(v.image, 8));
            fams.push_back(v.family);
        }
        model::Binding pa = model::Binding::frozen(ck.params), pb = model::Binding::frozen(back.params);
        Rng ra(1), rb(1);
        const auto ta = model::study_forward(pa, mc, patches, fams, std::nullopt, ra);
        const auto tb = model::study_forward(pb, mc, patches, fams, std::nullopt, rb);
        same = same && ta.rec.item() == tb.rec.item() && ta.align.item() == tb.align.item();
        same = same && model::view_embedding(pa, mc.backbone, patches[0], fams[0]).tensor().data ==
                           model::view_embedding(pb, mc.backbone, patches[0], fams[0]).tensor().data;
    }
    c.expect(same, "forward outputs differ after checkpoint round trip");

    mvmae::testing::write_file(dir / "run.cfg",
                               "train.steps = 30\n"
                               "train.batch_size = 8\n"
                               "augment.enabled = false\n"
                               "split.train = 0.5\n"
                               "split.val = 0.25\n"
                               "split.test = 0.25\n");
    const std::string cfg_path = (dir / "run.cfg").string();
    std::vector<std::string> metrics;
    for (const std::string name : {"first", "second"}) {
        const auto base = dir / name;
        const std::string b = base.string();
        int rc = run_tool({"synth", "--count", "48", "--seed", "4", "--out", b + "/synth"});
        rc |= run_tool({"prepare", "--config", cfg_path, "--manifest", b + "/synth/manifest.tsv", "--out", b + "/prep"});
        rc |= run_tool({"pretrain", "--config", cfg_path, "--seed", "4", "--manifest", b + "/prep/manifest.tsv", "--out",
                        b + "/pre"});
        rc |= run_tool({"train", "--config", cfg_path, "--seed", "4", "--mode", "linear_probe", "--checkpoint",
                        b + "/pre/encoder.ck", "--manifest", b + "/prep/manifest.tsv", "--out", b + "/probe"});
        rc |= run_tool({"eval", "--config", cfg_path, "--checkpoint", b + "/probe/classifier.ck", "--manifest",
                        b + "/prep/manifest.tsv", "--out", b + "/eval"});
        c.expect(rc == 0, "pipeline run " + name + " failed");
        metrics.push_back(mvmae::testing::read_file(base / "eval/metrics.json"));
    }
    c.expect(!metrics[0].empty() && metrics[0] == metrics[1], "metric JSON differs between reruns");
    c.note("round trip bit-exact on " + std::to_string(raw.size()) + " studies; pipeline metric JSON identical (" +
           std::to_string(metrics[0].size()) + " bytes)");
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Check()>>> criteria{
        {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4},   {"AC5", ac5},   {"AC6", ac6},
        {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9}, {"AC10", ac10}, {"AC11", ac11},
    };
    std::set<std::string> wanted(argv + 1, argv + argc);
    bool all_ok = true;
    for (const auto& [id, fn] : criteria) {
        if (!wanted.empty() && !wanted.count(id)) continue;
        std::cerr << id << " running\n";
        const auto t0 = Clock::now();
        Check c;
        try {
            c = fn();
        } catch (const std::exception& e) {
            c.ok = false;
            c.failure = std::string("exception: ") + e.what();
        }
        std::string detail;
        for (const auto& n : c.notes) detail += (detail.empty() ? "" : "; ") + n;
        if (!c.ok) detail = c.failure + (detail.empty() ? "" : " | " + detail);
        std::cout << id << " " << (c.ok ? "PASS" : "FAIL") << " (" << fmt("%.1f", seconds_since(t0)) << " s) " << detail
                  << std::endl;
        all_ok = all_ok && c.ok;
    }
    return all_ok ? 0 : 1;
}
