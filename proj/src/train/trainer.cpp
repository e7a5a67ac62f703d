#include "mvmae/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <numeric>
#include <omp.h>

#include "mvmae/autodiff/ops.hpp"
#include "mvmae/data/augment.hpp"
#include "mvmae/errors.hpp"
#include "mvmae/train/optimizer.hpp"

#ifndef MVMAE_VERSION
#define MVMAE_VERSION "unknown"
#endif

namespace mvmae::train {

using ad::Var;

namespace {

// Stream tags for Rng::derive.
constexpr std::uint64_t kTagEpoch = 0xE90C, kTagItem = 0x17E3, kTagMask = 0x3A5C, kTagView = 0x71E3,
                        kTagSubset = 0x5B5E, kTagInit = 0x1417, kTagHead = 0x4EAD;

int thread_count(std::size_t requested) {
    return requested > 0 ? static_cast<int>(requested) : omp_get_max_threads();
}

// Runs body(i) for i in [0, n) across threads; rethrows the first failure
// (lowest index) after the loop.
template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& body) {
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic) num_threads(thread_count(threads))
    for (std::size_t i = 0; i < n; ++i) {
        try {
            body(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// Position q of the endless sequence of per-epoch permutations.
class EpochSampler {
public:
    EpochSampler(std::size_t n, std::uint64_t seed) : n_(n), seed_(seed) {}

    std::size_t at(std::size_t q) {
        const std::size_t epoch = q / n_;
        auto it = cache_.find(epoch);
        if (it == cache_.end()) {
            std::vector<std::size_t> perm(n_);
            std::iota(perm.begin(), perm.end(), std::size_t{0});
            Rng rng(Rng::derive(seed_, {kTagEpoch, epoch}));
            rng.shuffle(std::span<std::size_t>(perm));
            if (cache_.size() > 4) cache_.erase(cache_.begin());
            it = cache_.emplace(epoch, std::move(perm)).first;
        }
        return it->second[q % n_];
    }

private:
    std::size_t n_;
    std::uint64_t seed_;
    std::map<std::size_t, std::vector<std::size_t>> cache_;
};

std::vector<Tensor> view_patches(const std::vector<data::Image>& images, const model::BackboneConfig& bb,
                                 const data::AugmentConfig* aug, bool shared, std::uint64_t seed) {
    std::vector<Tensor> out;
    out.reserve(images.size());
    for (std::size_t v = 0; v < images.size(); ++v) {
        if (images[v].height != bb.image_side || images[v].width != bb.image_side) {
            throw ShapeError("view is " + std::to_string(images[v].height) + "x" + std::to_string(images[v].width) +
                             ", model expects " + std::to_string(bb.image_side));
        }
        if (aug && aug->enabled) {
            Rng rng(Rng::derive(seed, {kTagView, shared ? 0 : v + 1}));
            out.push_back(model::patchify(data::augment(images[v], *aug, rng), bb.patch_side));
        } else {
            out.push_back(model::patchify(images[v], bb.patch_side));
        }
    }
    return out;
}

std::vector<bool> active_mask(const model::ParameterStore& store, const std::function<bool(std::string_view)>& pred) {
    std::vector<bool> out;
    for (const auto& p : store.params()) out.push_back(pred(p.name));
    return out;
}

std::string checkpoint_name(std::size_t step) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "step_%06zu.ck", step);
    return buf;
}

void append_line(const std::filesystem::path& path, const std::string& line) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw IoError("cannot append to " + path.string());
    out << line << '\n';
}

}  // namespace

std::vector<std::size_t> batch_items(std::size_t n, std::uint64_t seed, std::size_t step, std::size_t batch) {
    if (n == 0) throw ValidationError("batch_items: empty pool");
    EpochSampler sampler(n, seed);
    std::vector<std::size_t> items(batch);
    for (std::size_t j = 0; j < batch; ++j) items[j] = sampler.at(step * batch + j);
    return items;
}

std::uint64_t slot_seed(std::uint64_t seed, std::size_t step, std::size_t slot) {
    return Rng::derive(seed, {kTagItem, step, slot});
}

std::uint64_t mask_seed(std::uint64_t slot_seed) { return Rng::derive(slot_seed, {kTagMask}); }

std::vector<model::PretrainStudy> pretrain_view(std::span<const data::Study> studies, const text::Vocabulary* vocab,
                                                std::size_t max_len) {
    std::vector<model::PretrainStudy> out;
    out.reserve(studies.size());
    for (const auto& s : studies) {
        model::PretrainStudy p;
        p.study_id = s.study_id;
        for (const auto& v : s.views) {
            p.images.push_back(v.image);
            p.families.push_back(v.family);
        }
        if (vocab && s.report && !s.report->empty()) p.report = text::tokenize(*s.report, *vocab, max_len);
        out.push_back(std::move(p));
    }
    return out;
}

PretrainResult pretrain(std::span<const model::PretrainStudy> studies, const ExperimentConfig& cfg,
                        const text::Vocabulary* vocab, const PretrainOptions& opt) {
    if (!is_pretrain(cfg.train.mode)) {
        throw ValidationError("pretrain called with mode " + std::string(mode_name(cfg.train.mode)));
    }
    if (studies.empty()) throw ValidationError("pretrain: no studies");
    cfg.validate();
    const bool v2t = cfg.train.mode == TrainMode::pretrain_mvmae_v2t;
    ExperimentConfig run_cfg = cfg;
    if (v2t) {
        if (!vocab) throw ValidationError("report-supervised pretraining needs a vocabulary");
        run_cfg.text.vocab_size = vocab->size();
        const bool any = std::any_of(studies.begin(), studies.end(), [](const auto& s) { return s.report.has_value(); });
        if (!any) throw ValidationError("report-supervised pretraining needs at least one study with a report");
    }
    const model::ModelConfig mcfg = run_cfg.model_config();
    const auto& tc = run_cfg.train;
    const std::uint64_t hash = run_cfg.hash();

    PretrainResult result;
    Checkpoint& ck = result.checkpoint;
    AdamW opt_state;
    std::size_t start = 0;
    if (opt.resume) {
        if (opt.resume->config_hash != hash) {
            throw ValidationError("resume checkpoint was written under a different configuration");
        }
        ck.params = opt.resume->params;
        opt_state = AdamW(ck.params, tc.adam);
        if (!opt.resume->first_moment.values.empty()) {
            opt_state.first_moment() = opt.resume->first_moment;
            opt_state.second_moment() = opt.resume->second_moment;
        }
        opt_state.set_steps_taken(opt.resume->optimizer_steps);
        start = opt.resume->step;
    } else {
        Rng init(Rng::derive(tc.seed, {kTagInit}));
        model::init_model(ck.params, mcfg, init);
        opt_state = AdamW(ck.params, tc.adam);
    }
    ck.config_hash = hash;
    ck.meta["kind"] = "pretrain";
    ck.meta["config"] = run_cfg.dump();
    ck.meta["version"] = MVMAE_VERSION;
    if (v2t) ck.meta["vocab"] = vocab->serialize();

    std::filesystem::path last_good;
    if (!opt.run_dir.empty()) std::filesystem::create_directories(opt.run_dir / "checkpoints");
    auto save = [&](std::size_t step) {
        ck.step = step;
        ck.optimizer_steps = opt_state.steps_taken();
        ck.first_moment = opt_state.first_moment();
        ck.second_moment = opt_state.second_moment();
        ck.rng_state = Rng(Rng::derive(tc.seed, {step})).state();
        if (opt.run_dir.empty()) return;
        const auto path = opt.run_dir / "checkpoints" / checkpoint_name(step);
        save_checkpoint(path, ck);
        save_checkpoint(opt.run_dir / "checkpoints" / "last.ck", ck);
        last_good = path;
    };

    const objectives::LossWeights weights{
        tc.beta_target, static_cast<std::size_t>(std::llround(tc.anneal_fraction * static_cast<double>(tc.steps)))};
    EpochSampler sampler(studies.size(), tc.seed);
    const std::size_t batch = tc.batch_size;
    const auto all_active = std::vector<bool>(ck.params.size(), true);
    const std::size_t end = opt.stop_after ? std::min(tc.steps, opt.stop_after) : tc.steps;

    for (std::size_t step = start; step < end; ++step) {
        const double lr = lr_at(step, tc.steps, tc.warmup_steps, tc.lr, tc.min_lr);
        const double beta = objectives::beta_at(weights, step);
        std::vector<std::size_t> items(batch);
        for (std::size_t j = 0; j < batch; ++j) items[j] = sampler.at(step * batch + j);
        std::size_t n_reported = 0;
        if (v2t) {
            for (auto i : items) n_reported += studies[i].report ? 1 : 0;
        }

        std::vector<model::Gradients> grads(batch);
        std::vector<double> rec_v(batch, 0.0), align_v(batch, 0.0), ce_v(batch, 0.0);
        std::vector<bool> has_ce(batch, false);
        parallel_for(batch, tc.threads, [&](std::size_t j) {
            const auto& s = studies[items[j]];
            const std::uint64_t item_seed = slot_seed(tc.seed, step, j);
            const auto patches = view_patches(s.images, mcfg.backbone, &tc.augment, tc.shared_augment, item_seed);
            Rng mask_rng(mask_seed(item_seed));
            model::Binding p = model::Binding::trainable_all(ck.params);
            const model::StudyTerms t = model::study_forward(p, mcfg, patches, s.families, s.report, mask_rng);
            const double b = static_cast<double>(batch);
            Var objective = ad::scale(t.rec, 1.0 / b);
            rec_v[j] = t.rec.item();
            if (t.align.defined()) {
                align_v[j] = t.align.item();
                if (beta != 0.0) objective = ad::add(objective, ad::scale(t.align, beta / b));
            }
            if (t.ce.defined()) {
                ce_v[j] = t.ce.item();
                has_ce[j] = true;
                objective = ad::add(objective, ad::scale(t.ce, 1.0 / static_cast<double>(n_reported)));
            }
            objective.backward();
            grads[j] = model::Gradients::zeros_like(ck.params);
            p.accumulate(grads[j]);
        });

        double rec = 0.0, align = 0.0, ce = 0.0;
        model::Gradients total = model::Gradients::zeros_like(ck.params);
        for (std::size_t j = 0; j < batch; ++j) {
            rec += rec_v[j];
            align += align_v[j];
            if (has_ce[j]) ce += ce_v[j];
            total.add(grads[j]);
        }
        rec /= static_cast<double>(batch);
        align /= static_cast<double>(batch);
        std::optional<double> l_ce;
        if (v2t && n_reported > 0) l_ce = ce / static_cast<double>(n_reported);
        objectives::LossBundle bundle;
        try {
            bundle = objectives::loss_total(rec, align, beta, l_ce);
            clip_grad_norm(total, tc.grad_clip);
            opt_state.step(ck.params, total, lr, all_active);
        } catch (const NumericalError& e) {
            throw NumericalError(std::string("training diverged at step ") + std::to_string(step) + ": " + e.what() +
                                 "; last good checkpoint: " + (last_good.empty() ? "none" : last_good.string()));
        }
        result.log.push_back(bundle);
        if (!opt.run_dir.empty()) append_line(opt.run_dir / "loss.jsonl", objectives::loss_json_line(step, bundle));
        if (opt.on_step) opt.on_step(step, bundle);
        if (tc.checkpoint_every && (step + 1) % tc.checkpoint_every == 0 && step + 1 < end) save(step + 1);
    }
    save(end);
    return result;
}

ExperimentConfig checkpoint_config(const Checkpoint& ck) {
    auto it = ck.meta.find("config");
    if (it == ck.meta.end()) throw ValidationError("checkpoint carries no configuration");
    ExperimentConfig c = parse_config(it->second, "<checkpoint config>");
    if (fnv1a(it->second) != ck.config_hash) throw ValidationError("checkpoint configuration hash mismatch");
    return c;
}

Checkpoint fresh_encoder(const ExperimentConfig& cfg, std::uint64_t seed) {
    Checkpoint ck;
    Rng init(Rng::derive(seed, {kTagInit}));
    model::init_backbone(ck.params, cfg.backbone, init);
    ExperimentConfig c = cfg;
    c.train.mode = TrainMode::pretrain_mvmae;
    ck.meta["kind"] = "fresh";
    ck.meta["config"] = c.dump();
    ck.meta["version"] = MVMAE_VERSION;
    ck.config_hash = c.hash();
    return ck;
}

std::vector<std::size_t> subset_indices(std::size_t pool, std::size_t n, std::uint64_t seed) {
    if (n > pool) {
        throw ValidationError("subset size " + std::to_string(n) + " exceeds the " + std::to_string(pool) +
                              " labeled studies available");
    }
    std::vector<std::size_t> idx(pool);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(Rng::derive(seed, {kTagSubset}));
    rng.shuffle(std::span<std::size_t>(idx));
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    return idx;
}

namespace {

Tensor label_rows(const data::LabelVector& y, std::size_t rows) {
    Tensor t({rows, data::kNumLabels});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = 0; k < data::kNumLabels; ++k) t.at(r, k) = y[k];
    }
    return t;
}

// CLS embeddings of every view, computed without a graph.
std::vector<Tensor> cached_features(const model::ParameterStore& store, const model::BackboneConfig& bb,
                                    std::span<const data::Study> studies, std::size_t threads) {
    std::vector<Tensor> out(studies.size());
    parallel_for(studies.size(), threads, [&](std::size_t i) {
        model::Binding p = model::Binding::frozen(store);
        std::vector<Var> rows;
        for (const auto& v : studies[i].views) {
            rows.push_back(model::view_embedding(p, bb, model::patchify(v.image, bb.patch_side), v.family));
        }
        out[i] = ad::concat(rows, 0).tensor();
    });
    return out;
}

eval::ScoreVector sigmoid_row(std::span<const double> logits, std::size_t row) {
    eval::ScoreVector s{};
    for (std::size_t k = 0; k < data::kNumLabels; ++k) {
        const double z = logits[row * data::kNumLabels + k];
        s[k] = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    }
    return s;
}

eval::StudyScores scores_from_logits(const data::Study& s, const Var& logits) {
    eval::StudyScores out;
    out.study_id = s.study_id;
    out.dataset_tag = s.dataset_tag;
    out.labels = s.labels.value_or(data::LabelVector{});
    for (std::size_t v = 0; v < s.views.size(); ++v) {
        out.views.push_back(sigmoid_row(logits.value(), v));
        out.families.push_back(s.views[v].family);
    }
    return out;
}

}  // namespace

ClassifierResult train_classifier(std::span<const data::Study> train_all, std::span<const data::Study> val,
                                  const ExperimentConfig& cfg, const Checkpoint* encoder,
                                  const ClassifierOptions& opt) {
    const TrainMode mode = cfg.train.mode;
    if (is_pretrain(mode)) throw ValidationError("train_classifier called with a pretraining mode");
    if (mode != TrainMode::supervised && !encoder) {
        throw UsageError(std::string(mode_name(mode)) + " needs an encoder checkpoint");
    }
    std::vector<data::Study> labeled;
    for (const auto& s : train_all) {
        if (s.labels) labeled.push_back(s);
    }
    if (labeled.empty()) throw ValidationError("no labeled studies to train on");
    const auto& tc = cfg.train;
    if (tc.subset_size) {
        const auto idx = subset_indices(labeled.size(), *tc.subset_size, tc.seed);
        std::vector<data::Study> sub;
        for (auto i : idx) sub.push_back(labeled[i]);
        labeled = std::move(sub);
    }

    model::BackboneConfig bb = cfg.backbone;
    ExperimentConfig stored = cfg;
    model::ParameterStore store;
    if (encoder) {
        const ExperimentConfig enc_cfg = checkpoint_config(*encoder);
        bb = enc_cfg.backbone;
        stored.backbone = bb;
        for (const auto& p : encoder->params.params()) {
            if (model::is_encoder_param(p.name)) store.add(p.name, p.value, p.decay);
        }
    } else {
        Rng init(Rng::derive(tc.seed, {kTagInit}));
        model::ParameterStore full;
        model::init_backbone(full, bb, init);
        for (const auto& p : full.params()) {
            if (model::is_encoder_param(p.name)) store.add(p.name, p.value, p.decay);
        }
    }
    {
        Rng head_rng(Rng::derive(tc.seed, {kTagHead}));
        model::init_classifier_head(store, bb.embed_dim, head_rng);
    }
    const bool probe = mode == TrainMode::linear_probe;
    const auto trainable = [probe](std::string_view name) { return !probe || !model::is_encoder_param(name); };
    const auto active = active_mask(store, trainable);

    std::vector<Tensor> train_feats, val_feats;
    if (probe) {
        train_feats = cached_features(store, bb, labeled, tc.threads);
        val_feats = cached_features(store, bb, val, tc.threads);
    }

    auto validate_scores = [&]() -> std::optional<double> {
        std::vector<eval::StudyScores> scores(val.size());
        parallel_for(val.size(), tc.threads, [&](std::size_t i) {
            model::Binding p = model::Binding::frozen(store);
            Var logits;
            if (probe) {
                logits = model::head_logits(p, Var::constant(val_feats[i]));
            } else {
                std::vector<Var> rows;
                for (const auto& v : val[i].views) {
                    rows.push_back(model::view_embedding(p, bb, model::patchify(v.image, bb.patch_side), v.family));
                }
                logits = model::head_logits(p, ad::concat(rows, 0));
            }
            scores[i] = scores_from_logits(val[i], logits);
        });
        std::vector<eval::StudyScores> with_labels;
        for (std::size_t i = 0; i < val.size(); ++i) {
            if (val[i].labels) with_labels.push_back(std::move(scores[i]));
        }
        if (with_labels.empty()) return std::nullopt;
        return eval::compute_report(with_labels, "val").macro_auroc;
    };

    AdamW adam(store, tc.adam);
    ClassifierResult result;
    std::optional<double> best;
    model::ParameterStore best_store = store;
    std::size_t best_step = 0;
    bool have_best = false;
    auto consider = [&](std::size_t step) {
        const auto auc = val.empty() ? std::nullopt : validate_scores();
        if (!have_best || (auc && (!best || *auc > *best))) {
            best = auc;
            best_store = store;
            best_step = step;
            have_best = true;
        }
    };

    EpochSampler sampler(labeled.size(), Rng::derive(tc.seed, {kTagEpoch}));
    const std::size_t batch = std::min(tc.batch_size, labeled.size());
    for (std::size_t step = 0; step < tc.steps; ++step) {
        const double lr = lr_at(step, tc.steps, tc.warmup_steps, tc.lr, tc.min_lr);
        std::vector<std::size_t> items(batch);
        for (std::size_t j = 0; j < batch; ++j) items[j] = sampler.at(step * batch + j);
        std::vector<model::Gradients> grads(batch);
        std::vector<double> losses(batch);
        parallel_for(batch, tc.threads, [&](std::size_t j) {
            const auto& s = labeled[items[j]];
            model::Binding p(store, trainable);
            Var emb;
            if (probe) {
                emb = Var::constant(train_feats[items[j]]);
            } else {
                std::vector<data::Image> images;
                std::vector<data::ProjectionFamily> fams;
                for (const auto& v : s.views) {
                    images.push_back(v.image);
                    fams.push_back(v.family);
                }
                const auto patches = view_patches(images, bb, &tc.augment, tc.shared_augment,
                                                  Rng::derive(tc.seed, {kTagItem, step, j}));
                std::vector<Var> rows;
                for (std::size_t v = 0; v < patches.size(); ++v) {
                    rows.push_back(model::view_embedding(p, bb, patches[v], fams[v]));
                }
                emb = ad::concat(rows, 0);
            }
            const Var loss = model::bce_with_logits(model::head_logits(p, emb), label_rows(*s.labels, s.views.size()));
            losses[j] = loss.item();
            ad::scale(loss, 1.0 / static_cast<double>(batch)).backward();
            grads[j] = model::Gradients::zeros_like(store);
            p.accumulate(grads[j]);
        });
        model::Gradients total = model::Gradients::zeros_like(store);
        double loss = 0.0;
        for (std::size_t j = 0; j < batch; ++j) {
            total.add(grads[j]);
            loss += losses[j];
        }
        loss /= static_cast<double>(batch);
        if (!std::isfinite(loss)) throw NumericalError("classifier loss non-finite at step " + std::to_string(step));
        clip_grad_norm(total, tc.grad_clip);
        adam.step(store, total, lr, active);
        result.loss_log.push_back(loss);
        if (opt.on_step) opt.on_step(step, loss);
        if (tc.eval_every && (step + 1) % tc.eval_every == 0 && step + 1 < tc.steps) consider(step + 1);
    }
    consider(tc.steps);

    result.selected_step = best_step;
    result.selected_val_auroc = best;
    Checkpoint& ck = result.checkpoint;
    ck.params = std::move(best_store);
    ck.step = best_step;
    stored.train.mode = mode;
    ck.meta["kind"] = "classifier";
    ck.meta["mode"] = std::string(mode_name(mode));
    ck.meta["config"] = stored.dump();
    ck.meta["version"] = MVMAE_VERSION;
    ck.config_hash = stored.hash();
    ck.rng_state = Rng(Rng::derive(tc.seed, {best_step})).state();
    if (!opt.run_dir.empty()) {
        std::filesystem::create_directories(opt.run_dir);
        save_checkpoint(opt.run_dir / "classifier.ck", ck);
    }
    return result;
}

std::vector<eval::StudyScores> predict(const Checkpoint& classifier, std::span<const data::Study> studies,
                                       std::size_t threads) {
    if (!classifier.params.contains("head.w")) throw ValidationError("checkpoint has no classifier head");
    const model::BackboneConfig bb = checkpoint_config(classifier).backbone;
    std::vector<eval::StudyScores> out(studies.size());
    parallel_for(studies.size(), threads, [&](std::size_t i) {
        model::Binding p = model::Binding::frozen(classifier.params);
        std::vector<Var> rows;
        for (const auto& v : studies[i].views) {
            rows.push_back(model::view_embedding(p, bb, model::patchify(v.image, bb.patch_side), v.family));
        }
        if (rows.empty()) throw ValidationError("study " + studies[i].study_id + " has no views");
        out[i] = scores_from_logits(studies[i], model::head_logits(p, ad::concat(rows, 0)));
    });
    return out;
}

}  // namespace mvmae::train
