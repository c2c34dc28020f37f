#include "arit/trainer/trainer.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "arit/common/threading.hpp"
#include "arit/imagecore/dataset.hpp"
#include "arit/imagecore/image_io.hpp"
#include "arit/imagecore/manifest.hpp"
#include "arit/metrics/metrics.hpp"

namespace fs = std::filesystem;

namespace arit::trainer {

using img::DatasetManifest;
using img::frame_name;
using img::read_manifest;
using img::read_png;
using translation::Generator;
using translation::ModelBundle;
using nn::Graph;
using nn::Node;
namespace ops = nn::ops;

// ---- config serialization ----------------------------------------------------

std::string TrainConfig::to_json() const {
    nlohmann::json j;
    j["dataset_root"] = dataset_root;
    j["corrupted_dir"] = corrupted_dir;
    j["pseudo_dir"] = pseudo_dir;
    j["out_dir"] = out_dir;
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["lr_generator"] = lr_generator;
    j["lr_discriminator"] = lr_discriminator;
    j["lambda_gan"] = lambda_gan;
    j["lambda_cyc"] = lambda_cyc;
    j["lambda_pair"] = lambda_pair;
    j["lambda_nce"] = lambda_nce;
    j["patches_p"] = patches_p;
    j["patches_m"] = patches_m;
    j["tau"] = tau;
    j["decoupling"] = decoupling;
    j["resilient"] = resilient;
    j["non_saturating"] = non_saturating;
    j["seed"] = std::to_string(seed);
    j["checkpoint_interval"] = checkpoint_interval;
    j["gen"] = {{"base_channels", gen.base_channels},
                {"n_downsamples", gen.n_downsamples},
                {"n_residual_blocks", gen.n_residual_blocks},
                {"instance_norm", gen.instance_norm}};
    j["disc"] = {{"base_channels", disc.base_channels}, {"n_layers", disc.n_layers}};
    j["head"] = {{"k_proj", head.k_proj}, {"hidden", head.hidden}};
    return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("train config: invalid JSON: ") + e.what());
    }
    TrainConfig c;
    try {
        c.dataset_root = j.value("dataset_root", c.dataset_root);
        c.corrupted_dir = j.value("corrupted_dir", c.corrupted_dir);
        c.pseudo_dir = j.value("pseudo_dir", c.pseudo_dir);
        c.out_dir = j.value("out_dir", c.out_dir);
        c.epochs = j.value("epochs", c.epochs);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.lr_generator = j.value("lr_generator", c.lr_generator);
        c.lr_discriminator = j.value("lr_discriminator", c.lr_discriminator);
        c.lambda_gan = j.value("lambda_gan", c.lambda_gan);
        c.lambda_cyc = j.value("lambda_cyc", c.lambda_cyc);
        c.lambda_pair = j.value("lambda_pair", c.lambda_pair);
        c.lambda_nce = j.value("lambda_nce", c.lambda_nce);
        c.patches_p = j.value("patches_p", c.patches_p);
        c.patches_m = j.value("patches_m", c.patches_m);
        c.tau = j.value("tau", c.tau);
        c.decoupling = j.value("decoupling", c.decoupling);
        c.resilient = j.value("resilient", c.resilient);
        c.non_saturating = j.value("non_saturating", c.non_saturating);
        if (j.contains("seed")) c.seed = std::stoull(j.at("seed").get<std::string>());
        c.checkpoint_interval = j.value("checkpoint_interval", c.checkpoint_interval);
        if (j.contains("gen")) {
            const auto& g = j.at("gen");
            c.gen.base_channels = g.value("base_channels", c.gen.base_channels);
            c.gen.n_downsamples = g.value("n_downsamples", c.gen.n_downsamples);
            c.gen.n_residual_blocks = g.value("n_residual_blocks", c.gen.n_residual_blocks);
            c.gen.instance_norm = g.value("instance_norm", c.gen.instance_norm);
        }
        if (j.contains("disc")) {
            const auto& d = j.at("disc");
            c.disc.base_channels = d.value("base_channels", c.disc.base_channels);
            c.disc.n_layers = d.value("n_layers", c.disc.n_layers);
        }
        if (j.contains("head")) {
            const auto& h = j.at("head");
            c.head.k_proj = h.value("k_proj", c.head.k_proj);
            c.head.hidden = h.value("hidden", c.head.hidden);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("train config: bad field: ") + e.what());
    }
    return c;
}

// ---- state --------------------------------------------------------------------

TranslationState::TranslationState(const TrainConfig& cfg)
    : config(cfg),
      model(cfg.gen, cfg.disc, cfg.head, cfg.decoupling, cfg.resilient, cfg.seed),
      rng(hash64({cfg.seed, 0x747261696eULL})) {
    std::vector<nn::Param<float>*> gen_params, disc_params;
    model.collect_generator_params(gen_params);
    model.collect_discriminator_params(disc_params);
    opt_gen = nn::Adam<float>(std::move(gen_params), cfg.lr_generator);
    opt_disc = nn::Adam<float>(std::move(disc_params), cfg.lr_discriminator);
}

// ---- step internals -------------------------------------------------------------

namespace {

void check_term(const std::string& name, double value) {
    if (!std::isfinite(value)) throw NumericError("non-finite loss term: " + name);
}

constexpr float kScoreFloor = 1e-7f;

// Eq.-style adversarial value: mean log(1 - D(fake)) + mean log D(real).
Node<float>* gan_node(Graph<float>& g, Node<float>* d_fake, Node<float>* d_real) {
    Node<float>* f = ops::mean_all(g, ops::log_clamped(g, ops::affine(g, d_fake, -1.0f, 1.0f),
                                                       kScoreFloor));
    Node<float>* r = ops::mean_all(g, ops::log_clamped(g, d_real, kScoreFloor));
    return ops::weighted_sum<float>(g, {{f, 1.0f}, {r, 1.0f}});
}

// Generator-side adversarial term for one fake-score map.
Node<float>* gen_gan_node(Graph<float>& g, Node<float>* d_fake, bool non_saturating) {
    if (non_saturating) {
        Node<float>* t = ops::mean_all(g, ops::log_clamped(g, d_fake, kScoreFloor));
        return ops::weighted_sum<float>(g, {{t, -1.0f}});
    }
    return ops::mean_all(g,
                         ops::log_clamped(g, ops::affine(g, d_fake, -1.0f, 1.0f), kScoreFloor));
}

// P+M distinct spatial positions drawn by partial Fisher-Yates.
std::vector<int> draw_positions(int locations, int count, Rng& rng) {
    std::vector<int> pool(static_cast<size_t>(locations));
    for (int i = 0; i < locations; ++i) pool[size_t(i)] = i;
    for (int i = 0; i < count; ++i) {
        const int j = i + int(rng.uniform_int(0, locations - 1 - i));
        std::swap(pool[size_t(i)], pool[size_t(j)]);
    }
    pool.resize(size_t(count));
    return pool;
}

// Contrastive node for one batch item: queries/negatives from the noisy-side
// feature map through the query head, positives from the virtual-side map
// through the positive head with the whole positive branch detached.
Node<float>* resilient_node(Graph<float>& g, ModelBundle<float>& model, Node<float>* feat_noisy,
                            Node<float>* feat_virtual, int item, int P, int M, double tau,
                            uint64_t seed) {
    const int locations = feat_noisy->value.h * feat_noisy->value.w;
    if (P + M > locations) throw DataError("resilient: P + M exceeds feature locations");
    Rng rng(seed);
    std::vector<int> pos = draw_positions(locations, P + M, rng);
    const int w = feat_noisy->value.w;
    std::vector<ops::Location> qloc, nloc;
    for (int i = 0; i < P; ++i) qloc.push_back({item, pos[size_t(i)] / w, pos[size_t(i)] % w});
    for (int i = 0; i < M; ++i)
        nloc.push_back({item, pos[size_t(P + i)] / w, pos[size_t(P + i)] % w});

    Node<float>* q = model.proj_query->apply(g, ops::gather_locations(g, feat_noisy, qloc));
    Node<float>* kp = ops::stopgrad(
        g, model.proj_positive->apply(g, ops::gather_locations(g, feat_virtual, qloc)));
    Node<float>* ng = model.proj_query->apply(g, ops::gather_locations(g, feat_noisy, nloc));
    return ops::info_nce(g, q, kp, ng, float(tau));
}

std::vector<int> permutation(size_t n, Rng& rng) {
    std::vector<int> p(n);
    for (size_t i = 0; i < n; ++i) p[i] = int(i);
    for (size_t i = 0; i + 1 < n; ++i) {
        const size_t j = i + size_t(rng.uniform_int(0, int64_t(n - 1 - i)));
        std::swap(p[i], p[j]);
    }
    return p;
}

nn::Tensor<float> gather_batch(const std::vector<const ImageTensor*>& batch) {
    return translation::batch_to_nchw<float>(batch);
}

} // namespace

std::map<std::string, double> train_step(TranslationState& state,
                                         const std::vector<const ImageTensor*>& noisy_batch,
                                         const std::vector<const ImageTensor*>& clean_batch,
                                         const std::vector<const ImageTensor*>& virtual_batch,
                                         const std::vector<const ImageTensor*>& paired_pseudo,
                                         uint64_t patch_seed) {
    ModelBundle<float>& model = state.model;
    const TrainConfig& cfg = state.config;
    const bool two_stage = model.two_stage;
    const bool use_gan = cfg.lambda_gan != 0.0;
    const bool use_cyc = cfg.lambda_cyc != 0.0;
    const bool use_pair = cfg.lambda_pair != 0.0 && !paired_pseudo.empty();
    const bool use_res = cfg.resilient && cfg.lambda_nce != 0.0 && model.with_heads;
    if (noisy_batch.empty() || clean_batch.empty() || virtual_batch.empty())
        throw DataError("train_step: missing domain batch");
    if (use_pair && paired_pseudo.size() != noisy_batch.size())
        throw DataError("train_step: paired pseudo batch misaligned");

    std::map<std::string, double> terms{
        {"disc_local_fwd", 0.0},  {"disc_local_bwd", 0.0}, {"disc_global_fwd", 0.0},
        {"disc_global_bwd", 0.0}, {"gen_gan", 0.0},        {"cycle_local", 0.0},
        {"cycle_global", 0.0},    {"paired", 0.0},         {"resilient", 0.0},
        {"gen_total", 0.0}};

    Graph<float> g;
    Node<float>* n = g.constant(gather_batch(noisy_batch));
    Node<float>* t1 = g.constant(gather_batch(clean_batch)); // stage-1 target domain
    Node<float>* v = two_stage ? g.constant(gather_batch(virtual_batch)) : t1;

    // ---- generator forwards ----
    auto s1 = model.gen_noisy_to_clean->apply(g, n);
    Node<float>* bwd1 = nullptr; // stage-1 backward generator output
    if (use_gan || use_cyc) bwd1 = model.gen_clean_to_noisy->apply(g, t1).image;
    Node<float>* cyc1a = nullptr;
    Node<float>* cyc1b = nullptr;
    if (use_cyc) {
        cyc1a = model.gen_clean_to_noisy->apply(g, s1.image).image;
        cyc1b = model.gen_noisy_to_clean->apply(g, bwd1).image;
    }

    // The second stage consumes the detached first-stage output, so neither
    // stage's gradient crosses into the other (parameter-group isolation).
    Node<float>* s1_detached = nullptr;
    Generator<float>::Out s2{nullptr, nullptr};
    Node<float>* bwd2 = nullptr;
    Node<float>* cyc2a = nullptr;
    Node<float>* cyc2b = nullptr;
    if (two_stage) {
        s1_detached = ops::stopgrad(g, s1.image);
        s2 = model.gen_clean_to_virtual->apply(g, s1_detached);
        if (use_gan || use_cyc) bwd2 = model.gen_virtual_to_clean->apply(g, v).image;
        if (use_cyc) {
            cyc2a = model.gen_virtual_to_clean->apply(g, s2.image).image;
            cyc2b = model.gen_clean_to_virtual->apply(g, bwd2).image;
        }
    }

    // ---- discriminator step ----
    if (use_gan) {
        std::vector<std::pair<Node<float>*, float>> d_terms;
        Node<float>* d1f = gan_node(g, model.disc_clean_local->apply(g, ops::stopgrad(g, s1.image)),
                                    model.disc_clean_local->apply(g, t1));
        Node<float>* d1b = gan_node(g, model.disc_noisy->apply(g, ops::stopgrad(g, bwd1)),
                                    model.disc_noisy->apply(g, n));
        terms["disc_local_fwd"] = d1f->value.item();
        terms["disc_local_bwd"] = d1b->value.item();
        d_terms.push_back({d1f, -1.0f});
        d_terms.push_back({d1b, -1.0f});
        if (two_stage) {
            Node<float>* d2f = gan_node(g, model.disc_virtual->apply(g, ops::stopgrad(g, s2.image)),
                                        model.disc_virtual->apply(g, v));
            Node<float>* d2b =
                gan_node(g, model.disc_clean_global->apply(g, ops::stopgrad(g, bwd2)),
                         model.disc_clean_global->apply(g, t1));
            terms["disc_global_fwd"] = d2f->value.item();
            terms["disc_global_bwd"] = d2b->value.item();
            d_terms.push_back({d2f, -1.0f});
            d_terms.push_back({d2b, -1.0f});
        }
        for (const char* k : {"disc_local_fwd", "disc_local_bwd", "disc_global_fwd",
                              "disc_global_bwd"})
            check_term(k, terms[k]);
        // Discriminators ascend the adversarial value, i.e. descend its negation.
        Node<float>* d_loss = ops::weighted_sum<float>(g, d_terms);
        g.backward(d_loss);
        state.opt_disc.step();
        state.opt_disc.zero_grad();
    }

    // ---- combined generator step ----
    std::vector<std::pair<Node<float>*, float>> g_terms;
    if (use_gan) {
        // Fresh scores through the just-updated discriminators; gradient flows
        // through these into the generators.
        std::vector<Node<float>*> gans;
        gans.push_back(gen_gan_node(g, model.disc_clean_local->apply(g, s1.image),
                                    cfg.non_saturating));
        gans.push_back(gen_gan_node(g, model.disc_noisy->apply(g, bwd1), cfg.non_saturating));
        if (two_stage) {
            gans.push_back(
                gen_gan_node(g, model.disc_virtual->apply(g, s2.image), cfg.non_saturating));
            gans.push_back(gen_gan_node(g, model.disc_clean_global->apply(g, bwd2),
                                        cfg.non_saturating));
        }
        double acc = 0.0;
        for (Node<float>* t : gans) {
            acc += t->value.item();
            g_terms.push_back({t, float(cfg.lambda_gan)});
        }
        terms["gen_gan"] = acc;
        check_term("gen_gan", acc);
    }
    if (use_cyc) {
        Node<float>* c1 = ops::weighted_sum<float>(
            g, {{ops::l1_mean(g, cyc1a, n), 1.0f}, {ops::l1_mean(g, cyc1b, t1), 1.0f}});
        terms["cycle_local"] = c1->value.item();
        check_term("cycle_local", terms["cycle_local"]);
        g_terms.push_back({c1, float(cfg.lambda_cyc)});
        if (two_stage) {
            Node<float>* c2 = ops::weighted_sum<float>(
                g,
                {{ops::l1_mean(g, cyc2a, s1_detached), 1.0f}, {ops::l1_mean(g, cyc2b, v), 1.0f}});
            terms["cycle_global"] = c2->value.item();
            check_term("cycle_global", terms["cycle_global"]);
            g_terms.push_back({c2, float(cfg.lambda_cyc)});
        }
    }
    if (use_pair) {
        Node<float>* rpair = g.constant(gather_batch(paired_pseudo));
        Node<float>* p = ops::l1_mean(g, s1.image, rpair);
        terms["paired"] = p->value.item();
        check_term("paired", terms["paired"]);
        g_terms.push_back({p, float(cfg.lambda_pair)});
    }
    if (use_res) {
        Node<float>* v_img = two_stage ? s2.image : s1.image;
        Generator<float>& vside =
            two_stage ? *model.gen_virtual_to_clean : *model.gen_clean_to_noisy;
        Node<float>* feat_virtual = vside.encode(g, v_img);
        const int b = int(noisy_batch.size());
        std::vector<std::pair<Node<float>*, float>> nce_terms;
        double acc = 0.0;
        for (int item = 0; item < b; ++item) {
            Node<float>* nce =
                resilient_node(g, model, s1.feature, feat_virtual, item, cfg.patches_p,
                               cfg.patches_m, cfg.tau, hash64({patch_seed, uint64_t(item)}));
            acc += nce->value.item();
            nce_terms.push_back({nce, 1.0f / float(b)});
        }
        Node<float>* res = ops::weighted_sum<float>(g, nce_terms);
        terms["resilient"] = acc / double(b);
        check_term("resilient", terms["resilient"]);
        g_terms.push_back({res, float(cfg.lambda_nce)});
    }

    if (!g_terms.empty()) {
        Node<float>* g_loss = ops::weighted_sum<float>(g, g_terms);
        terms["gen_total"] = g_loss->value.item();
        check_term("gen_total", terms["gen_total"]);
        g.backward(g_loss);
        state.opt_gen.step();
    }
    // The generator backward also deposits gradients into discriminator
    // parameters through the fresh score passes; clear everything.
    state.opt_gen.zero_grad();
    state.opt_disc.zero_grad();
    return terms;
}

// ---- training loop ---------------------------------------------------------------

namespace {

void append_epoch_log(const std::string& out_dir, const EpochLog& log) {
    if (out_dir.empty()) return;
    nlohmann::json j;
    j["epoch"] = log.epoch;
    j["terms"] = log.terms;
    if (log.val_psnr) j["val_psnr"] = *log.val_psnr;
    if (log.val_ssim) j["val_ssim"] = *log.val_ssim;
    std::ofstream out(fs::path(out_dir) / "train_log.jsonl", std::ios::app);
    if (!out) throw DataError("cannot write train log in " + out_dir);
    out << j.dump() << "\n";
}

} // namespace

TrainResult train(const TrainConfig& config, const TrainData& data) {
    TrainConfig cfg = config;
    if (data.noisy.empty() || data.virt.empty()) throw DataError("train: missing domain data");
    const bool two_stage = cfg.decoupling;
    if (two_stage && data.pseudo.empty())
        throw DataError("train: two-stage pipeline requires pseudo-label images");
    if (!data.pseudo.empty() && data.pseudo.size() != data.noisy.size())
        throw DataError("train: pseudo-labels must align with noisy frames");
    if (data.pseudo.empty()) cfg.lambda_pair = 0.0;
    if (data.val_noisy.size() != data.val_virtual.size())
        throw DataError("train: unpaired validation sets");

    TrainResult result;
    result.state = std::make_unique<TranslationState>(cfg);
    TranslationState& st = *result.state;

    if (!cfg.out_dir.empty()) {
        fs::create_directories(cfg.out_dir);
        std::ofstream(fs::path(cfg.out_dir) / "train_log.jsonl", std::ios::trunc);
    }

    const size_t n_images = data.noisy.size();
    const int batch = std::max(1, cfg.batch_size);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<int> perm_n = permutation(n_images, st.rng);
        std::vector<int> perm_c = two_stage ? permutation(data.pseudo.size(), st.rng)
                                            : permutation(data.virt.size(), st.rng);
        std::vector<int> perm_v = permutation(data.virt.size(), st.rng);

        EpochLog log;
        log.epoch = epoch + 1;
        size_t steps = 0;
        for (size_t start = 0; start < n_images; start += size_t(batch)) {
            const size_t stop = std::min(n_images, start + size_t(batch));
            std::vector<const ImageTensor*> bn, bc, bv, bp;
            for (size_t i = start; i < stop; ++i) {
                bn.push_back(&data.noisy[size_t(perm_n[i])]);
                bc.push_back(two_stage ? &data.pseudo[size_t(perm_c[i % perm_c.size()])]
                                       : &data.virt[size_t(perm_c[i % perm_c.size()])]);
                bv.push_back(&data.virt[size_t(perm_v[i % perm_v.size()])]);
                if (!data.pseudo.empty() && two_stage)
                    bp.push_back(&data.pseudo[size_t(perm_n[i])]);
            }
            const uint64_t patch_seed = hash64({cfg.seed, uint64_t(epoch), uint64_t(steps)});
            auto step_terms = train_step(st, bn, bc, bv, bp, patch_seed);
            for (const auto& [k, val] : step_terms) log.terms[k] += val;
            ++steps;
        }
        for (auto& [k, val] : log.terms) val /= double(steps);

        if (!data.val_noisy.empty()) {
            std::vector<ImageTensor> translated = translate(st, data.val_noisy);
            double psnr_acc = 0.0, ssim_acc = 0.0;
            for (size_t i = 0; i < translated.size(); ++i) {
                psnr_acc += metrics::psnr(translated[i], data.val_virtual[i]);
                ssim_acc += metrics::ssim(translated[i], data.val_virtual[i]);
            }
            log.val_psnr = psnr_acc / double(translated.size());
            log.val_ssim = ssim_acc / double(translated.size());
        }

        st.epoch = epoch + 1;
        append_epoch_log(cfg.out_dir, log);
        result.log.push_back(std::move(log));

        if (!cfg.out_dir.empty() && cfg.checkpoint_interval > 0 &&
            (epoch + 1) % cfg.checkpoint_interval == 0) {
            char name[48];
            std::snprintf(name, sizeof(name), "checkpoint_epoch%04d.arit", epoch + 1);
            write_checkpoint((fs::path(cfg.out_dir) / name).string(), st);
        }
    }

    if (!cfg.out_dir.empty())
        write_checkpoint((fs::path(cfg.out_dir) / "checkpoint_final.arit").string(), st);
    return result;
}

std::vector<ImageTensor> translate(TranslationState& state, const std::vector<ImageTensor>& images) {
    std::vector<ImageTensor> out(images.size());
    parallel_for(images.size(), [&](size_t i) {
        Graph<float> g;
        Node<float>* x = g.constant(translation::to_nchw<float>(images[i]));
        auto s1 = state.model.gen_noisy_to_clean->apply(g, x);
        Node<float>* v = s1.image;
        if (state.model.two_stage) v = state.model.gen_clean_to_virtual->apply(g, s1.image).image;
        out[i] = translation::nchw_to_image(v->value, 0);
        out[i].clip01();
    });
    return out;
}

double evaluate_resilient(TranslationState& state, const ImageTensor& noisy, uint64_t patch_seed) {
    if (!state.model.with_heads) throw DataError("evaluate_resilient: model has no projection heads");
    Graph<float> g;
    Node<float>* x = g.constant(translation::to_nchw<float>(noisy));
    auto s1 = state.model.gen_noisy_to_clean->apply(g, x);
    Node<float>* v_img = s1.image;
    if (state.model.two_stage)
        v_img = state.model.gen_clean_to_virtual->apply(g, ops::stopgrad(g, s1.image)).image;
    Generator<float>& vside = state.model.two_stage ? *state.model.gen_virtual_to_clean
                                                    : *state.model.gen_clean_to_noisy;
    Node<float>* feat_virtual = vside.encode(g, v_img);
    Node<float>* nce =
        resilient_node(g, state.model, s1.feature, feat_virtual, 0, state.config.patches_p,
                       state.config.patches_m, state.config.tau, hash64({patch_seed, 0ULL}));
    return double(nce->value.item());
}

// ---- data loading ------------------------------------------------------------------

TrainData load_train_data(const TrainConfig& config) {
    if (config.dataset_root.empty()) throw ConfigError("train: dataset_root not set");
    if (config.corrupted_dir.empty()) throw ConfigError("train: corrupted_dir not set");
    DatasetManifest manifest = read_manifest(
        (fs::path(config.dataset_root) / "manifest.json").string());

    TrainData data;
    auto frame_png = [](const std::string& dir, int frame_id) {
        return (fs::path(dir) / (frame_name(frame_id) + ".png")).string();
    };
    for (int id : manifest.train) {
        data.noisy.push_back(read_png(frame_png(config.corrupted_dir, id)));
        data.virt.push_back(
            read_png(frame_png((fs::path(config.dataset_root) / "virtual").string(), id)));
        if (!config.pseudo_dir.empty())
            data.pseudo.push_back(read_png(frame_png(config.pseudo_dir, id)));
    }
    for (int id : manifest.val) {
        data.val_noisy.push_back(read_png(frame_png(config.corrupted_dir, id)));
        data.val_virtual.push_back(
            read_png(frame_png((fs::path(config.dataset_root) / "virtual").string(), id)));
    }
    return data;
}

} // namespace arit::trainer
