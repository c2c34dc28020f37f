#include "arit/translation/losses.hpp"

#include <cmath>

namespace arit::translation {

namespace {

constexpr double kScoreFloor = 1e-7;

double mean_log(const std::vector<double>& scores, bool one_minus) {
    if (scores.empty()) throw DataError("gan_loss: empty score map");
    double acc = 0.0;
    for (double s : scores) {
        if (!std::isfinite(s) || s < 0.0 || s > 1.0)
            throw NumericError("gan_loss: score outside [0,1]");
        const double v = one_minus ? 1.0 - s : s;
        acc += std::log(std::max(v, kScoreFloor));
    }
    return acc / double(scores.size());
}

double l1_mean_pair(const ImageTensor& a, const ImageTensor& b) {
    if (!a.same_shape(b)) throw DataError("cycle_loss: shape mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) acc += std::abs(double(a.data[i]) - b.data[i]);
    return acc / double(a.data.size());
}

Eigen::VectorXd normalized(const Eigen::VectorXd& v) {
    const double n = v.norm();
    return n > 1e-12 ? Eigen::VectorXd(v / n) : v;
}

Eigen::VectorXd feature_at(const nn::Tensor<float>& map, int y, int x) {
    Eigen::VectorXd v(map.c);
    for (int ch = 0; ch < map.c; ++ch) v[ch] = double(map.at(0, ch, y, x));
    return v;
}

} // namespace

double gan_loss(const std::vector<double>& fake_scores, const std::vector<double>& real_scores) {
    return mean_log(fake_scores, /*one_minus=*/true) + mean_log(real_scores, /*one_minus=*/false);
}

double cycle_loss(const ImageFn& g_st, const ImageFn& g_ts,
                  const std::vector<ImageTensor>& s_batch,
                  const std::vector<ImageTensor>& t_batch) {
    if (s_batch.empty() || t_batch.empty()) throw DataError("cycle_loss: empty batch");
    double fwd = 0.0;
    for (const ImageTensor& s : s_batch) fwd += l1_mean_pair(g_ts(g_st(s)), s);
    double bwd = 0.0;
    for (const ImageTensor& t : t_batch) bwd += l1_mean_pair(g_st(g_ts(t)), t);
    return fwd / double(s_batch.size()) + bwd / double(t_batch.size());
}

void PatchFeatureBatch::validate() const {
    const int p = int(positions.size());
    if (queries.rows() != p || positives.rows() != p || int(negatives.size()) != p)
        throw DataError("PatchFeatureBatch: inconsistent row counts");
    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j)
            if (positions[i] == positions[j])
                throw DataError("PatchFeatureBatch: duplicate query position");
    auto check_unit = [](const Eigen::VectorXd& v) {
        if (std::abs(v.norm() - 1.0) > 1e-5)
            throw DataError("PatchFeatureBatch: vector not unit-norm");
    };
    for (int i = 0; i < p; ++i) {
        check_unit(queries.row(i));
        check_unit(positives.row(i));
        for (int m = 0; m < negatives[i].rows(); ++m) check_unit(negatives[i].row(m));
    }
}

PatchFeatureBatch sample_patch_pairs(const nn::Tensor<float>& feat_noisy,
                                     const nn::Tensor<float>& feat_virtual, int P, int M,
                                     uint64_t seed, const Projector& project_query,
                                     const Projector& project_positive) {
    if (feat_noisy.h != feat_virtual.h || feat_noisy.w != feat_virtual.w)
        throw DataError("sample_patch_pairs: spatial shape mismatch");
    if (feat_noisy.n != 1 || feat_virtual.n != 1)
        throw DataError("sample_patch_pairs: expects single-image feature maps");
    const int locations = feat_noisy.h * feat_noisy.w;
    if (P < 1 || M < 0 || P + M > locations)
        throw DataError("sample_patch_pairs: P + M exceeds available locations");

    // Partial Fisher-Yates over the location grid: the first P draws are the
    // query positions, the next M the shared negative positions.
    std::vector<int> pool(static_cast<size_t>(locations));
    for (int i = 0; i < locations; ++i) pool[size_t(i)] = i;
    Rng rng(seed);
    for (int i = 0; i < P + M; ++i) {
        const int j = i + int(rng.uniform_int(0, locations - 1 - i));
        std::swap(pool[size_t(i)], pool[size_t(j)]);
    }

    PatchFeatureBatch batch;
    batch.positions.assign(pool.begin(), pool.begin() + P);
    const int k = int(project_query(feature_at(feat_noisy, 0, 0)).size());
    batch.queries.resize(P, k);
    batch.positives.resize(P, k);
    Eigen::MatrixXd negs(M, k);
    for (int m = 0; m < M; ++m) {
        const int pos = pool[size_t(P + m)];
        negs.row(m) =
            normalized(project_query(feature_at(feat_noisy, pos / feat_noisy.w, pos % feat_noisy.w)));
    }
    for (int i = 0; i < P; ++i) {
        const int pos = batch.positions[size_t(i)];
        const int y = pos / feat_noisy.w, x = pos % feat_noisy.w;
        batch.queries.row(i) = normalized(project_query(feature_at(feat_noisy, y, x)));
        batch.positives.row(i) = normalized(project_positive(feature_at(feat_virtual, y, x)));
    }
    batch.negatives.assign(size_t(P), negs);
    return batch;
}

PatchFeatureBatch sample_patch_pairs(const nn::Tensor<float>& feat_noisy,
                                     const nn::Tensor<float>& feat_virtual, int P, int M,
                                     uint64_t seed) {
    Projector id = [](const Eigen::VectorXd& v) { return v; };
    return sample_patch_pairs(feat_noisy, feat_virtual, P, M, seed, id, id);
}

double resilient_loss(const PatchFeatureBatch& batch, double tau) {
    if (tau <= 0.0) throw DataError("resilient_loss: tau must be positive");
    const int P = int(batch.queries.rows());
    if (P < 1) throw DataError("resilient_loss: empty batch");
    double loss = 0.0;
    for (int j = 0; j < P; ++j) {
        const Eigen::VectorXd q = batch.queries.row(j);
        const double spos = q.dot(batch.positives.row(j)) / tau;
        const Eigen::MatrixXd& negs = batch.negatives[size_t(j)];
        double mx = spos;
        std::vector<double> sneg(size_t(negs.rows()));
        for (int i = 0; i < negs.rows(); ++i) {
            sneg[size_t(i)] = q.dot(negs.row(i)) / tau;
            mx = std::max(mx, sneg[size_t(i)]);
        }
        double denom = std::exp(spos - mx);
        for (double s : sneg) denom += std::exp(s - mx);
        loss += -(spos - mx - std::log(denom));
    }
    return loss / double(P);
}

ObjectiveTerms composite_objective(const ImageFn& g_st, const ImageFn& g_ts,
                                   const ScoreFn& d_t, const ScoreFn& d_s,
                                   const std::vector<ImageTensor>& s_batch,
                                   const std::vector<ImageTensor>& t_batch, double lambda_cyc,
                                   double lambda_pair,
                                   const std::vector<ImageTensor>* paired_targets) {
    if (s_batch.empty() || t_batch.empty()) throw DataError("composite_objective: missing domain batch");
    ObjectiveTerms terms;

    std::vector<double> fake_t, real_t, fake_s, real_s;
    auto append = [](std::vector<double>& dst, const std::vector<double>& src) {
        dst.insert(dst.end(), src.begin(), src.end());
    };
    for (const ImageTensor& s : s_batch) append(fake_t, d_t(g_st(s)));
    for (const ImageTensor& t : t_batch) append(real_t, d_t(t));
    for (const ImageTensor& t : t_batch) append(fake_s, d_s(g_ts(t)));
    for (const ImageTensor& s : s_batch) append(real_s, d_s(s));
    terms.gan_forward = gan_loss(fake_t, real_t);
    terms.gan_backward = gan_loss(fake_s, real_s);
    terms.cycle = lambda_cyc != 0.0 ? cycle_loss(g_st, g_ts, s_batch, t_batch) : 0.0;

    if (lambda_pair != 0.0) {
        if (!paired_targets || paired_targets->size() != s_batch.size())
            throw DataError("composite_objective: paired targets missing");
        double acc = 0.0;
        for (size_t i = 0; i < s_batch.size(); ++i)
            acc += l1_mean_pair(g_st(s_batch[i]), (*paired_targets)[i]);
        terms.paired = acc / double(s_batch.size());
    }
    terms.total = terms.gan_forward + terms.gan_backward + lambda_cyc * terms.cycle +
                  lambda_pair * terms.paired;
    return terms;
}

std::vector<double> discriminator_scores(Discriminator<float>& disc, const ImageTensor& image) {
    Graph<float> g;
    Node<float>* x = g.constant(to_nchw<float>(image));
    Node<float>* s = disc.apply(g, x);
    std::vector<double> out(s->value.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = double(s->value.data[i]);
    return out;
}

ObjectiveTerms local_objective(ModelBundle<float>& model,
                               const std::vector<ImageTensor>& noisy_batch,
                               const std::vector<ImageTensor>& clean_batch,
                               const LossWeights& weights,
                               const std::vector<ImageTensor>* paired_pseudo) {
    ImageFn g_st = [&](const ImageTensor& im) { return model.gen_noisy_to_clean->run(im); };
    ImageFn g_ts = [&](const ImageTensor& im) { return model.gen_clean_to_noisy->run(im); };
    ScoreFn d_t = [&](const ImageTensor& im) {
        return discriminator_scores(*model.disc_clean_local, im);
    };
    ScoreFn d_s = [&](const ImageTensor& im) { return discriminator_scores(*model.disc_noisy, im); };
    return composite_objective(g_st, g_ts, d_t, d_s, noisy_batch, clean_batch,
                               weights.lambda_cyc, weights.lambda_pair, paired_pseudo);
}

ObjectiveTerms global_objective(ModelBundle<float>& model,
                                const std::vector<ImageTensor>& clean_batch,
                                const std::vector<ImageTensor>& virtual_batch,
                                const LossWeights& weights) {
    if (!model.two_stage) throw DataError("global_objective: single-stage model has no second stage");
    ImageFn g_st = [&](const ImageTensor& im) { return model.gen_clean_to_virtual->run(im); };
    ImageFn g_ts = [&](const ImageTensor& im) { return model.gen_virtual_to_clean->run(im); };
    ScoreFn d_t = [&](const ImageTensor& im) { return discriminator_scores(*model.disc_virtual, im); };
    ScoreFn d_s = [&](const ImageTensor& im) {
        return discriminator_scores(*model.disc_clean_global, im);
    };
    return composite_objective(g_st, g_ts, d_t, d_s, clean_batch, virtual_batch,
                               weights.lambda_cyc, /*lambda_pair=*/0.0, nullptr);
}

ForwardFullResult forward_full(const ImageTensor& noisy, ModelBundle<float>& model) {
    Graph<float> g;
    Node<float>* x = g.constant(to_nchw<float>(noisy));
    auto stage1 = model.gen_noisy_to_clean->apply(g, x);

    ForwardFullResult out;
    out.feat_noisy = stage1.feature->value;
    Node<float>* v_node = stage1.image;
    if (model.two_stage) v_node = model.gen_clean_to_virtual->apply(g, stage1.image).image;

    // Virtual-side encoder on the generated image; in single-stage mode the
    // backward generator's encoder plays that role.
    Generator<float>& vside =
        model.two_stage ? *model.gen_virtual_to_clean : *model.gen_clean_to_noisy;
    out.feat_virtual = vside.encode(g, v_node)->value;

    out.r_hat = nchw_to_image(stage1.image->value, 0);
    out.v_hat = nchw_to_image(v_node->value, 0);
    out.r_hat.clip01();
    out.v_hat.clip01();
    return out;
}

} // namespace arit::translation
