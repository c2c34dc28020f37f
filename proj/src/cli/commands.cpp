#include "arit/cli/commands.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "arit/cli/charts.hpp"
#include "arit/common/error.hpp"
#include "arit/common/threading.hpp"
#include "arit/corruption/corruption.hpp"
#include "arit/downstream/depth.hpp"
#include "arit/downstream/retrieval.hpp"
#include "arit/imagecore/dataset.hpp"
#include "arit/imagecore/image_io.hpp"
#include "arit/imagecore/lumen.hpp"
#include "arit/metrics/metrics.hpp"
#include "arit/splatting/perceptual.hpp"
#include "arit/splatting/pseudo.hpp"
#include "arit/trainer/trainer.hpp"

namespace arit::cli {

namespace fs = std::filesystem;

namespace {

void write_run_config(const fs::path& out_dir, const RunConfig& cfg) {
    fs::create_directories(out_dir);
    nlohmann::json j;
    j["subcommand"] = cfg.subcommand;
    j["config_hash"] = cfg.hash();
    j["config"] = nlohmann::json::object();
    for (const auto& [k, v] : cfg.values) j["config"][k] = v;
    std::ofstream out(out_dir / "run_config.json", std::ios::binary);
    if (!out) throw DataError("cannot write " + (out_dir / "run_config.json").string());
    out << j.dump(2) << "\n";
}

void stamp_metadata(metrics::MetricReport& report, const RunConfig& cfg) {
    report.metadata["subcommand"] = cfg.subcommand;
    report.metadata["config_hash"] = cfg.hash();
}

std::vector<std::string> report_formats(const RunConfig& cfg) {
    return split_list(cfg.get_string("report.formats"));
}

std::string make_stamp(const RunConfig& cfg) {
    if (!cfg.get_bool("report.timestamp")) return "";
    const std::time_t t = std::time(nullptr);
    char buf[40];
    std::strftime(buf, sizeof(buf), "%Y-%m-%d %H:%M UTC", std::gmtime(&t));
    return buf;
}

std::string frame_png(int frame_id) { return img::frame_name(frame_id) + ".png"; }

std::vector<int> frames_in_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
    std::vector<int> ids;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name.size() != 16 || name.rfind("frame_", 0) != 0 || name.substr(12) != ".png")
            continue;
        if (!std::all_of(name.begin() + 6, name.begin() + 12,
                         [](unsigned char c) { return std::isdigit(c); }))
            continue;
        ids.push_back(std::stoi(name.substr(6, 6)));
    }
    std::sort(ids.begin(), ids.end());
    if (ids.empty()) throw DataError("no frame_*.png files in " + dir.string());
    return ids;
}

std::vector<img::ImageTensor> load_frames(const fs::path& dir, const std::vector<int>& ids) {
    std::vector<img::ImageTensor> out(ids.size());
    parallel_for(int(ids.size()),
                 [&](int i) { out[size_t(i)] = img::read_png((dir / frame_png(ids[size_t(i)])).string()); });
    return out;
}

img::DatasetManifest manifest_of(const std::string& dataset_root) {
    return img::read_manifest((fs::path(dataset_root) / "manifest.json").string());
}

std::vector<int> split_ids(const img::DatasetManifest& manifest, const std::string& split) {
    if (split == "all") return manifest.all_frames();
    return manifest.split(split);
}

// ---- gen-data -----------------------------------------------------------------

void cmd_gen_data(const RunConfig& cfg, const std::string& out) {
    std::map<std::string, std::string> lumen_kv;
    for (const auto& [k, v] : cfg.values)
        if (k.rfind("lumen.", 0) == 0) lumen_kv[k.substr(6)] = v;
    const img::LumenParams params = img::LumenParams::from_map(lumen_kv);

    const img::LumenDataset ds = img::generate_lumen_dataset(
        cfg.get_u64("data.seed"), int(cfg.get_int("data.frames")),
        int(cfg.get_int("data.resolution")), params);

    fs::create_directories(out);
    parallel_for(int(ds.samples.size()),
                 [&](int i) { img::write_sample(out, ds.samples[size_t(i)]); });
    img::write_manifest((fs::path(out) / "manifest.json").string(), ds.manifest);
    write_run_config(out, cfg);
}

// ---- corrupt ------------------------------------------------------------------

void cmd_corrupt(const RunConfig& cfg, const std::string& data, const std::string& out) {
    const img::DatasetManifest manifest = manifest_of(data);
    const std::vector<int> ids = manifest.all_frames();

    corr::CorruptionPolicy policy;
    policy.severity_lo = int(cfg.get_int("corrupt.severity_lo"));
    policy.severity_hi = int(cfg.get_int("corrupt.severity_hi"));
    policy.seed = cfg.get_u64("corrupt.seed");
    policy.force_zero_intensity = cfg.get_bool("corrupt.force_zero_intensity");

    const std::string kind_name = cfg.get_string("corrupt.kind");
    corr::CorruptionSpec single;
    if (!kind_name.empty()) {
        single.kind = corr::kind_from_name(kind_name);
        single.severity = int(cfg.get_int("corrupt.severity"));
        single.intensity =
            policy.force_zero_intensity ? 0.0 : cfg.get_double("corrupt.intensity");
        single.angle = cfg.get_double("corrupt.angle");
        single.validate();
    }

    fs::create_directories(out);
    std::vector<corr::FrameCorruptionRecord> records(ids.size());
    parallel_for(int(ids.size()), [&](int i) {
        const int id = ids[size_t(i)];
        corr::FrameCorruptionRecord rec;
        rec.frame_id = id;
        if (kind_name.empty()) {
            const auto [s0, s1] = corr::sample_policy(policy, id);
            rec.specs[0] = s0;
            rec.specs[1] = s1;
        } else {
            rec.specs[0] = single;
            rec.specs[1] = single;
            rec.specs[1].intensity = 0.0; // second slot is a no-op in single-kind mode
        }
        rec.seeds[0] = corr::frame_seed(policy, id, rec.specs[0].kind);
        rec.seeds[1] = corr::frame_seed(policy, id, rec.specs[1].kind);

        img::ImageTensor image = img::read_frame_image(data, "real", id);
        image = corr::apply_corruption(image, rec.specs[0], rec.seeds[0]);
        image = corr::apply_corruption(image, rec.specs[1], rec.seeds[1]);
        img::write_png((fs::path(out) / frame_png(id)).string(), image);
        records[size_t(i)] = rec;
    });
    corr::write_spec_log((fs::path(out) / "corruption_log.jsonl").string(), records);
    write_run_config(out, cfg);
}

// ---- pseudo -------------------------------------------------------------------

void cmd_pseudo(const RunConfig& cfg, const std::string& data, const std::string& corrupted) {
    const img::DatasetManifest manifest = manifest_of(data);
    const std::vector<int> ids = split_ids(manifest, cfg.get_string("pseudo.split"));

    splat::PseudoConfig pc;
    pc.window = int(cfg.get_int("pseudo.window"));
    pc.init_stride = int(cfg.get_int("pseudo.init_stride"));
    pc.supervision_views = int(cfg.get_int("pseudo.supervision_views"));
    pc.steps = int(cfg.get_int("pseudo.steps"));
    pc.step_size = cfg.get_double("pseudo.step_size");
    pc.style_weight = cfg.get_double("pseudo.style_weight");
    pc.extractor_seed = cfg.get_u64("pseudo.extractor_seed");

    splat::generate_pseudo_labels(data, corrupted, ids, pc);
    write_run_config(fs::path(data) / "pseudo", cfg);
}

// ---- train --------------------------------------------------------------------

trainer::TrainConfig train_config_from(const RunConfig& cfg, const std::string& data,
                                       const std::string& corrupted, const std::string& pseudo,
                                       const std::string& out) {
    trainer::TrainConfig tc;
    tc.dataset_root = data;
    tc.corrupted_dir = corrupted;
    tc.pseudo_dir = pseudo;
    tc.out_dir = out;
    tc.epochs = int(cfg.get_int("train.epochs"));
    tc.batch_size = int(cfg.get_int("train.batch_size"));
    tc.lr_generator = cfg.get_double("train.lr_generator");
    tc.lr_discriminator = cfg.get_double("train.lr_discriminator");
    tc.lambda_gan = cfg.get_double("train.lambda_gan");
    tc.lambda_cyc = cfg.get_double("train.lambda_cyc");
    tc.lambda_pair = cfg.get_double("train.lambda_pair");
    tc.lambda_nce = cfg.get_double("train.lambda_nce");
    tc.patches_p = int(cfg.get_int("train.patches_p"));
    tc.patches_m = int(cfg.get_int("train.patches_m"));
    tc.tau = cfg.get_double("train.tau");
    tc.decoupling = cfg.get_bool("train.decoupling");
    tc.resilient = cfg.get_bool("train.resilient");
    tc.non_saturating = cfg.get_bool("train.non_saturating");
    tc.seed = cfg.get_u64("train.seed");
    tc.checkpoint_interval = int(cfg.get_int("train.checkpoint_interval"));
    tc.gen.base_channels = int(cfg.get_int("model.gen_base"));
    tc.gen.n_downsamples = int(cfg.get_int("model.gen_downsamples"));
    tc.gen.n_residual_blocks = int(cfg.get_int("model.gen_resblocks"));
    tc.disc.base_channels = int(cfg.get_int("model.disc_base"));
    tc.disc.n_layers = int(cfg.get_int("model.disc_layers"));
    tc.head.k_proj = int(cfg.get_int("model.head_proj"));
    tc.head.hidden = int(cfg.get_int("model.head_hidden"));
    return tc;
}

void cmd_train(const RunConfig& cfg, const std::string& data, const std::string& corrupted,
               const std::string& pseudo, const std::string& out) {
    const trainer::TrainConfig tc = train_config_from(cfg, data, corrupted, pseudo, out);
    const trainer::TrainData loaded = trainer::load_train_data(tc);
    trainer::train(tc, loaded);
    write_run_config(out, cfg);
}

// ---- translate ----------------------------------------------------------------

void cmd_translate(const RunConfig& cfg, const std::string& checkpoint,
                   const std::string& images, const std::string& out) {
    auto state = trainer::read_checkpoint(checkpoint);
    const std::vector<int> ids = frames_in_dir(images);
    const std::vector<img::ImageTensor> inputs = load_frames(images, ids);
    const std::vector<img::ImageTensor> outputs = trainer::translate(*state, inputs);

    fs::create_directories(out);
    parallel_for(int(ids.size()), [&](int i) {
        img::write_png((fs::path(out) / frame_png(ids[size_t(i)])).string(),
                       outputs[size_t(i)]);
    });
    write_run_config(out, cfg);
}

// ---- eval ---------------------------------------------------------------------

void cmd_eval(const RunConfig& cfg, const std::string& images, const std::string& refs,
              const std::string& out) {
    const std::vector<int> ids_a = frames_in_dir(images);
    const std::vector<int> ids_b = frames_in_dir(refs);
    std::vector<int> ids;
    std::set_intersection(ids_a.begin(), ids_a.end(), ids_b.begin(), ids_b.end(),
                          std::back_inserter(ids));
    if (ids.empty()) throw DataError("eval: no common frame ids between the two directories");

    const std::vector<img::ImageTensor> a = load_frames(images, ids);
    const std::vector<img::ImageTensor> b = load_frames(refs, ids);
    const double cap = cfg.get_double("eval.psnr_cap");

    const int n = int(ids.size());
    std::vector<double> psnr_v(static_cast<size_t>(n));
    std::vector<double> ssim_v(static_cast<size_t>(n));
    std::vector<double> id_v(static_cast<size_t>(n));
    parallel_for(n, [&](int i) {
        psnr_v[size_t(i)] = metrics::psnr(a[size_t(i)], b[size_t(i)], cap);
        ssim_v[size_t(i)] = metrics::ssim(a[size_t(i)], b[size_t(i)]);
        id_v[size_t(i)] = ids[size_t(i)];
    });

    const splat::SeededConvExtractor embedder(cfg.get_u64("eval.embedder_seed"));
    const Eigen::MatrixXd ea = metrics::embed_all(embedder, a);
    const Eigen::MatrixXd eb = metrics::embed_all(embedder, b);

    metrics::MetricReport report;
    report.per_item["frame_id"] = id_v;
    report.per_item["psnr"] = psnr_v;
    report.per_item["ssim"] = ssim_v;
    auto mean = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x;
        return s / double(v.size());
    };
    report.scalars["psnr_mean"] = mean(psnr_v);
    report.scalars["ssim_mean"] = mean(ssim_v);
    report.scalars["fid"] = metrics::fid(ea, eb);
    report.scalars["kid"] = metrics::kid_default(ea, eb, cfg.get_u64("eval.kid_seed"));
    report.scalars["n_items"] = double(n);
    stamp_metadata(report, cfg);
    report.metadata["images"] = images;
    report.metadata["refs"] = refs;

    ChartSpec chart;
    chart.kind = "bar";
    chart.value_key = "psnr";
    chart.title = "PSNR PER FRAME";
    if (n <= 24)
        for (int id : ids) chart.labels.push_back(std::to_string(id));
    chart.stamp = make_stamp(cfg);
    emit_report(report, out, "eval_report", report_formats(cfg), chart);
    write_run_config(out, cfg);
}

// ---- depth-eval ---------------------------------------------------------------

void cmd_depth_eval(const RunConfig& cfg, const std::string& data, const std::string& images,
                    const std::string& out) {
    const img::DatasetManifest manifest = manifest_of(data);
    const std::vector<int> train_ids = split_ids(manifest, cfg.get_string("depth.train_split"));
    const std::vector<int> eval_ids = split_ids(manifest, cfg.get_string("depth.eval_split"));

    std::vector<downstream::DepthSample> train_samples(train_ids.size());
    parallel_for(int(train_ids.size()), [&](int i) {
        const img::SceneSample s = img::read_sample(data, train_ids[size_t(i)]);
        train_samples[size_t(i)] = {s.virtual_image, s.depth};
    });

    downstream::DepthNetConfig dc;
    dc.epochs = int(cfg.get_int("depth.epochs"));
    dc.batch = int(cfg.get_int("depth.batch"));
    dc.lr = cfg.get_double("depth.lr");
    dc.seed = cfg.get_u64("depth.seed");
    dc.base = int(cfg.get_int("depth.base"));
    downstream::DepthTrainResult trained = downstream::train_depth_net(train_samples, dc);

    const std::vector<img::ImageTensor> inputs = load_frames(images, eval_ids);
    std::vector<img::FloatMap> gt(eval_ids.size());
    parallel_for(int(eval_ids.size()), [&](int i) {
        gt[size_t(i)] = img::read_sample(data, eval_ids[size_t(i)]).depth;
    });

    metrics::MetricReport report = downstream::eval_depth_pipeline(trained.model, inputs, gt);
    std::vector<double> id_v;
    for (int id : eval_ids) id_v.push_back(id);
    report.per_item["frame_id"] = id_v;
    report.scalars["train_final_loss"] = trained.final_loss;
    stamp_metadata(report, cfg);
    report.metadata["images"] = images;

    ChartSpec chart;
    chart.kind = "bar";
    chart.value_key = "abs_rel";
    chart.title = "ABS REL PER FRAME";
    if (eval_ids.size() <= 24)
        for (int id : eval_ids) chart.labels.push_back(std::to_string(id));
    chart.stamp = make_stamp(cfg);
    emit_report(report, out, "depth_report", report_formats(cfg), chart);
    write_run_config(out, cfg);
}

// ---- register -----------------------------------------------------------------

void cmd_register(const RunConfig& cfg, const std::string& data, const std::string& images,
                  const std::string& out) {
    const img::DatasetManifest manifest = manifest_of(data);
    const std::vector<int> ids = split_ids(manifest, cfg.get_string("register.split"));

    std::vector<img::ImageTensor> db_images(ids.size());
    std::vector<img::CameraPose> poses(ids.size());
    parallel_for(int(ids.size()), [&](int i) {
        const img::SceneSample s = img::read_sample(data, ids[size_t(i)]);
        db_images[size_t(i)] = s.virtual_image;
        poses[size_t(i)] = s.pose;
    });

    const std::uint64_t eseed = cfg.get_u64("register.embedder_seed");
    const splat::SeededConvExtractor embedder(eseed);
    const downstream::RetrievalIndex index = downstream::build_index(
        db_images, poses, embedder, "seeded-conv-" + std::to_string(eseed));

    const std::vector<img::ImageTensor> queries = load_frames(images, ids);
    metrics::MetricReport report = downstream::register_images(
        queries, poses, index, embedder, cfg.get_double("register.threshold_mm"));

    std::vector<double> id_v;
    for (int id : ids) id_v.push_back(id);
    report.per_item["frame_id"] = id_v;
    stamp_metadata(report, cfg);
    report.metadata["images"] = images;

    ChartSpec chart;
    chart.kind = "bar";
    chart.value_key = "position_error_mm";
    chart.title = "POSITION ERROR MM";
    if (ids.size() <= 24)
        for (int id : ids) chart.labels.push_back(std::to_string(id));
    chart.stamp = make_stamp(cfg);
    emit_report(report, out, "registration_report", report_formats(cfg), chart);
    write_run_config(out, cfg);
}

// ---- bottleneck ---------------------------------------------------------------

std::vector<float> encoder_features(translation::Generator<float>& gen,
                                    const img::ImageTensor& image) {
    nn::Graph<float> g;
    nn::Node<float>* x = g.constant(translation::to_nchw<float>(image));
    return gen.encode(g, x)->value.data;
}

void cmd_bottleneck(const RunConfig& cfg, const std::string& checkpoint, const std::string& data,
                    const std::string& out) {
    auto state = trainer::read_checkpoint(checkpoint);
    translation::Generator<float>& encoder = *state->model.gen_noisy_to_clean;

    const img::DatasetManifest manifest = manifest_of(data);
    const std::vector<int> ids = split_ids(manifest, cfg.get_string("bottleneck.split"));
    const int severity = int(cfg.get_int("bottleneck.severity"));
    const double intensity = cfg.get_double("bottleneck.intensity");
    corr::CorruptionPolicy policy;
    policy.seed = cfg.get_u64("bottleneck.seed");

    std::vector<img::ImageTensor> clean(ids.size());
    parallel_for(int(ids.size()), [&](int i) {
        clean[size_t(i)] = img::read_frame_image(data, "real", ids[size_t(i)]);
    });
    std::vector<std::vector<float>> clean_feats(ids.size());
    for (size_t i = 0; i < ids.size(); ++i)
        clean_feats[i] = encoder_features(encoder, clean[i]);

    std::vector<double> fmd_row, psnr_row, kind_row;
    std::string kind_list;
    std::vector<std::string> labels;
    for (int k = 0; k < corr::kNumKinds; ++k) {
        const auto kind = corr::CorruptionKind(k);
        corr::CorruptionSpec spec;
        spec.kind = kind;
        spec.severity = severity;
        spec.intensity = intensity;

        double fmd_sum = 0.0, psnr_sum = 0.0;
        for (size_t i = 0; i < ids.size(); ++i) {
            const std::uint64_t seed = corr::frame_seed(policy, ids[i], kind);
            const img::ImageTensor corrupted = corr::apply_corruption(clean[i], spec, seed);
            psnr_sum += metrics::psnr(corrupted, clean[i]);
            fmd_sum += metrics::feature_map_distance(encoder_features(encoder, corrupted),
                                                     clean_feats[i]);
        }
        fmd_row.push_back(fmd_sum / double(ids.size()));
        psnr_row.push_back(psnr_sum / double(ids.size()));
        kind_row.push_back(k);
        if (k) kind_list += ",";
        kind_list += corr::kind_name(kind);
        labels.push_back(corr::kind_name(kind));
    }

    const metrics::KendallResult kr = metrics::kendall_tau(fmd_row, psnr_row);

    metrics::MetricReport report;
    report.per_item["kind_index"] = kind_row;
    report.per_item["feature_map_distance"] = fmd_row;
    report.per_item["psnr"] = psnr_row;
    report.scalars["kendall_tau"] = kr.tau;
    report.scalars["kendall_p"] = kr.p_value;
    report.scalars["severity"] = severity;
    report.scalars["n_frames"] = double(ids.size());
    stamp_metadata(report, cfg);
    report.metadata["kinds"] = kind_list;

    ChartSpec chart;
    chart.kind = "scatter";
    chart.x_key = "feature_map_distance";
    chart.value_key = "psnr";
    chart.x_label = "FEATURE MAP DISTANCE";
    chart.y_label = "PSNR";
    chart.title = "CORRUPTION BOTTLENECK";
    chart.stamp = make_stamp(cfg);
    emit_report(report, out, "bottleneck_report", report_formats(cfg), chart);
    write_run_config(out, cfg);
}

// ---- ablate -------------------------------------------------------------------

void cmd_ablate(const RunConfig& cfg, const std::string& data, const std::string& corrupted,
                const std::string& pseudo, const std::string& out) {
    const img::DatasetManifest manifest = manifest_of(data);
    const std::vector<int>& test_ids = manifest.split("test");
    if (test_ids.empty()) throw DataError("ablate: dataset has no test split");

    std::vector<std::uint64_t> seeds;
    for (const std::string& s : split_list(cfg.get_string("ablate.seeds"))) {
        try {
            seeds.push_back(std::stoull(s));
        } catch (const std::exception&) {
            throw ConfigError("ablate.seeds: not an integer: '" + s + "'");
        }
    }
    if (seeds.empty()) throw ConfigError("ablate.seeds: empty seed list");

    const std::vector<img::ImageTensor> test_noisy = load_frames(corrupted, test_ids);
    std::vector<img::ImageTensor> test_virtual(test_ids.size());
    parallel_for(int(test_ids.size()), [&](int i) {
        test_virtual[size_t(i)] = img::read_frame_image(data, "virtual", test_ids[size_t(i)]);
    });
    const splat::SeededConvExtractor embedder(cfg.get_u64("ablate.embedder_seed"));
    const Eigen::MatrixXd ref_emb = metrics::embed_all(embedder, test_virtual);

    struct Variant {
        const char* name;
        bool decoupling;
        bool resilient;
        bool use_pseudo;
    };
    const Variant variants[3] = {{"baseline", false, false, false},
                                 {"decoupling", true, false, true},
                                 {"full", true, true, true}};

    metrics::MetricReport report;
    auto& config_col = report.per_item["config_id"];
    auto& seed_col = report.per_item["seed"];
    auto& fid_col = report.per_item["fid"];
    std::vector<double> means;

    for (int vi = 0; vi < 3; ++vi) {
        const Variant& v = variants[vi];
        double sum = 0.0;
        for (std::uint64_t seed : seeds) {
            trainer::TrainConfig tc;
            tc.dataset_root = data;
            tc.corrupted_dir = corrupted;
            tc.pseudo_dir = v.use_pseudo ? pseudo : "";
            tc.out_dir =
                (fs::path(out) / ("run_" + std::string(v.name) + "_s" + std::to_string(seed)))
                    .string();
            tc.epochs = int(cfg.get_int("ablate.epochs"));
            tc.batch_size = int(cfg.get_int("ablate.batch_size"));
            tc.lr_generator = cfg.get_double("ablate.lr_generator");
            tc.lr_discriminator = cfg.get_double("ablate.lr_discriminator");
            tc.gen.base_channels = int(cfg.get_int("ablate.gen_base"));
            tc.disc.base_channels = int(cfg.get_int("ablate.disc_base"));
            tc.patches_p = int(cfg.get_int("ablate.patches_p"));
            tc.patches_m = int(cfg.get_int("ablate.patches_m"));
            tc.decoupling = v.decoupling;
            tc.resilient = v.resilient;
            tc.seed = seed;

            const trainer::TrainData loaded = trainer::load_train_data(tc);
            trainer::TrainResult result = trainer::train(tc, loaded);
            const std::vector<img::ImageTensor> translated =
                trainer::translate(*result.state, test_noisy);
            const double f = metrics::fid(metrics::embed_all(embedder, translated), ref_emb);

            config_col.push_back(vi);
            seed_col.push_back(double(seed));
            fid_col.push_back(f);
            sum += f;
        }
        means.push_back(sum / double(seeds.size()));
    }

    report.scalars["fid_baseline"] = means[0];
    report.scalars["fid_decoupling"] = means[1];
    report.scalars["fid_full"] = means[2];
    report.scalars["ordering_ok"] = (means[2] < means[1] && means[1] < means[0]) ? 1.0 : 0.0;
    report.scalars["n_seeds"] = double(seeds.size());
    stamp_metadata(report, cfg);
    report.metadata["configs"] = "baseline,decoupling,full";

    // The comparison table: means in the JSON scalars, per-run rows in the CSV,
    // and a three-bar chart.
    metrics::MetricReport table = report;
    table.per_item.clear();
    table.per_item["config_id"] = {0, 1, 2};
    table.per_item["fid_mean"] = means;

    ChartSpec chart;
    chart.kind = "bar";
    chart.value_key = "fid_mean";
    chart.labels = {"baseline", "decoupling", "full"};
    chart.title = "ABLATION FID (LOWER IS BETTER)";
    chart.stamp = make_stamp(cfg);
    ChartSpec no_chart;
    no_chart.kind = "none";
    emit_report(report, out, "ablation_runs", report_formats(cfg), no_chart);
    emit_report(table, out, "ablation_report", report_formats(cfg), chart);
    write_run_config(out, cfg);
}

} // namespace

// ---- report emission ------------------------------------------------------------

void emit_report(const metrics::MetricReport& report, const std::string& out_dir,
                 const std::string& basename, const std::vector<std::string>& formats,
                 const ChartSpec& chart) {
    report.validate();
    fs::create_directories(out_dir);
    bool want_csv = false, want_png = false;
    for (const std::string& f : formats) {
        if (f == "json") continue;
        if (f == "csv") want_csv = true;
        else if (f == "png" || f == "png-chart") want_png = true;
        else throw ConfigError("unknown report format: " + f);
    }
    const fs::path dir(out_dir);
    metrics::write_report_json((dir / (basename + ".json")).string(), report);
    if (want_csv) metrics::write_report_csv((dir / (basename + ".csv")).string(), report);
    if (!want_png || chart.kind == "none" || report.per_item.empty()) return;

    const std::string value_key =
        chart.value_key.empty() ? report.per_item.begin()->first : chart.value_key;
    auto vit = report.per_item.find(value_key);
    if (vit == report.per_item.end())
        throw ConfigError("chart value key not in report: " + value_key);
    const std::string title = chart.title.empty() ? basename : chart.title;
    const fs::path png = dir / (basename + ".png");

    if (chart.kind == "bar") {
        write_bar_chart(png.string(), vit->second, chart.labels, title, chart.stamp);
    } else if (chart.kind == "scatter") {
        auto xit = report.per_item.find(chart.x_key);
        if (xit == report.per_item.end())
            throw ConfigError("scatter chart needs a valid x_key, got: '" + chart.x_key + "'");
        write_scatter_chart(png.string(), xit->second, vit->second,
                            chart.x_label.empty() ? chart.x_key : chart.x_label,
                            chart.y_label.empty() ? value_key : chart.y_label, title,
                            chart.stamp);
    } else {
        throw ConfigError("unknown chart kind: " + chart.kind);
    }
}

// ---- argument parsing -----------------------------------------------------------

int run(const std::vector<std::string>& args) {
    CLI::App app{"artifact-resilient endoscopic image translation toolkit"};
    app.name("arit");
    app.require_subcommand(1);

    struct Opts {
        std::string config, out, data, corrupted, pseudo, images, refs, checkpoint;
        std::vector<std::string> sets;
    } o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "flat 'key = value' config file");
        sub->add_option("--set", o.sets, "config override key=value (repeatable)");
    };

    CLI::App* gen = app.add_subcommand("gen-data", "render a paired synthetic dataset");
    add_common(gen);
    gen->add_option("--out", o.out, "dataset output directory")->required();

    CLI::App* cor = app.add_subcommand("corrupt", "apply the corruption policy to real frames");
    add_common(cor);
    cor->add_option("--data", o.data, "dataset root")->required();
    cor->add_option("--out", o.out, "corrupted frame directory")->required();

    CLI::App* pse = app.add_subcommand("pseudo", "reconstruct artifact-free pseudo labels");
    add_common(pse);
    pse->add_option("--data", o.data, "dataset root")->required();
    pse->add_option("--corrupted", o.corrupted, "corrupted frame directory")->required();

    CLI::App* tra = app.add_subcommand("train", "train the two-stage translation model");
    add_common(tra);
    tra->add_option("--data", o.data, "dataset root")->required();
    tra->add_option("--corrupted", o.corrupted, "corrupted frame directory")->required();
    tra->add_option("--pseudo", o.pseudo, "pseudo-label directory (omit for unpaired mode)");
    tra->add_option("--out", o.out, "checkpoint/log directory")->required();

    CLI::App* tsl = app.add_subcommand("translate", "run a checkpoint over a frame directory");
    add_common(tsl);
    tsl->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required();
    tsl->add_option("--images", o.images, "input frame directory")->required();
    tsl->add_option("--out", o.out, "translated frame directory")->required();

    CLI::App* eva = app.add_subcommand("eval", "image-quality metrics between two directories");
    add_common(eva);
    eva->add_option("--images", o.images, "evaluated frame directory")->required();
    eva->add_option("--refs", o.refs, "reference frame directory")->required();
    eva->add_option("--out", o.out, "report directory")->required();

    CLI::App* dep = app.add_subcommand("depth-eval", "depth-through-translation evaluation");
    add_common(dep);
    dep->add_option("--data", o.data, "dataset root (training depth + ground truth)")
        ->required();
    dep->add_option("--images", o.images, "evaluation input frames")->required();
    dep->add_option("--out", o.out, "report directory")->required();

    CLI::App* reg = app.add_subcommand("register", "retrieval-based registration recall");
    add_common(reg);
    reg->add_option("--data", o.data, "dataset root (index images + poses)")->required();
    reg->add_option("--images", o.images, "query frame directory")->required();
    reg->add_option("--out", o.out, "report directory")->required();

    CLI::App* bot = app.add_subcommand("bottleneck", "per-corruption feature sensitivity");
    add_common(bot);
    bot->add_option("--checkpoint", o.checkpoint, "trained checkpoint")->required();
    bot->add_option("--data", o.data, "dataset root")->required();
    bot->add_option("--out", o.out, "report directory")->required();

    CLI::App* abl = app.add_subcommand("ablate", "baseline / +decoupling / +both comparison");
    add_common(abl);
    abl->add_option("--data", o.data, "dataset root")->required();
    abl->add_option("--corrupted", o.corrupted, "corrupted frame directory")->required();
    abl->add_option("--pseudo", o.pseudo, "pseudo-label directory")->required();
    abl->add_option("--out", o.out, "run + report directory")->required();

    std::vector<const char*> argv;
    argv.push_back("arit");
    for (const std::string& a : args) argv.push_back(a.c_str());

    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : int(ExitCode::usage);
    }

    try {
        const std::string sub = app.get_subcommands().front()->get_name();
        const RunConfig cfg = resolve_config(sub, o.config, o.sets);
        if (sub == "gen-data") cmd_gen_data(cfg, o.out);
        else if (sub == "corrupt") cmd_corrupt(cfg, o.data, o.out);
        else if (sub == "pseudo") cmd_pseudo(cfg, o.data, o.corrupted);
        else if (sub == "train") cmd_train(cfg, o.data, o.corrupted, o.pseudo, o.out);
        else if (sub == "translate") cmd_translate(cfg, o.checkpoint, o.images, o.out);
        else if (sub == "eval") cmd_eval(cfg, o.images, o.refs, o.out);
        else if (sub == "depth-eval") cmd_depth_eval(cfg, o.data, o.images, o.out);
        else if (sub == "register") cmd_register(cfg, o.data, o.images, o.out);
        else if (sub == "bottleneck") cmd_bottleneck(cfg, o.checkpoint, o.data, o.out);
        else if (sub == "ablate") cmd_ablate(cfg, o.data, o.corrupted, o.pseudo, o.out);
        else throw UsageError("unknown subcommand: " + sub);
    } catch (const Error& e) {
        std::cerr << "arit: error: " << e.what() << "\n";
        return int(e.code());
    } catch (const std::exception& e) {
        std::cerr << "arit: unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int run_main(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

} // namespace arit::cli
