#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arit/translation/losses.hpp"
#include "arit/translation/networks.hpp"

namespace arit::trainer {

using img::ImageTensor;

struct TrainConfig {
    // dataset paths (used by the data-loading helpers; the core train loop
    // takes in-memory batches)
    std::string dataset_root;  // standard per-frame layout
    std::string corrupted_dir; // noisy-domain frames
    std::string pseudo_dir;    // pseudo-label frames; empty => unpaired mode
    std::string out_dir;       // logs/checkpoints; empty => nothing written

    int epochs = 20;
    int batch_size = 4;
    double lr_generator = 2e-4;
    double lr_discriminator = 2e-4;

    double lambda_gan = 1.0; // adversarial weight; 0 isolates the other terms
    double lambda_cyc = 10.0;
    double lambda_pair = 1.0; // forced to 0 when no pseudo-labels are supplied
    double lambda_nce = 1.0;
    int patches_p = 64;
    int patches_m = 64;
    double tau = 0.07;

    bool decoupling = true; // false => single-stage noisy->virtual pipeline
    bool resilient = true;  // false => contrastive term never evaluated
    bool non_saturating = true;

    uint64_t seed = 0;
    int checkpoint_interval = 0; // epochs between checkpoints; 0 => final only

    translation::GeneratorSpec gen;
    translation::DiscriminatorSpec disc;
    translation::HeadSpec head;

    std::string to_json() const;
    static TrainConfig from_json(const std::string& text);
};

// Everything the translation model needs to run or resume: networks,
// optimizer moments, epoch counter, RNG position, and the config snapshot.
struct TranslationState {
    TrainConfig config;
    translation::ModelBundle<float> model;
    nn::Adam<float> opt_gen;
    nn::Adam<float> opt_disc;
    long long epoch = 0;
    Rng rng{0};

    explicit TranslationState(const TrainConfig& cfg);
    TranslationState(TranslationState&&) = default;
    TranslationState& operator=(TranslationState&&) = default;
};

struct TrainData {
    std::vector<ImageTensor> noisy;   // corrupted real frames, train split
    std::vector<ImageTensor> virt;    // virtual frames, train split
    std::vector<ImageTensor> pseudo;  // frame-aligned with noisy; may be empty
    std::vector<ImageTensor> val_noisy;   // paired validation (optional)
    std::vector<ImageTensor> val_virtual; // paired validation (optional)
};

struct EpochLog {
    long long epoch = 0;
    std::map<std::string, double> terms;
    std::optional<double> val_psnr;
    std::optional<double> val_ssim;
};

struct TrainResult {
    std::unique_ptr<TranslationState> state;
    std::vector<EpochLog> log;
};

// One joint optimization step on explicit batches: discriminators first on
// the adversarial terms, then one combined generator step on the full
// composite. Returns the named loss terms; any non-finite term aborts with
// that term named.
std::map<std::string, double> train_step(TranslationState& state,
                                         const std::vector<const ImageTensor*>& noisy_batch,
                                         const std::vector<const ImageTensor*>& clean_batch,
                                         const std::vector<const ImageTensor*>& virtual_batch,
                                         const std::vector<const ImageTensor*>& paired_pseudo,
                                         uint64_t patch_seed);

TrainResult train(const TrainConfig& config, const TrainData& data);

// Full translation pass (both stages, or the single pair in single-stage
// mode); pure per image and parallelized across images.
std::vector<ImageTensor> translate(TranslationState& state,
                                   const std::vector<ImageTensor>& images);

// Training-path contrastive loss value on one image with pinned patch
// positions; used to verify the descent property of an isolated step.
double evaluate_resilient(TranslationState& state, const ImageTensor& noisy, uint64_t patch_seed);

// Checkpoint file: magic "ARIT", version, config JSON, then named float32
// parameter blocks (network weights and optimizer moments).
void write_checkpoint(const std::string& path, const TranslationState& state);
std::unique_ptr<TranslationState> read_checkpoint(const std::string& path);

// Loads the train/val splits referenced by the config's dataset paths.
TrainData load_train_data(const TrainConfig& config);

} // namespace arit::trainer
