#ifndef MATCHNAV_AUTOENCODER_HPP
#define MATCHNAV_AUTOENCODER_HPP

#include <string>
#include <vector>

#include "matchnav/env.hpp"
#include "matchnav/image.hpp"
#include "matchnav/nn.hpp"
#include "matchnav/world.hpp"

namespace matchnav::repr {

/// Compact latent vector of one observation.
struct LatentCode {
    std::vector<double> values;

    size_t size() const { return values.size(); }
};

/// Policy input: two consecutive latent codes (or normalized scans) stacked
/// with the most recent action.
struct PolicyState {
    std::vector<double> values;

    size_t size() const { return values.size(); }
};

struct AeConfig {
    int width = 64;
    int height = 64;
    int patch = 8;       // patch edge; width and height must be divisible
    int embed = 16;      // per-patch embedding size
    int hidden = 256;
    int latent = 32;
    double lr = 1e-3;
    double latent_penalty = 1e-6;  // beta * ||z||^2
    double decoder_decay = 1e-7;   // L2 on decoder weights
    int epochs = 30;
    int batch = 64;
    // augmentation: crop to this fraction then resize back, plus a small
    // rotation and translation
    double crop_fraction = 0.9;
    double max_rotation = 0.0872664626; // 5 degrees
    double max_translation = 4.0;       // pixels
    uint64_t seed = 1;
};

struct TrainCurve {
    struct Row {
        int epoch;
        double loss, recon, reg;
    };
    std::vector<Row> rows;
};

void write_train_curve_csv(const TrainCurve& curve, const std::string& path);

/// Deterministic regularized autoencoder over patch-flattened images:
/// shared per-patch embedding, one hidden layer, linear latent head, and a
/// mirrored decoder with a sigmoid pixel head. Trained with reconstruction
/// MSE + latent L2 penalty + decoder weight decay.
class Autoencoder {
public:
    Autoencoder() = default;
    explicit Autoencoder(const AeConfig& cfg);

    const AeConfig& config() const { return cfg_; }
    int latent_dim() const { return cfg_.latent; }

    /// Deterministic forward pass of the encoder. Throws
    /// "geometry-mismatch" if the image does not match the input geometry.
    LatentCode encode(const Image& img) const;
    /// Decoder forward; always produces pixels in (0, 1).
    Image decode(const LatentCode& z) const;

    /// Mean loss over a batch plus parameter gradients. Exposed for the
    /// training loop and the finite-difference suite.
    struct BatchLoss {
        double loss, recon, reg;
    };
    BatchLoss loss_and_grad(const nn::Mat& targets, bool accumulate_grads);

    void zero_grad();
    size_t param_count() const;
    void get_params(std::vector<double>& out) const;
    void set_params(const std::vector<double>& in);
    void get_grads(std::vector<double>& out) const;

    void save(const std::string& path) const;
    static Autoencoder load(const std::string& path);

    /// Row-major (batch x pixels) matrix from images; validates geometry.
    nn::Mat batch_from_images(const std::vector<const Image*>& imgs) const;

private:
    AeConfig cfg_;
    int patches_per_image_ = 0;
    int patch_dim_ = 0;
    nn::Linear enc_patch_, enc_hidden_, enc_latent_;
    nn::Linear dec_hidden_, dec_unhidden_, dec_patch_;

    nn::Mat patchify(const nn::Mat& images) const;   // (B*P) x patch_dim
    nn::Mat unpatchify(const nn::Mat& patches, size_t batch) const;

    friend Autoencoder train_autoencoder(const std::vector<Image>&, const AeConfig&, TrainCurve*);
};

/// Affine augmentation (crop + rotate + translate) used during training.
/// Exposed for tests.
Image augment(const Image& img, Rng& rng, const AeConfig& cfg);

/// Trains on augmented batches by Adam. Requires >= 100 images. Throws
/// "ae-diverged" (with the epoch index) if the loss stops being finite.
Autoencoder train_autoencoder(const std::vector<Image>& dataset, const AeConfig& cfg,
                              TrainCurve* curve = nullptr);

/// Uniform-random-action rollouts of the imitator platform; every frame is
/// kept until the episode collides or hits the cap. The pooled frames are
/// the pretraining dataset.
std::vector<Image> collect_pretrain_set(NavEnv& env, int episodes, int step_cap, uint64_t seed);

/// Frame stacking: (z_prev, z_now, last_action). At episode start pass
/// z_prev = z_now and the zero action.
PolicyState assemble_state(const LatentCode& z_prev, const LatentCode& z_now,
                           const world::Action& last_action);

/// The same stacking contract over range scans normalized by max_range.
PolicyState scan_state(const world::RangeScan& prev, const world::RangeScan& now,
                       const world::Action& last_action);

} // namespace matchnav::repr

#endif
