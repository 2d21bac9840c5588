#include "matchnav/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace matchnav::repr {

namespace {

constexpr uint32_t kCheckpointMagic = 0x4d4e4145; // "MNAE"
constexpr uint32_t kCheckpointVersion = 1;

nn::Mat reshape(const nn::Mat& m, size_t rows, size_t cols) {
    nn::Mat out(rows, cols);
    if (m.size() != out.size()) throw Error("geometry-mismatch", "reshape size mismatch");
    out.data = m.data;
    return out;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

void write_train_curve_csv(const TrainCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("io-error", "cannot open " + path + " for writing");
    out << "epoch,loss,recon,reg\n";
    out.precision(12);
    for (const auto& r : curve.rows)
        out << r.epoch << "," << r.loss << "," << r.recon << "," << r.reg << "\n";
}

Autoencoder::Autoencoder(const AeConfig& cfg) : cfg_(cfg) {
    if (cfg.width % cfg.patch != 0 || cfg.height % cfg.patch != 0)
        throw Error("bad-config", "image dimensions must be divisible by the patch size");
    patch_dim_ = cfg.patch * cfg.patch;
    patches_per_image_ = (cfg.width / cfg.patch) * (cfg.height / cfg.patch);
    const size_t flat = static_cast<size_t>(patches_per_image_) * cfg.embed;

    Rng rng(cfg.seed);
    enc_patch_ = nn::Linear(static_cast<size_t>(patch_dim_), static_cast<size_t>(cfg.embed));
    enc_hidden_ = nn::Linear(flat, static_cast<size_t>(cfg.hidden));
    enc_latent_ = nn::Linear(static_cast<size_t>(cfg.hidden), static_cast<size_t>(cfg.latent));
    dec_hidden_ = nn::Linear(static_cast<size_t>(cfg.latent), static_cast<size_t>(cfg.hidden));
    dec_unhidden_ = nn::Linear(static_cast<size_t>(cfg.hidden), flat);
    dec_patch_ = nn::Linear(static_cast<size_t>(cfg.embed), static_cast<size_t>(patch_dim_));
    enc_patch_.init(rng);
    enc_hidden_.init(rng);
    enc_latent_.init(rng);
    dec_hidden_.init(rng);
    dec_unhidden_.init(rng);
    dec_patch_.init(rng);
}

nn::Mat Autoencoder::batch_from_images(const std::vector<const Image*>& imgs) const {
    const size_t dim = static_cast<size_t>(cfg_.width) * cfg_.height;
    nn::Mat batch(imgs.size(), dim);
    for (size_t b = 0; b < imgs.size(); ++b) {
        const Image& img = *imgs[b];
        if (img.width != cfg_.width || img.height != cfg_.height)
            throw Error("geometry-mismatch",
                        "image " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                            " does not match the model input " + std::to_string(cfg_.width) + "x" +
                            std::to_string(cfg_.height));
        double* row = batch.row(b);
        for (size_t i = 0; i < dim; ++i) row[i] = static_cast<double>(img.pixels[i]);
    }
    return batch;
}

nn::Mat Autoencoder::patchify(const nn::Mat& images) const {
    const int p = cfg_.patch;
    const int px = cfg_.width / p;
    const int py = cfg_.height / p;
    nn::Mat out(images.rows * static_cast<size_t>(patches_per_image_),
                static_cast<size_t>(patch_dim_));
    for (size_t b = 0; b < images.rows; ++b) {
        const double* img = images.row(b);
        for (int qy = 0; qy < py; ++qy) {
            for (int qx = 0; qx < px; ++qx) {
                double* dst = out.row(b * patches_per_image_ + static_cast<size_t>(qy * px + qx));
                for (int y = 0; y < p; ++y)
                    for (int x = 0; x < p; ++x)
                        dst[y * p + x] = img[(qy * p + y) * cfg_.width + (qx * p + x)];
            }
        }
    }
    return out;
}

nn::Mat Autoencoder::unpatchify(const nn::Mat& patches, size_t batch) const {
    const int p = cfg_.patch;
    const int px = cfg_.width / p;
    const int py = cfg_.height / p;
    nn::Mat out(batch, static_cast<size_t>(cfg_.width) * cfg_.height);
    for (size_t b = 0; b < batch; ++b) {
        double* img = out.row(b);
        for (int qy = 0; qy < py; ++qy) {
            for (int qx = 0; qx < px; ++qx) {
                const double* src = patches.row(b * patches_per_image_ + static_cast<size_t>(qy * px + qx));
                for (int y = 0; y < p; ++y)
                    for (int x = 0; x < p; ++x)
                        img[(qy * p + y) * cfg_.width + (qx * p + x)] = src[y * p + x];
            }
        }
    }
    return out;
}

LatentCode Autoencoder::encode(const Image& img) const {
    const nn::Mat batch = batch_from_images({&img});
    nn::Mat patches = patchify(batch);

    nn::Mat e1;
    enc_patch_.forward(patches, e1);
    for (double& v : e1.data) v = v > 0.0 ? v : 0.0;
    nn::Mat flat = reshape(e1, 1, e1.size());

    nn::Mat h;
    enc_hidden_.forward(flat, h);
    for (double& v : h.data) v = v > 0.0 ? v : 0.0;

    nn::Mat z;
    enc_latent_.forward(h, z);
    LatentCode code;
    code.values = z.data;
    return code;
}

Image Autoencoder::decode(const LatentCode& z) const {
    if (static_cast<int>(z.size()) != cfg_.latent)
        throw Error("geometry-mismatch", "latent length does not match the model");
    nn::Mat zm(1, z.size());
    zm.data = z.values;

    nn::Mat h;
    dec_hidden_.forward(zm, h);
    for (double& v : h.data) v = v > 0.0 ? v : 0.0;

    nn::Mat u;
    dec_unhidden_.forward(h, u);
    for (double& v : u.data) v = v > 0.0 ? v : 0.0;

    nn::Mat up = reshape(u, static_cast<size_t>(patches_per_image_), static_cast<size_t>(cfg_.embed));
    nn::Mat patches;
    dec_patch_.forward(up, patches);
    for (double& v : patches.data) v = sigmoid(v);

    nn::Mat img_mat = unpatchify(patches, 1);
    Image img(cfg_.width, cfg_.height);
    for (size_t i = 0; i < img.pixels.size(); ++i)
        img.pixels[i] = static_cast<float>(img_mat.data[i]);
    return img;
}

Autoencoder::BatchLoss Autoencoder::loss_and_grad(const nn::Mat& targets, bool accumulate_grads) {
    const size_t B = targets.rows;
    const size_t D = targets.cols;

    // encoder forward
    nn::Mat patches = patchify(targets);
    nn::Mat e1_pre;
    enc_patch_.forward(patches, e1_pre);
    nn::Mat e1 = e1_pre;
    for (double& v : e1.data) v = v > 0.0 ? v : 0.0;
    nn::Mat e1_flat = reshape(e1, B, static_cast<size_t>(patches_per_image_) * cfg_.embed);

    nn::Mat h_pre;
    enc_hidden_.forward(e1_flat, h_pre);
    nn::Mat h = h_pre;
    for (double& v : h.data) v = v > 0.0 ? v : 0.0;

    nn::Mat z;
    enc_latent_.forward(h, z);

    // decoder forward
    nn::Mat g_pre;
    dec_hidden_.forward(z, g_pre);
    nn::Mat g = g_pre;
    for (double& v : g.data) v = v > 0.0 ? v : 0.0;

    nn::Mat u_pre;
    dec_unhidden_.forward(g, u_pre);
    nn::Mat u = u_pre;
    for (double& v : u.data) v = v > 0.0 ? v : 0.0;

    nn::Mat u_patches = reshape(u, B * static_cast<size_t>(patches_per_image_),
                                static_cast<size_t>(cfg_.embed));
    nn::Mat out_pre;
    dec_patch_.forward(u_patches, out_pre);
    nn::Mat out = out_pre;
    for (double& v : out.data) v = sigmoid(v);
    nn::Mat y = unpatchify(out, B);

    // losses
    BatchLoss result{0.0, 0.0, 0.0};
    for (size_t i = 0; i < y.size(); ++i) {
        const double d = y.data[i] - targets.data[i];
        result.recon += d * d;
    }
    result.recon /= static_cast<double>(B * D);

    double latent_reg = 0.0;
    for (double v : z.data) latent_reg += v * v;
    latent_reg *= cfg_.latent_penalty / static_cast<double>(B);

    double decay = 0.0;
    for (const nn::Linear* l : {&dec_hidden_, &dec_unhidden_, &dec_patch_})
        for (double v : l->w.data) decay += v * v;
    decay *= cfg_.decoder_decay;

    result.reg = latent_reg + decay;
    result.loss = result.recon + result.reg;
    if (!accumulate_grads) return result;

    // backward
    nn::Mat dy(B, D);
    for (size_t i = 0; i < dy.size(); ++i)
        dy.data[i] = 2.0 * (y.data[i] - targets.data[i]) / static_cast<double>(B * D);

    nn::Mat d_out = patchify(dy); // same gather as the forward reshape
    for (size_t i = 0; i < d_out.size(); ++i) {
        const double s = out.data[i];
        d_out.data[i] *= s * (1.0 - s);
    }

    nn::Mat d_u_patches;
    dec_patch_.backward(u_patches, d_out, &d_u_patches);
    nn::Mat d_u = reshape(d_u_patches, B, static_cast<size_t>(patches_per_image_) * cfg_.embed);
    for (size_t i = 0; i < d_u.size(); ++i)
        if (u_pre.data[i] <= 0.0) d_u.data[i] = 0.0;

    nn::Mat d_g;
    dec_unhidden_.backward(g, d_u, &d_g);
    for (size_t i = 0; i < d_g.size(); ++i)
        if (g_pre.data[i] <= 0.0) d_g.data[i] = 0.0;

    nn::Mat d_z;
    dec_hidden_.backward(z, d_g, &d_z);
    for (size_t i = 0; i < z.size(); ++i)
        d_z.data[i] += 2.0 * cfg_.latent_penalty * z.data[i] / static_cast<double>(B);

    nn::Mat d_h;
    enc_latent_.backward(h, d_z, &d_h);
    for (size_t i = 0; i < d_h.size(); ++i)
        if (h_pre.data[i] <= 0.0) d_h.data[i] = 0.0;

    nn::Mat d_e1_flat;
    enc_hidden_.backward(e1_flat, d_h, &d_e1_flat);
    nn::Mat d_e1 = reshape(d_e1_flat, B * static_cast<size_t>(patches_per_image_),
                           static_cast<size_t>(cfg_.embed));
    for (size_t i = 0; i < d_e1.size(); ++i)
        if (e1_pre.data[i] <= 0.0) d_e1.data[i] = 0.0;

    enc_patch_.backward(patches, d_e1, nullptr);

    // decoder weight decay gradients
    for (nn::Linear* l : {&dec_hidden_, &dec_unhidden_, &dec_patch_})
        for (size_t i = 0; i < l->w.size(); ++i)
            l->grad_w.data[i] += 2.0 * cfg_.decoder_decay * l->w.data[i];

    return result;
}

void Autoencoder::zero_grad() {
    for (nn::Linear* l :
         {&enc_patch_, &enc_hidden_, &enc_latent_, &dec_hidden_, &dec_unhidden_, &dec_patch_})
        l->zero_grad();
}

size_t Autoencoder::param_count() const {
    size_t n = 0;
    for (const nn::Linear* l :
         {&enc_patch_, &enc_hidden_, &enc_latent_, &dec_hidden_, &dec_unhidden_, &dec_patch_})
        n += l->w.size() + l->b.size();
    return n;
}

void Autoencoder::get_params(std::vector<double>& out) const {
    out.clear();
    out.reserve(param_count());
    for (const nn::Linear* l :
         {&enc_patch_, &enc_hidden_, &enc_latent_, &dec_hidden_, &dec_unhidden_, &dec_patch_}) {
        out.insert(out.end(), l->w.data.begin(), l->w.data.end());
        out.insert(out.end(), l->b.begin(), l->b.end());
    }
}

void Autoencoder::set_params(const std::vector<double>& in) {
    size_t off = 0;
    for (nn::Linear* l :
         {&enc_patch_, &enc_hidden_, &enc_latent_, &dec_hidden_, &dec_unhidden_, &dec_patch_}) {
        std::copy(in.begin() + off, in.begin() + off + l->w.size(), l->w.data.begin());
        off += l->w.size();
        std::copy(in.begin() + off, in.begin() + off + l->b.size(), l->b.begin());
        off += l->b.size();
    }
    if (off != in.size()) throw Error("bad-config", "parameter vector size mismatch");
}

void Autoencoder::get_grads(std::vector<double>& out) const {
    out.clear();
    out.reserve(param_count());
    for (const nn::Linear* l :
         {&enc_patch_, &enc_hidden_, &enc_latent_, &dec_hidden_, &dec_unhidden_, &dec_patch_}) {
        out.insert(out.end(), l->grad_w.data.begin(), l->grad_w.data.end());
        out.insert(out.end(), l->grad_b.begin(), l->grad_b.end());
    }
}

void Autoencoder::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io-error", "cannot write checkpoint " + path);
    out.write(reinterpret_cast<const char*>(&kCheckpointMagic), sizeof(kCheckpointMagic));
    out.write(reinterpret_cast<const char*>(&kCheckpointVersion), sizeof(kCheckpointVersion));
    out.write(reinterpret_cast<const char*>(&cfg_), sizeof(cfg_));
    std::vector<double> params;
    get_params(params);
    const uint64_t n = params.size();
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(params.data()),
              static_cast<std::streamsize>(n * sizeof(double)));
    if (!out) throw Error("io-error", "short write to checkpoint " + path);
}

Autoencoder Autoencoder::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io-error", "cannot open checkpoint " + path);
    uint32_t magic = 0, version = 0;
    in.read(reinterpret_cast<char*>(&magic), sizeof(magic));
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!in || magic != kCheckpointMagic)
        throw Error("io-error", path + " is not an autoencoder checkpoint");
    if (version != kCheckpointVersion)
        throw Error("io-error", path + " has unsupported checkpoint version");
    AeConfig cfg;
    in.read(reinterpret_cast<char*>(&cfg), sizeof(cfg));
    Autoencoder ae(cfg);
    uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    std::vector<double> params(n);
    in.read(reinterpret_cast<char*>(params.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw Error("io-error", path + ": truncated checkpoint");
    ae.set_params(params);
    return ae;
}

Image augment(const Image& img, Rng& rng, const AeConfig& cfg) {
    const double s = cfg.crop_fraction;
    const double ox = rng.uniform(0.0, (1.0 - s) * img.width);
    const double oy = rng.uniform(0.0, (1.0 - s) * img.height);
    const double phi = rng.uniform(-cfg.max_rotation, cfg.max_rotation);
    const double tx = rng.uniform(-cfg.max_translation, cfg.max_translation);
    const double ty = rng.uniform(-cfg.max_translation, cfg.max_translation);
    const double ca = std::cos(phi), sa = std::sin(phi);
    const double cx = img.width / 2.0, cy = img.height / 2.0;

    Image out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            // crop+resize, then rotate about the center, then translate
            const double u = ox + s * (x + 0.5) - cx;
            const double v = oy + s * (y + 0.5) - cy;
            const double rx = ca * u - sa * v + cx + tx - 0.5;
            const double ry = sa * u + ca * v + cy + ty - 0.5;
            out.at(x, y) = img.sample(rx, ry);
        }
    }
    return out;
}

Autoencoder train_autoencoder(const std::vector<Image>& dataset, const AeConfig& cfg,
                              TrainCurve* curve) {
    if (dataset.size() < 100)
        throw Error("dataset-too-small", "autoencoder pretraining needs >= 100 images, got " +
                                             std::to_string(dataset.size()));
    Autoencoder ae(cfg);
    Rng rng(hash_mix(cfg.seed, 0xae));

    std::vector<double> params, grads;
    ae.get_params(params);
    nn::Adam adam(params.size(), cfg.lr);

    std::vector<size_t> order(dataset.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with the run RNG
        for (size_t i = order.size(); i > 1; --i) {
            const size_t j = rng.below(i);
            std::swap(order[i - 1], order[j]);
        }
        double ep_loss = 0.0, ep_recon = 0.0, ep_reg = 0.0;
        size_t batches = 0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch)) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch));
            std::vector<Image> views;
            views.reserve(end - start);
            std::vector<const Image*> ptrs;
            for (size_t i = start; i < end; ++i) {
                views.push_back(augment(dataset[order[i]], rng, cfg));
                ptrs.push_back(&views.back());
            }
            const nn::Mat batch = ae.batch_from_images(ptrs);
            ae.zero_grad();
            const auto loss = ae.loss_and_grad(batch, true);
            if (!std::isfinite(loss.loss))
                throw Error("ae-diverged", "training loss became non-finite at epoch " +
                                               std::to_string(epoch));
            ae.get_grads(grads);
            adam.step(params, grads);
            ae.set_params(params);
            ep_loss += loss.loss;
            ep_recon += loss.recon;
            ep_reg += loss.reg;
            ++batches;
        }
        if (curve)
            curve->rows.push_back({epoch, ep_loss / batches, ep_recon / batches, ep_reg / batches});
    }
    return ae;
}

std::vector<Image> collect_pretrain_set(NavEnv& env, int episodes, int step_cap, uint64_t seed) {
    if (episodes < 1) throw Error("bad-config", "need >= 1 pretraining episode");
    Rng rng(hash_mix(seed, 0xda7a));
    std::vector<Image> dataset;
    for (int e = 0; e < episodes; ++e) {
        NavEnv::Observation obs = env.reset(rng);
        dataset.push_back(obs.image);
        for (int t = 0; t < step_cap; ++t) {
            world::Action a;
            a.steer_delta = rng.uniform(-1.0, 1.0);
            a.throttle = rng.uniform(0.0, 1.0);
            const NavEnv::StepResult sr = env.step(a);
            dataset.push_back(sr.obs.image);
            if (sr.collided) break;
        }
    }
    return dataset;
}

PolicyState assemble_state(const LatentCode& z_prev, const LatentCode& z_now,
                           const world::Action& last_action) {
    if (z_prev.size() != z_now.size())
        throw Error("length-mismatch", "latent codes must share one length");
    PolicyState s;
    s.values.reserve(2 * z_prev.size() + 2);
    s.values.insert(s.values.end(), z_prev.values.begin(), z_prev.values.end());
    s.values.insert(s.values.end(), z_now.values.begin(), z_now.values.end());
    s.values.push_back(last_action.steer_delta);
    s.values.push_back(last_action.throttle);
    return s;
}

PolicyState scan_state(const world::RangeScan& prev, const world::RangeScan& now,
                       const world::Action& last_action) {
    if (prev.ranges.size() != now.ranges.size())
        throw Error("length-mismatch", "range scans must share one beam count");
    PolicyState s;
    s.values.reserve(2 * prev.ranges.size() + 2);
    for (double r : prev.ranges) s.values.push_back(r / prev.max_range);
    for (double r : now.ranges) s.values.push_back(r / now.max_range);
    s.values.push_back(last_action.steer_delta);
    s.values.push_back(last_action.throttle);
    return s;
}

} // namespace matchnav::repr
