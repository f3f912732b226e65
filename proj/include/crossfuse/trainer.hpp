#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "crossfuse/dataio.hpp"
#include "crossfuse/densify.hpp"
#include "crossfuse/eval.hpp"
#include "crossfuse/network.hpp"
#include "crossfuse/ops.hpp"
#include "crossfuse/tensor.hpp"

namespace crossfuse {

struct TrainConfig {
    long iterations = 100000;  // N
    long eval_every = 1000;
    double eta0 = 0.0005;
    double alpha = 0.9;
    int batch_size = 1;
    double rotation_range_deg = 20.0;
    bool augment = true;
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    /// L2 penalty added to the gradient of every decayed parameter.
    double weight_decay = 0.0;
    int num_thresholds = 255;
    /// Best checkpoint destination; empty keeps the best weights in memory only.
    std::filesystem::path checkpoint_path;

    /// Throws DomainError on N <= 0, eta0 <= 0, alpha < 0, batch_size < 1 or eval_every < 1.
    void validate() const;
};

/// Small-scale overfitting run on a handful of frames: 2000 iterations at a
/// larger step without rotation, for width kToyFeatureMaps.
TrainConfig toy_train_config();
inline constexpr int kToyFeatureMaps = 8;

/// eta(i) = eta0 * (1 - i / N)^alpha for 0 <= i <= N; DomainError otherwise.
double poly_lr(long iteration, const TrainConfig& cfg);

struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    long step = 0;
};

/// Bias-corrected Adam update of every view from its grad buffer.
/// Throws DivergenceError (carrying `iteration`) on a non-finite gradient.
void adam_step(std::vector<ParamView>& params, AdamState& state, double lr, const TrainConfig& cfg,
               long iteration = 0);

/// Network inputs of one frame. Absent modalities are empty tensors.
struct Sample {
    std::string id;
    std::string category;
    Tensor rgb;  // 1 x 3 x H x W, values / 255
    Tensor zyx;  // 1 x 3 x H x W, channels z, y, x in meters * kZyxScale
    LabelMap labels;

    int height() const;
    int width() const;
};

inline constexpr double kZyxScale = 1.0 / 20.0;

/// Builds a Sample; any pointer may be null. Sizes must agree.
Sample make_sample(const std::string& id, const std::string& category, const Image8* rgb,
                   const DenseZyxImage* zyx, const LabelMap* labels);

ModalInputs inputs_of(const Sample& s);

/// Rotates inputs (bilinear, zero fill) and labels (nearest, ignore fill)
/// by `angle_deg` counter-clockwise about ((W-1)/2, (H-1)/2).
Sample rotate_sample(const Sample& s, double angle_deg);
Tensor rotate_bilinear(const Tensor& t, double angle_deg);
LabelMap rotate_nearest(const LabelMap& labels, double angle_deg);

/// Draws one angle uniformly from [-range_deg, range_deg] and rotates the sample.
Sample augment_rotation(const Sample& s, RngState& rng, double range_deg);

/// Road-class probability per pixel (row-major H x W), inference mode.
std::vector<double> road_confidence(FusionNetwork& net, const Sample& s);

/// Threshold sweep accumulated over every sample with labels.
PrCurve evaluate(FusionNetwork& net, const std::vector<Sample>& samples, int num_thresholds = 255);

struct TrainLogRecord {
    long iteration = 0;
    double loss = 0.0;
    double lr = 0.0;
    std::optional<double> val_maxf;
    double best_maxf = 0.0;
    bool saved = false;
};

/// `iter=.. loss=.. lr=.. val_maxf=.. best_maxf=.. saved=..`; val_maxf is "-" between evaluations.
std::string format_log_record(const TrainLogRecord& r);

struct TrainResult {
    std::vector<TrainLogRecord> log;
    double best_maxf = 0.0;
    double best_threshold = 0.0;
    long best_iteration = -1;
    /// Parameter values at the best validation MaxF, in parameters() order.
    std::vector<std::vector<double>> best_parameters;
};

/// Runs cfg.iterations Adam steps on shuffled training samples with optional
/// rotation augmentation. Validation MaxF is computed every cfg.eval_every
/// iterations and after the last one; the weights are stored (and written to
/// cfg.checkpoint_path) whenever it improves. Each record is also written to
/// `log_out` when given. Throws DivergenceError on a non-finite loss after
/// writing "<checkpoint>.diverged" when a checkpoint path is set.
TrainResult train(FusionNetwork& net, const std::vector<Sample>& train_set, const std::vector<Sample>& val_set,
                  const TrainConfig& cfg, std::ostream* log_out = nullptr);

/// Copies `values` (as stored in TrainResult) back into the network.
void restore_parameters(FusionNetwork& net, const std::vector<std::vector<double>>& values);

}  // namespace crossfuse
