#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crossfuse/gradcheck.hpp"
#include "crossfuse/ops.hpp"
#include "crossfuse/tensor.hpp"

namespace crossfuse {

enum class LayerKind { conv, strided_conv, transposed_conv };

/// One of the 21 layers of the base FCN.
struct LayerSpec {
    int index = 1;  // 1..21
    LayerKind kind = LayerKind::conv;
    int kernel_h = 3;
    int kernel_w = 3;
    int stride = 1;
    int dilation_h = 1;
    int dilation_w = 1;
    int pad_h = 1;
    int pad_w = 1;
    int in_channels = 1;
    int out_channels = 1;
    double dropout_p = 0.0;
    bool has_elu = true;

    bool operator==(const LayerSpec&) const = default;
    std::size_t parameter_count() const
    {
        return static_cast<std::size_t>(kernel_h) * kernel_w * in_channels * out_channels +
               static_cast<std::size_t>(out_channels);
    }
};

/// Layer groups of the base FCN, by 1-based layer index.
inline constexpr int kNumLayers = 21;
inline constexpr int kEncoderLast = 5;
inline constexpr int kContextFirst = 6;
inline constexpr int kContextLast = 14;
inline constexpr int kDecoderLast = 20;
inline constexpr int kCrossConnections = kNumLayers - 1;

struct NetworkSpec {
    int first_layer_feature_maps = 32;
    int num_classes = 2;
    std::vector<LayerSpec> layers;

    bool operator==(const NetworkSpec&) const = default;
    const LayerSpec& layer(int index) const { return layers.at(static_cast<std::size_t>(index - 1)); }
    LayerSpec& layer(int index) { return layers.at(static_cast<std::size_t>(index - 1)); }
};

/// Default channel plan for first-layer width D:
/// encoder D, D, 2D, 2D, 4D (4x4 stride-2 at layers 1, 3, 5, 3x3 in between);
/// context 4D with the dilation schedule of the context module;
/// decoder 2D, 2D, D, D, D, D (4x4 stride-2 transposed at 15, 17, 19);
/// 3x3 output layer to C classes without activation.
NetworkSpec default_spec(int feature_maps = 32, int num_classes = 2, int input_channels = 3);

/// Dilations (H, W) of context layers 6..14.
inline constexpr int kContextDilationH[9] = {1, 1, 1, 2, 4, 8, 16, 1, 1};
inline constexpr int kContextDilationW[9] = {1, 1, 2, 4, 8, 16, 32, 1, 1};

/// Throws SpecError naming the offending layer.
void validate_spec(const NetworkSpec& spec, int input_channels);

/// Total spatial reduction of the encoder (product of strided-conv strides).
int downsampling_factor(const NetworkSpec& spec);

struct ReceptiveField {
    long h = 1;
    long w = 1;
    bool operator==(const ReceptiveField&) const = default;
};

/// Receptive field of layer `to_layer` with respect to the input of layer
/// `from_layer`, using rf += (k - 1) * dilation * jump, jump *= stride per axis.
/// Transposed layers divide the jump by their stride and grow rf by the
/// number of input taps each output reads.
ReceptiveField receptive_field(const NetworkSpec& spec, int from_layer, int to_layer);
/// Cumulative receptive field after each layer in [from_layer, to_layer].
std::vector<ReceptiveField> receptive_field_sequence(const NetworkSpec& spec, int from_layer, int to_layer);

/// A convolution with its activation, dropout and saved backward state.
class Layer {
public:
    Layer() = default;
    explicit Layer(const LayerSpec& spec);

    const LayerSpec& spec() const { return spec_; }
    ConvParams& params() { return params_; }
    const ConvParams& params() const { return params_; }

    void initialize(RngState& rng);
    /// `record` keeps the state needed by backward.
    Tensor forward(const Tensor& input, bool training, RngState& rng, bool record = true);
    /// Accumulates parameter gradients and returns the input gradient.
    Tensor backward(const Tensor& grad_out);
    void zero_grad();
    std::size_t parameter_count() const { return params_.parameter_count(); }

private:
    LayerSpec spec_;
    ConvParams params_;
    ConvCache cache_;
    Tensor activation_;
    std::vector<double> dropout_scale_;
};

enum class FusionMode { single, early, late, cross };
enum class Modality { zyx, rgb };

std::string to_string(FusionMode mode);
std::string to_string(Modality modality);
FusionMode parse_fusion_mode(const std::string& text);
Modality parse_modality(const std::string& text);

/// Trainable cross connections a_j (camera into LIDAR) and b_j (LIDAR into camera), j = 1..20.
struct CrossFusionParams {
    Tensor a{Shape{1, kCrossConnections, 1, 1}};
    Tensor b{Shape{1, kCrossConnections, 1, 1}};

    double& a_at(int j) { return a[static_cast<std::size_t>(j - 1)]; }
    double& b_at(int j) { return b[static_cast<std::size_t>(j - 1)]; }
    std::size_t parameter_count() const { return a.size() + b.size(); }
};

struct ModalInputs {
    const Tensor* rgb = nullptr;
    const Tensor* zyx = nullptr;
};

struct InputGrads {
    Tensor rgb;
    Tensor zyx;
};

/// Single-branch or dual-branch road segmentation network.
///
/// Branch 0 is the only branch in single and early mode and the LIDAR branch
/// in late and cross mode; branch 1 is the camera branch. Inputs whose height
/// or width is not a multiple of the encoder reduction are zero-padded at the
/// bottom/right internally and the logits are cropped back.
class FusionNetwork {
public:
    FusionNetwork(FusionMode mode, Modality single_modality, const NetworkSpec& spec);

    FusionMode mode() const { return mode_; }
    /// Input modality of single mode.
    Modality modality() const { return modality_; }
    const NetworkSpec& spec() const { return spec_; }
    bool requires_rgb() const;
    bool requires_zyx() const;
    int num_classes() const { return spec_.num_classes; }

    std::vector<Layer>& branch(int i) { return branches_.at(static_cast<std::size_t>(i)); }
    const std::vector<Layer>& branch(int i) const { return branches_.at(static_cast<std::size_t>(i)); }
    int branch_count() const { return static_cast<int>(branches_.size()); }
    CrossFusionParams* cross() { return cross_ ? &*cross_ : nullptr; }
    const CrossFusionParams* cross() const { return cross_ ? &*cross_ : nullptr; }
    Layer* late_fusion() { return late_fusion_ ? &*late_fusion_ : nullptr; }
    const Layer* late_fusion() const { return late_fusion_ ? &*late_fusion_ : nullptr; }

    void initialize(RngState& rng);

    /// Per-pixel class logits at input resolution. Throws ContractError when a
    /// modality needed by the mode is missing or the inputs disagree in size.
    Tensor forward(const ModalInputs& inputs, bool training, RngState& rng, bool record = true);
    /// Accumulates parameter gradients for the last recorded forward pass.
    InputGrads backward(const Tensor& grad_logits);

    std::vector<ParamView> parameters();
    void zero_grad();
    std::size_t parameter_count() const;

    std::map<std::string, std::string>& metadata() { return metadata_; }
    const std::map<std::string, std::string>& metadata() const { return metadata_; }

private:
    Tensor run_branch(std::vector<Layer>& layers, Tensor x, int first, int last, bool training,
                      RngState& rng, bool record);
    Tensor back_branch(std::vector<Layer>& layers, Tensor g, int first, int last);

    FusionMode mode_;
    Modality modality_;
    NetworkSpec spec_;
    std::vector<std::vector<Layer>> branches_;
    std::optional<CrossFusionParams> cross_;
    std::optional<Layer> late_fusion_;
    std::map<std::string, std::string> metadata_;

    // forward state
    int in_h_ = 0;
    int in_w_ = 0;
    int padded_h_ = 0;
    int padded_w_ = 0;
    bool recorded_ = false;
    std::vector<Tensor> cross_lid_out_;
    std::vector<Tensor> cross_cam_out_;
};

/// Single-branch network for one modality (ZYX or RGB).
FusionNetwork build_base(int input_channels, const NetworkSpec& spec, Modality modality = Modality::zyx);
/// RGBZYX input concatenated in depth.
FusionNetwork build_early(const NetworkSpec& spec);
/// Two 20-layer branches, depth concatenation and one fusion convolution.
FusionNetwork build_late(const NetworkSpec& spec);
/// Two 21-layer branches joined by zero-initialized cross scalars; logits are summed.
FusionNetwork build_cross(const NetworkSpec& spec);

/// Dispatches to the builders above and initializes weights from `rng`.
FusionNetwork build_network(FusionMode mode, Modality single_modality, const NetworkSpec& spec,
                            RngState& rng);

std::size_t parameter_count(const FusionNetwork& net);

}  // namespace crossfuse
